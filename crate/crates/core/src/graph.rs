//! Weighted graphs, shift matrices, spectra and hop structure.

use std::collections::{HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};

/// Hop distance reported for vertices no source can reach.
pub const UNREACHABLE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    #[default]
    Laplacian,
    Adjacency,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(src: usize, dst: usize, weight: f64) -> Self {
        Self { src, dst, weight }
    }
}

#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    directed: bool,
    edges: Vec<Edge>,
    shift_kind: ShiftKind,
    adj: Vec<Vec<(usize, f64)>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.directed == other.directed
            && self.shift_kind == other.shift_kind
            && self.edges == other.edges
    }
}

impl Graph {
    /// Builds a graph, validating ids, weights and duplicates. Undirected edges are stored once
    /// with `src < dst`.
    pub fn new(n: usize, directed: bool, edges: Vec<Edge>, shift_kind: ShiftKind) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut stored = Vec::with_capacity(edges.len());
        for e in edges {
            if e.src >= n || e.dst >= n {
                return Err(Error::InvalidGraph(format!("edge ({}, {}) out of range for n = {n}", e.src, e.dst)));
            }
            if e.src == e.dst {
                return Err(Error::InvalidGraph(format!("self-loop at {}", e.src)));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::InvalidGraph(format!("edge ({}, {}) has weight {}", e.src, e.dst, e.weight)));
            }
            let e = if directed || e.src < e.dst { e } else { Edge::new(e.dst, e.src, e.weight) };
            if !seen.insert((e.src, e.dst)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", e.src, e.dst)));
            }
            stored.push(e);
        }
        let mut adj = vec![Vec::new(); n];
        for e in &stored {
            adj[e.src].push((e.dst, e.weight));
            if !directed {
                adj[e.dst].push((e.src, e.weight));
            }
        }
        for a in adj.iter_mut() {
            a.sort_by_key(|&(v, _)| v);
        }
        Ok(Self { n, directed, edges: stored, shift_kind, adj })
    }

    pub fn undirected(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, false, pairs.iter().map(|&(u, v)| Edge::new(u, v, 1.0)).collect(), ShiftKind::Laplacian)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn shift_kind(&self) -> ShiftKind {
        self.shift_kind
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Out-neighbors (all neighbors when undirected) with weights, sorted by id.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    pub fn with_shift(&self, kind: ShiftKind) -> Graph {
        let mut g = self.clone();
        g.shift_kind = kind;
        g
    }

    /// Same topology with i.i.d. uniform(lo, hi) weights.
    pub fn with_random_weights<R: Rng + ?Sized>(&self, lo: f64, hi: f64, rng: &mut R) -> Graph {
        let edges = self.edges.iter().map(|e| Edge::new(e.src, e.dst, rng.gen_range(lo..hi))).collect();
        Graph::new(self.n, self.directed, edges, self.shift_kind).expect("reweighting keeps validity")
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.adj[u].iter().find(|&&(w, _)| w == v).map_or(0.0, |&(_, w)| w)
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.src, e.dst)] = e.weight;
            if !self.directed {
                a[(e.dst, e.src)] = e.weight;
            }
        }
        a
    }

    /// Weighted out-degrees.
    pub fn degrees(&self) -> DVector<f64> {
        DVector::from_iterator(self.n, self.adj.iter().map(|a| a.iter().map(|&(_, w)| w).sum()))
    }

    /// D − A with out-degrees.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = -self.adjacency_matrix();
        for (v, d) in self.degrees().iter().enumerate() {
            l[(v, v)] = *d;
        }
        l
    }

    pub fn shift_matrix(&self) -> DMatrix<f64> {
        match self.shift_kind {
            ShiftKind::Laplacian => self.laplacian(),
            ShiftKind::Adjacency => self.adjacency_matrix(),
        }
    }

    /// Eigendecomposition of the shift matrix: real when it is symmetric, unitary over ℂ when
    /// it is merely normal.
    pub fn eigendecompose(&self) -> Result<GraphSpectrum> {
        let m = self.shift_matrix();
        if (&m - m.transpose()).amax() == 0.0 {
            let (values, vectors) = linalg::sym_eigen(&m);
            return Ok(GraphSpectrum::Real(Spectrum { values, vectors }));
        }
        let comm = linalg::commutator_norm(&m);
        let scale = m.norm_squared();
        if comm > 1e-8 * scale {
            return Err(Error::NonNormalShift(comm));
        }
        let (vals, vecs) = linalg::normal_eigen(&m).ok_or(Error::NonNormalShift(comm))?;
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| {
            let (x, y) = (vals[a], vals[b]);
            let re = if (x.re - y.re).abs() <= 1e-9 { std::cmp::Ordering::Equal } else { x.re.total_cmp(&y.re) };
            re.then(x.im.total_cmp(&y.im)).then(a.cmp(&b))
        });
        let n = self.n;
        let mut vectors = DMatrix::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (k, &i) in order.iter().enumerate() {
            let mut c: DVector<C64> = vecs.column(i).into_owned();
            linalg::fix_phase(&mut c);
            vectors.set_column(k, &c);
            values.push(vals[i]);
        }
        Ok(GraphSpectrum::Complex(ComplexSpectrum { values, vectors }))
    }

    /// Real spectrum; fails for non-symmetric shifts.
    pub fn real_spectrum(&self) -> Result<Spectrum> {
        match self.eigendecompose()? {
            GraphSpectrum::Real(s) => Ok(s),
            GraphSpectrum::Complex(_) => Err(Error::NotSymmetric),
        }
    }

    /// Breadth-first hop counts from the nearest source, following edges forward.
    pub fn hop_distances(&self, sources: &[usize]) -> Result<Vec<usize>> {
        if sources.is_empty() {
            return Err(Error::EmptySources);
        }
        let mut dist = vec![UNREACHABLE; self.n];
        let mut queue = VecDeque::new();
        for &s in sources {
            if s >= self.n {
                return Err(Error::InvalidSubset(format!("source {s} out of range")));
            }
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adj[u] {
                if dist[v] == UNREACHABLE {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    /// Induced subgraph on `v0` (ascending ids), relabelled 0..|v0|; returns the id map.
    pub fn induced_subgraph(&self, v0: &[usize]) -> (Graph, Vec<usize>) {
        let mut ids: Vec<usize> = v0.iter().copied().filter(|&v| v < self.n).collect();
        ids.sort_unstable();
        ids.dedup();
        let mut pos = vec![usize::MAX; self.n];
        for (i, &v) in ids.iter().enumerate() {
            pos[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| pos[e.src] != usize::MAX && pos[e.dst] != usize::MAX)
            .map(|e| Edge::new(pos[e.src], pos[e.dst], e.weight))
            .collect();
        let g = Graph::new(ids.len(), self.directed, edges, self.shift_kind).expect("subgraph of a valid graph");
        (g, ids)
    }

    /// Weakly connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.src), find(&mut parent, e.dst));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut index = vec![usize::MAX; self.n];
        for v in 0..self.n {
            let r = find(&mut parent, v);
            if index[r] == usize::MAX {
                index[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[index[r]].push(v);
        }
        groups
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.components().len() == 1
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let ends = if self.directed { 1.0 } else { 2.0 };
        ends * self.edges.len() as f64 / self.n as f64
    }
}

/// Real orthonormal eigenbasis, eigenvalues ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Unitary eigenbasis of a normal shift, eigenvalues sorted by real then imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSpectrum {
    pub values: Vec<C64>,
    pub vectors: DMatrix<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GraphSpectrum {
    Real(Spectrum),
    Complex(ComplexSpectrum),
}

impl GraphSpectrum {
    pub fn len(&self) -> usize {
        match self {
            GraphSpectrum::Real(s) => s.values.len(),
            GraphSpectrum::Complex(s) => s.values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_real(&self) -> bool {
        matches!(self, GraphSpectrum::Real(_))
    }

    pub fn value(&self, i: usize) -> C64 {
        match self {
            GraphSpectrum::Real(s) => C64::new(s.values[i], 0.0),
            GraphSpectrum::Complex(s) => s.values[i],
        }
    }

    pub fn values(&self) -> Vec<C64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    pub fn vector(&self, i: usize) -> DVector<C64> {
        match self {
            GraphSpectrum::Real(s) => s.vectors.column(i).map(|x| C64::new(x, 0.0)),
            GraphSpectrum::Complex(s) => s.vectors.column(i).into_owned(),
        }
    }

    pub fn as_real(&self) -> Option<&Spectrum> {
        match self {
            GraphSpectrum::Real(s) => Some(s),
            GraphSpectrum::Complex(_) => None,
        }
    }

    /// U Λ Uᴴ.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        match self {
            GraphSpectrum::Real(s) => {
                let m = &s.vectors * DMatrix::from_diagonal(&s.values) * s.vectors.transpose();
                m.map(|x| C64::new(x, 0.0))
            }
            GraphSpectrum::Complex(s) => {
                let d = DMatrix::from_diagonal(&DVector::from_vec(s.values.clone()));
                &s.vectors * d * s.vectors.adjoint()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        let pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Graph::undirected(n, &pairs).unwrap()
    }

    fn cycle(n: usize, directed: bool) -> Graph {
        let edges = (0..n).map(|i| Edge::new(i, (i + 1) % n, 1.0)).collect();
        Graph::new(n, directed, edges, ShiftKind::Laplacian).unwrap()
    }

    #[test]
    fn laplacian_of_path() {
        let l = path(3).shift_matrix();
        let expect = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        assert_eq!(l, expect);
    }

    #[test]
    fn directed_cycle_adjacency() {
        let a = cycle(8, true).with_shift(ShiftKind::Adjacency).shift_matrix();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(a[(i, j)], if j == (i + 1) % 8 { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn weighted_single_edge() {
        let g = Graph::new(2, false, vec![Edge::new(0, 1, 2.0)], ShiftKind::Laplacian).unwrap();
        assert_eq!(g.shift_matrix(), DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]));
    }

    #[test]
    fn two_path_spectrum() {
        let s = path(2).real_spectrum().unwrap();
        assert!(s.values[0].abs() < 1e-14 && (s.values[1] - 2.0).abs() < 1e-14);
        let r = 1.0 / 2f64.sqrt();
        assert!((s.vectors.column(0) - DVector::from_vec(vec![r, r])).norm() < 1e-12);
        assert!((s.vectors.column(1) - DVector::from_vec(vec![r, -r])).norm() < 1e-12);
    }

    #[test]
    fn directed_cycle_spectrum_is_roots_of_unity() {
        let g = cycle(8, true).with_shift(ShiftKind::Adjacency);
        let s = g.eigendecompose().unwrap();
        assert!(!s.is_real());
        let mut found = [false; 8];
        for v in s.values() {
            let k = (0..8)
                .find(|&k| (v - C64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / 8.0)).norm() < 1e-9)
                .expect("eigenvalue is an 8th root of unity");
            found[k] = true;
        }
        assert!(found.iter().all(|&f| f));
        let err = (s.reconstruct() - g.shift_matrix().map(|x| C64::new(x, 0.0))).norm();
        assert!(err < 1e-8);
    }

    #[test]
    fn non_normal_shift_is_rejected() {
        let g = Graph::new(3, true, vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)], ShiftKind::Adjacency).unwrap();
        assert!(matches!(g.eigendecompose(), Err(Error::NonNormalShift(_))));
    }

    #[test]
    fn hop_distances_on_cycle() {
        let g = cycle(8, false);
        assert_eq!(g.hop_distances(&[0]).unwrap(), vec![0, 1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(g.hop_distances(&(0..8).collect::<Vec<_>>()).unwrap(), vec![0; 8]);
        assert!(matches!(g.hop_distances(&[]), Err(Error::EmptySources)));
    }

    #[test]
    fn hop_distances_unreachable() {
        let g = Graph::undirected(4, &[(0, 1), (2, 3)]).unwrap();
        let d = g.hop_distances(&[0]).unwrap();
        assert_eq!(d[1], 1);
        assert_eq!(d[2], UNREACHABLE);
        assert_eq!(d[3], UNREACHABLE);
    }

    #[test]
    fn induced_subgraph_of_cycle() {
        let (h, ids) = cycle(4, false).induced_subgraph(&[0, 2]);
        assert_eq!(h.n(), 2);
        assert_eq!(h.edge_count(), 0);
        assert_eq!(ids, vec![0, 2]);
        let g = path(5);
        let (h, _) = g.induced_subgraph(&[0, 1, 2, 3, 4]);
        assert_eq!(h, g);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::undirected(3, &[(0, 0)]).is_err());
        assert!(Graph::undirected(3, &[(0, 3)]).is_err());
        assert!(Graph::undirected(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(2, false, vec![Edge::new(0, 1, -1.0)], ShiftKind::Laplacian).is_err());
    }
}

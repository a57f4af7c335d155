//! The observed subset V0 inside G: restriction/extension maps, the hop-class tuple
//! (C_{V0}, D_{V0}), refinements and filter-family dimension.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Spectrum, UNREACHABLE};
use crate::linalg;

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    n: usize,
    v0: Vec<usize>,
    pos: Vec<Option<usize>>,
    hop_class: Vec<usize>,
    /// Row j: hop distances from v0[j] to every vertex of G.
    dist: Vec<Vec<usize>>,
}

impl Embedding {
    /// Sorts and deduplicates `v0`; ids must be < n.
    pub fn new(g: &Graph, v0: &[usize]) -> Result<Self> {
        let mut ids = v0.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(Error::InvalidSubset("subset is empty".into()));
        }
        if let Some(&v) = ids.iter().find(|&&v| v >= g.n()) {
            return Err(Error::InvalidSubset(format!("vertex {v} out of range for n = {}", g.n())));
        }
        let mut pos = vec![None; g.n()];
        for (j, &v) in ids.iter().enumerate() {
            pos[v] = Some(j);
        }
        let dist: Vec<Vec<usize>> = ids.iter().map(|&v| g.hop_distances(&[v]).expect("nonempty source")).collect();
        let hop_class = (0..ids.len())
            .map(|j| {
                ids.iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, &u)| dist[j][u])
                    .min()
                    .unwrap_or(UNREACHABLE)
            })
            .collect();
        Ok(Self { n: g.n(), v0: ids, pos, hop_class, dist })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.v0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v0.is_empty()
    }

    pub fn vertices(&self) -> &[usize] {
        &self.v0
    }

    /// Index of vertex `v` within V0.
    pub fn position(&self, v: usize) -> Option<usize> {
        self.pos.get(v).copied().flatten()
    }

    /// Smallest i ≥ 1 such that `v0[j]` has a V0 vertex exactly i hops away (`UNREACHABLE` if none).
    pub fn hop_class(&self, j: usize) -> usize {
        self.hop_class[j]
    }

    pub fn hop_classes(&self) -> &[usize] {
        &self.hop_class
    }

    pub fn project(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: y.len() });
        }
        Ok(DVector::from_iterator(self.v0.len(), self.v0.iter().map(|&v| y[v])))
    }

    pub fn extend_by_zero(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.v0.len() {
            return Err(Error::DimensionMismatch { expected: self.v0.len(), got: x.len() });
        }
        let mut y = DVector::zeros(self.n);
        for (j, &v) in self.v0.iter().enumerate() {
            y[v] = x[j];
        }
        Ok(y)
    }

    /// Rows of `m` belonging to V0.
    pub fn project_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.v0.len(), m.ncols(), |i, j| m[(self.v0[i], j)])
    }

    /// The hop-class tuple: level-1 set of vertices with a V0 neighbour, then for each i ≥ 2 the
    /// vertices whose nearest V0 vertex is i hops away together with those i-hop V0 vertices.
    /// Set at level i gets degree i + r (capped at n − 1).
    pub fn build_cvd(&self, g: &Graph, r: usize) -> Result<CvdTuple> {
        if !g.is_connected() {
            return Err(Error::DisconnectedGraph);
        }
        let mut levels: Vec<usize> = self.hop_class.iter().copied().filter(|&h| h != UNREACHABLE).collect();
        levels.sort_unstable();
        levels.dedup();
        let mut sets = Vec::new();
        let mut degrees = Vec::new();
        for &i in &levels {
            let mut set = BTreeSet::new();
            for (j, &v) in self.v0.iter().enumerate() {
                if self.hop_class[j] == i {
                    set.insert(v);
                    for &u in &self.v0 {
                        if u != v && self.dist[j][u] == i {
                            set.insert(u);
                        }
                    }
                }
            }
            sets.push(set.into_iter().collect());
            degrees.push((i + r).min(self.n.saturating_sub(1)));
        }
        let unattached = self
            .v0
            .iter()
            .enumerate()
            .filter(|&(j, _)| self.hop_class[j] == UNREACHABLE)
            .map(|(_, &v)| v)
            .collect::<Vec<_>>();
        if !unattached.is_empty() {
            log::warn!("{} subset vertices have no other subset vertex in reach", unattached.len());
        }
        Ok(CvdTuple { tuple: SubsetTuple { sets, degrees }, levels, unattached })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SubsetTuple {
    pub sets: Vec<Vec<usize>>,
    pub degrees: Vec<usize>,
}

impl SubsetTuple {
    /// Sorts and deduplicates each set; rejects empty sets and length mismatches.
    pub fn new(sets: Vec<Vec<usize>>, degrees: Vec<usize>) -> Result<Self> {
        if sets.len() != degrees.len() {
            return Err(Error::DimensionMismatch { expected: sets.len(), got: degrees.len() });
        }
        let sets = sets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                if s.is_empty() {
                    Err(Error::InvalidSubset("tuple contains an empty set".into()))
                } else {
                    Ok(s)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sets, degrees })
    }

    pub fn single(set: Vec<usize>, degree: usize) -> Result<Self> {
        Self::new(vec![set], vec![degree])
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Clamps every degree to n − 1.
    pub fn clamp_degrees(mut self, n: usize) -> Self {
        for d in self.degrees.iter_mut() {
            *d = (*d).min(n.saturating_sub(1));
        }
        self
    }

    pub fn union(&self) -> BTreeSet<usize> {
        self.sets.iter().flatten().copied().collect()
    }

    pub fn check_range(&self, n: usize) -> Result<()> {
        for s in &self.sets {
            if let Some(&v) = s.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidSubset(format!("tuple vertex {v} out of range for n = {n}")));
            }
        }
        for &d in &self.degrees {
            if d >= n {
                return Err(Error::DegreeOverflow { degree: d, max: n.saturating_sub(1) });
            }
        }
        Ok(())
    }

    /// Every set owns a vertex that lies in no other set.
    pub fn is_essential(&self) -> bool {
        (0..self.sets.len()).all(|i| {
            self.sets[i]
                .iter()
                .any(|v| self.sets.iter().enumerate().all(|(j, s)| j == i || s.binary_search(v).is_err()))
        })
    }

    /// Whether `self` refines `coarse`: same union, every set inside some coarse set, and
    /// distinct sets inside a common coarse set are disjoint.
    pub fn is_refinement_of(&self, coarse: &SubsetTuple) -> bool {
        if self.union() != coarse.union() {
            return false;
        }
        let subset = |a: &[usize], b: &[usize]| a.iter().all(|v| b.binary_search(v).is_ok());
        if !self.sets.iter().all(|s| coarse.sets.iter().any(|c| subset(s, c))) {
            return false;
        }
        for c in &coarse.sets {
            let inside: Vec<&Vec<usize>> = self.sets.iter().filter(|s| subset(s, c)).collect();
            for a in 0..inside.len() {
                for b in a + 1..inside.len() {
                    if inside[a] != inside[b] && inside[a].iter().any(|v| inside[b].binary_search(v).is_ok()) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

pub fn is_essential(t: &SubsetTuple) -> bool {
    t.is_essential()
}

pub fn is_refinement(fine: &SubsetTuple, coarse: &SubsetTuple) -> bool {
    fine.is_refinement_of(coarse)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvdTuple {
    pub tuple: SubsetTuple,
    /// Hop level i of each emitted set.
    pub levels: Vec<usize>,
    /// Subset vertices with no other subset vertex in reach; excluded from every set.
    pub unattached: Vec<usize>,
}

/// Appends U_i = V_i \ V_{i+1} (next set in the tuple) with the degree of V_i, keeping the
/// original sets and skipping empty or already present (set, degree) pairs.
pub fn refine_default(t: &SubsetTuple) -> SubsetTuple {
    let mut out = t.clone();
    let k = t.sets.len();
    for i in 0..k {
        let next: &[usize] = if i + 1 < k { &t.sets[i + 1] } else { &[] };
        let u: Vec<usize> = t.sets[i].iter().copied().filter(|v| next.binary_search(v).is_err()).collect();
        if u.is_empty() {
            continue;
        }
        let d = t.degrees[i];
        if out.sets.iter().zip(&out.degrees).any(|(s, &e)| *s == u && e == d) {
            continue;
        }
        out.sets.push(u);
        out.degrees.push(d);
    }
    out
}

/// Rank of the filter family {vec(P̄_{V_i} p_j(S)) : 0 ≤ j ≤ d_i}.
pub fn family_dimension(g: &Graph, t: &SubsetTuple) -> usize {
    let cols = family_columns(g, t);
    if cols.is_empty() {
        return 0;
    }
    let m = DMatrix::from_columns(&cols);
    linalg::rank(&m, 1e-8)
}

/// Column vectors vec(P̄_{V_i} p_j(S)) spanning the filter family. For symmetric shifts p_j are
/// the polynomials orthonormal over the spectrum (Arnoldi on the eigenvalues), which keeps the
/// columns well conditioned at high degree; other shifts use rescaled Chebyshev polynomials.
pub fn family_columns(g: &Graph, t: &SubsetTuple) -> Vec<DVector<f64>> {
    let n = g.n();
    let polys = match g.real_spectrum() {
        Ok(s) => spectral_orthonormal_powers(&s, t.max_degree()),
        Err(_) => chebyshev_powers(&g.shift_matrix(), t.max_degree()),
    };
    let mut cols = Vec::new();
    for (set, &d) in t.sets.iter().zip(&t.degrees) {
        for p in polys.iter().take(d + 1) {
            let mut m = DMatrix::zeros(n, n);
            for &v in set {
                m.set_row(v, &p.row(v));
            }
            cols.push(DVector::from_column_slice(m.as_slice()));
        }
    }
    cols
}

/// U diag(q_j) Uᵀ where q_0, q_1, … orthonormalize 1, λ, λ², … over the eigenvalues. Stops
/// early once the degree exceeds the number of distinct eigenvalues.
fn spectral_orthonormal_powers(s: &Spectrum, d: usize) -> Vec<DMatrix<f64>> {
    let n = s.values.len();
    let scale = s.values.amax().max(1e-300);
    let lam = &s.values / scale;
    let mut qs: Vec<DVector<f64>> = vec![DVector::from_element(n, 1.0 / (n as f64).sqrt())];
    while qs.len() <= d {
        let mut q = lam.component_mul(qs.last().expect("nonempty"));
        for _ in 0..2 {
            for p in &qs {
                let c = p.dot(&q);
                q -= p * c;
            }
        }
        let norm = q.norm();
        if norm < 1e-10 {
            break;
        }
        qs.push(q / norm);
    }
    qs.iter().map(|q| &s.vectors * DMatrix::from_diagonal(q) * s.vectors.transpose()).collect()
}

fn chebyshev_powers(s: &DMatrix<f64>, d: usize) -> Vec<DMatrix<f64>> {
    let n = s.nrows();
    let bound = (0..n).map(|i| s.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max).max(1e-12);
    let a = s * (2.0 / bound) - DMatrix::identity(n, n);
    let mut out = vec![DMatrix::identity(n, n)];
    if d >= 1 {
        out.push(a.clone());
    }
    for j in 2..=d {
        let next = (&a * &out[j - 1]) * 2.0 - &out[j - 2];
        out.push(next);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenericityReport {
    pub min_eigen_gap: f64,
    pub min_abs_component: f64,
    pub generic: bool,
}

/// Checks the distinct-eigenvalue / nonvanishing-eigenvector hypotheses behind the dimension
/// formula; warns when they look violated.
pub fn genericity_check(g: &Graph) -> Result<GenericityReport> {
    let s = g.real_spectrum()?;
    let n = s.values.len();
    let gap = (1..n).map(|i| s.values[i] - s.values[i - 1]).fold(f64::INFINITY, f64::min);
    let comp = s.vectors.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    let generic = gap >= 1e-6 && comp >= 1e-8;
    if !generic {
        log::warn!("graph is not generic: min eigen-gap {gap:.3e}, min |U_ij| {comp:.3e}");
    }
    Ok(GenericityReport { min_eigen_gap: gap, min_abs_component: comp, generic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GraphKind};

    fn cycle(n: usize) -> Graph {
        generate(&GraphKind::Cycle { n, directed: false }, 0).unwrap()
    }

    #[test]
    fn project_and_extend() {
        let g = Graph::undirected(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let e = Embedding::new(&g, &[0, 2]).unwrap();
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.project(&y).unwrap(), DVector::from_vec(vec![1.0, 3.0]));
        let x = DVector::from_vec(vec![1.0, 3.0]);
        assert_eq!(e.extend_by_zero(&x).unwrap(), DVector::from_vec(vec![1.0, 0.0, 3.0, 0.0]));
        assert!(matches!(e.project(&x), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(e.extend_by_zero(&y), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cycle_opposite_pair() {
        let g = cycle(8);
        let e = Embedding::new(&g, &[0, 4]).unwrap();
        for r in 0..3 {
            let c = e.build_cvd(&g, r).unwrap();
            assert_eq!(c.tuple.sets, vec![vec![0, 4]]);
            assert_eq!(c.tuple.degrees, vec![4 + r]);
        }
    }

    #[test]
    fn clique_subset_is_single_level() {
        let g = generate(&GraphKind::Complete { n: 6 }, 0).unwrap();
        let e = Embedding::new(&g, &[1, 2, 4]).unwrap();
        let c = e.build_cvd(&g, 2).unwrap();
        assert_eq!(c.tuple.sets, vec![vec![1, 2, 4]]);
        assert_eq!(c.tuple.degrees, vec![3]);
    }

    #[test]
    fn disconnected_graph_rejected() {
        let g = Graph::undirected(4, &[(0, 1), (2, 3)]).unwrap();
        let e = Embedding::new(&g, &[0, 2]).unwrap();
        assert!(matches!(e.build_cvd(&g, 0), Err(Error::DisconnectedGraph)));
    }

    #[test]
    fn essential_and_refinement() {
        let a = SubsetTuple::new(vec![vec![0, 1], vec![2, 3]], vec![1, 1]).unwrap();
        assert!(a.is_essential());
        let dup = SubsetTuple::new(vec![vec![0, 1], vec![0, 1]], vec![1, 1]).unwrap();
        assert!(!dup.is_essential());
        let fine = SubsetTuple::new(vec![vec![0], vec![1], vec![2, 3]], vec![1, 1, 1]).unwrap();
        assert!(fine.is_refinement_of(&a));
        let straddle = SubsetTuple::new(vec![vec![0], vec![1, 2], vec![3]], vec![1, 1, 1]).unwrap();
        assert!(!straddle.is_refinement_of(&a));
    }

    #[test]
    fn refine_disjoint_is_unchanged() {
        let t = SubsetTuple::new(vec![vec![0, 1], vec![2, 3]], vec![2, 3]).unwrap();
        assert_eq!(refine_default(&t), t);
    }

    #[test]
    fn refine_nested_adds_difference() {
        let t = SubsetTuple::new(vec![vec![0, 1, 2, 3], vec![2, 3]], vec![2, 3]).unwrap();
        let r = refine_default(&t);
        assert_eq!(r.sets, vec![vec![0, 1, 2, 3], vec![2, 3], vec![0, 1]]);
        assert_eq!(r.degrees, vec![2, 3, 2]);
    }

    #[test]
    fn dimension_of_full_shift_invariant_family() {
        let mut r = crate::rng::from_seed(3);
        let g = generate(&GraphKind::Path { n: 6 }, 0).unwrap().with_random_weights(0.5, 1.5, &mut r);
        let t = SubsetTuple::single((0..6).collect(), 5).unwrap();
        assert_eq!(family_dimension(&g, &t), 6);
    }
}

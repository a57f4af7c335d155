//! Semi-shift-invariant filters F = Σ_i P̄_{V_i} Q_i(S): assembly, local evaluation and
//! per-vertex spectral action.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::embedding::SubsetTuple;
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSpectrum, ShiftKind, UNREACHABLE};
use crate::linalg::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiFilter {
    pub tuple: SubsetTuple,
    /// coeffs[i][j] multiplies P̄_{V_i} S^j.
    pub coeffs: Vec<Vec<f64>>,
    /// Marks coefficients pinned during optimization.
    pub fixed_mask: Vec<Vec<bool>>,
}

impl SemiFilter {
    pub fn new(tuple: SubsetTuple, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if coeffs.len() != tuple.len() {
            return Err(Error::DimensionMismatch { expected: tuple.len(), got: coeffs.len() });
        }
        for (c, &d) in coeffs.iter().zip(&tuple.degrees) {
            if c.len() != d + 1 {
                return Err(Error::DimensionMismatch { expected: d + 1, got: c.len() });
            }
        }
        let fixed_mask = coeffs.iter().map(|c| vec![false; c.len()]).collect();
        Ok(Self { tuple, coeffs, fixed_mask })
    }

    pub fn zeros(tuple: SubsetTuple) -> Self {
        let coeffs: Vec<Vec<f64>> = tuple.degrees.iter().map(|&d| vec![0.0; d + 1]).collect();
        let fixed_mask = coeffs.iter().map(|c| vec![false; c.len()]).collect();
        Self { tuple, coeffs, fixed_mask }
    }

    /// Pins coefficient (set, power) to `value`.
    pub fn with_fixed(mut self, set: usize, power: usize, value: f64) -> Result<Self> {
        if set >= self.coeffs.len() || power >= self.coeffs[set].len() {
            return Err(Error::InfeasibleConstraint { set, power });
        }
        self.coeffs[set][power] = value;
        self.fixed_mask[set][power] = true;
        Ok(self)
    }

    /// Total number of coefficients.
    pub fn coeff_count(&self) -> usize {
        self.coeffs.iter().map(Vec::len).sum()
    }

    /// αf + βf′ over a shared tuple.
    pub fn combine(&self, alpha: f64, other: &SemiFilter, beta: f64) -> Result<SemiFilter> {
        if self.tuple != other.tuple {
            return Err(Error::InvalidParams("filters live on different tuples".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect())
            .collect();
        SemiFilter::new(self.tuple.clone(), coeffs)
    }

    /// Q_i(λ) = Σ_j a_ij λ^j.
    pub fn polynomial(&self, set: usize, lambda: C64) -> C64 {
        self.coeffs[set].iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * lambda + a)
    }

    /// Dense |V|×|V| matrix; rows of V_i accumulate Σ_j a_ij S^j by powering a row block.
    pub fn assemble(&self, g: &Graph) -> Result<DMatrix<f64>> {
        self.tuple.check_range(g.n())?;
        let n = g.n();
        let s = g.shift_matrix();
        let mut m = DMatrix::zeros(n, n);
        for (set, coeffs) in self.tuple.sets.iter().zip(&self.coeffs) {
            let mut block = DMatrix::from_fn(set.len(), n, |r, c| if set[r] == c { 1.0 } else { 0.0 });
            let mut acc = &block * coeffs[0];
            for &a in &coeffs[1..] {
                block = &block * &s;
                acc += &block * a;
            }
            for (r, &v) in set.iter().enumerate() {
                let row = m.row(v) + acc.row(r);
                m.set_row(v, &row);
            }
        }
        Ok(m)
    }

    /// Evaluates F x set by set on the d_i-hop neighbourhood of V_i only, using the Laplacian
    /// of the induced subgraph there.
    pub fn apply_local(&self, g: &Graph, x: &DVector<f64>) -> Result<DVector<f64>> {
        if g.shift_kind() != ShiftKind::Laplacian {
            return Err(Error::RequiresLaplacian);
        }
        if x.len() != g.n() {
            return Err(Error::DimensionMismatch { expected: g.n(), got: x.len() });
        }
        self.tuple.check_range(g.n())?;
        let mut out = DVector::zeros(g.n());
        for (set, coeffs) in self.tuple.sets.iter().zip(&self.coeffs) {
            let d = coeffs.len() - 1;
            if d == 0 {
                for &v in set {
                    out[v] += coeffs[0] * x[v];
                }
                continue;
            }
            let dist = g.hop_distances(set)?;
            let ball: Vec<usize> = (0..g.n()).filter(|&v| dist[v] != UNREACHABLE && dist[v] <= d).collect();
            let (local, ids) = g.induced_subgraph(&ball);
            let l = local.laplacian();
            let mut p = DVector::from_iterator(ids.len(), ids.iter().map(|&v| x[v]));
            let mut acc = &p * coeffs[0];
            for &a in &coeffs[1..] {
                p = &l * p;
                acc += &p * a;
            }
            for &v in set {
                let k = ids.binary_search(&v).expect("set lies in its own ball");
                out[v] += acc[k];
            }
        }
        Ok(out)
    }
}

/// Per-vertex spectral action Λ_v = (Σ_{j: v∈V_j} Q_j(λ_i))_i for v in the union of the sets.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralProfile {
    pub vertices: Vec<usize>,
    pub values: Vec<Vec<C64>>,
}

pub fn spectral_profile(f: &SemiFilter, s: &GraphSpectrum) -> SpectralProfile {
    let lambdas = s.values();
    let vertices: Vec<usize> = f.tuple.union().into_iter().collect();
    let per_set: Vec<Vec<C64>> =
        (0..f.tuple.len()).map(|k| lambdas.iter().map(|&l| f.polynomial(k, l)).collect()).collect();
    let values = vertices
        .iter()
        .map(|v| {
            let mut acc = vec![C64::new(0.0, 0.0); lambdas.len()];
            for (k, set) in f.tuple.sets.iter().enumerate() {
                if set.binary_search(v).is_ok() {
                    for (a, q) in acc.iter_mut().zip(&per_set[k]) {
                        *a += q;
                    }
                }
            }
            acc
        })
        .collect();
    SpectralProfile { vertices, values }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MainSpectralSet {
    /// Largest group of vertices sharing one spectral tuple (the main component).
    pub component: Vec<usize>,
    /// Their common tuple.
    pub values: Vec<C64>,
    /// Number of distinct groups found.
    pub groups: usize,
}

/// Groups vertices whose tuples agree entrywise within `tol` (default 1e-6 · max|λ_{i,v}|) and
/// returns the largest group; ties go to the group with the smallest vertex id.
pub fn main_spectral_set(p: &SpectralProfile, tol: Option<f64>) -> MainSpectralSet {
    let scale = p.values.iter().flatten().fold(0.0f64, |a, z| a.max(z.norm()));
    let tol = tol.unwrap_or(1e-6 * scale);
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (k, &v) in p.vertices.iter().enumerate() {
        let hit = groups.iter_mut().find(|(rep, _)| {
            p.values[*rep].iter().zip(&p.values[k]).all(|(a, b)| (a - b).norm() <= tol)
        });
        match hit {
            Some((_, members)) => members.push(v),
            None => groups.push((k, vec![v])),
        }
    }
    let count = groups.len();
    let mut best: Option<(usize, Vec<usize>)> = None;
    for g in groups {
        if best.as_ref().map_or(true, |b| g.1.len() > b.1.len()) {
            best = Some(g);
        }
    }
    match best {
        Some((rep, component)) => MainSpectralSet { component, values: p.values[rep].clone(), groups: count },
        None => MainSpectralSet { component: Vec::new(), values: Vec::new(), groups: 0 },
    }
}

use nalgebra::DVector;
use serde::Serialize;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSpectrum};
use crate::linalg::C64;

/// Projections below this norm are skipped.
const ZERO_PROJECTION: f64 = 1e-10;
/// Slack on the similarity threshold so exact orthogonality survives round-off.
const SIMILARITY_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OmegaPair {
    /// Index of the eigenpair in the graph spectrum.
    pub index: usize,
    #[serde(skip)]
    pub eigenvalue: C64,
    #[serde(skip)]
    pub x: DVector<C64>,
    #[serde(skip)]
    pub y: DVector<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OmegaSet {
    pub pairs: Vec<OmegaPair>,
    pub delta: f64,
    pub real: bool,
}

impl OmegaSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Eigenpair order used for Ω: |λ| ascending, then |arg λ|, then spectrum index.
pub fn magnitude_order(s: &GraphSpectrum) -> Vec<usize> {
    let vals = s.values();
    let scale = vals.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(1e-300);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (vals[a], vals[b]);
        let close = |p: f64, q: f64, tol: f64| (p - q).abs() <= tol;
        let mag = if close(x.norm(), y.norm(), 1e-12 * scale) {
            std::cmp::Ordering::Equal
        } else {
            x.norm().total_cmp(&y.norm())
        };
        let arg = |z: C64| if z.norm() <= 1e-12 * scale { 0.0 } else { z.arg().abs() };
        let ang = if close(arg(x), arg(y), 1e-9) { std::cmp::Ordering::Equal } else { arg(x).total_cmp(&arg(y)) };
        mag.then(ang).then(a.cmp(&b))
    });
    order
}

pub fn build_omega(g: &Graph, e: &Embedding, delta: f64) -> Result<OmegaSet> {
    build_omega_with(&g.eigendecompose()?, e, delta)
}

/// Greedy Ω: walk eigenpairs in magnitude order and keep (P y, y) when its cosine similarity to
/// every kept projection is at most `delta`. The first pair with a nonzero projection is kept
/// unconditionally.
pub fn build_omega_with(s: &GraphSpectrum, e: &Embedding, delta: f64) -> Result<OmegaSet> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParams(format!("delta = {delta} outside [0, 1]")));
    }
    let mut pairs: Vec<OmegaPair> = Vec::new();
    for i in magnitude_order(s) {
        let y = s.vector(i);
        let x = DVector::from_iterator(e.len(), e.vertices().iter().map(|&v| y[v]));
        let nx = x.norm();
        if nx <= ZERO_PROJECTION {
            continue;
        }
        let ok = pairs.iter().all(|p| p.x.dotc(&x).norm() / (p.x.norm() * nx) <= delta + SIMILARITY_SLACK);
        if ok {
            pairs.push(OmegaPair { index: i, eigenvalue: s.value(i), x, y });
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyProjection);
    }
    Ok(OmegaSet { pairs, delta, real: s.is_real() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GraphKind};
    use crate::graph::ShiftKind;

    #[test]
    fn directed_cycle_gives_one_pair_per_frequency() {
        let g = generate(&GraphKind::Cycle { n: 8, directed: true }, 0).unwrap().with_shift(ShiftKind::Adjacency);
        let e = Embedding::new(&g, &[0, 2, 4, 6]).unwrap();
        let o = build_omega(&g, &e, 0.0).unwrap();
        assert_eq!(o.len(), 4);
        // first pair is the constant vector
        let x0 = &o.pairs[0].x;
        assert!(x0.iter().all(|z| (z - x0[0]).norm() < 1e-12));
    }

    #[test]
    fn delta_one_keeps_all_nonzero_projections() {
        let g = generate(&GraphKind::Lattice { rows: 3, cols: 3 }, 0).unwrap();
        let e = Embedding::new(&g, &[0, 4, 8]).unwrap();
        let s = g.eigendecompose().unwrap();
        let nonzero = (0..9)
            .filter(|&i| e.vertices().iter().map(|&v| s.vector(i)[v].norm_sqr()).sum::<f64>().sqrt() > 1e-10)
            .count();
        assert_eq!(build_omega_with(&s, &e, 1.0).unwrap().len(), nonzero);
    }

    #[test]
    fn first_pair_is_constant_for_laplacian() {
        let g = generate(&GraphKind::Lattice { rows: 3, cols: 4 }, 0).unwrap();
        let e = Embedding::new(&g, &[0, 3, 5, 10]).unwrap();
        let o = build_omega(&g, &e, 0.6).unwrap();
        assert_eq!(o.pairs[0].index, 0);
        for p in &o.pairs[1..] {
            let c = o.pairs[0].x.dotc(&p.x).norm() / (o.pairs[0].x.norm() * p.x.norm());
            assert!(c <= 0.6 + 1e-9);
        }
    }
}

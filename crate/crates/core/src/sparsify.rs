//! Effective-resistance sparsification of graphs and fitted operators, and the alternating
//! support-selection heuristic.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::embedding::{Embedding, SubsetTuple};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, ShiftKind};
use crate::linalg;
use crate::operators::{Element, Family, ParamLayout, SubgraphOperator};
use crate::rng;
use crate::solvers::{
    build_omega, default_fixed, solve_least_squares_with_layout, solve_operator_difference_with_layout, FitResult,
    FixedCoeff, SubgradientOptions,
};

/// Fitting problem solved on each candidate support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum SparseProblem {
    LeastSquares { delta: f64 },
    OperatorDifference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SparsifyConfig {
    pub epsilon: f64,
    /// Ranked-candidate budget; `None` means ⌈c1 m ln m⌉ with c1 = 4/ε².
    pub n1: Option<usize>,
    /// Uniform extras; `None` means ⌊ρ n1⌋.
    pub n2: Option<usize>,
    pub rho: f64,
    pub max_outer_iters: usize,
    pub perturb_scale: f64,
    pub problem: SparseProblem,
    pub fixed: Vec<FixedCoeff>,
    pub options: SubgradientOptions,
}

impl Default for SparsifyConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            n1: None,
            n2: None,
            rho: 0.1,
            max_outer_iters: 10,
            perturb_scale: 1e-3,
            problem: SparseProblem::LeastSquares { delta: 0.6 },
            fixed: default_fixed(),
            options: SubgradientOptions::default(),
        }
    }
}

impl SparsifyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon = {} must lie in (0, 1)", self.epsilon)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config(format!("rho = {} must lie in (0, 1)", self.rho)));
        }
        if !(self.perturb_scale > 0.0) {
            return Err(Error::Config("perturb_scale must be positive".into()));
        }
        Ok(())
    }

    /// (N1, N2) for an operator on `m` vertices.
    pub fn budget(&self, m: usize) -> (usize, usize) {
        let n1 = self.n1.unwrap_or_else(|| {
            let mf = m.max(2) as f64;
            (4.0 / self.epsilon.powi(2) * mf * mf.ln()).ceil() as usize
        });
        let n2 = self.n2.unwrap_or((self.rho * n1 as f64).floor() as usize);
        (n1, n2)
    }
}

fn require_undirected(g: &Graph) -> Result<()> {
    if g.is_directed() {
        return Err(Error::InvalidGraph("effective resistance needs an undirected graph".into()));
    }
    Ok(())
}

/// Laplacian pseudo-inverse (eigenvalues ≤ 1e-10 treated as zero).
pub fn laplacian_pinv(g: &Graph) -> DMatrix<f64> {
    linalg::pinv_sym(&g.laplacian(), 1e-10)
}

fn component_labels(g: &Graph) -> Vec<usize> {
    let mut label = vec![0; g.n()];
    for (c, comp) in g.components().iter().enumerate() {
        for &v in comp {
            label[v] = c;
        }
    }
    label
}

fn resistance_from(pinv: &DMatrix<f64>, u: usize, v: usize) -> f64 {
    (pinv[(u, u)] + pinv[(v, v)] - pinv[(u, v)] - pinv[(v, u)]).max(0.0)
}

pub fn effective_resistance(g: &Graph, u: usize, v: usize) -> Result<f64> {
    require_undirected(g)?;
    if u >= g.n() || v >= g.n() {
        return Err(Error::InvalidParams(format!("vertex out of range for n = {}", g.n())));
    }
    if u == v {
        return Ok(0.0);
    }
    let label = component_labels(g);
    if label[u] != label[v] {
        return Err(Error::DisconnectedPair(u, v));
    }
    Ok(resistance_from(&laplacian_pinv(g), u, v))
}

/// All pairwise resistances; `f64::INFINITY` across components.
pub fn resistance_matrix(g: &Graph) -> Result<DMatrix<f64>> {
    require_undirected(g)?;
    let pinv = laplacian_pinv(g);
    let label = component_labels(g);
    Ok(DMatrix::from_fn(g.n(), g.n(), |u, v| {
        if u == v {
            0.0
        } else if label[u] != label[v] {
            f64::INFINITY
        } else {
            resistance_from(&pinv, u, v)
        }
    }))
}

/// p_e = min(1, 4 w_e R_e ε⁻² ln m) per edge, in edge order.
pub fn sampling_probabilities(g: &Graph, epsilon: f64) -> Result<Vec<f64>> {
    require_undirected(g)?;
    if g.edge_count() == 0 {
        return Ok(vec![]);
    }
    let pinv = laplacian_pinv(g);
    let ln_m = (g.n() as f64).ln();
    Ok(g
        .edges()
        .iter()
        .map(|e| (4.0 * e.weight * resistance_from(&pinv, e.src, e.dst) * ln_m / (epsilon * epsilon)).min(1.0))
        .collect())
}

/// Keeps each edge with probability p_e and reweights kept edges by 1/p_e.
pub fn randomized_sparsify(g: &Graph, epsilon: f64, seed: u64) -> Result<Graph> {
    let probs = sampling_probabilities(g, epsilon)?;
    let mut r = rng::from_seed(seed);
    let edges: Vec<Edge> = g
        .edges()
        .iter()
        .zip(&probs)
        .filter_map(|(e, &p)| {
            let u: f64 = r.gen();
            (p > 0.0 && u < p).then(|| Edge::new(e.src, e.dst, e.weight / p))
        })
        .collect();
    Graph::new(g.n(), false, edges, g.shift_kind())
}

/// (1−ε) L1 ⪯ L2 ⪯ (1+ε) L1, up to −1e-9 on the smallest eigenvalue.
pub fn eps_approx_check(l1: &DMatrix<f64>, l2: &DMatrix<f64>, epsilon: f64) -> Result<bool> {
    if l1.shape() != l2.shape() || l1.nrows() != l1.ncols() {
        return Err(Error::DimensionMismatch { expected: l1.nrows(), got: l2.nrows() });
    }
    if l1.nrows() == 0 {
        return Ok(true);
    }
    let lo = l2 - l1 * (1.0 - epsilon);
    let hi = l1 * (1.0 + epsilon) - l2;
    let min_eig = |m: &DMatrix<f64>| linalg::sym_eigen(m).0.min();
    Ok(min_eig(&lo) >= -1e-9 && min_eig(&hi) >= -1e-9)
}

/// Undirected graph whose edge weights are the negated off-diagonals of `m` (entries with
/// −m_uv ≤ `tol` skipped).
pub fn graph_of_offdiagonal(m: &DMatrix<f64>, tol: f64) -> Graph {
    let n = m.nrows();
    let edges = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|&(u, v)| -m[(u, v)] > tol)
        .map(|(u, v)| Edge::new(u, v, -m[(u, v)]))
        .collect();
    Graph::new(n, false, edges, ShiftKind::Laplacian).expect("pairs are distinct and weights positive")
}

/// Sparsified operator. Extension: L_{H0} + sparsified H1; any_laplacian: sparsify the whole
/// graph; sym_zero_row: split into positive and negative pair weights, each at ε/2.
/// `h0` is the induced subgraph with local labels.
pub fn sparsify_operator(f0: &SubgraphOperator, h0: &Graph, epsilon: f64, seed: u64) -> Result<SubgraphOperator> {
    let m = f0.dim();
    if h0.n() != m {
        return Err(Error::DimensionMismatch { expected: m, got: h0.n() });
    }
    let tol = 1e-12 * f0.matrix.amax().max(1.0);
    let sparsify_part = |part: &DMatrix<f64>, eps: f64, s: u64| -> Result<DMatrix<f64>> {
        let gpart = graph_of_offdiagonal(part, tol);
        if gpart.edge_count() == 0 {
            return Ok(part.clone());
        }
        Ok(randomized_sparsify(&gpart, eps, s)?.laplacian())
    };
    let matrix = match f0.family {
        Family::Extension => {
            let base = h0.laplacian();
            let h1 = &f0.matrix - &base;
            base + sparsify_part(&h1, epsilon, seed)?
        }
        Family::AnyLaplacian => sparsify_part(&f0.matrix, epsilon, seed)?,
        Family::SymZeroRow => {
            let (pos, neg) = split_signed(&f0.matrix);
            let mut a = rng::stream(seed, 0);
            let mut b = rng::stream(seed, 1);
            sparsify_part(&pos, epsilon / 2.0, a.gen())? - sparsify_part(&neg, epsilon / 2.0, b.gen())?
        }
        Family::DirectedAdjacency => return Err(Error::FamilyUnsupported(f0.family.name().into())),
    };
    let mut out = f0.clone();
    out.matrix = linalg::symmetrize(&matrix);
    Ok(out)
}

/// M = L₊ − L₋ with L₊ collecting the pairs of positive weight (negative off-diagonal).
pub fn split_signed(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut pos = DMatrix::zeros(n, n);
    let mut neg = DMatrix::zeros(n, n);
    for u in 0..n {
        for v in u + 1..n {
            let w = -m[(u, v)];
            if w > 0.0 {
                Element::Pair(u, v).add_to(&mut pos, w);
            } else if w < 0.0 {
                Element::Pair(u, v).add_to(&mut neg, -w);
            }
        }
    }
    (pos, neg)
}

/// Indices of `layout` elements that are nonzero in `op`.
pub fn support_indices(layout: &ParamLayout, op: &SubgraphOperator) -> Vec<usize> {
    let params = layout.params_of(&op.matrix);
    let tol = 1e-12 * op.matrix.amax().max(1.0);
    params.iter().enumerate().filter(|(_, p)| p.abs() > tol).map(|(k, _)| k).collect()
}

fn solve_on(
    g: &Graph,
    e: &Embedding,
    tuple: &SubsetTuple,
    layout: &ParamLayout,
    cfg: &SparsifyConfig,
    warm: Option<&FitResult>,
) -> Result<FitResult> {
    match cfg.problem {
        SparseProblem::LeastSquares { delta } => {
            let omega = build_omega(g, e, delta)?;
            solve_least_squares_with_layout(e, tuple, layout, &omega, &cfg.fixed)
        }
        SparseProblem::OperatorDifference => solve_operator_difference_with_layout(
            g,
            e,
            tuple,
            layout,
            &cfg.fixed,
            &cfg.options,
            warm.map(|w| (&w.filter, &w.operator)),
        ),
    }
}

/// Alternates between picking a support by perturbed effective resistance and refitting an
/// any_laplacian operator restricted to it. Returns the best iterate.
pub fn alternating_sparse_fit(
    g: &Graph,
    e: &Embedding,
    tuple: &SubsetTuple,
    cfg: &SparsifyConfig,
    seed: u64,
) -> Result<FitResult> {
    cfg.validate()?;
    let (h0, _) = g.induced_subgraph(e.vertices());
    let m = h0.n();
    let full = ParamLayout::new(Family::AnyLaplacian, &h0);
    let pairs: Vec<(usize, usize)> = full
        .elements
        .iter()
        .map(|el| match *el {
            Element::Pair(u, v) | Element::Entry(u, v) => (u, v),
        })
        .collect();
    let in_h0: Vec<bool> = pairs.iter().map(|&(u, v)| h0.weight(u, v) != 0.0).collect();
    let (n1, n2) = cfg.budget(m);

    let mut weights = h0.adjacency_matrix();
    let mut best: Option<FitResult> = None;
    let mut prev_loss = f64::INFINITY;
    for it in 0..cfg.max_outer_iters.max(1) {
        let mut r = rng::stream(seed, it as u64);
        let keep: Vec<usize> = if n1 >= pairs.len() {
            (0..pairs.len()).collect()
        } else {
            let mut w = weights.clone();
            for (k, &(u, v)) in pairs.iter().enumerate() {
                if !in_h0[k] {
                    let x = r.gen::<f64>() * cfg.perturb_scale;
                    w[(u, v)] += x;
                    w[(v, u)] += x;
                }
            }
            let edges = pairs
                .iter()
                .filter(|&&(u, v)| w[(u, v)] > 0.0)
                .map(|&(u, v)| Edge::new(u, v, w[(u, v)]))
                .collect();
            let gw = Graph::new(m, false, edges, ShiftKind::Laplacian)?;
            let pinv = laplacian_pinv(&gw);
            let mut score: Vec<(usize, f64)> = pairs
                .iter()
                .enumerate()
                .map(|(k, &(u, v))| (k, w[(u, v)] * resistance_from(&pinv, u, v)))
                .collect();
            score.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut keep: Vec<usize> = score[..n1].iter().map(|s| s.0).collect();
            let rest: Vec<usize> = score[n1..].iter().map(|s| s.0).collect();
            let extra = n2.min(rest.len());
            keep.extend(index::sample(&mut r, rest.len(), extra).into_iter().map(|i| rest[i]));
            keep.sort_unstable();
            keep
        };
        let layout = full.restricted(&keep);
        let fit = solve_on(g, e, tuple, &layout, cfg, best.as_ref())?;
        log::debug!("sparse fit iteration {it}: support {} loss {:.4e}", keep.len(), fit.loss);
        let loss = fit.loss;
        weights = fit.operator.matrix.map(|x| (-x).max(0.0));
        weights.fill_diagonal(0.0);
        let improved = best.as_ref().map_or(true, |b| loss < b.loss);
        if improved {
            best = Some(fit);
        }
        let full_support = keep.len() == pairs.len();
        let rel = (prev_loss - loss) / prev_loss.abs().max(1e-300);
        if full_support || (prev_loss.is_finite() && rel < 1e-6) {
            break;
        }
        prev_loss = prev_loss.min(loss);
    }
    Ok(best.expect("at least one outer iteration"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GraphKind};

    #[test]
    fn path_resistance_is_hop_count() {
        let g = generate(&GraphKind::Path { n: 6 }, 0).unwrap();
        assert!((effective_resistance(&g, 0, 4).unwrap() - 4.0).abs() < 1e-9);
        assert_eq!(effective_resistance(&g, 2, 2).unwrap(), 0.0);
    }

    #[test]
    fn triangle_resistance() {
        let g = generate(&GraphKind::Complete { n: 3 }, 0).unwrap();
        assert!((effective_resistance(&g, 0, 1).unwrap() - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn disconnected_pair_errors() {
        let g = Graph::undirected(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(effective_resistance(&g, 0, 3), Err(Error::DisconnectedPair(0, 3))));
    }

    #[test]
    fn probability_formula() {
        let g = generate(&GraphKind::Cycle { n: 4, directed: false }, 0).unwrap();
        let p = sampling_probabilities(&g, 0.5).unwrap();
        // R = 3/4 on each edge of C4
        let expect = (4.0 * 0.75 * 4.0f64.ln() / 0.25f64).min(1.0);
        assert!(p.iter().all(|&x| (x - expect).abs() < 1e-12));
    }

    #[test]
    fn tree_edges_are_kept() {
        let g = generate(&GraphKind::Path { n: 10 }, 0).unwrap();
        let p = sampling_probabilities(&g, 0.5).unwrap();
        assert!(p.iter().all(|&x| x == 1.0));
        let s = randomized_sparsify(&g, 0.5, 3).unwrap();
        assert_eq!(s.laplacian(), g.laplacian());
    }

    #[test]
    fn eps_check_examples() {
        let g = generate(&GraphKind::Cycle { n: 5, directed: false }, 0).unwrap();
        let l = g.laplacian();
        assert!(eps_approx_check(&l, &l, 0.0).unwrap());
        assert!(!eps_approx_check(&l, &(&l * 1.6), 0.3).unwrap());
        assert!(eps_approx_check(&l, &(&l * 1.2), 0.3).unwrap());
        assert!(eps_approx_check(&l, &(&l * 0.8), 0.3).unwrap());
    }

    #[test]
    fn sym_zero_row_split_reassembles() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 1.0, -2.0, 3.0, -1.0, 1.0, -1.0, 0.0]);
        let (p, n) = split_signed(&m);
        assert!((p - n - &m).amax() < 1e-12);
    }
}

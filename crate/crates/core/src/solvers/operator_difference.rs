//! Problem 1: minimize the spectral norm ‖F0 P − P F‖ by projected subgradient descent.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::least_squares::{solve_least_squares_with_layout, CoeffLayout, FitResult, FixedCoeff, SolverInfo};
use super::omega::build_omega_with;
use crate::embedding::{Embedding, SubsetTuple};
use crate::error::{Error, Result};
use crate::filter::SemiFilter;
use crate::graph::Graph;
use crate::linalg::{self, C64};
use crate::operators::{Element, Family, ParamLayout, SubgraphOperator};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubgradientOptions {
    pub max_iters: usize,
    /// Step constant c in c/√t.
    pub step: f64,
    pub tol: f64,
    pub restarts: usize,
    /// Constrain symmetric zero-row-sum operators to be PSD.
    pub psd: bool,
    pub seed: u64,
}

impl Default for SubgradientOptions {
    fn default() -> Self {
        Self { max_iters: 5000, step: 1.0, tol: 1e-8, restarts: 5, psd: true, seed: 0 }
    }
}

/// σ_max(F0 P − P F).
pub fn operator_difference(g: &Graph, e: &Embedding, filter: &SemiFilter, operator: &SubgraphOperator) -> Result<f64> {
    let pf = e.project_rows(&filter.assemble(g)?);
    Ok(linalg::spectral_norm(&(place_columns(e, &operator.matrix) - pf)))
}

/// F0 P as an |V0|×|V| matrix.
fn place_columns(e: &Embedding, f0: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(f0.nrows(), e.n());
    for (b, &v) in e.vertices().iter().enumerate() {
        out.set_column(v, &f0.column(b));
    }
    out
}

/// max_i min_j |μ_j − Q(λ_i)| · ‖P y_i‖ for a single-set filter P̄_{V0} Q(S).
pub fn lower_bound(g: &Graph, e: &Embedding, f: &SemiFilter, f0: &SubgraphOperator) -> Result<f64> {
    if f.tuple.len() != 1 || f.tuple.sets[0] != e.vertices() {
        return Err(Error::NotSingleSet);
    }
    let s = g.real_spectrum()?;
    let (mu, _) = linalg::sym_eigen(&f0.matrix);
    let mut best = 0.0f64;
    for i in 0..s.values.len() {
        let q = f.polynomial(0, C64::new(s.values[i], 0.0)).re;
        let gap = mu.iter().map(|m| (m - q).abs()).fold(f64::INFINITY, f64::min);
        let py = e.vertices().iter().map(|&v| s.vectors[(v, i)].powi(2)).sum::<f64>().sqrt();
        best = best.max(gap * py);
    }
    Ok(best)
}

struct Problem<'a> {
    e: &'a Embedding,
    layout: &'a ParamLayout,
    fixed_part: DMatrix<f64>,
    free_mats: Vec<DMatrix<f64>>,
    scales: DVector<f64>,
    psd: bool,
}

impl<'a> Problem<'a> {
    fn new(g: &Graph, e: &'a Embedding, tuple: &SubsetTuple, layout: &'a ParamLayout, coeffs: &CoeffLayout, psd: bool) -> Self {
        let s = g.shift_matrix();
        let m = e.len();
        let n = g.n();
        let mut rows = vec![e.project_rows(&DMatrix::identity(n, n))];
        for j in 1..=tuple.max_degree() {
            let next = &rows[j - 1] * &s;
            rows.push(next);
        }
        let coeff_mat = |i: usize, j: usize| {
            let set = &tuple.sets[i];
            let mut mm = rows[j].clone();
            for (a, v) in e.vertices().iter().enumerate() {
                if set.binary_search(v).is_err() {
                    mm.row_mut(a).fill(0.0);
                }
            }
            mm
        };
        let mut fixed_part = DMatrix::zeros(m, n);
        for f in &coeffs.fixed {
            fixed_part += coeff_mat(f.set, f.power) * f.value;
        }
        let free_mats: Vec<DMatrix<f64>> = coeffs.free.iter().map(|&(i, j)| coeff_mat(i, j)).collect();
        let elem_scale = |el: &Element| match el {
            Element::Pair(..) => 2.0,
            Element::Entry(..) => 1.0,
        };
        let scales = DVector::from_iterator(
            layout.len() + free_mats.len(),
            layout.elements.iter().map(elem_scale).chain(free_mats.iter().map(|mm| mm.norm().max(1e-12))),
        );
        Self { e, layout, fixed_part, free_mats, scales, psd }
    }

    fn split<'b>(&self, theta: &'b DVector<f64>) -> (&'b [f64], &'b [f64]) {
        theta.as_slice().split_at(self.layout.len())
    }

    fn z(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let (p, c) = self.split(theta);
        let mut z = place_columns(self.e, &self.layout.matrix(p)) - &self.fixed_part;
        for (mm, &ck) in self.free_mats.iter().zip(c) {
            if ck != 0.0 {
                z -= mm * ck;
            }
        }
        z
    }

    fn loss_and_subgradient(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let z = self.z(theta);
        let zz = &z * z.transpose();
        let (vals, vecs) = linalg::sym_eigen(&zz);
        let k = vals.len() - 1;
        let sigma = vals[k].max(0.0).sqrt();
        let u = vecs.column(k).into_owned();
        if sigma <= 0.0 {
            return (0.0, DVector::zeros(theta.len()));
        }
        let v = z.transpose() * &u / sigma;
        let pv = DVector::from_iterator(self.e.len(), self.e.vertices().iter().map(|&w| v[w]));
        let outer = &u * pv.transpose();
        let mut grad: Vec<f64> = self.layout.elements.iter().map(|el| el.inner(&outer)).collect();
        grad.extend(self.free_mats.iter().map(|mm| -(u.transpose() * mm * &v)[(0, 0)]));
        (sigma, DVector::from_vec(grad))
    }

    fn project(&self, theta: &mut DVector<f64>) {
        let p = self.layout.len();
        if self.layout.family.nonnegative() {
            for a in 0..p {
                if theta[a] < 0.0 {
                    theta[a] = 0.0;
                }
            }
        } else if self.psd && self.layout.family == Family::SymZeroRow {
            let mut params: Vec<f64> = theta.as_slice()[..p].to_vec();
            for _ in 0..50 {
                let mat = self.layout.matrix(&params);
                let projected = linalg::project_psd_zero_row(&mat);
                let next = self.layout.params_of(&projected);
                let gap = next.iter().zip(&params).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                params = next;
                if gap < 1e-9 {
                    break;
                }
            }
            theta.as_mut_slice()[..p].copy_from_slice(&params);
        }
    }
}

struct Run {
    theta: DVector<f64>,
    loss: f64,
    iterations: usize,
    converged: bool,
}

fn descend(pb: &Problem, start: DVector<f64>, opts: &SubgradientOptions, step_scale: f64) -> Run {
    let mut theta = start;
    pb.project(&mut theta);
    let (mut loss, mut grad) = pb.loss_and_subgradient(&theta);
    let mut best = Run { theta: theta.clone(), loss, iterations: 0, converged: true };
    let mut history = vec![loss];
    for t in 1..=opts.max_iters {
        if best.loss <= opts.tol {
            best.iterations = t - 1;
            best.converged = true;
            return best;
        }
        let scaled = grad.component_div(&pb.scales);
        let norm = scaled.norm();
        if norm == 0.0 {
            break;
        }
        let alpha = opts.step * step_scale / (t as f64).sqrt();
        let dir = scaled.component_div(&pb.scales) / norm;
        theta -= dir * alpha;
        pb.project(&mut theta);
        let (l, gr) = pb.loss_and_subgradient(&theta);
        loss = l;
        grad = gr;
        if loss < best.loss {
            best.loss = loss;
            best.theta.copy_from(&theta);
        }
        history.push(best.loss);
        best.iterations = t;
    }
    let h = history.len();
    best.converged = h <= 100 || history[h - 101] - history[h - 1] <= 1e-6 * history[h - 1].max(1e-300);
    best
}

pub fn solve_operator_difference(
    g: &Graph,
    e: &Embedding,
    tuple: &SubsetTuple,
    family: Family,
    fixed: &[FixedCoeff],
    opts: &SubgradientOptions,
) -> Result<FitResult> {
    let (h0, _) = g.induced_subgraph(e.vertices());
    let layout = ParamLayout::new(family, &h0);
    solve_operator_difference_with_layout(g, e, tuple, &layout, fixed, opts, None)
}

/// Multi-start projected subgradient. The first start is the Frobenius least-squares fit
/// (Ω = full eigenbasis) or `warm` when given; further starts perturb it with seeded noise.
pub fn solve_operator_difference_with_layout(
    g: &Graph,
    e: &Embedding,
    tuple: &SubsetTuple,
    layout: &ParamLayout,
    fixed: &[FixedCoeff],
    opts: &SubgradientOptions,
    warm: Option<(&SemiFilter, &SubgraphOperator)>,
) -> Result<FitResult> {
    tuple.check_range(g.n())?;
    let coeffs = CoeffLayout::new(tuple, fixed)?;
    let pb = Problem::new(g, e, tuple, layout, &coeffs, opts.psd);
    let mut start = match warm {
        Some((f, op)) => {
            let mut t = layout.params_of(&op.matrix);
            t.extend(coeffs.free.iter().map(|&(i, j)| f.coeffs[i][j]));
            DVector::from_vec(t)
        }
        None => {
            let spectrum = g.eigendecompose()?;
            let omega = build_omega_with(&spectrum, e, 1.0)?;
            let ls = solve_least_squares_with_layout(e, tuple, layout, &omega, fixed)?;
            let mut t = layout.params_of(&ls.operator.matrix);
            t.extend(coeffs.free.iter().map(|&(i, j)| ls.filter.coeffs[i][j]));
            DVector::from_vec(t)
        }
    };
    pb.project(&mut start);
    let (sigma0, _) = pb.loss_and_subgradient(&start);
    let step_scale = 0.1 * sigma0.max(1e-12);
    let mut best = descend(&pb, start.clone(), opts, step_scale);
    let mut total_iters = best.iterations;
    let phi_norm = start.component_mul(&pb.scales).norm() / (start.len().max(1) as f64).sqrt();
    for r in 1..opts.restarts.max(1) {
        if best.loss <= opts.tol {
            break;
        }
        let mut rg = rng::stream(opts.seed, r as u64);
        let noise: DVector<f64> = DVector::from_fn(start.len(), |_, _| StandardNormal.sample(&mut rg));
        let s = &start + noise.component_div(&pb.scales) * (0.1 * (phi_norm + sigma0));
        let run = descend(&pb, s, opts, step_scale);
        total_iters += run.iterations;
        if run.loss < best.loss {
            best = run;
        }
    }
    let (p, c) = pb.split(&best.theta);
    let operator = SubgraphOperator::from_layout(layout, e.vertices(), p);
    let filter = coeffs.filter(tuple, c);
    let (loss, _) = pb.loss_and_subgradient(&best.theta);
    if !best.converged {
        log::warn!("operator-difference solver did not converge (loss {loss:.3e})");
    }
    Ok(FitResult {
        filter,
        operator,
        loss,
        info: SolverInfo {
            method: "projected_subgradient".into(),
            iterations: total_iters,
            residual: loss,
            converged: best.converged,
            rank_deficient: false,
        },
    })
}

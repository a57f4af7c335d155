//! Least-squares fitting of (F, F0) over Ω test pairs, optionally with regression data.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::omega::OmegaSet;
use super::qp;
use crate::embedding::{Embedding, SubsetTuple};
use crate::error::{Error, Result};
use crate::filter::SemiFilter;
use crate::graph::Graph;
use crate::linalg::{self, C64};
use crate::operators::{Family, ParamLayout, SubgraphOperator};

/// A filter coefficient held constant during fitting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedCoeff {
    pub set: usize,
    pub power: usize,
    pub value: f64,
}

/// The coefficient of P̄_{V_1} S pinned to 1.
pub fn default_fixed() -> Vec<FixedCoeff> {
    vec![FixedCoeff { set: 0, power: 1, value: 1.0 }]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct SolverInfo {
    pub method: String,
    pub iterations: usize,
    /// Norm of the (projected) objective gradient at the returned point.
    pub residual: f64,
    pub converged: bool,
    pub rank_deficient: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub filter: SemiFilter,
    pub operator: SubgraphOperator,
    pub loss: f64,
    pub info: SolverInfo,
}

/// Which coefficients are free and which are pinned.
#[derive(Clone, Debug)]
pub(crate) struct CoeffLayout {
    pub free: Vec<(usize, usize)>,
    pub fixed: Vec<FixedCoeff>,
}

impl CoeffLayout {
    pub fn new(tuple: &SubsetTuple, fixed: &[FixedCoeff]) -> Result<Self> {
        for f in fixed {
            if f.set >= tuple.len() || f.power > tuple.degrees[f.set] {
                return Err(Error::InfeasibleConstraint { set: f.set, power: f.power });
            }
        }
        let free = tuple
            .degrees
            .iter()
            .enumerate()
            .flat_map(|(i, &d)| (0..=d).map(move |j| (i, j)))
            .filter(|&(i, j)| !fixed.iter().any(|f| f.set == i && f.power == j))
            .collect();
        Ok(Self { free, fixed: fixed.to_vec() })
    }

    pub fn filter(&self, tuple: &SubsetTuple, c: &[f64]) -> SemiFilter {
        let mut f = SemiFilter::zeros(tuple.clone());
        for (&(i, j), &v) in self.free.iter().zip(c) {
            f.coeffs[i][j] = v;
        }
        for fx in &self.fixed {
            f.coeffs[fx.set][fx.power] = fx.value;
            f.fixed_mask[fx.set][fx.power] = true;
        }
        f
    }
}

/// Stacked real design: minimize ‖F0 X − B0 − Σ_k c_k B_k‖² over F0 and free coefficients c.
#[derive(Clone, Debug)]
pub(crate) struct Design {
    pub x: DMatrix<f64>,
    pub b0: DMatrix<f64>,
    pub bk: Vec<DMatrix<f64>>,
}

impl Design {
    /// Ω columns weighted by `weight`, then plain regression columns.
    pub fn build(
        e: &Embedding,
        tuple: &SubsetTuple,
        coeffs: &CoeffLayout,
        omega: Option<(&OmegaSet, f64)>,
        data: &[(DVector<f64>, DVector<f64>)],
    ) -> Result<Self> {
        let m = e.len();
        let masks: Vec<Vec<bool>> = tuple
            .sets
            .iter()
            .map(|s| e.vertices().iter().map(|v| s.binary_search(v).is_ok()).collect())
            .collect();
        let mut xcols: Vec<DVector<f64>> = Vec::new();
        let mut fixed_cols: Vec<DVector<f64>> = Vec::new();
        let mut free_cols: Vec<Vec<DVector<f64>>> = vec![Vec::new(); coeffs.free.len()];
        if let Some((om, w)) = omega {
            let parts: &[bool] = if om.real { &[false] } else { &[false, true] };
            for p in &om.pairs {
                // P P̄_{V_i} S^j y = λ^j · (y restricted to V_i ∩ V0)
                let target = |i: usize, j: usize| -> DVector<C64> {
                    let lj = p.eigenvalue.powu(j as u32);
                    DVector::from_iterator(m, (0..m).map(|a| if masks[i][a] { p.x[a] * lj } else { C64::new(0.0, 0.0) }))
                };
                for &imag in parts {
                    let part = |z: &DVector<C64>| z.map(|c| w * if imag { c.im } else { c.re });
                    xcols.push(part(&p.x));
                    let mut b0 = DVector::zeros(m);
                    for f in &coeffs.fixed {
                        b0 += part(&target(f.set, f.power)) * f.value;
                    }
                    fixed_cols.push(b0);
                    for (k, &(i, j)) in coeffs.free.iter().enumerate() {
                        free_cols[k].push(part(&target(i, j)));
                    }
                }
            }
        }
        for (x, xp) in data {
            if x.len() != m || xp.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: if x.len() != m { x.len() } else { xp.len() } });
            }
            xcols.push(x.clone());
            fixed_cols.push(xp.clone());
            for c in free_cols.iter_mut() {
                c.push(DVector::zeros(m));
            }
        }
        let mat = |cols: &[DVector<f64>]| {
            if cols.is_empty() {
                DMatrix::zeros(m, 0)
            } else {
                DMatrix::from_columns(cols)
            }
        };
        Ok(Self { x: mat(&xcols), b0: mat(&fixed_cols), bk: free_cols.iter().map(|c| mat(c)).collect() })
    }

    pub fn residual(&self, f0: &DMatrix<f64>, c: &[f64]) -> DMatrix<f64> {
        let mut r = f0 * &self.x - &self.b0;
        for (b, &ck) in self.bk.iter().zip(c) {
            r -= b * ck;
        }
        r
    }
}

/// Exact solver for the full symmetric zero-row-sum family.
///
/// With F0 = N F̃ Nᵀ (N an orthonormal basis of 1⊥) the normal equations become the Lyapunov
/// equation F̃ Ḡ + Ḡ F̃ = C̄ + C̄ᵀ, diagonalized by the eigenbasis of Ḡ = NᵀXXᵀN. Directions with
/// g_a + g_b ≈ 0 are left at zero, giving the minimum-Frobenius-norm solution.
pub(crate) struct SymZeroRowSolver {
    n: DMatrix<f64>,
    xbar: DMatrix<f64>,
    w: DMatrix<f64>,
    g: DVector<f64>,
    tol: f64,
}

impl SymZeroRowSolver {
    pub fn new(x: &DMatrix<f64>) -> Self {
        let m = x.nrows();
        let n = linalg::ones_complement_basis(m);
        let xbar = n.transpose() * x;
        let (g, w) = if m > 1 { linalg::sym_eigen(&(&xbar * xbar.transpose())) } else { (DVector::zeros(0), DMatrix::zeros(0, 0)) };
        let tol = 1e-10 * g.iter().fold(0.0f64, |a, &b| a.max(b)).max(1e-300);
        Self { n, xbar, w, g, tol }
    }

    pub fn deficient(&self) -> bool {
        self.g.iter().any(|&x| 2.0 * x <= self.tol)
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.n.nrows();
        if m <= 1 {
            return DMatrix::zeros(m, m);
        }
        let c = self.n.transpose() * b * self.xbar.transpose();
        let r = &c + c.transpose();
        let rh = self.w.transpose() * r * &self.w;
        let k = self.g.len();
        let fh = DMatrix::from_fn(k, k, |a, bb| {
            let s = self.g[a] + self.g[bb];
            if s > self.tol {
                rh[(a, bb)] / s
            } else {
                0.0
            }
        });
        let ft = &self.w * fh * self.w.transpose();
        linalg::symmetrize(&(&self.n * ft * self.n.transpose()))
    }
}

/// Gradient of the stacked objective w.r.t. (F0 parameters, free coefficients).
pub(crate) fn objective_gradient(design: &Design, layout: &ParamLayout, f0: &DMatrix<f64>, c: &[f64]) -> DVector<f64> {
    let r = design.residual(f0, c);
    let rx = &r * design.x.transpose();
    let mut grad: Vec<f64> = layout.elements.iter().map(|e| 2.0 * e.inner(&rx)).collect();
    grad.extend(design.bk.iter().map(|b| -2.0 * linalg::frob_inner(&r, b)));
    DVector::from_vec(grad)
}

pub(crate) fn solve_design(
    design: &Design,
    layout: &ParamLayout,
    v0: &[usize],
    tuple: &SubsetTuple,
    coeffs: &CoeffLayout,
) -> Result<FitResult> {
    let m = layout.dim();
    let full_sym = layout.family == Family::SymZeroRow && layout.len() == m * (m.saturating_sub(1)) / 2;
    let (f0, c, info) = if full_sym { solve_sym(design) } else { solve_gram(design, layout) };
    let filter = coeffs.filter(tuple, &c);
    let operator = SubgraphOperator::from_layout(layout, v0, &layout.params_of(&f0));
    let loss = design.residual(&operator.matrix, &c).norm_squared();
    let mut info = info;
    let grad = objective_gradient(design, layout, &operator.matrix, &c);
    let mask: Vec<bool> = (0..grad.len()).map(|k| k < layout.len() && layout.family.nonnegative()).collect();
    let params = layout.params_of(&operator.matrix);
    info.residual = DVector::from_iterator(
        grad.len(),
        (0..grad.len()).map(|k| if mask[k] && params[k] <= 0.0 { grad[k].min(0.0) } else { grad[k] }),
    )
    .norm();
    if info.rank_deficient {
        log::debug!("least-squares design is rank deficient; minimum-norm solution returned");
    }
    Ok(FitResult { filter, operator, loss, info })
}

fn solve_sym(design: &Design) -> (DMatrix<f64>, Vec<f64>, SolverInfo) {
    let solver = SymZeroRowSolver::new(&design.x);
    let f_fixed = solver.solve(&design.b0);
    let r0 = &f_fixed * &design.x - &design.b0;
    let fk: Vec<DMatrix<f64>> = design.bk.iter().map(|b| solver.solve(b)).collect();
    let rk: Vec<DMatrix<f64>> = fk.iter().zip(&design.bk).map(|(f, b)| f * &design.x - b).collect();
    let k = rk.len();
    let a = DMatrix::from_fn(k, k, |i, j| linalg::frob_inner(&rk[i], &rk[j]));
    let rhs = DVector::from_iterator(k, rk.iter().map(|r| -linalg::frob_inner(r, &r0)));
    let (c, def) = linalg::solve_psd_min_norm(&a, &rhs, 1e-12);
    let mut f0 = f_fixed;
    for (f, &ck) in fk.iter().zip(c.iter()) {
        f0 += f * ck;
    }
    let info = SolverInfo {
        method: "lyapunov".into(),
        iterations: 1,
        residual: 0.0,
        converged: true,
        rank_deficient: def || solver.deficient(),
    };
    (f0, c.iter().copied().collect(), info)
}

fn solve_gram(design: &Design, layout: &ParamLayout) -> (DMatrix<f64>, Vec<f64>, SolverInfo) {
    let p = layout.len();
    let k = design.bk.len();
    let xt = design.x.transpose();
    let g = &design.x * &xt;
    let ck: Vec<DMatrix<f64>> = design.bk.iter().map(|b| b * &xt).collect();
    let bmat = &design.b0 - &layout.base * &design.x;
    let d = &bmat * &xt;
    let mut h = DMatrix::zeros(p + k, p + k);
    for a in 0..p {
        for b in a..p {
            let v = crate::operators::Element::gram(&layout.elements[a], &layout.elements[b], &g);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
        for (kk, c) in ck.iter().enumerate() {
            let v = -layout.elements[a].inner(c);
            h[(a, p + kk)] = v;
            h[(p + kk, a)] = v;
        }
    }
    for i in 0..k {
        for j in i..k {
            let v = linalg::frob_inner(&design.bk[i], &design.bk[j]);
            h[(p + i, p + j)] = v;
            h[(p + j, p + i)] = v;
        }
    }
    let mut rhs = DVector::zeros(p + k);
    for a in 0..p {
        rhs[a] = layout.elements[a].inner(&d);
    }
    for i in 0..k {
        rhs[p + i] = -linalg::frob_inner(&design.bk[i], &bmat);
    }
    let nonneg: Vec<bool> = (0..p + k).map(|i| i < p && layout.family.nonnegative()).collect();
    let sol = qp::solve_box_qp(&h, &rhs, &nonneg, None);
    let params: Vec<f64> = sol.x.iter().take(p).copied().collect();
    let c: Vec<f64> = sol.x.iter().skip(p).copied().collect();
    let info = SolverInfo {
        method: "active_set".into(),
        iterations: sol.iterations,
        residual: 0.0,
        converged: true,
        rank_deficient: sol.rank_deficient,
    };
    (layout.matrix(&params), c, info)
}

fn layout_for(g: &Graph, e: &Embedding, family: Family) -> ParamLayout {
    let (h0, _) = g.induced_subgraph(e.vertices());
    ParamLayout::new(family, &h0)
}

/// Problem 2: minimize Σ_Ω ‖F0 x − P F y‖² jointly over F0 in `family` and the free coefficients.
pub fn solve_least_squares(
    g: &Graph,
    e: &Embedding,
    tuple: &SubsetTuple,
    family: Family,
    omega: &OmegaSet,
    fixed: &[FixedCoeff],
) -> Result<FitResult> {
    solve_least_squares_with_layout(e, tuple, &layout_for(g, e, family), omega, fixed)
}

/// As [`solve_least_squares`] with an explicit (possibly support-restricted) parametrization.
pub fn solve_least_squares_with_layout(
    e: &Embedding,
    tuple: &SubsetTuple,
    layout: &ParamLayout,
    omega: &OmegaSet,
    fixed: &[FixedCoeff],
) -> Result<FitResult> {
    tuple.check_range(e.n())?;
    let coeffs = CoeffLayout::new(tuple, fixed)?;
    let design = Design::build(e, tuple, &coeffs, Some((omega, 1.0)), &[])?;
    solve_design(&design, layout, e.vertices(), tuple, &coeffs)
}

/// Problem 3: Σ_t ‖x′_t − F0 x_t‖² + β Σ_Ω ‖F0 x − P F y‖². With β = 0 the filter plays no
/// role and keeps only its pinned coefficients.
#[allow(clippy::too_many_arguments)]
pub fn solve_filter_learning(
    g: &Graph,
    e: &Embedding,
    tuple: &SubsetTuple,
    family: Family,
    data: &[(DVector<f64>, DVector<f64>)],
    beta: f64,
    omega: &OmegaSet,
    fixed: &[FixedCoeff],
) -> Result<FitResult> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidParams(format!("beta = {beta} must be ≥ 0")));
    }
    tuple.check_range(e.n())?;
    let coeffs = CoeffLayout::new(tuple, fixed)?;
    let om = if beta > 0.0 { Some((omega, beta.sqrt())) } else { None };
    let design = Design::build(e, tuple, &coeffs, om, data)?;
    solve_design(&design, &layout_for(g, e, family), e.vertices(), tuple, &coeffs)
}

/// Σ_Ω ‖F0 x − P F y‖² recomputed from the assembled filter matrix.
pub fn least_squares_loss(
    g: &Graph,
    e: &Embedding,
    filter: &SemiFilter,
    operator: &SubgraphOperator,
    omega: &OmegaSet,
) -> Result<f64> {
    let f = filter.assemble(g)?.map(|x| C64::new(x, 0.0));
    let f0 = operator.matrix.map(|x| C64::new(x, 0.0));
    let mut total = 0.0;
    for p in &omega.pairs {
        let fy = &f * &p.y;
        let pfy = DVector::from_iterator(e.len(), e.vertices().iter().map(|&v| fy[v]));
        total += (&f0 * &p.x - pfy).norm_squared();
    }
    Ok(total)
}

/// Σ_t ‖x′_t − F0 x_t‖² + β · least_squares_loss.
pub fn learning_objective(
    g: &Graph,
    e: &Embedding,
    filter: &SemiFilter,
    operator: &SubgraphOperator,
    data: &[(DVector<f64>, DVector<f64>)],
    beta: f64,
    omega: &OmegaSet,
) -> Result<f64> {
    let fit: f64 = data.iter().map(|(x, xp)| (xp - &operator.matrix * x).norm_squared()).sum();
    let reg = if beta > 0.0 { beta * least_squares_loss(g, e, filter, operator, omega)? } else { 0.0 };
    Ok(fit + reg)
}

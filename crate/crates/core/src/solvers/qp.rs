//! Convex quadratic programs min ½xᵀHx − gᵀx with a subset of coordinates constrained ≥ 0.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::linalg;

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// Norm of the projected gradient at `x`.
    pub kkt_residual: f64,
    pub rank_deficient: bool,
}

/// Projected gradient of ½xᵀHx − gᵀx.
pub fn projected_gradient(h: &DMatrix<f64>, g: &DVector<f64>, x: &DVector<f64>, nonneg: &[bool]) -> DVector<f64> {
    let grad = h * x - g;
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| if nonneg[i] && x[i] <= 0.0 { grad[i].min(0.0) } else { grad[i] }),
    )
}

fn solve_sub(h: &DMatrix<f64>, g: &DVector<f64>, idx: &[usize]) -> (DVector<f64>, bool) {
    let hp = DMatrix::from_fn(idx.len(), idx.len(), |i, j| h[(idx[i], idx[j])]);
    let gp = DVector::from_iterator(idx.len(), idx.iter().map(|&i| g[i]));
    let diag_max = hp.diagonal().amax();
    if let Some(ch) = Cholesky::new(hp.clone()) {
        let dmin = ch.l_dirty().diagonal().iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
        if dmin * dmin > 1e-13 * diag_max {
            return (ch.solve(&gp), false);
        }
    }
    linalg::solve_psd_min_norm(&hp, &gp, 1e-12)
}

/// Active-set (Lawson–Hanson style) solver, optionally warm-started by projected FISTA.
pub fn solve_box_qp(h: &DMatrix<f64>, g: &DVector<f64>, nonneg: &[bool], warm: Option<&DVector<f64>>) -> QpSolution {
    let n = g.len();
    if n == 0 {
        return QpSolution { x: DVector::zeros(0), iterations: 0, kkt_residual: 0.0, rank_deficient: false };
    }
    if !nonneg.iter().any(|&b| b) {
        let (x, def) = linalg::solve_psd_min_norm(h, g, 1e-12);
        let r = (h * &x - g).norm();
        return QpSolution { x, iterations: 1, kkt_residual: r, rank_deficient: def };
    }
    let mut x = match warm {
        Some(w) => w.clone(),
        None if n > 200 => fista(h, g, nonneg, 3000),
        None => DVector::zeros(n),
    };
    for i in 0..n {
        if nonneg[i] && x[i] < 0.0 {
            x[i] = 0.0;
        }
    }
    let tol = 1e-11 * g.amax().max(h.diagonal().amax()).max(1e-300);
    let mut passive: Vec<bool> = (0..n).map(|i| !nonneg[i] || x[i] > 0.0).collect();
    let mut iterations = 0;
    let mut deficient = false;
    let max_outer = 3 * n + 10;
    for _ in 0..max_outer {
        // inner loop: optimal on the passive set while staying feasible
        for _ in 0..n + 1 {
            iterations += 1;
            let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let (s, def) = solve_sub(h, g, &idx);
            deficient |= def;
            let mut alpha = 1.0f64;
            let mut blocking = false;
            for (k, &i) in idx.iter().enumerate() {
                if nonneg[i] && s[k] <= 0.0 {
                    blocking = true;
                    let denom = x[i] - s[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            if !blocking {
                for i in 0..n {
                    x[i] = 0.0;
                }
                for (k, &i) in idx.iter().enumerate() {
                    x[i] = s[k];
                }
                break;
            }
            for (k, &i) in idx.iter().enumerate() {
                x[i] += alpha * (s[k] - x[i]);
            }
            for &i in &idx {
                if nonneg[i] && x[i] <= tol.min(1e-14) {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
        let w = g - h * &x;
        let mut best = None;
        let mut best_w = tol;
        for i in 0..n {
            if !passive[i] && w[i] > best_w {
                best_w = w[i];
                best = Some(i);
            }
        }
        match best {
            Some(i) => passive[i] = true,
            None => break,
        }
    }
    let kkt = projected_gradient(h, g, &x, nonneg).norm();
    QpSolution { x, iterations, kkt_residual: kkt, rank_deficient: deficient }
}

fn fista(h: &DMatrix<f64>, g: &DVector<f64>, nonneg: &[bool], iters: usize) -> DVector<f64> {
    let n = g.len();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lmax = 0.0;
    for _ in 0..60 {
        let w = h * &v;
        lmax = w.norm();
        if lmax == 0.0 {
            return DVector::zeros(n);
        }
        v = w / lmax;
    }
    let step = 1.0 / (lmax * 1.01);
    let project = |z: &mut DVector<f64>| {
        for i in 0..n {
            if nonneg[i] && z[i] < 0.0 {
                z[i] = 0.0;
            }
        }
    };
    let mut x = DVector::zeros(n);
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let mut xn = &y - (h * &y - g) * step;
        project(&mut xn);
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = &xn + (&xn - &x) * ((t - 1.0) / tn);
        x = xn;
        t = tn;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonneg_least_squares_small() {
        // min ‖Ax − b‖² with A = I, b = (1, −1): x = (1, 0)
        let h = DMatrix::identity(2, 2);
        let g = DVector::from_vec(vec![1.0, -1.0]);
        let s = solve_box_qp(&h, &g, &[true, true], None);
        assert!((s.x - DVector::from_vec(vec![1.0, 0.0])).norm() < 1e-12);
        assert!(s.kkt_residual < 1e-12);
    }

    #[test]
    fn mixed_free_and_constrained() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let g = DVector::from_vec(vec![-3.0, 1.0]);
        let s = solve_box_qp(&h, &g, &[false, true], None);
        // unconstrained optimum has x1 > 0 here: solve directly
        let free = h.clone().cholesky().unwrap().solve(&g);
        if free[1] >= 0.0 {
            assert!((s.x - free).norm() < 1e-10);
        }
        assert!(s.kkt_residual < 1e-10);
    }
}

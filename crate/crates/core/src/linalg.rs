//! Dense linear-algebra helpers shared by the modules.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

pub type C64 = Complex<f64>;

/// Components below this magnitude are treated as zero by the sign convention.
const SIGN_TOL: f64 = 1e-10;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Flip `v` so that its first non-negligible component is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    if let Some(x) = v.iter().find(|x| x.abs() > SIGN_TOL) {
        if *x < 0.0 {
            v.neg_mut();
        }
    }
}

/// Rotate `v` so that its first non-negligible component is real and positive.
pub fn fix_phase(v: &mut DVector<C64>) {
    if let Some(z) = v.iter().find(|z| z.norm() > SIGN_TOL).copied() {
        let rot = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= rot);
    }
}

/// Eigendecomposition of a symmetric matrix with ascending eigenvalues and fixed signs.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let m = symmetrize(m);
    let first = SymmetricEigen::new(m.clone());
    // The implicit QR can leave residuals near 1e-8 on larger matrices; Jacobi sweeps on the
    // nearly diagonal Vᵀ M V bring them down to round-off.
    let mut v = first.eigenvectors;
    let mut b = symmetrize(&(v.transpose() * &m * &v));
    jacobi_sweeps(&mut b, &mut v);
    let values = b.diagonal();
    let vectors = v;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    reorder(&values, &vectors, &order)
}

/// Cyclic Jacobi rotations on symmetric `b`, accumulated into `v`, until the off-diagonal
/// mass is at round-off level.
fn jacobi_sweeps(b: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    let n = b.nrows();
    let scale = b.amax().max(1e-300);
    for _ in 0..20 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(b[(p, q)].abs());
            }
        }
        if off <= 1e-15 * scale {
            return;
        }
        for p in 0..n {
            for q in p + 1..n {
                let bpq = b[(p, q)];
                if bpq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (b[(q, q)] - b[(p, p)]) / (2.0 * bpq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (bkp, bkq) = (b[(k, p)], b[(k, q)]);
                    b[(k, p)] = c * bkp - s * bkq;
                    b[(k, q)] = s * bkp + c * bkq;
                }
                for k in 0..n {
                    let (bpk, bqk) = (b[(p, k)], b[(q, k)]);
                    b[(p, k)] = c * bpk - s * bqk;
                    b[(q, k)] = s * bpk + c * bqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
}

pub fn reorder(
    values: &DVector<f64>,
    vectors: &DMatrix<f64>,
    order: &[usize],
) -> (DVector<f64>, DMatrix<f64>) {
    let n = vectors.nrows();
    let vals = DVector::from_iterator(order.len(), order.iter().map(|&i| values[i]));
    let mut vecs = DMatrix::zeros(n, order.len());
    for (k, &i) in order.iter().enumerate() {
        let mut c: DVector<f64> = vectors.column(i).into_owned();
        fix_sign(&mut c);
        vecs.set_column(k, &c);
    }
    (vals, vecs)
}

/// Unitary diagonalization of a real normal matrix.
///
/// The Hermitian and skew-Hermitian parts commute, so a generic real combination
/// `A + αB` shares the eigenvectors of `M`; the eigenvalues are read off as Rayleigh quotients.
pub fn normal_eigen(m: &DMatrix<f64>) -> Option<(Vec<C64>, DMatrix<C64>)> {
    let n = m.nrows();
    let mc = m.map(|x| C64::new(x, 0.0));
    let herm = (&mc + mc.adjoint()) * C64::new(0.5, 0.0);
    let skew = (&mc - mc.adjoint()) * C64::new(0.0, -0.5);
    let scale = m.norm().max(1e-300);
    for alpha in [0.618_033_988_749_894_9, 0.414_213_562_373_095_1, 0.318_309_886_183_790_7] {
        let h = &herm + &skew * C64::new(alpha, 0.0);
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(h);
        let u = eig.eigenvectors;
        let vals: Vec<C64> = (0..n)
            .map(|k| {
                let c = u.column(k);
                (c.adjoint() * &mc * c)[(0, 0)]
            })
            .collect();
        let lam = DMatrix::from_diagonal(&DVector::from_vec(vals.clone()));
        let err = (&u * lam * u.adjoint() - &mc).norm();
        if err <= 1e-9 * scale.max(1.0) {
            return Some((vals, u));
        }
    }
    None
}

/// Frobenius norm of the commutator `M Mᴴ − Mᴴ M`.
pub fn commutator_norm(m: &DMatrix<f64>) -> f64 {
    let mt = m.transpose();
    (m * &mt - &mt * m).norm()
}

/// Largest singular value with its left and right singular vectors.
pub fn top_singular(m: &DMatrix<f64>) -> (f64, DVector<f64>, DVector<f64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᵀ");
    let mut best = 0;
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] > svd.singular_values[best] {
            best = i;
        }
    }
    if svd.singular_values.is_empty() {
        return (0.0, DVector::zeros(m.nrows()), DVector::zeros(m.ncols()));
    }
    (
        svd.singular_values[best],
        u.column(best).into_owned(),
        vt.row(best).transpose(),
    )
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Numerical rank: singular values above `rel_tol · σ_max`.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Pseudo-inverse of a symmetric matrix, inverting eigenvalues with |λ| > `tol`.
pub fn pinv_sym(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let l = eig.eigenvalues[k];
        if l.abs() > tol {
            let c = eig.eigenvectors.column(k);
            out += (c * c.transpose()) / l;
        }
    }
    out
}

/// Minimum-norm solution of the symmetric PSD system `H x = g`, dropping directions with
/// eigenvalue ≤ `rel_tol · λ_max`. Returns the solution and whether any direction was dropped.
pub fn solve_psd_min_norm(h: &DMatrix<f64>, g: &DVector<f64>, rel_tol: f64) -> (DVector<f64>, bool) {
    let n = h.nrows();
    if n == 0 {
        return (DVector::zeros(0), false);
    }
    let eig = SymmetricEigen::new(symmetrize(h));
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut x = DVector::zeros(n);
    let mut deficient = false;
    for k in 0..n {
        let l = eig.eigenvalues[k];
        if l > rel_tol * lmax && l > 0.0 {
            let c = eig.eigenvectors.column(k);
            x += c * (c.dot(g) / l);
        } else {
            deficient = true;
        }
    }
    (x, deficient)
}

/// Orthonormal basis (columns) of the complement of the all-ones vector in ℝᵐ,
/// taken from the Householder reflector that swaps e₀ and 1/√m.
pub fn ones_complement_basis(m: usize) -> DMatrix<f64> {
    if m <= 1 {
        return DMatrix::zeros(m, 0);
    }
    let s = 1.0 / (m as f64).sqrt();
    let mut v = DVector::from_element(m, s);
    v[0] -= 1.0;
    let vv = v.dot(&v);
    let h = DMatrix::identity(m, m) - (&v * v.transpose()) * (2.0 / vv);
    h.columns(1, m - 1).into_owned()
}

/// Centering projector J = I − 11ᵀ/m.
pub fn centering(m: usize) -> DMatrix<f64> {
    DMatrix::identity(m, m) - DMatrix::from_element(m, m, 1.0 / m as f64)
}

/// Euclidean projection onto {symmetric, zero row sums, PSD}: J sym(M) J followed by
/// eigenvalue clipping. The clipped matrix keeps 1 in its kernel, so one pass is exact;
/// the loop guards against round-off drift.
pub fn project_psd_zero_row(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let j = centering(n);
    let mut x = &j * symmetrize(m) * &j;
    for _ in 0..50 {
        let (vals, vecs) = sym_eigen(&x);
        let clipped = vals.map(|l| l.max(0.0));
        let y = &vecs * DMatrix::from_diagonal(&clipped) * vecs.transpose();
        let y = &j * symmetrize(&y) * &j;
        let gap = (&y - &x).norm();
        x = y;
        let (vals, _) = sym_eigen(&x);
        if gap < 1e-9 || vals.min() >= -1e-12 {
            break;
        }
    }
    x
}

pub fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}


/// Serializes a dense matrix as a list of rows.
pub mod serde_matrix {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }
}

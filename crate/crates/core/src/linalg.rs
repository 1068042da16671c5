//! Spectral functions of small symmetric matrices, and a thin SVD.
//!
//! The matrix functions go through a symmetric eigendecomposition
//! `S = V diag(λ) Vᵀ` and apply a scalar map to the eigenvalues. For the
//! 2×2 and 3×3 matrices the manifold code works with this is both exact
//! enough and cheap.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues at or below this are treated as non-positive.
pub const SPD_EIGEN_FLOOR: f64 = 1e-12;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn eigen_map(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = f(lambda);
        scaled.column_mut(j).scale_mut(s);
    }
    symmetrize(&(scaled * v.transpose()))
}

/// Eigendecomposition of a matrix that must be SPD.
pub fn spd_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotSpd {
            min_eigenvalue: f64::NAN,
        });
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min <= SPD_EIGEN_FLOOR {
        return Err(Error::NotSpd {
            min_eigenvalue: min,
        });
    }
    Ok(eig)
}

pub fn spd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(eigen_map(&spd_eigen(m)?, f64::sqrt))
}

pub fn spd_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(eigen_map(&spd_eigen(m)?, |l| 1.0 / l.sqrt()))
}

pub fn spd_log(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(eigen_map(&spd_eigen(m)?, f64::ln))
}

/// Matrix exponential of a symmetric matrix.
pub fn sym_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    eigen_map(&SymmetricEigen::new(symmetrize(m)), f64::exp)
}

/// Eigenvalues of the SPD matrix `a^{-1/2} b a^{-1/2}`.
pub fn relative_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "SPD operands {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    spd_eigen(b)?;
    let w = spd_inv_sqrt(a)?;
    let inner = spd_eigen(&(&w * b * &w))?;
    Ok(inner.eigenvalues.iter().copied().collect())
}

const JACOBI_SWEEPS: usize = 80;

/// Thin SVD `A = W diag(σ) Vᵀ` by one-sided Jacobi rotations, with `σ`
/// descending. `W` is `m × min(m,n)` with orthonormal columns; left vectors
/// of zero singular values are an orthonormal completion.
///
/// Jacobi keeps full relative accuracy for clustered singular values, which
/// matters for cosines of nearly equal principal angles.
pub fn thin_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    if a.nrows() < a.ncols() {
        let (w, s, v) = thin_svd(&a.transpose());
        return (v, s, w);
    }
    let n = a.ncols();
    let mut u = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha = u.column(p).norm_squared();
                let beta = u.column(q).norm_squared();
                let gamma = u.column(p).dot(&u.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate(&mut u, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = u.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let sigma: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let cutoff = sigma.first().copied().unwrap_or(0.0) * f64::EPSILON * a.nrows() as f64;
    let mut w = DMatrix::zeros(a.nrows(), n);
    let mut zero = Vec::new();
    for (j, &i) in order.iter().enumerate() {
        if sigma[j] > cutoff && sigma[j] > 0.0 {
            w.set_column(j, &(u.column(i) / sigma[j]));
        } else {
            zero.push(j);
        }
    }
    for j in zero {
        let col = orthogonal_complement_vector(&w, j);
        w.set_column(j, &col);
    }
    let v = DMatrix::from_columns(&order.iter().map(|&i| v.column(i)).collect::<Vec<_>>());
    (w, sigma, v)
}

fn rotate(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let (x, y) = (m[(r, p)], m[(r, q)]);
        m[(r, p)] = c * x - s * y;
        m[(r, q)] = s * x + c * y;
    }
}

/// Unit vector orthogonal to every non-zero column of `w` other than `skip`,
/// found by Gram-Schmidt on the canonical basis.
fn orthogonal_complement_vector(w: &DMatrix<f64>, skip: usize) -> DVector<f64> {
    let n = w.nrows();
    for e in 0..n {
        let mut cand = DVector::<f64>::zeros(n);
        cand[e] = 1.0;
        for _ in 0..2 {
            for (k, col) in w.column_iter().enumerate() {
                if k != skip {
                    let proj = col.dot(&cand);
                    cand.axpy(-proj, &col, 1.0);
                }
            }
        }
        let norm = cand.norm();
        if norm > 0.5 {
            return cand / norm;
        }
    }
    unreachable!("fewer columns than rows leave a complement")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_svd(a: &DMatrix<f64>) {
        let (w, s, v) = thin_svd(a);
        let k = a.nrows().min(a.ncols());
        assert_eq!(w.shape(), (a.nrows(), k));
        assert_eq!(v.shape(), (a.ncols(), k));
        let recomposed = &w * DMatrix::from_diagonal(&DVector::from_vec(s.clone())) * v.transpose();
        assert!((recomposed - a).norm() < 1e-12 * (1.0 + a.norm()));
        assert!((w.transpose() * &w - DMatrix::identity(k, k)).norm() < 1e-12);
        assert!((v.transpose() * &v - DMatrix::identity(k, k)).norm() < 1e-12);
        assert!(s.windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn svd_of_clustered_singular_values() {
        // two singular values equal to one and a third close to it
        let q = DMatrix::from_row_slice(3, 3, &[0.36, 0.48, -0.8, -0.8, 0.6, 0.0, 0.48, 0.64, 0.6]);
        let a = &q
            * DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0 - 1e-15, 0.767]))
            * q.transpose();
        check_svd(&a);
        let (_, s, _) = thin_svd(&a);
        assert!((s[2] - 0.767).abs() < 1e-14);
    }

    #[test]
    fn svd_of_tall_wide_and_rank_deficient() {
        let tall = DMatrix::from_fn(7, 3, |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        check_svd(&tall);
        check_svd(&tall.transpose());
        let mut flat = tall.clone();
        flat.set_column(2, &(tall.column(0) * 2.0));
        check_svd(&flat);
        let (_, s, _) = thin_svd(&flat);
        assert!(s[2] < 1e-12);
        check_svd(&DMatrix::zeros(4, 2));
    }

    #[test]
    fn sqrt_squares_back() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let r = spd_sqrt(&m).unwrap();
        assert!((&r * &r - &m).norm() < 1e-12);
    }

    #[test]
    fn log_exp_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.7]);
        let back = sym_exp(&spd_log(&m).unwrap());
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn rejects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(spd_log(&m), Err(Error::NotSpd { .. })));
    }
}

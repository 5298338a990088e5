//! Dense symmetric linear algebra shared by the ridge solver and the bounds.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest side for which spectral norms use a full eigendecomposition.
pub const FULL_EIGEN_MAX_N: usize = 2000;
pub const POWER_ITERATION_TOL: f64 = 1e-10;
pub const POWER_ITERATION_MAX_ITERS: usize = 10_000;

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITERS: usize = 0; // 0 means "until convergence" in nalgebra

pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    SymmetricEigen::try_new(m.clone(), EIGEN_EPS, EIGEN_MAX_ITERS)
        .map(|e| e.eigenvalues)
        .ok_or(Error::EigenNoConvergence)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    Ok(symmetric_eigenvalues(m)?.min())
}

/// Spectral norm `max |eigenvalue|` of a symmetric matrix.
///
/// Full eigendecomposition up to [`FULL_EIGEN_MAX_N`]; power iteration beyond.
pub fn spectral_norm_symmetric(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    if m.nrows() <= FULL_EIGEN_MAX_N {
        Ok(symmetric_eigenvalues(m)?.amax())
    } else {
        Ok(power_iteration_norm(m))
    }
}

/// Power iteration on a symmetric matrix, returning `|lambda|_max`.
///
/// Tracks `||M v||` for unit `v`, which converges to the largest eigenvalue
/// magnitude even when `+s` and `-s` are both eigenvalues.
pub fn power_iteration_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    // deterministic, non-degenerate start vector
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v.normalize_mut();
    let mut estimate = 0.0_f64;
    for _ in 0..POWER_ITERATION_MAX_ITERS {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let converged = (norm - estimate).abs() <= POWER_ITERATION_TOL * norm;
        estimate = norm;
        v = w / norm;
        if converged {
            break;
        }
    }
    estimate
}

/// Returns `a + shift * I`.
pub fn shifted(a: &DMatrix<f64>, shift: f64) -> DMatrix<f64> {
    let mut out = a.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += shift;
    }
    out
}

/// Outcome of solving a symmetric system `A x = b`.
#[derive(Debug, Clone)]
pub struct SymmetricSolve {
    pub solution: DVector<f64>,
    /// Set when Cholesky failed and an eigen-based solve was used instead.
    pub used_fallback: bool,
    /// Smallest eigenvalue, known only on the fallback path.
    pub min_eigenvalue: Option<f64>,
}

/// Solves a symmetric system, preferring Cholesky.
///
/// When Cholesky fails the system is solved through the eigendecomposition;
/// an eigenvalue of magnitude below `1e-12` times the largest makes the
/// system singular.
pub fn solve_symmetric(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<SymmetricSolve> {
    if let Some(chol) = Cholesky::new(a.clone()) {
        let solution = chol.solve(b);
        return Ok(SymmetricSolve {
            solution,
            used_fallback: false,
            min_eigenvalue: None,
        });
    }
    let eig = SymmetricEigen::try_new(a.clone(), EIGEN_EPS, EIGEN_MAX_ITERS)
        .ok_or(Error::EigenNoConvergence)?;
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let smallest = eig.eigenvalues.iamin();
    let min_abs = eig.eigenvalues[smallest].abs();
    if min_abs <= 1e-12 * scale {
        return Err(Error::SingularSystem {
            min_eigenvalue: eig.eigenvalues.min(),
        });
    }
    let coeffs = eig.eigenvectors.transpose() * b;
    let scaled = coeffs.zip_map(&eig.eigenvalues, |c, l| c / l);
    Ok(SymmetricSolve {
        solution: &eig.eigenvectors * scaled,
        used_fallback: true,
        min_eigenvalue: Some(eig.eigenvalues.min()),
    })
}

/// Inverse of a symmetric matrix, Cholesky first, eigendecomposition second.
pub fn inverse_symmetric(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Ok(chol.inverse());
    }
    let eig = SymmetricEigen::try_new(a.clone(), EIGEN_EPS, EIGEN_MAX_ITERS)
        .ok_or(Error::EigenNoConvergence)?;
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    if eig.eigenvalues.iter().any(|l| l.abs() <= 1e-12 * scale) {
        return Err(Error::SingularSystem {
            min_eigenvalue: eig.eigenvalues.min(),
        });
    }
    let inv_vals = eig.eigenvalues.map(|l| 1.0 / l);
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&inv_vals) * q.transpose())
}

/// Symmetrizes in place by averaging with the transpose.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

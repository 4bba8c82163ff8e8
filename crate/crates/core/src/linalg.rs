//! Small dense solvers: SPD normal equations and Vandermonde inversion.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition number above which an SPD solve is treated as ill-conditioned.
pub const CONDITION_LIMIT: f64 = 1e12;

/// How an SPD system was solved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    /// Spectral condition estimate of the diagonally scaled matrix.
    pub condition: f64,
    /// True when the least-squares fallback replaced the Cholesky solve.
    pub fallback: bool,
}

/// Solves `A x = b` for symmetric positive (semi)definite `A`.
///
/// The matrix is scaled to unit diagonal, factored by Cholesky and the
/// solution polished by one step of iterative refinement. When the scaled
/// condition estimate exceeds [`CONDITION_LIMIT`] the call either fails with
/// [`Error::IllConditioned`] (`strict`) or falls back to a truncated-SVD
/// least-squares solve and logs a warning.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>, strict: bool) -> Result<(DVector<f64>, SolveReport)> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.len(), n);
    let scale = DVector::from_iterator(
        n,
        a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 }),
    );
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * scale[i] * scale[j]);
    let eig = scaled.clone().symmetric_eigenvalues();
    let lmax = eig.iter().copied().fold(f64::MIN, f64::max);
    let lmin = eig.iter().copied().fold(f64::MAX, f64::min);
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    let rhs = b.component_mul(&scale);

    if condition <= CONDITION_LIMIT {
        if let Some(chol) = scaled.clone().cholesky() {
            let mut y = chol.solve(&rhs);
            let r = &rhs - &scaled * &y;
            y += chol.solve(&r);
            return Ok((
                y.component_mul(&scale),
                SolveReport {
                    condition,
                    fallback: false,
                },
            ));
        }
    }
    if strict {
        return Err(Error::IllConditioned { condition });
    }
    log::warn!("normal equations ill-conditioned (cond ≈ {condition:.3e}); using least squares");
    let svd = scaled.clone().svd(true, true);
    let eps = lmax.abs() * 1e-14 * n as f64;
    let mut y = svd.solve(&rhs, eps).map_err(|e| Error::IllConditioned {
        condition: if e.is_empty() { condition } else { f64::INFINITY },
    })?;
    let r = &rhs - &scaled * &y;
    y += svd.solve(&r, eps).unwrap_or_else(|_| DVector::zeros(n));
    Ok((
        y.component_mul(&scale),
        SolveReport {
            condition,
            fallback: true,
        },
    ))
}

/// Inverse and determinant of a square matrix by fully pivoted LU.
pub fn invert_with_det(m: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let lu = m.clone().full_piv_lu();
    let det = lu.determinant();
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    lu.try_inverse().map(|inv| (inv, det))
}

//! Block embedding of a real matrix into a Gaussian covariance.
//!
//! For a square `A` (M x M) the embedded covariance is the 2M x 2M matrix
//!
//! ```text
//! C = [[ alpha*I ,   A     ],
//!      [   A^T   , alpha*I ]]
//! ```
//!
//! which is positive semidefinite whenever `alpha` is at least the operator
//! norm of `A`; the default `alpha` is the Frobenius norm, which dominates
//! the operator norm and costs O(M^2) to compute. The product of all 2M
//! coordinates of a centered Gaussian vector with covariance `C` has
//! expectation equal to the permanent of `A`, which is what the estimator
//! samples.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Relative zero-pivot tolerance for the Cholesky factorization.
const CHOLESKY_PIVOT_RTOL: f64 = 1e-12;
/// Relative jitter added to the diagonal when factoring a singular PSD
/// covariance, doubled up to [`MAX_JITTER_DOUBLINGS`] times.
const BASE_JITTER_REL: f64 = 1e-10;
const MAX_JITTER_DOUBLINGS: u32 = 3;

/// Options for [`build_embedding`].
#[derive(Debug, Clone, Default)]
pub struct EmbeddingOptions {
    /// Diagonal shift; defaults to the Frobenius norm of the input.
    pub alpha: Option<f64>,
    /// Permit `alpha` below the Frobenius norm. The caller then asserts an
    /// externally known operator-norm bound (e.g. bounded-degree adjacency
    /// matrices); validity is only checked by Cholesky succeeding.
    pub allow_unsafe_alpha: bool,
}

impl EmbeddingOptions {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha: Some(alpha),
            allow_unsafe_alpha: false,
        }
    }
}

/// The 2M x 2M Gaussian covariance embedding a square matrix, together with
/// its Cholesky factor.
#[derive(Debug, Clone)]
pub struct GaussianEmbedding {
    m: usize,
    alpha: f64,
    jitter_applied: f64,
    cov: DenseMatrix,
    chol: DenseMatrix,
}

impl GaussianEmbedding {
    /// Source dimension M (the covariance is 2M x 2M).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Requested diagonal shift, before jitter.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Regularization added on top of `alpha` by the singular-PSD retry
    /// policy; 0 when the first factorization succeeded.
    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    /// The diagonal actually present in the covariance.
    pub fn alpha_effective(&self) -> f64 {
        self.alpha + self.jitter_applied
    }

    /// The covariance `C = B + (alpha + jitter) * I`.
    pub fn cov(&self) -> &DenseMatrix {
        &self.cov
    }

    /// Lower-triangular `L` with `L * L^T = cov`.
    pub fn chol(&self) -> &DenseMatrix {
        &self.chol
    }
}

/// Assembles `C = B + alpha*I` without factoring it. Useful when only the
/// covariance entries are needed (pairing sums, exact moments).
pub fn embedding_covariance(a: &DenseMatrix, alpha: f64) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "embedding requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidInput(format!(
            "diagonal shift must be finite and nonnegative, got {}",
            alpha
        )));
    }
    let m = a.rows();
    let mut cov = DenseMatrix::zeros(2 * m, 2 * m);
    for i in 0..2 * m {
        cov.set(i, i, alpha);
    }
    for i in 0..m {
        for j in 0..m {
            cov.set(i, m + j, a.get(i, j));
            cov.set(m + j, i, a.get(i, j));
        }
    }
    Ok(cov)
}

/// Builds the Gaussian embedding of `a`, factoring the covariance.
///
/// `alpha` defaults to the Frobenius norm. A supplied `alpha` below the
/// Frobenius norm is rejected unless `allow_unsafe_alpha` is set. When the
/// covariance is singular PSD (e.g. `alpha` exactly equal to the operator
/// norm), zero pivots are tolerated; if the factorization still fails, a
/// relative jitter is added to the diagonal and doubled up to three times
/// before giving up.
pub fn build_embedding(a: &DenseMatrix, opts: &EmbeddingOptions) -> Result<GaussianEmbedding> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "embedding requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let m = a.rows();
    let fro = a.frobenius_norm();
    let alpha = opts.alpha.unwrap_or(fro);
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::Validation(format!(
            "alpha must be finite and nonnegative, got {}",
            alpha
        )));
    }
    if alpha < fro && !opts.allow_unsafe_alpha {
        return Err(Error::Validation(format!(
            "alpha {} is below the Frobenius norm {}; pass the unsafe-alpha override only if the operator norm is known to be <= alpha",
            alpha, fro
        )));
    }

    let mut jitter = 0.0;
    let mut attempt = 0u32;
    loop {
        let cov = embedding_covariance(a, alpha + jitter)?;
        match cholesky(&cov) {
            Ok(chol) => {
                return Ok(GaussianEmbedding {
                    m,
                    alpha,
                    jitter_applied: jitter,
                    cov,
                    chol,
                });
            }
            Err(Error::NotPsd { .. }) if attempt <= MAX_JITTER_DOUBLINGS => {
                jitter = if attempt == 0 {
                    alpha * BASE_JITTER_REL
                } else {
                    jitter * 2.0
                };
                attempt += 1;
                // A zero alpha cannot be jittered multiplicatively; C = B
                // must then be PSD on its own (only the all-zero matrix is).
                if jitter == 0.0 {
                    return Err(Error::Numerical(
                        "covariance is not positive semidefinite and alpha is zero".into(),
                    ));
                }
            }
            Err(Error::NotPsd { row, pivot }) => {
                return Err(Error::Numerical(format!(
                    "Cholesky failed after {} jitter doublings (pivot {:.6e} at row {}); alpha may be below the operator norm",
                    MAX_JITTER_DOUBLINGS, pivot, row
                )));
            }
            Err(other) => return Err(other),
        }
    }
}

/// Cholesky factorization of a symmetric positive semidefinite matrix.
///
/// Returns lower-triangular `L` with nonnegative diagonal and
/// `L * L^T = c` to 1e-10 relative Frobenius error. Pivots within
/// `1e-12 * max(diag)` of zero are clamped to zero and their column is
/// zeroed, which handles singular PSD inputs; a clamped pivot with
/// unexplained mass below it, or a pivot negative beyond tolerance, is a
/// not-PSD error.
pub fn cholesky(c: &DenseMatrix) -> Result<DenseMatrix> {
    if !c.is_square() {
        return Err(Error::InvalidInput(format!(
            "Cholesky requires a square matrix, got {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    let n = c.rows();
    let scale = c.max_abs();
    if c.max_asymmetry() > 1e-12 * scale.max(1.0) {
        return Err(Error::InvalidInput(
            "Cholesky requires a symmetric matrix (asymmetry beyond 1e-12 relative)".into(),
        ));
    }

    let max_diag = (0..n).fold(0.0f64, |acc, i| acc.max(c.get(i, i)));
    let pivot_tol = CHOLESKY_PIVOT_RTOL * max_diag;
    // Mass below a clamped pivot must stay within the reconstruction budget.
    let fro_c = c.frobenius_norm();
    let column_tol = 1e-10 * fro_c.max(1e-300);

    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = c.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d < -pivot_tol {
            return Err(Error::NotPsd { row: j, pivot: d });
        }
        if d <= pivot_tol {
            // Zero pivot: the whole column must already be explained.
            for i in (j + 1)..n {
                let mut r = c.get(i, j);
                for k in 0..j {
                    r -= l.get(i, k) * l.get(j, k);
                }
                if r.abs() > column_tol {
                    return Err(Error::NotPsd { row: j, pivot: d });
                }
            }
            // L[j][j] and the column below stay zero.
            continue;
        }
        let pivot = d.sqrt();
        l.set(j, j, pivot);
        for i in (j + 1)..n {
            let mut r = c.get(i, j);
            for k in 0..j {
                r -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, r / pivot);
        }
    }
    Ok(l)
}

/// Relative Frobenius reconstruction error of a candidate factor,
/// `||L L^T - c||_F / ||c||_F` (absolute error when `c` is zero).
pub fn cholesky_residual(l: &DenseMatrix, c: &DenseMatrix) -> f64 {
    let n = c.rows();
    let mut err = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut v = 0.0;
            for k in 0..=i.min(j) {
                v += l.get(i, k) * l.get(j, k);
            }
            let d = v - c.get(i, j);
            err += d * d;
        }
    }
    let fro = c.frobenius_norm();
    if fro > 0.0 {
        err.sqrt() / fro
    } else {
        err.sqrt()
    }
}

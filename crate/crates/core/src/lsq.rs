//! Rectangular linear solves for Newton steps.
//!
//! Collocation with more neurons than collocation points yields wide Jacobians;
//! each Newton step needs a minimum-norm least-squares solution. Two routes are
//! provided: a truncated-SVD Moore–Penrose pseudoinverse (default) and QR least
//! squares for full-row-rank systems.

use ndarray::prelude::*;
use ndarray_linalg::{QR, SVD};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LsqError {
    #[error("all singular values fall below the cutoff {cutoff:.3e}: rank zero")]
    RankZero { cutoff: f64 },
    #[error("rank-deficient system (|R[{index},{index}]| = {pivot:.3e}); use SvdPinv instead")]
    RankDeficient { index: usize, pivot: f64 },
    #[error("QR least squares handles rows <= cols; got {rows}x{cols}")]
    TooManyRows { rows: usize, cols: usize },
    #[error("shape mismatch: matrix is {rows}x{cols}, rhs has length {rhs}")]
    ShapeMismatch { rows: usize, cols: usize, rhs: usize },
    #[error("linear algebra backend: {0}")]
    Backend(#[from] ndarray_linalg::error::LinalgError),
}

/// Truncation rule for small singular values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SvdCutoff {
    /// max(M, N) · machine epsilon · largest singular value
    Auto,
    /// fixed absolute threshold
    Absolute(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    SvdPinv,
    QrLsq,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSolveConfig {
    pub method: SolveMethod,
    pub svd_cutoff: SvdCutoff,
}

impl Default for LinearSolveConfig {
    fn default() -> Self {
        LinearSolveConfig {
            method: SolveMethod::SvdPinv,
            svd_cutoff: SvdCutoff::Auto,
        }
    }
}

impl LinearSolveConfig {
    pub fn qr() -> Self {
        LinearSolveConfig {
            method: SolveMethod::QrLsq,
            svd_cutoff: SvdCutoff::Auto,
        }
    }
}

fn check_shape(j: &Array2<f64>, rhs: &Array1<f64>) -> Result<(), LsqError> {
    if j.nrows() != rhs.len() {
        return Err(LsqError::ShapeMismatch {
            rows: j.nrows(),
            cols: j.ncols(),
            rhs: rhs.len(),
        });
    }
    Ok(())
}

/// Minimum-norm least-squares solve via truncated-SVD pseudoinverse:
/// x = V_q Σ_q⁺ U_qᵀ · rhs, keeping the q singular values above the cutoff.
pub fn pinv_solve(
    j: &Array2<f64>,
    rhs: &Array1<f64>,
    cfg: &LinearSolveConfig,
) -> Result<Array1<f64>, LsqError> {
    check_shape(j, rhs)?;
    let (m, n) = j.dim();
    let (u, s, vt) = j.svd(true, true)?;
    let u = u.expect("left singular vectors requested");
    let vt = vt.expect("right singular vectors requested");
    let smax = s.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = match cfg.svd_cutoff {
        SvdCutoff::Auto => m.max(n) as f64 * f64::EPSILON * smax,
        SvdCutoff::Absolute(c) => c,
    };
    let q = s.iter().take_while(|&&sv| sv > cutoff).count();
    if q == 0 {
        return Err(LsqError::RankZero { cutoff });
    }
    let mut x = Array1::zeros(n);
    for k in 0..q {
        let coef = u.column(k).dot(rhs) / s[k];
        x.scaled_add(coef, &vt.row(k));
    }
    Ok(x)
}

/// Dense truncated pseudoinverse J⁺ (test and diagnostic aid).
pub fn pinv_matrix(j: &Array2<f64>, cutoff: SvdCutoff) -> Result<Array2<f64>, LsqError> {
    let (m, n) = j.dim();
    let (u, s, vt) = j.svd(true, true)?;
    let u = u.expect("left singular vectors requested");
    let vt = vt.expect("right singular vectors requested");
    let smax = s.iter().cloned().fold(0.0f64, f64::max);
    let thr = match cutoff {
        SvdCutoff::Auto => m.max(n) as f64 * f64::EPSILON * smax,
        SvdCutoff::Absolute(c) => c,
    };
    let q = s.iter().take_while(|&&sv| sv > thr).count();
    if q == 0 {
        return Err(LsqError::RankZero { cutoff: thr });
    }
    let mut pinv = Array2::zeros((n, m));
    for k in 0..q {
        let vk = vt.row(k);
        let uk = u.column(k);
        for i in 0..n {
            for l in 0..m {
                pinv[(i, l)] += vk[i] * uk[l] / s[k];
            }
        }
    }
    Ok(pinv)
}

/// Least-squares solve through the partitioned QR route: factor Jᵀ = Q R and
/// return Q R⁻ᵀ · rhs, the minimum-norm solution when J has full row rank.
pub fn qr_lsq_solve(j: &Array2<f64>, rhs: &Array1<f64>) -> Result<Array1<f64>, LsqError> {
    check_shape(j, rhs)?;
    let (m, n) = j.dim();
    if m > n {
        return Err(LsqError::TooManyRows { rows: m, cols: n });
    }
    let jt = j.t().to_owned();
    let (q1, r1) = jt.qr()?; // q1: n x m, r1: m x m upper triangular
    let diag_max = (0..m).map(|i| r1[(i, i)].abs()).fold(0.0f64, f64::max);
    let thr = m.max(n) as f64 * f64::EPSILON * diag_max;
    for i in 0..m {
        let pivot = r1[(i, i)].abs();
        if pivot <= thr {
            return Err(LsqError::RankDeficient { index: i, pivot });
        }
    }
    // forward substitution on R1ᵀ y = rhs (R1ᵀ is lower triangular)
    let mut y = Array1::zeros(m);
    for i in 0..m {
        let mut s = rhs[i];
        for k in 0..i {
            s -= r1[(k, i)] * y[k];
        }
        y[i] = s / r1[(i, i)];
    }
    Ok(q1.dot(&y))
}

/// Dispatch on the configured method.
pub fn solve(
    j: &Array2<f64>,
    rhs: &Array1<f64>,
    cfg: &LinearSolveConfig,
) -> Result<Array1<f64>, LsqError> {
    match cfg.method {
        SolveMethod::SvdPinv => pinv_solve(j, rhs, cfg),
        SolveMethod::QrLsq => qr_lsq_solve(j, rhs),
    }
}

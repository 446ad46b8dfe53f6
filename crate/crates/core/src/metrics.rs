//! Estimation errors against the planted truth and the consensus cloud.

use serde::{Deserialize, Serialize};

use crate::linalg::{align, df_distance, operator_norm, polar, BlockStack, LinalgError, Matrix};
use crate::model::Instance;
use crate::solver::objective;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub df_to_truth: f64,
    /// `min_Q max_i ||S_i - O_i Q||` in operator norm, for the single
    /// `Q = align(S, O)`.
    pub blockwise_max: f64,
    pub blockwise_max_fro: f64,
    pub cloud_error: f64,
    pub objective: f64,
}

/// Largest blockwise deviation `(operator, Frobenius)` after one global
/// alignment of `S` onto `O`.
pub fn blockwise_error(s: &BlockStack, o: &BlockStack) -> Result<(f64, f64), LinalgError> {
    let q = align(s, o)?;
    let mut worst = (0.0f64, 0.0f64);
    for (si, oi) in s.blocks().zip(o.blocks()) {
        let diff = si - oi * &q;
        worst.0 = worst.0.max(operator_norm(&diff));
        worst.1 = worst.1.max(diff.norm());
    }
    Ok(worst)
}

/// `A_hat = (1/n) S^T D`.
pub fn reconstruct_cloud(s: &BlockStack, dm: &Matrix) -> Result<Matrix, LinalgError> {
    if dm.nrows() != s.n() * s.d() {
        return Err(LinalgError::ShapeMismatch(format!(
            "data has {} rows, stack has {}",
            dm.nrows(),
            s.n() * s.d()
        )));
    }
    Ok(s.as_matrix().tr_mul(dm) / s.n() as f64)
}

/// `min_R ||A_hat - R A||_F` over orthogonal `R`.
pub fn cloud_error(ahat: &Matrix, a: &Matrix) -> Result<f64, LinalgError> {
    if ahat.shape() != a.shape() {
        return Err(LinalgError::ShapeMismatch(format!(
            "clouds are {:?} and {:?}",
            ahat.shape(),
            a.shape()
        )));
    }
    let r = polar(&(ahat * a.transpose()))?.factor;
    Ok((ahat - r * a).norm())
}

pub fn error_report(inst: &Instance, s: &BlockStack) -> Result<ErrorReport, LinalgError> {
    let (blockwise_max, blockwise_max_fro) = blockwise_error(s, inst.planted())?;
    let ahat = reconstruct_cloud(s, inst.data())?;
    Ok(ErrorReport {
        df_to_truth: df_distance(s, inst.planted())?,
        blockwise_max,
        blockwise_max_fro,
        cloud_error: cloud_error(&ahat, inst.signal())?,
        objective: objective(inst.gram(), s)?,
    })
}

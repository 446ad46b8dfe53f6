//! Dual certificate for the semidefinite relaxation.
//!
//! A stack `S` is a global optimum of `max <C, G>` over `G >= 0, G_ii = I`
//! when some block-diagonal `Lambda` satisfies `C S = Lambda S` and
//! `Lambda - C >= 0`; it is the unique optimum when in addition
//! `Lambda - C` has rank `(n - 1) d`. At a fixed point of the power method the
//! only candidate is `Lambda_ii = ([C S]_i [C S]_i^T)^{1/2}`.

use serde::{Deserialize, Serialize};

use crate::format::serde_blocks;
use crate::linalg::{psd_sqrt, smallest_eigenvalues, symmetric_norm_estimate, BlockStack, LinalgError, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyTolerances {
    /// Bound on `||C S - Lambda S||_F / ||C S||_F`.
    pub stationarity: f64,
    /// Allowed negative slack of `lambda_min(Lambda - C)`, relative to `||C||`.
    pub psd: f64,
    /// Required `(d+1)`-th smallest eigenvalue of `Lambda - C`, relative to `||C||`.
    pub gap: f64,
}

impl Default for CertifyTolerances {
    fn default() -> Self {
        Self {
            stationarity: 1e-8,
            psd: 1e-9,
            gap: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// `S S^T` is the unique optimum of the relaxation.
    CertifiedUnique,
    /// `S S^T` is an optimum, uniqueness not established.
    Certified,
    Uncertified,
}

impl Verdict {
    pub fn is_certified(self) -> bool {
        !matches!(self, Verdict::Uncertified)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(with = "serde_blocks")]
    pub lambda_blocks: Vec<Matrix>,
    pub stationarity_residual: f64,
    pub min_eig: f64,
    pub gap_eig: f64,
    /// Spectral-norm estimate of `C` the eigenvalue tests are scaled by.
    pub c_norm: f64,
    pub verdict: Verdict,
    pub tolerances: CertifyTolerances,
}

/// `Lambda_ii = ([C S]_i [C S]_i^T)^{1/2}` for every block.
pub fn build_certificate(c: &Matrix, s: &BlockStack) -> Result<Vec<Matrix>, LinalgError> {
    let nd = s.n() * s.d();
    if c.shape() != (nd, nd) {
        return Err(LinalgError::ShapeMismatch(format!(
            "C is {}x{}, stack needs {nd}x{nd}",
            c.nrows(),
            c.ncols()
        )));
    }
    let cs = c * s.as_matrix();
    let d = s.d();
    (0..s.n())
        .map(|i| {
            let block = cs.rows(i * d, d);
            psd_sqrt(&(block * block.transpose()))
        })
        .collect()
}

fn assemble_lambda_minus_c(c: &Matrix, lambda: &[Matrix], d: usize) -> Matrix {
    let mut m = -c.clone();
    for (i, l) in lambda.iter().enumerate() {
        let mut view = m.view_mut((i * d, i * d), (d, d));
        view += l;
    }
    // C is symmetric and each Lambda_ii is symmetrized, so only rounding
    // in the subtraction can break symmetry.
    (&m + m.transpose()) * 0.5
}

pub fn check_global_optimality(
    c: &Matrix,
    s: &BlockStack,
    tols: &CertifyTolerances,
) -> Result<Certificate, LinalgError> {
    let d = s.d();
    let lambda_blocks = build_certificate(c, s)?;
    let cs = c * s.as_matrix();
    let mut lambda_s = Matrix::zeros(cs.nrows(), d);
    for (i, l) in lambda_blocks.iter().enumerate() {
        lambda_s
            .rows_mut(i * d, d)
            .copy_from(&(l * s.block(i)));
    }
    let num = (&cs - &lambda_s).norm();
    let den = cs.norm();
    let stationarity_residual = if num == 0.0 { 0.0 } else { num / den };

    let slack = assemble_lambda_minus_c(c, &lambda_blocks, d);
    let eigs = smallest_eigenvalues(&slack, d + 1)?;
    let min_eig = eigs[0];
    let gap_eig = eigs[d];
    let c_norm = symmetric_norm_estimate(c);

    let stationary = stationarity_residual <= tols.stationarity;
    let psd = min_eig >= -tols.psd * c_norm;
    let gapped = gap_eig >= tols.gap * c_norm;
    let verdict = match (stationary && psd, gapped) {
        (true, true) => Verdict::CertifiedUnique,
        (true, false) => Verdict::Certified,
        _ => Verdict::Uncertified,
    };
    Ok(Certificate {
        lambda_blocks,
        stationarity_residual,
        min_eig,
        gap_eig,
        c_norm,
        verdict,
        tolerances: *tols,
    })
}

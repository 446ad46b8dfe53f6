//! Spectral initialization and the generalized power method.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    df_distance, polar, polar_blockwise, top_left_singular_vectors, BlockStack, BlockwisePolar,
    LinalgError, Matrix,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solve options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Stop once `d_F(S^{t+1}, S^t) / sqrt(nd)` drops to this value.
    pub stop_tol: f64,
    /// Keep every iterate in the report.
    pub trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            stop_tol: 1e-10,
            trace: false,
        }
    }
}

impl SolveOptions {
    pub fn traced(mut self) -> Self {
        self.trace = true;
        self
    }

    fn validate(&self) -> Result<(), SolveError> {
        if self.max_iters < 1 {
            return Err(SolveError::InvalidOptions("max_iters must be >= 1".into()));
        }
        if !(self.stop_tol > 0.0 && self.stop_tol.is_finite()) {
            return Err(SolveError::InvalidOptions(format!(
                "stop_tol must be positive, got {}",
                self.stop_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub s_final: BlockStack,
    /// Number of power steps taken.
    pub iters: usize,
    /// `d_F(S^{t+1}, S^t) / sqrt(nd)` for each step.
    pub step_residuals: Vec<f64>,
    /// `f(S^t)` for `t = 0..=iters`.
    pub objectives: Vec<f64>,
    pub converged: bool,
    /// Steps in which at least one block of `C S` was numerically singular.
    pub degenerate_steps: usize,
    /// `S^0, ..., S^iters`, only populated when tracing.
    pub iterates: Vec<BlockStack>,
}

impl SolveReport {
    pub fn final_objective(&self) -> f64 {
        *self.objectives.last().expect("at least one objective")
    }

    pub fn last_residual(&self) -> f64 {
        self.step_residuals.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// `S^0 = P_n(U)` for the top-d left singular vectors `U` of `D`.
pub fn spectral_init(dm: &Matrix, n: usize, d: usize) -> Result<BlockStack, LinalgError> {
    if dm.nrows() != n * d {
        return Err(LinalgError::ShapeMismatch(format!(
            "data has {} rows, expected n*d = {}",
            dm.nrows(),
            n * d
        )));
    }
    let u = top_left_singular_vectors(dm, d)?;
    Ok(polar_blockwise(&u)?.stack)
}

fn check_gram(c: &Matrix, s: &BlockStack) -> Result<(), LinalgError> {
    let nd = s.n() * s.d();
    if c.shape() != (nd, nd) {
        return Err(LinalgError::ShapeMismatch(format!(
            "C is {}x{}, stack needs {nd}x{nd}",
            c.nrows(),
            c.ncols()
        )));
    }
    Ok(())
}

fn product_stack(c: &Matrix, s: &BlockStack) -> BlockStack {
    BlockStack::new(s.n(), s.d(), c * s.as_matrix()).expect("C S keeps the stack shape")
}

/// One power step `S -> P_n(C S)`.
pub fn gpm_step(c: &Matrix, s: &BlockStack) -> Result<BlockwisePolar, LinalgError> {
    check_gram(c, s)?;
    polar_blockwise(&product_stack(c, s))
}

/// The same update through the alternating-minimization route: average the
/// aligned clouds, then re-fit every transform to that average.
pub fn alternating_step(dm: &Matrix, s: &BlockStack) -> Result<BlockStack, LinalgError> {
    let (n, d) = (s.n(), s.d());
    if dm.nrows() != n * d {
        return Err(LinalgError::ShapeMismatch(format!(
            "data has {} rows, stack has {}",
            dm.nrows(),
            n * d
        )));
    }
    let template = s.as_matrix().tr_mul(dm) / n as f64;
    let mut out = s.clone();
    for i in 0..n {
        let ai = dm.rows(i * d, d);
        out.set_block(i, &polar(&(ai * template.transpose()))?.factor);
    }
    Ok(out)
}

/// `f(S) = <C, S S^T> = Tr(S^T C S)`.
pub fn objective(c: &Matrix, s: &BlockStack) -> Result<f64, LinalgError> {
    check_gram(c, s)?;
    Ok((c * s.as_matrix()).dot(s.as_matrix()))
}

/// Runs the power method from `s0` until the step residual reaches
/// `opts.stop_tol` or `opts.max_iters` steps have been taken.
pub fn solve(
    c: &Matrix,
    n: usize,
    d: usize,
    s0: &BlockStack,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    opts.validate()?;
    if s0.n() != n || s0.d() != d {
        return Err(LinalgError::ShapeMismatch(format!(
            "initial stack is (n={}, d={}), expected (n={n}, d={d})",
            s0.n(),
            s0.d()
        ))
        .into());
    }
    check_gram(c, s0)?;
    let scale = ((n * d) as f64).sqrt();
    let mut s = s0.clone();
    let mut report = SolveReport {
        s_final: s0.clone(),
        iters: 0,
        step_residuals: Vec::new(),
        objectives: Vec::new(),
        converged: false,
        degenerate_steps: 0,
        iterates: Vec::new(),
    };
    if opts.trace {
        report.iterates.push(s.clone());
    }
    loop {
        let cs = product_stack(c, &s);
        // f(S^t) from the product already needed for the step
        report.objectives.push(cs.as_matrix().dot(s.as_matrix()));
        let step = polar_blockwise(&cs)?;
        if !step.degenerate_blocks.is_empty() {
            report.degenerate_steps += 1;
        }
        let residual = df_distance(&step.stack, &s)? / scale;
        report.step_residuals.push(residual);
        report.iters += 1;
        s = step.stack;
        if opts.trace {
            report.iterates.push(s.clone());
        }
        if residual <= opts.stop_tol {
            report.converged = true;
            break;
        }
        if report.iters >= opts.max_iters {
            break;
        }
    }
    report.objectives.push(objective(c, &s)?);
    report.s_final = s;
    Ok(report)
}

//! End-to-end analysis of one instance and its JSON run report.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::certify::{check_global_optimality, Certificate, CertifyTolerances, Verdict};
use crate::experiments::ExperimentError;
use crate::metrics::{error_report, ErrorReport};
use crate::model::{Instance, Planted};
use crate::solver::{solve, spectral_init, SolveOptions, SolveReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub kappa: f64,
    pub sigma: f64,
    pub seed: u64,
    pub planted: Planted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub iters: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub degenerate_steps: usize,
    pub options: SolveOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub init_seconds: f64,
    pub solve_seconds: f64,
    pub certify_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub instance: InstanceDescriptor,
    pub solve: SolveSummary,
    pub certificate: Certificate,
    pub errors: ErrorReport,
    pub timings: Timings,
}

/// How a run ended, mapped onto process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    CertifiedUnique,
    ConvergedUncertified,
    NotConverged,
}

impl RunReport {
    pub fn outcome(&self) -> Outcome {
        if self.certificate.verdict == Verdict::CertifiedUnique {
            Outcome::CertifiedUnique
        } else if self.solve.converged {
            Outcome::ConvergedUncertified
        } else {
            Outcome::NotConverged
        }
    }
}

/// Spectral initialization, power iterations, certificate and error metrics.
pub fn analyze(
    inst: &Instance,
    opts: &SolveOptions,
    tols: &CertifyTolerances,
) -> Result<(RunReport, SolveReport), ExperimentError> {
    let spec = inst.spec();
    let t0 = Instant::now();
    let s0 = spectral_init(inst.data(), spec.n, spec.d)?;
    let t1 = Instant::now();
    let solved = solve(inst.gram(), spec.n, spec.d, &s0, opts)?;
    let t2 = Instant::now();
    let certificate = check_global_optimality(inst.gram(), &solved.s_final, tols)?;
    let errors = error_report(inst, &solved.s_final)?;
    let t3 = Instant::now();
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        instance: InstanceDescriptor {
            n: spec.n,
            m: spec.m,
            d: spec.d,
            kappa: spec.kappa,
            sigma: inst.sigma(),
            seed: spec.seed,
            planted: spec.planted,
        },
        solve: SolveSummary {
            iters: solved.iters,
            converged: solved.converged,
            final_residual: solved.last_residual(),
            initial_objective: solved.objectives[0],
            final_objective: solved.final_objective(),
            degenerate_steps: solved.degenerate_steps,
            options: *opts,
        },
        certificate,
        errors,
        timings: Timings {
            init_seconds: (t1 - t0).as_secs_f64(),
            solve_seconds: (t2 - t1).as_secs_f64(),
            certify_seconds: (t3 - t2).as_secs_f64(),
        },
    };
    Ok((report, solved))
}

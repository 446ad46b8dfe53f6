//! Monte-Carlo harness: certification frequency over grids of dimensions,
//! noise levels and condition numbers, plus convergence traces.
//!
//! Trial `t` of any cell with dimensions `(n, m, d)` and condition number
//! `kappa` draws its instance from the seed
//! `derive_seed(base_seed, family_key(n, m, d, kappa), t)`. Cells that differ
//! only in the noise level therefore share signal, planted transforms and
//! noise direction, and a cell yields the same records in every grid that
//! contains it, whatever the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{check_global_optimality, CertifyTolerances, Verdict};
use crate::format::{fmt_f64, fnv1a64, serde_extended_f64};
use crate::linalg::{df_distance, LinalgError};
use crate::metrics::error_report;
use crate::model::{derive_seed, eta_from_sigma, generate, sigma_from_eta, Instance, ModelError, Planted, SignalSpec};
use crate::solver::{solve, spectral_init, SolveError, SolveOptions, SolveReport};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid grid config: {0}")]
    InvalidConfig(String),
    #[error("solver did not converge within {0} iterations")]
    NotConverged(usize),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn default_kappas() -> Vec<f64> {
    vec![1.0]
}

fn default_trials() -> usize {
    20
}

/// Grid description, deserializable from the JSON experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// `(n, m, d)` triples.
    pub dims: Vec<(usize, usize, usize)>,
    #[serde(default)]
    pub etas: Vec<f64>,
    /// Absolute noise levels; replaces `etas` on a sigma-parameterized grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Worker count; 0 uses every available core.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default)]
    pub planted: Planted,
    #[serde(default)]
    pub solve: SolveOptions,
    #[serde(default)]
    pub tolerances: CertifyTolerances,
}

impl GridConfig {
    pub fn new(dims: Vec<(usize, usize, usize)>, etas: Vec<f64>) -> Self {
        Self {
            dims,
            etas,
            sigmas: None,
            kappas: default_kappas(),
            trials: default_trials(),
            base_seed: 0,
            parallelism: 0,
            planted: Planted::Identity,
            solve: SolveOptions::default(),
            tolerances: CertifyTolerances::default(),
        }
    }

    fn validate(&self, axis: NoiseAxis) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if self.trials < 1 {
            return bad("trials must be >= 1".into());
        }
        if self.dims.is_empty() {
            return bad("dims must not be empty".into());
        }
        if self.kappas.is_empty() {
            return bad("kappas must not be empty".into());
        }
        let values = self.axis_values(axis);
        if values.is_empty() {
            return bad(format!("the {} axis is empty", axis.name()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad(format!("{} values must be finite and >= 0", axis.name()));
        }
        for &(n, m, d) in &self.dims {
            for &kappa in &self.kappas {
                SignalSpec::new(n, m, d, kappa, 0)
                    .validate()
                    .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
            }
        }
        Ok(())
    }

    fn axis_values(&self, axis: NoiseAxis) -> &[f64] {
        match axis {
            NoiseAxis::Eta => &self.etas,
            NoiseAxis::Sigma => self.sigmas.as_deref().unwrap_or(&[]),
        }
    }
}

/// Parameterization of the noise axis of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseAxis {
    /// `sigma = sigma_from_eta(eta, n, m, d)`.
    Eta,
    Sigma,
}

impl NoiseAxis {
    pub fn name(self) -> &'static str {
        match self {
            NoiseAxis::Eta => "eta",
            NoiseAxis::Sigma => "sigma",
        }
    }
}

/// Outcome of a single trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub verdict: Option<Verdict>,
    pub converged: bool,
    pub iters: usize,
    pub blockwise_error: f64,
    pub cloud_error: f64,
    /// Set when the pipeline failed before a verdict was reached.
    pub failure: Option<String>,
}

/// Generates, initializes, solves, certifies and measures one instance.
pub fn run_trial(
    spec: &SignalSpec,
    sigma: f64,
    opts: &SolveOptions,
    tols: &CertifyTolerances,
) -> TrialOutcome {
    let attempt = || -> Result<TrialOutcome, ExperimentError> {
        let inst = generate(spec, sigma)?;
        let s0 = spectral_init(inst.data(), spec.n, spec.d)?;
        let report = solve(inst.gram(), spec.n, spec.d, &s0, opts)?;
        let cert = check_global_optimality(inst.gram(), &report.s_final, tols)?;
        let errors = error_report(&inst, &report.s_final)?;
        Ok(TrialOutcome {
            verdict: Some(cert.verdict),
            converged: report.converged,
            iters: report.iters,
            blockwise_error: errors.blockwise_max,
            cloud_error: errors.cloud_error,
            failure: None,
        })
    };
    attempt().unwrap_or_else(|e| TrialOutcome {
        verdict: None,
        converged: false,
        iters: 0,
        blockwise_error: f64::NAN,
        cloud_error: f64::NAN,
        failure: Some(e.to_string()),
    })
}

/// Aggregate over the trials of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub kappa: f64,
    pub eta: f64,
    pub sigma: f64,
    pub trials: usize,
    pub n_certified_unique: usize,
    /// Trials certified optimal, unique or not.
    pub n_certified: usize,
    pub n_converged: usize,
    pub n_failed: usize,
    #[serde(with = "serde_extended_f64")]
    pub mean_iters: f64,
    #[serde(with = "serde_extended_f64")]
    pub mean_blockwise_error: f64,
    #[serde(with = "serde_extended_f64")]
    pub mean_cloud_error: f64,
}

pub const CELL_CSV_HEADER: &str = "n,m,d,kappa,eta,sigma,trials,n_certified_unique,n_certified,\
n_converged,n_failed,frequency,mean_iters,mean_blockwise_error,mean_cloud_error";

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

impl CellRecord {
    fn from_outcomes(spec: &SignalSpec, eta: f64, sigma: f64, outcomes: &[TrialOutcome]) -> Self {
        let ok: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.failure.is_none()).collect();
        let count = |pred: &dyn Fn(&TrialOutcome) -> bool| outcomes.iter().filter(|o| pred(o)).count();
        Self {
            n: spec.n,
            m: spec.m,
            d: spec.d,
            kappa: spec.kappa,
            eta,
            sigma,
            trials: outcomes.len(),
            n_certified_unique: count(&|o| o.verdict == Some(Verdict::CertifiedUnique)),
            n_certified: count(&|o| o.verdict.is_some_and(Verdict::is_certified)),
            n_converged: count(&|o| o.converged),
            n_failed: outcomes.len() - ok.len(),
            mean_iters: mean(ok.iter().map(|o| o.iters as f64)),
            mean_blockwise_error: mean(ok.iter().map(|o| o.blockwise_error)),
            mean_cloud_error: mean(ok.iter().map(|o| o.cloud_error)),
        }
    }

    /// Fraction of trials certified as the unique optimum.
    pub fn frequency(&self) -> f64 {
        self.n_certified_unique as f64 / self.trials as f64
    }

    pub fn csv_row(&self) -> String {
        [
            self.n.to_string(),
            self.m.to_string(),
            self.d.to_string(),
            fmt_f64(self.kappa),
            fmt_f64(self.eta),
            fmt_f64(self.sigma),
            self.trials.to_string(),
            self.n_certified_unique.to_string(),
            self.n_certified.to_string(),
            self.n_converged.to_string(),
            self.n_failed.to_string(),
            fmt_f64(self.frequency()),
            fmt_f64(self.mean_iters),
            fmt_f64(self.mean_blockwise_error),
            fmt_f64(self.mean_cloud_error),
        ]
        .join(",")
    }
}

/// 50% crossing of the certification frequency along one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub kappa: f64,
    pub axis: NoiseAxis,
    /// `+inf` when the frequency never drops below one half.
    #[serde(with = "serde_extended_f64")]
    pub value: f64,
}

pub const CROSSING_CSV_HEADER: &str = "n,m,d,kappa,axis,crossing";

impl Crossing {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.n,
            self.m,
            self.d,
            fmt_f64(self.kappa),
            self.axis.name(),
            fmt_f64(self.value)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub cells: Vec<CellRecord>,
    pub crossings: Vec<Crossing>,
}

impl GridResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CELL_CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            out.push_str(&c.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn crossings_csv(&self) -> String {
        let mut out = String::from(CROSSING_CSV_HEADER);
        out.push('\n');
        for c in &self.crossings {
            out.push_str(&c.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn total_trials(&self) -> usize {
        self.cells.iter().map(|c| c.trials).sum()
    }

    pub fn crossing_for(&self, n: usize, m: usize, d: usize, kappa: f64) -> Option<f64> {
        self.crossings
            .iter()
            .find(|c| (c.n, c.m, c.d) == (n, m, d) && c.kappa == kappa)
            .map(|c| c.value)
    }
}

/// Interpolated point where `freqs` first falls below one half: linear
/// between the last value `>= 0.5` and the first `< 0.5`. Points are taken
/// in ascending order of `xs`.
pub fn half_crossing(xs: &[f64], freqs: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let Some(pos) = order.iter().position(|&i| freqs[i] < 0.5) else {
        return f64::INFINITY;
    };
    if pos == 0 {
        return xs[order[0]];
    }
    let (i0, i1) = (order[pos - 1], order[pos]);
    let (x0, x1, f0, f1) = (xs[i0], xs[i1], freqs[i0], freqs[i1]);
    x0 + (f0 - 0.5) / (f0 - f1) * (x1 - x0)
}

fn family_key(n: usize, m: usize, d: usize, kappa: f64) -> u64 {
    let mut bytes = Vec::with_capacity(32);
    for v in [n as u64, m as u64, d as u64, kappa.to_bits()] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fnv1a64(&bytes)
}

/// Seed of trial `trial` in the family `(n, m, d, kappa)`.
pub fn trial_seed(base_seed: u64, n: usize, m: usize, d: usize, kappa: f64, trial: usize) -> u64 {
    derive_seed(base_seed, family_key(n, m, d, kappa), trial as u64)
}

fn run_cell(config: &GridConfig, spec_proto: SignalSpec, eta: f64, sigma: f64) -> CellRecord {
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let spec = SignalSpec {
                seed: trial_seed(
                    config.base_seed,
                    spec_proto.n,
                    spec_proto.m,
                    spec_proto.d,
                    spec_proto.kappa,
                    t,
                ),
                ..spec_proto
            };
            run_trial(&spec, sigma, &config.solve, &config.tolerances)
        })
        .collect();
    CellRecord::from_outcomes(&spec_proto, eta, sigma, &outcomes)
}

/// Runs a grid, handing each completed cell to `on_cell` in grid order
/// (dims, then kappa, then noise value). Crossings are measured along the
/// noise axis of each `(dims, kappa)` column in the units of `crossing_axis`.
pub fn run_grid_with(
    config: &GridConfig,
    axis: NoiseAxis,
    crossing_axis: NoiseAxis,
    mut on_cell: impl FnMut(&CellRecord),
) -> Result<GridResult, ExperimentError> {
    config.validate(axis)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| ExperimentError::InvalidConfig(format!("worker pool: {e}")))?;
    let mut result = GridResult {
        cells: Vec::new(),
        crossings: Vec::new(),
    };
    for &(n, m, d) in &config.dims {
        for &kappa in &config.kappas {
            let proto = SignalSpec::new(n, m, d, kappa, 0).with_planted(config.planted);
            let mut column = Vec::new();
            for &v in config.axis_values(axis) {
                let (eta, sigma) = match axis {
                    NoiseAxis::Eta => (v, sigma_from_eta(v, n, m, d)),
                    NoiseAxis::Sigma => (eta_from_sigma(v, n, m, d), v),
                };
                let cell = pool.install(|| run_cell(config, proto, eta, sigma));
                on_cell(&cell);
                column.push(cell);
            }
            let xs: Vec<f64> = column
                .iter()
                .map(|c| match crossing_axis {
                    NoiseAxis::Eta => c.eta,
                    NoiseAxis::Sigma => c.sigma,
                })
                .collect();
            let freqs: Vec<f64> = column.iter().map(CellRecord::frequency).collect();
            result.crossings.push(Crossing {
                n,
                m,
                d,
                kappa,
                axis: crossing_axis,
                value: half_crossing(&xs, &freqs),
            });
            result.cells.extend(column);
        }
    }
    Ok(result)
}

/// Certification frequency against `eta` for each configured cell.
pub fn run_tightness_curve(config: &GridConfig) -> Result<GridResult, ExperimentError> {
    run_grid_with(config, NoiseAxis::Eta, NoiseAxis::Eta, |_| {})
}

/// Dimension-by-noise grid; crossings are reported as absolute `sigma`.
pub fn run_phase_grid(config: &GridConfig, axis: NoiseAxis) -> Result<GridResult, ExperimentError> {
    run_grid_with(config, axis, NoiseAxis::Sigma, |_| {})
}

/// Condition-number-by-`eta` grid; crossings are reported as `eta`.
pub fn run_kappa_sweep(config: &GridConfig) -> Result<GridResult, ExperimentError> {
    if config.kappas.len() < 2 {
        return Err(ExperimentError::InvalidConfig(
            "a kappa sweep needs at least two kappa values".into(),
        ));
    }
    run_grid_with(config, NoiseAxis::Eta, NoiseAxis::Eta, |_| {})
}

/// Normalizer `sqrt(n) / (sqrt(nd) + sqrt(m) + 2 sqrt(n log n))` of the
/// empirical phase boundary.
pub fn boundary_scale(n: usize, m: usize, d: usize) -> f64 {
    let (n, m, d) = (n as f64, m as f64, d as f64);
    n.sqrt() / ((n * d).sqrt() + m.sqrt() + 2.0 * (n * n.ln()).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// `d_F(S^{t+1}, S^t) / sqrt(nd)`; absent on the final row.
    pub residual: Option<f64>,
    pub distance_to_final: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub rows: Vec<TraceRow>,
    /// Per-iteration contraction `exp(slope)` of a least-squares fit of
    /// `ln d_F(S^t, S_final)` against `t`.
    pub decay_ratio: f64,
}

pub const TRACE_CSV_HEADER: &str = "iteration,residual,distance_to_final,objective";

impl TraceRecord {
    pub fn iters(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.iteration,
                r.residual.map(fmt_f64).unwrap_or_default(),
                fmt_f64(r.distance_to_final),
                fmt_f64(r.objective)
            ));
        }
        out
    }
}

/// Least-squares slope of `ln y` on `x`, returned as `exp(slope)`.
fn fitted_ratio(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxy / sxx).exp()
}

/// Trace of a solve run with `trace` enabled: each iterate's distance to
/// the final one, its objective, and the fitted decay ratio.
pub fn trace_from_report(report: &SolveReport) -> Result<TraceRecord, LinalgError> {
    let s_final = &report.s_final;
    let mut rows = Vec::with_capacity(report.iterates.len());
    for (t, s) in report.iterates.iter().enumerate() {
        rows.push(TraceRow {
            iteration: t,
            residual: report.step_residuals.get(t).copied(),
            distance_to_final: df_distance(s, s_final)?,
            objective: report.objectives[t],
        });
    }
    // distances at rounding level carry no rate information
    let floor = 1e-12 * ((s_final.n() * s_final.d()) as f64).sqrt();
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.distance_to_final > floor)
        .map(|r| (r.iteration as f64, r.distance_to_final))
        .collect();
    Ok(TraceRecord {
        rows,
        decay_ratio: fitted_ratio(&points),
    })
}

/// Solves from the spectral start while keeping every iterate, then measures
/// each iterate's distance to the final one.
pub fn run_convergence_trace(inst: &Instance, opts: &SolveOptions) -> Result<TraceRecord, ExperimentError> {
    let spec = inst.spec();
    let s0 = spectral_init(inst.data(), spec.n, spec.d)?;
    let report = solve(inst.gram(), spec.n, spec.d, &s0, &opts.traced())?;
    if !report.converged {
        return Err(ExperimentError::NotConverged(report.iters));
    }
    Ok(trace_from_report(&report)?)
}

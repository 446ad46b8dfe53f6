//! Command-line front end: `gen`, `solve` and `experiment`.
//!
//! Exit codes: 0 success (for `solve`: certified unique optimum), 1 I/O
//! failure, 2 invalid flags, file or config, 3 converged but not certified,
//! 4 not converged.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::certify::CertifyTolerances;
use crate::experiments::{
    run_convergence_trace, run_grid_with, trace_from_report, ExperimentError, GridConfig, GridResult, NoiseAxis, CELL_CSV_HEADER,
};
use crate::format::{read_instance, write_instance, FormatError};
use crate::model::{generate, sigma_from_eta, Planted, SignalSpec};
use crate::report::{analyze, Outcome};
use crate::solver::SolveOptions;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_UNCERTIFIED: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

/// Environment variable overriding the experiment worker count.
pub const THREADS_ENV: &str = "GOPP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "gopp", version, about = "Generalized orthogonal Procrustes via the power method")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic instance file.
    Gen(GenArgs),
    /// Solve and certify an instance file; prints a JSON run report.
    Solve(SolveArgs),
    /// Run a Monte-Carlo experiment from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("noise").required(true).args(["eta", "sigma"])))]
pub struct GenArgs {
    #[arg(short = 'n')]
    pub n: usize,
    #[arg(short = 'm')]
    pub m: usize,
    #[arg(short = 'd')]
    pub d: usize,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Noise as `sigma = eta sqrt(n) / (sqrt(nd) + sqrt(m))`.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PlantedArg::Identity)]
    pub planted: PlantedArg,
    #[arg(short = 'o', long, default_value = "instance.gopp")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PlantedArg {
    Identity,
    Random,
}

impl From<PlantedArg> for Planted {
    fn from(p: PlantedArg) -> Self {
        match p {
            PlantedArg::Identity => Planted::Identity,
            PlantedArg::Random => Planted::RandomOrthogonal,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Write the per-iteration trace CSV here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Tightness,
    Phase,
    Kappa,
    Trace,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub kind: ExperimentKind,
    pub config: PathBuf,
    pub out_dir: PathBuf,
}

/// Config of the `trace` experiment: one instance and solver options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub planted: Planted,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub solve: SolveOptions,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Serialize)]
struct Provenance<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    experiment: ExperimentKind,
    config: &'a C,
    total_trials: usize,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        let code = match e {
            FormatError::Io { .. } => EXIT_IO,
            _ => EXIT_INVALID,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure::invalid(e.to_string())
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn cmd_gen(args: &GenArgs, stdout: &mut impl Write) -> Result<i32, Failure> {
    let spec = SignalSpec::new(args.n, args.m, args.d, args.kappa, args.seed).with_planted(args.planted.into());
    spec.validate().map_err(|e| Failure::invalid(e.to_string()))?;
    let sigma = match (args.eta, args.sigma) {
        (Some(eta), None) => {
            if !(eta.is_finite() && eta >= 0.0) {
                return Err(Failure::invalid(format!("--eta must be >= 0, got {eta}")));
            }
            sigma_from_eta(eta, args.n, args.m, args.d)
        }
        (None, Some(sigma)) => sigma,
        _ => return Err(Failure::invalid("exactly one of --eta and --sigma is required")),
    };
    let inst = generate(&spec, sigma).map_err(|e| Failure::invalid(e.to_string()))?;
    write_instance(&args.out, &inst)?;
    writeln!(stdout, "sigma {}", crate::format::fmt_f64(sigma)).map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
    Ok(EXIT_OK)
}

pub fn cmd_solve(args: &SolveArgs, stdout: &mut impl Write) -> Result<i32, Failure> {
    let inst = read_instance(&args.input)?;
    let opts = SolveOptions {
        max_iters: args.max_iters,
        stop_tol: args.tol,
        trace: args.trace.is_some(),
    };
    let (report, solved) = analyze(&inst, &opts, &CertifyTolerances::default())?;
    if let Some(path) = &args.trace {
        let trace = trace_from_report(&solved).map_err(|e| Failure::invalid(e.to_string()))?;
        write_file(path, &trace.to_csv())?;
    }
    let json = to_json(&report);
    match &args.out {
        Some(path) => write_file(path, &json)?,
        None => stdout
            .write_all(json.as_bytes())
            .map_err(|e| Failure::io(Path::new("<stdout>"), e))?,
    }
    Ok(match report.outcome() {
        Outcome::CertifiedUnique => EXIT_OK,
        Outcome::ConvergedUncertified => EXIT_UNCERTIFIED,
        Outcome::NotConverged => EXIT_NOT_CONVERGED,
    })
}

fn read_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn threads_override() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::invalid(format!("{THREADS_ENV}={v} is not a worker count"))),
        Err(_) => Ok(None),
    }
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<i32, Failure> {
    fs::create_dir_all(&args.out_dir).map_err(|e| Failure::io(&args.out_dir, e))?;
    let out = |name: &str| args.out_dir.join(name);
    if args.kind == ExperimentKind::Trace {
        let cfg: TraceConfig = read_config(&args.config)?;
        let sigma = match (cfg.eta, cfg.sigma) {
            (Some(eta), None) => sigma_from_eta(eta, cfg.n, cfg.m, cfg.d),
            (None, Some(s)) => s,
            _ => return Err(Failure::invalid("trace config needs exactly one of `eta` and `sigma`")),
        };
        let spec = SignalSpec::new(cfg.n, cfg.m, cfg.d, cfg.kappa, cfg.seed).with_planted(cfg.planted);
        let inst = generate(&spec, sigma).map_err(|e| Failure::invalid(e.to_string()))?;
        let trace = run_convergence_trace(&inst, &cfg.solve)?;
        write_file(&out("trace.csv"), &trace.to_csv())?;
        write_file(&out("trace.json"), &to_json(&trace))?;
        write_provenance(&out("provenance.json"), args.kind, &cfg, 1)?;
        return Ok(EXIT_OK);
    }

    let mut cfg: GridConfig = read_config(&args.config)?;
    if let Some(t) = threads_override()? {
        cfg.parallelism = t;
    }
    let (axis, crossing_axis) = match args.kind {
        ExperimentKind::Tightness => (NoiseAxis::Eta, NoiseAxis::Eta),
        ExperimentKind::Kappa => {
            if cfg.kappas.len() < 2 {
                return Err(Failure::invalid("a kappa sweep needs at least two kappa values"));
            }
            (NoiseAxis::Eta, NoiseAxis::Eta)
        }
        ExperimentKind::Phase if cfg.sigmas.is_some() => (NoiseAxis::Sigma, NoiseAxis::Sigma),
        ExperimentKind::Phase => (NoiseAxis::Eta, NoiseAxis::Sigma),
        ExperimentKind::Trace => unreachable!(),
    };

    // Rows are flushed as cells finish so an interrupted run keeps them.
    let csv_path = out("result.csv");
    let mut csv = File::create(&csv_path).map_err(|e| Failure::io(&csv_path, e))?;
    writeln!(csv, "{CELL_CSV_HEADER}").map_err(|e| Failure::io(&csv_path, e))?;
    let mut write_err = None;
    let result: GridResult = run_grid_with(&cfg, axis, crossing_axis, |cell| {
        if write_err.is_none() {
            if let Err(e) = writeln!(csv, "{}", cell.csv_row()).and_then(|_| csv.flush()) {
                write_err = Some(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(Failure::io(&csv_path, e));
    }
    write_file(&out("crossings.csv"), &result.crossings_csv())?;
    write_file(&out("result.json"), &to_json(&result))?;
    // parallelism does not affect results, keep it out of the echo
    let mut echo = cfg.clone();
    echo.parallelism = 0;
    write_provenance(&out("provenance.json"), args.kind, &echo, result.total_trials())?;
    Ok(EXIT_OK)
}

fn write_provenance<C: Serialize>(
    path: &Path,
    kind: ExperimentKind,
    config: &C,
    total_trials: usize,
) -> Result<(), Failure> {
    let p = Provenance {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: kind,
        config,
        total_trials,
    };
    write_file(path, &to_json(&p))
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a, &mut lock),
        Command::Solve(a) => cmd_solve(a, &mut lock),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("gopp: {}", f.message);
            f.code
        }
    }
}

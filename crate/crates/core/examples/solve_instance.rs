//! Generate a noisy instance, start from the spectral estimate and run the
//! power method until the iterates stop moving.

use std::error::Error;

use gopp::metrics::error_report;
use gopp::model::sigma_from_eta;
use gopp::{generate, solve, spectral_init, Planted, SignalSpec, SolveOptions};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (n, m, d) = (30, 40, 3);
    let spec = SignalSpec::new(n, m, d, 4.0, 2024).with_planted(Planted::RandomOrthogonal);
    let sigma = sigma_from_eta(0.4, n, m, d);
    let inst = generate(&spec, sigma)?;

    let s0 = spectral_init(inst.data(), n, d)?;
    let start = error_report(&inst, &s0)?;
    let report = solve(inst.gram(), n, d, &s0, &SolveOptions::default())?;
    let end = error_report(&inst, &report.s_final)?;

    println!("n={n} m={m} d={d} sigma={sigma:.4}");
    println!("converged={} after {} steps, last residual {:.2e}", report.converged, report.iters, report.last_residual());
    println!("objective    {:>12.4} -> {:>12.4}", report.objectives[0], report.final_objective());
    println!("d_F to truth {:>12.6} -> {:>12.6}", start.df_to_truth, end.df_to_truth);
    println!("blockwise    {:>12.6} -> {:>12.6}", start.blockwise_max, end.blockwise_max);
    println!("cloud error  {:>12.6} -> {:>12.6}", start.cloud_error, end.cloud_error);
    assert!(report.converged);
    assert!(end.objective >= start.objective);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

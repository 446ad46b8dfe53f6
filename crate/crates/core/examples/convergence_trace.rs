//! Per-iteration residuals and distances to the limit, showing linear
//! convergence of the power method from the spectral start.

use std::error::Error;

use gopp::experiments::run_convergence_trace;
use gopp::model::sigma_from_eta;
use gopp::{generate, Planted, SignalSpec, SolveOptions};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (n, m, d) = (25, 25, 2);
    let spec = SignalSpec::new(n, m, d, 2.0, 8).with_planted(Planted::RandomOrthogonal);
    let inst = generate(&spec, sigma_from_eta(0.5, n, m, d))?;
    let trace = run_convergence_trace(&inst, &SolveOptions::default())?;

    println!("{:>4} {:>12} {:>14} {:>14}", "t", "residual", "dist to final", "objective");
    for row in &trace.rows {
        let res = row.residual.map_or_else(|| "-".to_string(), |r| format!("{r:.3e}"));
        println!("{:>4} {res:>12} {:>14.3e} {:>14.6}", row.iteration, row.distance_to_final, row.objective);
    }
    println!("fitted contraction ratio {:.4}", trace.decay_ratio);
    assert!(trace.decay_ratio < 1.0);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

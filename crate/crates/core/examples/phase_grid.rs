//! Locate the certification threshold in absolute noise for several `n`
//! and compare it with the predicted scale `sqrt(n) / (sqrt(nd) + sqrt(m) + 2 sqrt(n ln n))`.

use std::error::Error;

use gopp::experiments::{boundary_scale, run_phase_grid, GridConfig, NoiseAxis};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (m, d) = (30, 2);
    let ns = [8, 16, 32];
    let mut config = GridConfig::new(ns.iter().map(|&n| (n, m, d)).collect(), Vec::new());
    config.sigmas = Some((1..=16).map(|k| 0.04 * k as f64).collect());
    config.trials = 8;
    let result = run_phase_grid(&config, NoiseAxis::Sigma)?;

    println!("{:>4} {:>10} {:>10} {:>8}", "n", "sigma*", "scale", "ratio");
    for n in ns {
        let sigma_star = result.crossing_for(n, m, d, 1.0).expect("crossing per dims");
        let scale = boundary_scale(n, m, d);
        println!("{n:>4} {sigma_star:>10.4} {scale:>10.4} {:>8.3}", sigma_star / scale);
    }
    print!("\n{}", result.crossings_csv());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

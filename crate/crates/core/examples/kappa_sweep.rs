//! The certification threshold barely moves as the signal condition number
//! grows.

use std::error::Error;

use gopp::experiments::{run_kappa_sweep, GridConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (n, m, d) = (15, 15, 2);
    let mut config = GridConfig::new(vec![(n, m, d)], (1..=10).map(|k| 0.2 * k as f64).collect());
    config.kappas = vec![1.0, 4.0, 10.0];
    config.trials = 8;
    let result = run_kappa_sweep(&config)?;

    for &kappa in &config.kappas {
        let freqs: Vec<String> = result
            .cells
            .iter()
            .filter(|c| c.kappa == kappa)
            .map(|c| format!("{:.2}", c.frequency()))
            .collect();
        let eta_star = result.crossing_for(n, m, d, kappa).expect("crossing per kappa");
        println!("kappa {kappa:>4}: eta* = {eta_star:.3}  [{}]", freqs.join(" "));
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

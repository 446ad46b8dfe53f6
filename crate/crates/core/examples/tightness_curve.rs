//! Fraction of trials whose solution is certified, as a function of the
//! normalized noise level, with the interpolated 50% crossing.

use std::error::Error;

use gopp::experiments::{run_tightness_curve, GridConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut config = GridConfig::new(vec![(15, 20, 2)], vec![0.2, 0.5, 0.8, 1.0, 1.2, 1.5]);
    config.trials = 12;
    config.base_seed = 3;
    let result = run_tightness_curve(&config)?;

    for cell in &result.cells {
        let bar = "#".repeat((cell.frequency() * 30.0).round() as usize);
        println!("eta {:>4.2}  {:>5.2}  {bar}", cell.eta, cell.frequency());
    }
    let eta_star = result.crossing_for(15, 20, 2, 1.0).expect("one crossing per curve");
    println!("50% crossing at eta = {eta_star:.3}");
    print!("\n{}", result.to_csv());
    assert_eq!(result.cells[0].frequency(), 1.0);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

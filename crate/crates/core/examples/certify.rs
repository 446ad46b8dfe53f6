//! Build the dual certificate for the power-method output at several noise
//! levels and report whether it proves global optimality.

use std::error::Error;

use gopp::model::sigma_from_eta;
use gopp::{check_global_optimality, generate, solve, spectral_init, CertifyTolerances, SignalSpec, SolveOptions};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (n, m, d) = (20, 30, 2);
    let tols = CertifyTolerances::default();
    println!("{:>5} {:>16} {:>12} {:>12}  verdict", "eta", "stationarity", "min eig", "gap eig");
    for eta in [0.0, 0.3, 0.8, 1.2, 2.5] {
        let inst = generate(&SignalSpec::new(n, m, d, 1.0, 11), sigma_from_eta(eta, n, m, d))?;
        let s0 = spectral_init(inst.data(), n, d)?;
        let r = solve(inst.gram(), n, d, &s0, &SolveOptions::default())?;
        let cert = check_global_optimality(inst.gram(), &r.s_final, &tols)?;
        println!(
            "{eta:>5.1} {:>16.2e} {:>12.3e} {:>12.3e}  {:?}",
            cert.stationarity_residual, cert.min_eig, cert.gap_eig, cert.verdict
        );
        if eta < 0.5 {
            assert!(cert.verdict.is_certified());
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

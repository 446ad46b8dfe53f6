//! Round-trip an instance through the text file format and produce the JSON
//! run report for it, as `gopp gen` and `gopp solve` do.

use std::error::Error;

use gopp::format::{read_instance, write_instance};
use gopp::report::analyze;
use gopp::{generate, CertifyTolerances, Planted, SignalSpec, SolveOptions};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("small.gopp");

    let spec = SignalSpec::new(4, 5, 2, 2.0, 42).with_planted(Planted::RandomOrthogonal);
    let inst = generate(&spec, 0.05)?;
    write_instance(&path, &inst)?;
    let text = std::fs::read_to_string(&path)?;
    println!("{} ({} bytes):", path.display(), text.len());
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    println!("  ... {}", text.lines().last().unwrap_or_default());

    let back = read_instance(&path)?;
    assert_eq!(back.data(), inst.data());
    assert_eq!(back.spec(), inst.spec());

    let (report, _) = analyze(&back, &SolveOptions::default(), &CertifyTolerances::default())?;
    println!("outcome {:?}", report.outcome());
    println!("{}", serde_json::to_string_pretty(&report.errors)?);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

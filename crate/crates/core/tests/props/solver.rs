use crate::common::{brute_force_sign_optimum, random_orthogonal};
use gopp::certify::{check_global_optimality, Verdict};
use gopp::linalg::df_distance;
use gopp::model::{generate, sigma_from_eta, Instance, Planted, SignalSpec};
use gopp::solver::{gpm_step, solve, spectral_init, SolveOptions};
use proptest::prelude::*;

use super::config;

fn instance(n: usize, m: usize, d: usize, kappa: f64, eta: f64, seed: u64, random: bool) -> Instance {
    let planted = if random { Planted::RandomOrthogonal } else { Planted::Identity };
    let spec = SignalSpec::new(n, m, d, kappa, seed).with_planted(planted);
    generate(&spec, sigma_from_eta(eta, n, m, d)).unwrap()
}

fn instances(max_eta: f64) -> impl Strategy<Value = Instance> {
    (2usize..=10, 1usize..=3, 0usize..=5, 1.0..6.0f64, 0.0..max_eta, any::<u64>(), any::<bool>())
        .prop_map(|(n, d, extra, kappa, eta, seed, random)| instance(n, d + extra, d, kappa, eta, seed, random))
}

fn run(inst: &Instance, opts: &SolveOptions) -> Option<gopp::SolveReport> {
    let spec = inst.spec();
    // a collapsed spectral gap is a legitimate error, not a solver property
    let s0 = spectral_init(inst.data(), spec.n, spec.d).ok()?;
    Some(solve(inst.gram(), spec.n, spec.d, &s0, opts).unwrap())
}

pub fn objective_never_decreases() {
    proptest!(config(150), |(inst in instances(2.0))| {
        let opts = SolveOptions { max_iters: 200, ..SolveOptions::default() };
        if let Some(r) = run(&inst, &opts) {
            for w in r.objectives.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{} -> {}", w[0], w[1]);
            }
        }
    });
}

pub fn iterates_stay_orthogonal() {
    proptest!(config(150), |(inst in instances(2.0))| {
        let opts = SolveOptions { max_iters: 100, ..SolveOptions::default() }.traced();
        if let Some(r) = run(&inst, &opts) {
            for s in &r.iterates {
                prop_assert!(s.is_orthogonal(1e-10), "orthogonality error {}", s.orthogonality_error());
            }
        }
    });
}

pub fn converged_output_is_a_fixed_point() {
    proptest!(config(150), |(inst in instances(1.0))| {
        let opts = SolveOptions::default();
        if let Some(r) = run(&inst, &opts) {
            prop_assume!(r.converged);
            let spec = inst.spec();
            prop_assert!(r.last_residual() <= opts.stop_tol);
            let next = gpm_step(inst.gram(), &r.s_final).unwrap().stack;
            let scale = ((spec.n * spec.d) as f64).sqrt();
            prop_assert!(df_distance(&next, &r.s_final).unwrap() / scale <= 10.0 * opts.stop_tol);
        }
    });
}

pub fn global_rotation_commutes_with_solve() {
    proptest!(config(150), |(inst in instances(0.8), qseed in any::<u64>())| {
        let spec = inst.spec();
        let opts = SolveOptions::default();
        let s0 = match spectral_init(inst.data(), spec.n, spec.d) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let q = random_orthogonal(spec.d, qseed);
        let a = solve(inst.gram(), spec.n, spec.d, &s0, &opts).unwrap();
        let b = solve(inst.gram(), spec.n, spec.d, &s0.right_mul(&q), &opts).unwrap();
        prop_assume!(a.converged && b.converged);
        let scale = ((spec.n * spec.d) as f64).sqrt();
        let rotated = a.s_final.right_mul(&q);
        // direct distance: the quotient metric would hide the rotation
        let gap = (b.s_final.as_matrix() - rotated.as_matrix()).norm() / scale;
        prop_assert!(gap <= 10.0 * opts.stop_tol, "gap {}", gap);
    });
}

pub fn certified_sign_solutions_are_globally_optimal() {
    proptest!(config(150), |(n in 2usize..=12, m in 1usize..=5, eta in prop::sample::select(vec![0.2, 0.8, 1.5]), seed in any::<u64>(), random in any::<bool>())| {
        let inst = instance(n, m, 1, 1.0, eta, seed, random);
        if let Some(r) = run(&inst, &SolveOptions::default()) {
            let cert = check_global_optimality(inst.gram(), &r.s_final, &Default::default()).unwrap();
            if cert.verdict.is_certified() {
                let best = brute_force_sign_optimum(inst.gram());
                let f = r.final_objective();
                prop_assert!((best - f).abs() <= 1e-9 * best.abs(), "{:?}: f = {}, optimum = {}", cert.verdict, f, best);
            }
            prop_assert!(cert.verdict != Verdict::CertifiedUnique || r.converged);
        }
    });
}

pub const ALL: &[(&str, fn())] = &[
    ("objective_never_decreases", objective_never_decreases),
    ("iterates_stay_orthogonal", iterates_stay_orthogonal),
    ("converged_output_is_a_fixed_point", converged_output_is_a_fixed_point),
    ("global_rotation_commutes_with_solve", global_rotation_commutes_with_solve),
    ("certified_sign_solutions_are_globally_optimal", certified_sign_solutions_are_globally_optimal),
];

use crate::common::random_orthogonal;
use gopp::linalg::df_distance;
use gopp::metrics::{blockwise_error, cloud_error, error_report, reconstruct_cloud};
use gopp::model::{generate, sigma_from_eta, Planted, SignalSpec};
use gopp::solver::{solve, spectral_init, SolveOptions};
use gopp::BlockStack;
use proptest::prelude::*;

use super::config;

fn random_stack(n: usize, d: usize, seed: u64) -> BlockStack {
    let blocks: Vec<_> = (0..n as u64).map(|i| random_orthogonal(d, seed ^ (i << 40) ^ i)).collect();
    BlockStack::from_blocks(&blocks).unwrap()
}

pub fn blockwise_norms_are_ordered() {
    proptest!(config(200), |(n in 1usize..=8, d in 1usize..=4, a in any::<u64>(), b in any::<u64>())| {
        let s = random_stack(n, d, a);
        let o = random_stack(n, d, b);
        let (op, fro) = blockwise_error(&s, &o).unwrap();
        prop_assert!(op <= fro + 1e-12);
        prop_assert!(fro <= (d as f64).sqrt() * op + 1e-12);
        prop_assert!(df_distance(&s, &o).unwrap() <= (n as f64).sqrt() * fro + 1e-12);
    });
}

pub fn report_satisfies_norm_inequalities() {
    proptest!(config(200), |(n in 2usize..=8, d in 1usize..=3, extra in 0usize..=4, eta in 0.0..1.5f64, seed in any::<u64>())| {
        let m = d + extra;
        let spec = SignalSpec::new(n, m, d, 3.0, seed).with_planted(Planted::RandomOrthogonal);
        let inst = generate(&spec, sigma_from_eta(eta, n, m, d)).unwrap();
        let s = match spectral_init(inst.data(), n, d) {
            Ok(s0) => solve(inst.gram(), n, d, &s0, &SolveOptions::default()).unwrap().s_final,
            Err(_) => return Ok(()),
        };
        let r = error_report(&inst, &s).unwrap();
        for v in [r.df_to_truth, r.blockwise_max, r.blockwise_max_fro, r.cloud_error, r.objective] {
            prop_assert!(v.is_finite() && v >= 0.0);
        }
        prop_assert!(r.blockwise_max <= r.blockwise_max_fro + 1e-12);
        prop_assert!(r.blockwise_max_fro <= (d as f64).sqrt() * r.blockwise_max + 1e-12);
        prop_assert!(r.df_to_truth <= (n as f64).sqrt() * r.blockwise_max_fro + 1e-12);
    });
}

pub fn cloud_error_ignores_left_rotation() {
    proptest!(config(200), |(n in 2usize..=8, d in 1usize..=3, extra in 0usize..=4, sigma in 0.0..0.5f64, seed in any::<u64>(), qseed in any::<u64>())| {
        let m = d + extra;
        let inst = generate(&SignalSpec::new(n, m, d, 2.0, seed), sigma).unwrap();
        let s = random_stack(n, d, seed.rotate_left(7));
        let ahat = reconstruct_cloud(&s, inst.data()).unwrap();
        let q = random_orthogonal(d, qseed);
        let base = cloud_error(&ahat, inst.signal()).unwrap();
        let turned = cloud_error(&(q * &ahat), inst.signal()).unwrap();
        prop_assert!((base - turned).abs() <= 1e-10 * base.max(1.0));
    });
}

pub const ALL: &[(&str, fn())] = &[
    ("blockwise_norms_are_ordered", blockwise_norms_are_ordered),
    ("report_satisfies_norm_inequalities", report_satisfies_norm_inequalities),
    ("cloud_error_ignores_left_rotation", cloud_error_ignores_left_rotation),
];

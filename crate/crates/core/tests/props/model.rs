use crate::common::{jacobi_eigen, singular_values};
use gopp::model::{generate, make_signal, sigma_from_eta, Planted, SignalSpec};
use proptest::prelude::*;

use super::config;

fn specs() -> impl Strategy<Value = SignalSpec> {
    (2usize..=7, 1usize..=3, 0usize..=4, 1.0..10.0f64, any::<u64>(), any::<bool>()).prop_map(
        |(n, d, extra, kappa, seed, random)| {
            let planted = if random { Planted::RandomOrthogonal } else { Planted::Identity };
            SignalSpec::new(n, d + extra, d, kappa, seed).with_planted(planted)
        },
    )
}

pub fn gram_is_exactly_symmetric_and_psd() {
    proptest!(config(150), |(spec in specs(), eta in 0.0..2.0f64)| {
        let inst = generate(&spec, sigma_from_eta(eta, spec.n, spec.m, spec.d)).unwrap();
        let c = inst.gram();
        prop_assert_eq!(c, &c.transpose());
        let (eigs, _) = jacobi_eigen(c);
        let norm = eigs.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        prop_assert!(eigs[0] >= -1e-9 * norm);
    });
}

pub fn noiseless_spectrum_is_scaled_signal_spectrum() {
    proptest!(config(150), |(spec in specs())| {
        let inst = generate(&spec, 0.0).unwrap();
        let sd = singular_values(inst.data());
        let sa = singular_values(inst.signal());
        let root_n = (spec.n as f64).sqrt();
        let scale = sd[0];
        for k in 0..spec.d {
            prop_assert!((sd[k] - root_n * sa[k]).abs() <= 1e-9 * scale);
        }
        if sd.len() > spec.d {
            prop_assert!(sd[spec.d] <= 1e-9 * scale);
        }
    });
}

pub fn signal_spectrum_runs_from_one_to_kappa() {
    proptest!(config(150), |(spec in specs())| {
        let sa = singular_values(&make_signal(&spec).unwrap());
        prop_assert!((sa[spec.d - 1] - 1.0).abs() <= 1e-12);
        if spec.d > 1 {
            prop_assert!((sa[0] - spec.kappa).abs() <= 1e-11 * spec.kappa);
        }
        prop_assert!(generate(&spec, 0.0).unwrap().planted().is_orthogonal(1e-10));
    });
}

pub fn instances_are_pure_functions_of_spec_and_sigma() {
    proptest!(config(150), |(spec in specs(), sigma in 0.0..1.0f64)| {
        let a = generate(&spec, sigma).unwrap();
        let b = generate(&spec, sigma).unwrap();
        prop_assert_eq!(a.data().as_slice(), b.data().as_slice());
        prop_assert_eq!(a, b);
    });
}

pub const ALL: &[(&str, fn())] = &[
    ("gram_is_exactly_symmetric_and_psd", gram_is_exactly_symmetric_and_psd),
    ("noiseless_spectrum_is_scaled_signal_spectrum", noiseless_spectrum_is_scaled_signal_spectrum),
    ("signal_spectrum_runs_from_one_to_kappa", signal_spectrum_runs_from_one_to_kappa),
    ("instances_are_pure_functions_of_spec_and_sigma", instances_are_pure_functions_of_spec_and_sigma),
];

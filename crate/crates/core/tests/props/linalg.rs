use crate::common::{gaussian_matrix, jacobi_eigen, max_principal_sine, random_orthogonal, singular_values, top_left_subspace};
use gopp::linalg::{
    align, df_distance, df_distance_closed_form, nuclear_norm, operator_norm, polar, smallest_eigenvalues,
    subspace_iteration, top_left_singular_vectors, top_left_singular_vectors_with, SpectralOptions,
};
use gopp::{BlockStack, Matrix};
use proptest::prelude::*;

use super::config;

fn square(max_d: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_d).prop_flat_map(|d| {
        prop::collection::vec(-5.0..5.0f64, d * d).prop_map(move |v| Matrix::from_row_slice(d, d, &v))
    })
}

fn orthogonal_stack(n: usize, d: usize, seed: u64) -> BlockStack {
    let blocks: Vec<Matrix> = (0..n as u64).map(|i| random_orthogonal(d, seed.wrapping_mul(31).wrapping_add(i))).collect();
    BlockStack::from_blocks(&blocks).unwrap()
}

fn stack_pair() -> impl Strategy<Value = (BlockStack, BlockStack, Matrix)> {
    (1usize..=6, 1usize..=4, any::<u64>(), any::<u64>(), any::<u64>())
        .prop_map(|(n, d, a, b, q)| (orthogonal_stack(n, d, a), orthogonal_stack(n, d, b), random_orthogonal(d, q)))
}

fn orthogonality(q: &Matrix) -> f64 {
    (q.transpose() * q - Matrix::identity(q.nrows(), q.ncols())).norm()
}

pub fn polar_is_orthogonal() {
    proptest!(config(200), |(x in square(5))| {
        let p = polar(&x).unwrap();
        prop_assert!(orthogonality(&p.factor) <= 1e-10);
    });
}

pub fn polar_is_the_nearest_orthogonal_matrix() {
    proptest!(config(200), |(x in square(4), seed in any::<u64>())| {
        let p = polar(&x).unwrap().factor;
        let best = (&x - p).norm();
        for k in 0..100 {
            let q = random_orthogonal(x.nrows(), seed.wrapping_add(k));
            prop_assert!(best <= (&x - q).norm() + 1e-9);
        }
    });
}

pub fn polar_ignores_positive_scaling() {
    proptest!(config(200), |(x in square(4), c in 1e-3..1e3f64)| {
        let sv = singular_values(&x);
        // keep away from rank deficiency, where the factor is not unique
        prop_assume!(sv[sv.len() - 1] >= 1e-2 * sv[0]);
        let a = polar(&x).unwrap().factor;
        let b = polar(&(&x * c)).unwrap().factor;
        prop_assert!((a - b).amax() <= 1e-12);
    });
}

pub fn df_closed_form_matches_direct_form() {
    proptest!(config(200), |((x, y, _) in stack_pair())| {
        let q = align(&x, &y).unwrap();
        let direct = (x.as_matrix() - y.as_matrix() * q).norm();
        prop_assert!((df_distance(&x, &y).unwrap() - direct).abs() <= 1e-9);
        // the nuclear-norm form cancels to sqrt(rounding) near zero, so it is
        // compared on squared distances
        let nd = (x.n() * x.d()) as f64;
        let closed = df_distance_closed_form(&x, &y).unwrap();
        prop_assert!((closed * closed - direct * direct).abs() <= 1e-12 * nd);
    });
}

pub fn df_is_symmetric_and_right_invariant() {
    proptest!(config(200), |((x, y, q) in stack_pair())| {
        let dxy = df_distance(&x, &y).unwrap();
        prop_assert!((dxy - df_distance(&y, &x).unwrap()).abs() <= 1e-9);
        prop_assert!((df_distance(&x.right_mul(&q), &y).unwrap() - dxy).abs() <= 1e-9);
    });
}

pub fn align_attains_the_quotient_distance() {
    proptest!(config(200), |((x, y, _) in stack_pair())| {
        let q = align(&x, &y).unwrap();
        prop_assert!(orthogonality(&q) <= 1e-10);
        let at_q = (x.as_matrix() - y.as_matrix() * &q).norm();
        // the closed form is the minimum over all of O(d)
        let closed = df_distance_closed_form(&x, &y).unwrap();
        prop_assert!((at_q * at_q - closed * closed).abs() <= 1e-12 * (x.n() * x.d()) as f64);
    });
}

pub fn nuclear_norm_bounds() {
    proptest!(config(200), |((r, c) in (1usize..7, 1usize..7), seed in any::<u64>())| {
        let x = gaussian_matrix(r, c, seed);
        let nuc = nuclear_norm(&x);
        prop_assert!(nuc + 1e-12 >= operator_norm(&x));
        prop_assert!((nuc - nuclear_norm(&x.transpose())).abs() <= 1e-12 * nuc.max(1.0));
        let oracle: f64 = singular_values(&x).iter().sum();
        prop_assert!((nuc - oracle).abs() <= 1e-10 * oracle.max(1.0));
    });
}

pub fn spectral_subspace_matches_oracle() {
    proptest!(config(200), |(d in prop::sample::select(vec![1usize, 2, 4, 5]), seed in any::<u64>())| {
        let x = gaussian_matrix(20, 8, seed);
        let sv = singular_values(&x);
        prop_assume!(sv[d - 1] - sv[d] >= 1e-3 * sv[0]);
        let oracle = top_left_subspace(&x, d);
        let hybrid = top_left_singular_vectors(&x, d).unwrap();
        prop_assert!(max_principal_sine(hybrid.as_matrix(), &oracle) <= 1e-8);
        let iterative = subspace_iteration(&x, d, &SpectralOptions::default()).unwrap();
        prop_assert!(max_principal_sine(&iterative.u, &oracle) <= 1e-8);
        let forced = SpectralOptions { dense_max_rows: 0, ..Default::default() };
        let via_iteration = top_left_singular_vectors_with(&x, d, &forced).unwrap();
        prop_assert!(max_principal_sine(via_iteration.as_matrix(), &oracle) <= 1e-8);
    });
}

pub fn smallest_eigenvalues_match_jacobi() {
    proptest!(config(200), |(seed in any::<u64>(), k in 1usize..=8)| {
        let g = gaussian_matrix(8, 8, seed);
        let m = (&g + g.transpose()) * 0.5;
        let got = smallest_eigenvalues(&m, k).unwrap();
        let (want, _) = jacobi_eigen(&m);
        let scale = operator_norm(&m);
        for i in 0..k {
            prop_assert!((got[i] - want[i]).abs() <= 1e-9 * scale);
        }
    });
}

pub const ALL: &[(&str, fn())] = &[
    ("polar_is_orthogonal", polar_is_orthogonal),
    ("polar_is_the_nearest_orthogonal_matrix", polar_is_the_nearest_orthogonal_matrix),
    ("polar_ignores_positive_scaling", polar_ignores_positive_scaling),
    ("df_closed_form_matches_direct_form", df_closed_form_matches_direct_form),
    ("df_is_symmetric_and_right_invariant", df_is_symmetric_and_right_invariant),
    ("align_attains_the_quotient_distance", align_attains_the_quotient_distance),
    ("nuclear_norm_bounds", nuclear_norm_bounds),
    ("spectral_subspace_matches_oracle", spectral_subspace_matches_oracle),
    ("smallest_eigenvalues_match_jacobi", smallest_eigenvalues_match_jacobi),
];

//! Reference routines shared by the integration tests. None of them call
//! into the library's linear algebra.
#![allow(dead_code)]

use gopp::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Cyclic Jacobi eigensolver: eigenvalues ascending, eigenvectors as columns.
pub fn jacobi_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = Matrix::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * a.norm().max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Singular values of `x`, descending, by one-sided Jacobi rotations on the
/// columns of `x` (or of `x^T` when wide).
pub fn singular_values(x: &Matrix) -> Vec<f64> {
    let mut a = if x.nrows() >= x.ncols() { x.clone() } else { x.transpose() };
    let k = a.ncols();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..a.nrows() {
                    let ap = a[(r, p)];
                    let aq = a[(r, q)];
                    a[(r, p)] = c * ap - s * aq;
                    a[(r, q)] = s * ap + c * aq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..k).map(|j| a.column(j).norm()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Orthonormal basis of the top-`k` eigenspace of `x x^T`.
pub fn top_left_subspace(x: &Matrix, k: usize) -> Matrix {
    let (_, vecs) = jacobi_eigen(&(x * x.transpose()));
    let n = vecs.ncols();
    Matrix::from_fn(x.nrows(), k, |r, c| vecs[(r, n - 1 - c)])
}

/// Modified Gram-Schmidt on the columns of `x`.
pub fn gram_schmidt(x: &Matrix) -> Matrix {
    let mut q = x.clone();
    for j in 0..q.ncols() {
        for i in 0..j {
            let proj = q.column(i).dot(&q.column(j));
            let qi = q.column(i).into_owned();
            q.column_mut(j).axpy(-proj, &qi, 1.0);
        }
        let norm = q.column(j).norm();
        q.column_mut(j).scale_mut(1.0 / norm);
    }
    q
}

/// Sine of the largest principal angle between two orthonormal frames.
pub fn max_principal_sine(u: &Matrix, v: &Matrix) -> f64 {
    let diff = u * u.transpose() - v * v.transpose();
    let (vals, _) = jacobi_eigen(&diff);
    vals.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random `d x d` orthogonal matrix; flips a column with probability 1/2 so
/// both components of O(d) are hit.
pub fn random_orthogonal(d: usize, seed: u64) -> Matrix {
    let mut q = gram_schmidt(&gaussian_matrix(d, d, seed));
    if seed % 2 == 1 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// `max_{s in {±1}^n} s^T C s` by enumeration.
pub fn brute_force_sign_optimum(c: &Matrix) -> f64 {
    let n = c.nrows();
    assert!(n <= 16);
    let mut best = f64::NEG_INFINITY;
    // fixing s_0 = 1 covers every orbit of the global sign flip
    for mask in 0..(1u32 << (n - 1)) {
        let s: Vec<f64> = (0..n)
            .map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 })
            .collect();
        let mut f = 0.0;
        for i in 0..n {
            for j in 0..n {
                f += s[i] * c[(i, j)] * s[j];
            }
        }
        best = best.max(f);
    }
    best
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

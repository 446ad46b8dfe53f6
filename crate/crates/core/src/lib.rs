//! Generalized orthogonal Procrustes alignment.
//!
//! Given `n` noisy copies `A_i = O_i A + sigma W_i` of a `d x m` point cloud,
//! each hit by an unknown orthogonal transform, recover the transforms by the
//! generalized power method `S <- P_n(C S)` with `C = D D^T`, started from the
//! blockwise-projected top-d left singular vectors of the stacked data `D`.
//! A block-diagonal dual certificate then decides whether the result is the
//! unique global optimum of the semidefinite relaxation.
//!
//! ```
//! use gopp::model::{generate, sigma_from_eta, SignalSpec};
//! use gopp::solver::{solve, spectral_init, SolveOptions};
//! use gopp::certify::{check_global_optimality, Verdict};
//!
//! let (n, m, d) = (10, 12, 2);
//! let inst = generate(&SignalSpec::new(n, m, d, 1.0, 7), sigma_from_eta(0.2, n, m, d)).unwrap();
//! let s0 = spectral_init(inst.data(), n, d).unwrap();
//! let run = solve(inst.gram(), n, d, &s0, &SolveOptions::default()).unwrap();
//! let cert = check_global_optimality(inst.gram(), &run.s_final, &Default::default()).unwrap();
//! assert_eq!(cert.verdict, Verdict::CertifiedUnique);
//! ```

pub mod certify;
pub mod cli;
pub mod experiments;
pub mod format;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod report;
pub mod solver;

pub use certify::{check_global_optimality, Certificate, CertifyTolerances, Verdict};
pub use linalg::{BlockStack, LinalgError, Matrix};
pub use model::{generate, Instance, Planted, SignalSpec};
pub use solver::{solve, spectral_init, SolveOptions, SolveReport};

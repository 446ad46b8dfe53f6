//! Synthetic instances of the signal-plus-noise model `A_i = O_i A + sigma W_i`.
//!
//! Randomness comes from ChaCha20 keyed by the instance seed. Each kind of
//! draw uses its own stream of that key so that, e.g., changing the noise
//! level never perturbs the planted transforms:
//!
//! | stream | contents                                   |
//! |--------|--------------------------------------------|
//! | 0      | signal: `U0` (d x d) then `V0` (m x d)     |
//! | 1      | planted orthogonal blocks `O_1 .. O_n`      |
//! | 2      | noise `W`, row-major over the `nd x m` grid |
//!
//! Gaussian matrices are always filled row-major.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{gram, BlockStack, LinalgError, Matrix};

const STREAM_SIGNAL: u64 = 0;
const STREAM_ORTHOGONAL: u64 = 1;
const STREAM_NOISE: u64 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid signal spec: {0}")]
    InvalidSpec(String),
    #[error("noise level must be finite and non-negative, got {0}")]
    InvalidSigma(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How the ground-truth orthogonal blocks are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Planted {
    /// Every `O_i = I_d`.
    #[default]
    Identity,
    /// I.i.d. Haar-distributed `O_i`.
    RandomOrthogonal,
}

impl Planted {
    pub fn as_str(self) -> &'static str {
        match self {
            Planted::Identity => "identity",
            Planted::RandomOrthogonal => "random-orthogonal",
        }
    }
}

impl std::str::FromStr for Planted {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(Planted::Identity),
            "random-orthogonal" | "random" => Ok(Planted::RandomOrthogonal),
            other => Err(ModelError::InvalidSpec(format!("unknown planted mode `{other}`"))),
        }
    }
}

/// Recipe for a synthetic instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub kappa: f64,
    pub seed: u64,
    #[serde(default)]
    pub planted: Planted,
}

impl SignalSpec {
    pub fn new(n: usize, m: usize, d: usize, kappa: f64, seed: u64) -> Self {
        Self {
            n,
            m,
            d,
            kappa,
            seed,
            planted: Planted::Identity,
        }
    }

    pub fn with_planted(mut self, planted: Planted) -> Self {
        self.planted = planted;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.d < 1 {
            return Err(ModelError::InvalidSpec("d must be at least 1".into()));
        }
        if self.m < self.d {
            return Err(ModelError::InvalidSpec(format!(
                "m = {} must be at least d = {}",
                self.m, self.d
            )));
        }
        if self.n < 2 {
            return Err(ModelError::InvalidSpec(format!("n = {} must be at least 2", self.n)));
        }
        if !(self.kappa.is_finite() && self.kappa >= 1.0) {
            return Err(ModelError::InvalidSpec(format!(
                "kappa = {} must be finite and >= 1",
                self.kappa
            )));
        }
        Ok(())
    }

    /// Singular values of the signal: `d` values linearly spaced from 1 to
    /// kappa. With `d = 1` the single value is 1.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.d == 1 {
            return vec![1.0];
        }
        let step = (self.kappa - 1.0) / (self.d - 1) as f64;
        (0..self.d)
            .map(|k| if k + 1 == self.d { self.kappa } else { 1.0 + step * k as f64 })
            .collect()
    }
}

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let mut g = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            g[(i, j)] = rng.sample(StandardNormal);
        }
    }
    g
}

/// Orthonormal `rows x cols` frame, Haar-distributed: QR of a Gaussian
/// matrix with the columns of `Q` re-signed so that `R` has a positive
/// diagonal.
fn haar_frame(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let qr = gaussian(rows, cols, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn haar_orthogonal(d: usize, rng: &mut impl Rng) -> Matrix {
    haar_frame(d, d, rng)
}

/// Ground-truth cloud `A = U0 diag(s) V0^T` with `sigma_min = 1`, `sigma_max = kappa`.
pub fn make_signal(spec: &SignalSpec) -> Result<Matrix, ModelError> {
    spec.validate()?;
    let mut rng = stream(spec.seed, STREAM_SIGNAL);
    let u0 = haar_orthogonal(spec.d, &mut rng);
    let v0 = haar_frame(spec.m, spec.d, &mut rng);
    let s = Matrix::from_diagonal(&DVector::from_vec(spec.singular_values()));
    Ok(u0 * s * v0.transpose())
}

pub fn sample_orthogonal_stack(n: usize, d: usize, seed: u64, planted: Planted) -> BlockStack {
    match planted {
        Planted::Identity => BlockStack::identity(n, d),
        Planted::RandomOrthogonal => {
            let mut rng = stream(seed, STREAM_ORTHOGONAL);
            let blocks: Vec<Matrix> = (0..n).map(|_| haar_orthogonal(d, &mut rng)).collect();
            BlockStack::from_blocks(&blocks).expect("blocks share a shape")
        }
    }
}

/// `sigma = eta sqrt(n) / (sqrt(nd) + sqrt(m))`.
pub fn sigma_from_eta(eta: f64, n: usize, m: usize, d: usize) -> f64 {
    let (n, m, d) = (n as f64, m as f64, d as f64);
    eta * n.sqrt() / ((n * d).sqrt() + m.sqrt())
}

/// Inverse of [`sigma_from_eta`].
pub fn eta_from_sigma(sigma: f64, n: usize, m: usize, d: usize) -> f64 {
    let (n, m, d) = (n as f64, m as f64, d as f64);
    sigma * ((n * d).sqrt() + m.sqrt()) / n.sqrt()
}

/// Mixes a base seed with a cell and trial index into an instance seed.
pub fn derive_seed(base: u64, cell: u64, trial: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(splitmix(splitmix(base) ^ cell) ^ trial.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// A materialized instance. `D` and `C` are derived from the stored parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    spec: SignalSpec,
    sigma: f64,
    a: Matrix,
    o: BlockStack,
    w: Matrix,
    data: Matrix,
    gram: Matrix,
}

impl Instance {
    /// Assembles an instance from its stored parts, recomputing `D` and `C`.
    pub fn from_parts(
        spec: SignalSpec,
        sigma: f64,
        a: Matrix,
        o: BlockStack,
        w: Matrix,
    ) -> Result<Self, ModelError> {
        spec.validate()?;
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(ModelError::InvalidSigma(sigma));
        }
        let (n, m, d) = (spec.n, spec.m, spec.d);
        if a.shape() != (d, m) || o.n() != n || o.d() != d || w.shape() != (n * d, m) {
            return Err(LinalgError::ShapeMismatch(format!(
                "instance parts do not match n={n}, m={m}, d={d}"
            ))
            .into());
        }
        crate::linalg::ensure_finite(&a)?;
        crate::linalg::ensure_finite(o.as_matrix())?;
        crate::linalg::ensure_finite(&w)?;
        let data = o.as_matrix() * &a + &w * sigma;
        let gram = gram(&data);
        Ok(Self {
            spec,
            sigma,
            a,
            o,
            w,
            data,
            gram,
        })
    }

    pub fn spec(&self) -> &SignalSpec {
        &self.spec
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.spec.seed
    }

    /// Ground-truth cloud `A` (d x m).
    pub fn signal(&self) -> &Matrix {
        &self.a
    }

    pub fn planted(&self) -> &BlockStack {
        &self.o
    }

    pub fn noise(&self) -> &Matrix {
        &self.w
    }

    /// Stacked observations `D` (nd x m).
    pub fn data(&self) -> &Matrix {
        &self.data
    }

    /// `C = D D^T`.
    pub fn gram(&self) -> &Matrix {
        &self.gram
    }
}

pub fn generate(spec: &SignalSpec, sigma: f64) -> Result<Instance, ModelError> {
    let a = make_signal(spec)?;
    let o = sample_orthogonal_stack(spec.n, spec.d, spec.seed, spec.planted);
    let mut rng = stream(spec.seed, STREAM_NOISE);
    let w = gaussian(spec.n * spec.d, spec.m, &mut rng);
    Instance::from_parts(*spec, sigma, a, o, w)
}

//! Dense linear-algebra primitives: polar projection, block stacks, the
//! quotient distance `d_F`, truncated SVD and symmetric eigenvalues.

use nalgebra::{DMatrix, DMatrixView, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Dense 64-bit matrix used throughout the crate.
pub type Matrix = DMatrix<f64>;

/// Singular values below this (relative to `max(1, sigma_max)`) flag a
/// degenerate polar projection.
pub const DEFAULT_DEGENERATE_TOL: f64 = 1e-12;
/// Relative spectral gap `(sigma_d - sigma_{d+1}) / sigma_1` below which the
/// top-d subspace is considered undefined.
pub const DEFAULT_GAP_TOL: f64 = 1e-12;
/// Relative symmetry tolerance for eigenvalue routines.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("no spectral gap after index {d}: sigma_d = {sigma_d:e}, sigma_(d+1) = {sigma_next:e}")]
    NoSpectralGap {
        d: usize,
        sigma_d: f64,
        sigma_next: f64,
    },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("subspace iteration did not reach tolerance within {0} iterations")]
    NotConverged(usize),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

pub fn ensure_finite(m: &Matrix) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite)
    }
}

/// An `nd x d` matrix viewed as `n` stacked `d x d` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStack {
    n: usize,
    d: usize,
    data: Matrix,
}

impl BlockStack {
    pub fn new(n: usize, d: usize, data: Matrix) -> Result<Self> {
        if data.nrows() != n * d || data.ncols() != d {
            return Err(LinalgError::ShapeMismatch(format!(
                "block stack with n={n}, d={d} needs {}x{d}, got {}x{}",
                n * d,
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_blocks(blocks: &[Matrix]) -> Result<Self> {
        let d = blocks.first().map(|b| b.nrows()).unwrap_or(0);
        let n = blocks.len();
        let mut data = Matrix::zeros(n * d, d);
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != d || b.ncols() != d {
                return Err(LinalgError::ShapeMismatch(format!(
                    "block {i} is {}x{}, expected {d}x{d}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            data.view_mut((i * d, 0), (d, d)).copy_from(b);
        }
        Ok(Self { n, d, data })
    }

    /// `n` copies of `I_d` (the matrix `Z`).
    pub fn identity(n: usize, d: usize) -> Self {
        let mut data = Matrix::zeros(n * d, d);
        for i in 0..n {
            data.view_mut((i * d, 0), (d, d))
                .copy_from(&Matrix::identity(d, d));
        }
        Self { n, d, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn into_matrix(self) -> Matrix {
        self.data
    }

    pub fn block(&self, i: usize) -> DMatrixView<'_, f64> {
        self.data.view((i * self.d, 0), (self.d, self.d))
    }

    pub fn blocks(&self) -> impl Iterator<Item = DMatrixView<'_, f64>> + '_ {
        (0..self.n).map(move |i| self.block(i))
    }

    pub fn set_block(&mut self, i: usize, block: &Matrix) {
        self.data
            .view_mut((i * self.d, 0), (self.d, self.d))
            .copy_from(block);
    }

    /// `X Q` for a `d x d` matrix `Q`.
    pub fn right_mul(&self, q: &Matrix) -> Self {
        Self {
            n: self.n,
            d: self.d,
            data: &self.data * q,
        }
    }

    /// Largest `||B_i^T B_i - I||_F` over the blocks.
    pub fn orthogonality_error(&self) -> f64 {
        let eye = Matrix::identity(self.d, self.d);
        self.blocks()
            .map(|b| (b.tr_mul(&b) - &eye).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        self.orthogonality_error() <= tol
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.d != other.d {
            return Err(LinalgError::ShapeMismatch(format!(
                "stacks (n={}, d={}) and (n={}, d={})",
                self.n, self.d, other.n, other.d
            )));
        }
        Ok(())
    }
}

/// Thin SVD `X = U diag(s) V^T` with `s` descending; `U` is `rows x k`, `V` is
/// `cols x k`, `k = min(rows, cols)`, and both have orthonormal columns even
/// when `X` is rank deficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

/// One-sided Jacobi SVD.
///
/// Used instead of nalgebra's bidiagonal SVD, which returns inaccurate
/// factors for some rank-deficient inputs (sums of two orthogonal matrices
/// among them).
pub fn svd(x: &Matrix) -> Svd {
    if x.nrows() < x.ncols() {
        let t = svd(&x.transpose());
        return Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let (rows, k) = x.shape();
    let mut a = x.clone();
    let mut v = Matrix::identity(k, k);
    let tol = f64::EPSILON * rows as f64;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..k).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let singular_values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let v = Matrix::from_fn(k, k, |r, c| v[(r, order[c])]);
    let mut u = Matrix::zeros(rows, k);
    let floor = singular_values[0] * f64::EPSILON * rows as f64;
    for (c, &j) in order.iter().enumerate() {
        if norms[j] > floor {
            u.set_column(c, &(a.column(j) / norms[j]));
        }
    }
    complete_frame(&mut u, &singular_values, floor);
    Svd { u, singular_values, v }
}

fn rotate_columns(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let mp = m[(r, p)];
        let mq = m[(r, q)];
        m[(r, p)] = c * mp - s * mq;
        m[(r, q)] = s * mp + c * mq;
    }
}

/// Replaces the columns of `u` whose singular value is at most `floor` by
/// unit vectors orthogonal to every other column.
fn complete_frame(u: &mut Matrix, sv: &[f64], floor: f64) {
    let rows = u.nrows();
    for c in 0..u.ncols() {
        if sv[c] > floor {
            continue;
        }
        let others: Vec<usize> = (0..u.ncols()).filter(|&j| j != c && (sv[j] > floor || j < c)).collect();
        let mut best = Matrix::zeros(rows, 1);
        for e in 0..rows {
            let mut w = Matrix::zeros(rows, 1);
            w[(e, 0)] = 1.0;
            for _pass in 0..2 {
                for &j in &others {
                    let proj = u.column(j).dot(&w.column(0));
                    w.column_mut(0).axpy(-proj, &u.column(j), 1.0);
                }
            }
            if w.norm() > best.norm() {
                best = w;
            }
        }
        let norm = best.norm();
        u.set_column(c, &(best.column(0) / norm));
    }
}

/// Orthogonal polar factor of a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Polar {
    pub factor: Matrix,
    /// Set when the smallest singular value fell below the degeneracy
    /// threshold; the factor is then one deterministic minimizer among many.
    pub degenerate: bool,
}

/// Flips the sign of `col` so that its largest-magnitude entry (lowest index
/// on ties) is positive. Returns whether a flip happened.
fn sign_normalize(col: &mut nalgebra::DVectorViewMut<'_, f64>) -> bool {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, x) in col.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if col[best] < 0.0 {
        col.neg_mut();
        true
    } else {
        false
    }
}

pub fn polar(x: &Matrix) -> Result<Polar> {
    polar_with_tol(x, DEFAULT_DEGENERATE_TOL)
}

/// `P(X) = U V^T` from the SVD `X = U S V^T`.
pub fn polar_with_tol(x: &Matrix, degenerate_tol: f64) -> Result<Polar> {
    if x.nrows() != x.ncols() {
        return Err(LinalgError::ShapeMismatch(format!(
            "polar needs a square matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    ensure_finite(x)?;
    let d = x.nrows();
    if d == 1 {
        let v = x[(0, 0)];
        let degenerate = v.abs() < degenerate_tol;
        let s = if v < 0.0 { -1.0 } else { 1.0 };
        return Ok(Polar {
            factor: Matrix::from_element(1, 1, s),
            degenerate,
        });
    }
    let Svd {
        mut u,
        singular_values: sv,
        mut v,
    } = svd(x);
    let threshold = degenerate_tol * sv[0].max(1.0);
    let mut degenerate = false;
    for k in 0..d {
        if sv[k] < threshold {
            // Left and right vectors of a null direction are independent.
            degenerate = true;
            sign_normalize(&mut v.column_mut(k));
            sign_normalize(&mut u.column_mut(k));
        } else if sign_normalize(&mut v.column_mut(k)) {
            u.column_mut(k).neg_mut();
        }
    }
    Ok(Polar {
        factor: u * v.transpose(),
        degenerate,
    })
}

/// Blockwise polar projection `P_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockwisePolar {
    pub stack: BlockStack,
    pub degenerate_blocks: Vec<usize>,
}

pub fn polar_blockwise(x: &BlockStack) -> Result<BlockwisePolar> {
    let mut out = x.clone();
    let mut degenerate_blocks = Vec::new();
    for i in 0..x.n() {
        let p = polar(&x.block(i).into_owned())?;
        if p.degenerate {
            degenerate_blocks.push(i);
        }
        out.set_block(i, &p.factor);
    }
    Ok(BlockwisePolar {
        stack: out,
        degenerate_blocks,
    })
}

pub fn nuclear_norm(x: &Matrix) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    svd(x).singular_values.iter().sum()
}

/// Largest singular value.
pub fn operator_norm(x: &Matrix) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    svd(x).singular_values[0]
}

/// The orthogonal `Q` minimizing `||X - Y Q||_F`, i.e. `P(Y^T X)`.
pub fn align(x: &BlockStack, y: &BlockStack) -> Result<Matrix> {
    x.check_same_shape(y)?;
    Ok(polar(&y.as_matrix().tr_mul(x.as_matrix()))?.factor)
}

/// `d_F(X, Y) = min_Q ||X - Y Q||_F`, evaluated at the optimal `Q`.
///
/// The residual is formed explicitly rather than through the nuclear-norm
/// identity, which loses about half the digits to cancellation once the
/// stacks are close.
pub fn df_distance(x: &BlockStack, y: &BlockStack) -> Result<f64> {
    let q = align(x, y)?;
    Ok((x.as_matrix() - y.as_matrix() * q).norm())
}

/// `sqrt(||X||^2 + ||Y||^2 - 2 ||Y^T X||_*)`.
pub fn df_distance_closed_form(x: &BlockStack, y: &BlockStack) -> Result<f64> {
    x.check_same_shape(y)?;
    let nuc = nuclear_norm(&y.as_matrix().tr_mul(x.as_matrix()));
    let sq = x.as_matrix().norm_squared() + y.as_matrix().norm_squared() - 2.0 * nuc;
    Ok(sq.max(0.0).sqrt())
}

/// Options for [`top_left_singular_vectors_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOptions {
    pub gap_tol: f64,
    /// Subspace residual tolerance relative to `||D||^2`.
    pub subspace_tol: f64,
    pub max_iters: usize,
    /// Use a dense SVD when `D` has at most this many rows.
    pub dense_max_rows: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            gap_tol: DEFAULT_GAP_TOL,
            subspace_tol: 1e-10,
            max_iters: 10_000,
            dense_max_rows: 512,
        }
    }
}

/// Top-d left singular subspace of `D` together with singular value
/// estimates (at least `d + 1` of them when available).
#[derive(Debug, Clone)]
pub struct LeftSubspace {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub iterations: usize,
}

pub fn top_left_singular_vectors(dm: &Matrix, d: usize) -> Result<BlockStack> {
    top_left_singular_vectors_with(dm, d, &SpectralOptions::default())
}

/// The top-d left singular vectors of an `nd x m` matrix, as a block stack.
pub fn top_left_singular_vectors_with(
    dm: &Matrix,
    d: usize,
    opts: &SpectralOptions,
) -> Result<BlockStack> {
    let rows = dm.nrows();
    if d == 0 || rows % d != 0 || dm.ncols() < d {
        return Err(LinalgError::ShapeMismatch(format!(
            "cannot take {d} singular vectors of a {}x{} matrix",
            rows,
            dm.ncols()
        )));
    }
    ensure_finite(dm)?;
    let sub = if rows <= opts.dense_max_rows {
        dense_left_subspace(dm, d)
    } else {
        subspace_iteration(dm, d, opts)?
    };
    let sigma_1 = sub.singular_values.first().copied().unwrap_or(0.0);
    let sigma_d = sub.singular_values.get(d - 1).copied().unwrap_or(0.0);
    let sigma_next = sub.singular_values.get(d).copied().unwrap_or(0.0);
    if sigma_d - sigma_next < opts.gap_tol * sigma_1 || sigma_d == 0.0 {
        return Err(LinalgError::NoSpectralGap {
            d,
            sigma_d,
            sigma_next,
        });
    }
    BlockStack::new(rows / d, d, sub.u)
}

fn dense_left_subspace(dm: &Matrix, d: usize) -> LeftSubspace {
    let full = svd(dm);
    LeftSubspace {
        u: full.u.columns(0, d).into_owned(),
        singular_values: full.singular_values,
        iterations: 0,
    }
}

/// Eigen-decomposition with eigenvalues sorted in descending order.
fn sorted_eigen_desc(m: Matrix) -> (Vec<f64>, Matrix) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Orthogonal iteration on `D D^T` with Rayleigh-Ritz extraction.
///
/// Carries two guard vectors beyond `d` so the `(d+1)`-th singular value is
/// estimated for the gap check.
pub fn subspace_iteration(dm: &Matrix, d: usize, opts: &SpectralOptions) -> Result<LeftSubspace> {
    let rows = dm.nrows();
    let k = (d + 2).min(rows);
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_0f_5ab5);
    let g = Matrix::from_fn(dm.ncols(), k, |_, _| StandardNormal.sample(&mut rng));
    let mut x = (dm * g).qr().q();
    for iter in 1..=opts.max_iters {
        let b = dm.tr_mul(&x);
        let (theta, w) = sorted_eigen_desc(b.tr_mul(&b));
        x *= &w;
        let y = dm * (b * &w);
        let scale = theta[0].max(f64::MIN_POSITIVE);
        let mut resid = y.columns(0, d).into_owned();
        for j in 0..d {
            resid.column_mut(j).axpy(-theta[j], &x.column(j), 1.0);
        }
        if resid.norm() <= opts.subspace_tol * scale {
            return Ok(LeftSubspace {
                u: x.columns(0, d).into_owned(),
                singular_values: theta.iter().map(|t| t.max(0.0).sqrt()).collect(),
                iterations: iter,
            });
        }
        x = y.qr().q();
    }
    Err(LinalgError::NotConverged(opts.max_iters))
}

fn check_symmetric(m: &Matrix, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asymmetry = (m - m.transpose()).amax();
    if asymmetry > tol * scale {
        return Err(LinalgError::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// The `k` smallest eigenvalues of a symmetric matrix, ascending.
pub fn smallest_eigenvalues(m: &Matrix, k: usize) -> Result<Vec<f64>> {
    check_symmetric(m, DEFAULT_SYMMETRY_TOL)?;
    ensure_finite(m)?;
    if k > m.nrows() {
        return Err(LinalgError::ShapeMismatch(format!(
            "asked for {k} eigenvalues of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let sym = (m + m.transpose()) * 0.5;
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values.truncate(k);
    Ok(values)
}

/// Symmetric PSD square root, with negative eigenvalues clamped to zero.
pub fn psd_sqrt(m: &Matrix) -> Result<Matrix> {
    check_symmetric(m, DEFAULT_SYMMETRY_TOL)?;
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let roots = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let r = v * Matrix::from_diagonal(&roots) * v.transpose();
    Ok((&r + r.transpose()) * 0.5)
}

/// Power-iteration estimate of the spectral norm of a symmetric matrix,
/// never below its largest diagonal magnitude.
pub fn symmetric_norm_estimate(m: &Matrix) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let diag_max = m.diagonal().amax();
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v.normalize_mut();
    let mut est = 0.0;
    for _ in 0..1000 {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        let next = norm;
        v = w / norm;
        if (next - est).abs() <= 1e-12 * next {
            est = next;
            break;
        }
        est = next;
    }
    est.max(diag_max)
}

/// `C = D D^T`, computed on the upper triangle and mirrored so that the
/// result is exactly symmetric.
pub fn gram(dm: &Matrix) -> Matrix {
    let r = dm.nrows();
    let mut c = Matrix::zeros(r, r);
    for i in 0..r {
        let ri = dm.row(i);
        for j in i..r {
            let v = ri.dot(&dm.row(j));
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

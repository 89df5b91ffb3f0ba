//! Dense small-matrix kernel.
//!
//! Matrices here act on spacetime `R^{n+1}` with space first and time last, so
//! every `(n+1)x(n+1)` matrix has the block layout
//!
//! ```text
//! | A    b |
//! | c^t  d |
//! ```
//!
//! with `A` an `n x n` block, `b`, `c` column vectors and `d` a scalar.

use std::fmt;
use std::ops::{Add, Deref, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Mutation;

/// A dense real `(n+1)x(n+1)` matrix with `n >= 1` and finite entries.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

impl SquareMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() < 2 {
            return Err(Error::DimensionTooSmall(m.nrows(), 2));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be `dim^2`.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    /// # Panics
    /// If `dim < 2`.
    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 2, "SquareMatrix requires dim >= 2");
        Self(DMatrix::identity(dim, dim))
    }

    /// # Panics
    /// If `dim < 2`.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 2, "SquareMatrix requires dim >= 2");
        Self(DMatrix::zeros(dim, dim))
    }

    /// Wraps the result of arithmetic on already-validated matrices.
    pub(crate) fn wrap(m: DMatrix<f64>) -> Self {
        debug_assert!(m.is_square() && m.nrows() >= 2);
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Spatial dimension `n = dim - 1`.
    pub fn n(&self) -> usize {
        self.0.nrows() - 1
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }

    /// Spectral (operator 2-) norm.
    pub fn op_norm(&self) -> f64 {
        op_norm(&self.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn inverse(&self) -> Option<Self> {
        self.0.clone().try_inverse().map(Self)
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

impl Deref for SquareMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SquareMatrix{}", self.0)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&SquareMatrix> for &SquareMatrix {
            type Output = SquareMatrix;
            fn $method(self, rhs: &SquareMatrix) -> SquareMatrix {
                SquareMatrix((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<SquareMatrix> for SquareMatrix {
            type Output = SquareMatrix;
            fn $method(self, rhs: SquareMatrix) -> SquareMatrix {
                SquareMatrix(self.0.$method(rhs.0))
            }
        }
        impl $trait<&SquareMatrix> for SquareMatrix {
            type Output = SquareMatrix;
            fn $method(self, rhs: &SquareMatrix) -> SquareMatrix {
                SquareMatrix(self.0.$method(&rhs.0))
            }
        }
    };
}

impl_binop!(Add, add);
impl_binop!(Sub, sub);
impl_binop!(Mul, mul);

impl Mul<f64> for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: f64) -> SquareMatrix {
        SquareMatrix(&self.0 * rhs)
    }
}

impl Mul<f64> for SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: f64) -> SquareMatrix {
        SquareMatrix(self.0 * rhs)
    }
}

impl Neg for &SquareMatrix {
    type Output = SquareMatrix;
    fn neg(self) -> SquareMatrix {
        SquareMatrix(-&self.0)
    }
}

impl Neg for SquareMatrix {
    type Output = SquareMatrix;
    fn neg(self) -> SquareMatrix {
        SquareMatrix(-self.0)
    }
}

pub(crate) fn op_norm(m: &DMatrix<f64>) -> f64 {
    column_svd(m).0.first().copied().unwrap_or(0.0)
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// Singular values in descending order with the matching left singular
/// vectors as columns, by one-sided Jacobi rotations of the columns. Columns
/// whose singular value is zero are left as zero vectors.
pub(crate) fn column_svd(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (rows, cols) = m.shape();
    if cols > rows {
        // m^t = QR gives m = R^t Q^t: same singular values and left vectors.
        return column_svd(&m.transpose().qr().r().transpose());
    }
    let mut a = m.clone();
    let data = a.as_mut_slice();
    let mut norms: Vec<f64> = (0..cols).map(|j| sq_norm(&data[j * rows..(j + 1) * rows])).collect();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (alpha, beta) = (norms[p], norms[q]);
                let mut gamma = 0.0;
                for i in 0..rows {
                    gamma += data[p * rows + i] * data[q * rows + i];
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (data[p * rows + i], data[q * rows + i]);
                    data[p * rows + i] = c * x - s * y;
                    data[q * rows + i] = s * x + c * y;
                }
                norms[p] = sq_norm(&data[p * rows..(p + 1) * rows]);
                norms[q] = sq_norm(&data[q * rows..(q + 1) * rows]);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(f64, usize)> = norms.iter().enumerate().map(|(j, v)| (v.sqrt(), j)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut u = DMatrix::zeros(rows, cols);
    for (slot, &(sv, j)) in order.iter().enumerate() {
        if sv > 0.0 {
            u.set_column(slot, &(a.column(j) / sv));
        }
    }
    (order.into_iter().map(|(sv, _)| sv).collect(), u)
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// The `(A, b, c, d)` blocks of a matrix; `c` is stored as a column vector
/// and appears transposed in the bottom row.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockForm {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl BlockForm {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
}

pub fn block_split(m: &SquareMatrix) -> BlockForm {
    let n = m.n();
    BlockForm {
        a: m.view((0, 0), (n, n)).into_owned(),
        b: m.view((0, n), (n, 1)).column(0).into_owned(),
        c: m.view((n, 0), (1, n)).transpose().column(0).into_owned(),
        d: m[(n, n)],
    }
}

pub fn block_join(blocks: &BlockForm) -> Result<SquareMatrix> {
    let n = blocks.a.nrows();
    if n < 1 {
        return Err(Error::DimensionTooSmall(n + 1, 2));
    }
    if blocks.a.ncols() != n {
        return Err(Error::NotSquare {
            rows: n,
            cols: blocks.a.ncols(),
        });
    }
    for len in [blocks.b.len(), blocks.c.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&blocks.a);
    m.view_mut((0, n), (n, 1)).copy_from(&blocks.b);
    m.view_mut((n, 0), (1, n)).copy_from(&blocks.c.transpose());
    m[(n, n)] = blocks.d;
    SquareMatrix::new(m)
}

/// Commutator `XY - YX`.
pub fn bracket(x: &SquareMatrix, y: &SquareMatrix) -> Result<SquareMatrix> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    Ok(SquareMatrix(&x.0 * &y.0 - &y.0 * &x.0))
}

/// Taylor degree used after scaling: with `||X|| <= 1/2` the tail
/// `sum_{k>14} ||X||^k / k!` is below `5e-17`.
const EXP_TAYLOR_DEGREE: usize = 14;

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn mat_exp(z: &SquareMatrix) -> SquareMatrix {
    let m = &z.0;
    // max(||.||_1, ||.||_inf) bounds the spectral norm from above
    let norm_1 = m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    let norm_inf = m.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max);
    let norm = norm_1.max(norm_inf);

    let mut squarings = 0u32;
    let mut scaled_norm = norm;
    while scaled_norm > 0.5 {
        scaled_norm /= 2.0;
        squarings += 1;
    }
    let x = m / 2f64.powi(squarings as i32);

    // Horner: I + X(I + X/2(I + X/3(... (I + X/N))))
    let dim = z.dim();
    let eye = DMatrix::<f64>::identity(dim, dim);
    let mut acc = eye.clone();
    for k in (1..=EXP_TAYLOR_DEGREE).rev() {
        acc = &eye + (&x * acc) / k as f64;
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    SquareMatrix(acc)
}

/// Sign selecting between the two inner products `gamma_+` and `gamma_-`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricSign {
    Plus,
    Minus,
}

impl MetricSign {
    pub fn flipped(self) -> Self {
        match self {
            MetricSign::Plus => MetricSign::Minus,
            MetricSign::Minus => MetricSign::Plus,
        }
    }
}

/// The diagonal bilinear form `gamma_± = diag(∓sigma·1_n, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metric {
    sigma: f64,
    sign: MetricSign,
}

impl Metric {
    pub fn new(sigma: f64, sign: MetricSign) -> Result<Self> {
        if !sigma.is_finite() || sigma == 0.0 {
            return Err(Error::DegenerateMetric(sigma));
        }
        Ok(Self { sigma, sign })
    }

    /// `gamma_+`, the spacetime form `diag(-sigma·1, 1)`.
    pub fn plus(sigma: f64) -> Result<Self> {
        Self::new(sigma, MetricSign::Plus)
    }

    /// `gamma_-`, the auxiliary form `diag(sigma·1, 1)`.
    pub fn minus(sigma: f64) -> Result<Self> {
        Self::new(sigma, MetricSign::Minus)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sign(&self) -> MetricSign {
        self.sign
    }

    /// Value of the first `n` diagonal entries.
    pub fn spatial_entry(&self) -> f64 {
        match self.sign {
            MetricSign::Plus => -self.sigma,
            MetricSign::Minus => self.sigma,
        }
    }

    fn diagonal(&self, dim: usize) -> Vec<f64> {
        let mut g = vec![self.spatial_entry(); dim];
        g[dim - 1] = 1.0;
        g
    }

    /// The gram matrix of this form on `R^dim`.
    pub fn gram(&self, dim: usize) -> SquareMatrix {
        SquareMatrix::wrap(DMatrix::from_diagonal(&DVector::from_vec(self.diagonal(dim))))
    }
}

/// Adjoint with respect to the metric: `gamma^{-1} Z^t gamma`.
pub fn dagger(z: &SquareMatrix, metric: &Metric) -> SquareMatrix {
    dagger_mutated(z, metric, None)
}

pub(crate) fn dagger_mutated(
    z: &SquareMatrix,
    metric: &Metric,
    mutation: Option<Mutation>,
) -> SquareMatrix {
    let metric = match mutation {
        Some(Mutation::DaggerSignFlip) => Metric {
            sign: metric.sign.flipped(),
            ..*metric
        },
        _ => *metric,
    };
    let dim = z.dim();
    let g = metric.diagonal(dim);
    SquareMatrix(DMatrix::from_fn(dim, dim, |i, j| z[(j, i)] * (g[j] / g[i])))
}

/// Tolerances for [`mat_log_positive_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogOptions {
    /// Accept `P` when `||P - P†|| <= self_adjoint * (1 + ||P||)`.
    pub self_adjoint: f64,
    /// Eigenvalues at or below this are rejected as non-positive.
    pub eigen_floor: f64,
}

impl Default for LogOptions {
    fn default() -> Self {
        Self {
            self_adjoint: 1e-8,
            eigen_floor: 1e-12,
        }
    }
}

/// The unique logarithm of `p` that is self-adjoint for the inner product
/// `<x, y> = x^t gram y`, assuming `p` is positive for that inner product.
pub fn mat_log_positive(p: &SquareMatrix, gram: &SquareMatrix) -> Result<SquareMatrix> {
    mat_log_positive_with(p, gram, &LogOptions::default())
}

pub fn mat_log_positive_with(
    p: &SquareMatrix,
    gram: &SquareMatrix,
    opts: &LogOptions,
) -> Result<SquareMatrix> {
    if p.dim() != gram.dim() {
        return Err(Error::DimensionMismatch {
            expected: gram.dim(),
            found: p.dim(),
        });
    }
    let g = &gram.0;
    if (g - g.transpose()).amax() > 1e-12 * (1.0 + g.amax()) {
        return Err(Error::GramNotPositiveDefinite);
    }
    let chol = g
        .clone()
        .cholesky()
        .ok_or(Error::GramNotPositiveDefinite)?;
    let g_inv = chol.inverse();

    let adjoint = &g_inv * p.0.transpose() * g;
    let residual = op_norm(&(&p.0 - &adjoint));
    let bound = opts.self_adjoint * (1.0 + p.op_norm());
    if residual > bound {
        return Err(Error::NotSelfAdjoint { residual, bound });
    }

    // In the basis given by gram = L L^t, S = L^t P L^{-t} is symmetric.
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or(Error::GramNotPositiveDefinite)?;
    let s = l.transpose() * &p.0 * l_inv.transpose();
    let s = (&s + s.transpose()) * 0.5;

    let eig = SymmetricEigen::new(s);
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&v| v <= opts.eigen_floor) {
        return Err(Error::NotPositive(bad));
    }
    let logs = eig.eigenvalues.map(f64::ln);
    let q = &eig.eigenvectors;
    let log_s = q * DMatrix::from_diagonal(&logs) * q.transpose();
    Ok(SquareMatrix(l_inv.transpose() * log_s * l.transpose()))
}

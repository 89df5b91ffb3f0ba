//! Isotypic decomposition of `gl(n+1)` under the adjoint action of
//! `K = O(n) x {±1}`:
//!
//! * `M0`: `(λ·1, 0; 0, μ)`
//! * `M1`: `(A, 0; 0, 0)` with `A` skew-symmetric (the Lie algebra of `K`)
//! * `M2`: `(A, 0; 0, 0)` with `A` symmetric and traceless
//! * `M3`: `(0, b; c^t, 0)`
//!
//! Valid for `n >= 2`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matcore::{block_join, block_split, BlockForm, SquareMatrix};

/// Components of a matrix in `M0 ⊕ M1 ⊕ M2 ⊕ M3`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsotypicSplit {
    /// `M0`: multiple of the spatial identity.
    pub lambda: f64,
    /// `M0`: time-time entry.
    pub mu: f64,
    /// `M1`: skew-symmetric spatial block.
    pub skew: DMatrix<f64>,
    /// `M2`: symmetric traceless spatial block.
    pub sym_traceless: DMatrix<f64>,
    /// `M3`: upper-right column.
    pub b: DVector<f64>,
    /// `M3`: bottom row, transposed.
    pub c: DVector<f64>,
}

impl IsotypicSplit {
    pub fn zeros(n: usize) -> Self {
        Self {
            lambda: 0.0,
            mu: 0.0,
            skew: DMatrix::zeros(n, n),
            sym_traceless: DMatrix::zeros(n, n),
            b: DVector::zeros(n),
            c: DVector::zeros(n),
        }
    }

    pub fn n(&self) -> usize {
        self.skew.nrows()
    }

    pub fn m0(&self) -> SquareMatrix {
        let n = self.n();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            m[(i, i)] = self.lambda;
        }
        m[(n, n)] = self.mu;
        SquareMatrix::wrap(m)
    }

    pub fn m1(&self) -> SquareMatrix {
        embed_spatial(&self.skew)
    }

    pub fn m2(&self) -> SquareMatrix {
        embed_spatial(&self.sym_traceless)
    }

    pub fn m3(&self) -> SquareMatrix {
        let n = self.n();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, n), (n, 1)).copy_from(&self.b);
        m.view_mut((n, 0), (1, n)).copy_from(&self.c.transpose());
        SquareMatrix::wrap(m)
    }

    /// Frobenius norms of the four embedded components.
    pub fn component_norms(&self) -> [f64; 4] {
        let n = self.n() as f64;
        [
            (n * self.lambda * self.lambda + self.mu * self.mu).sqrt(),
            self.skew.norm(),
            self.sym_traceless.norm(),
            (self.b.norm_squared() + self.c.norm_squared()).sqrt(),
        ]
    }
}

fn embed_spatial(a: &DMatrix<f64>) -> SquareMatrix {
    let n = a.nrows();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    SquareMatrix::wrap(m)
}

pub fn split(z: &SquareMatrix) -> Result<IsotypicSplit> {
    let n = z.n();
    if n < 2 {
        return Err(Error::DimensionTooSmall(z.dim(), 3));
    }
    let blocks = block_split(z);
    let a = &blocks.a;
    let lambda = a.trace() / n as f64;
    let skew = (a - a.transpose()) * 0.5;
    let mut sym_traceless = (a + a.transpose()) * 0.5;
    for i in 0..n {
        sym_traceless[(i, i)] -= lambda;
    }
    Ok(IsotypicSplit {
        lambda,
        mu: blocks.d,
        skew,
        sym_traceless,
        b: blocks.b,
        c: blocks.c,
    })
}

pub fn merge(s: &IsotypicSplit) -> Result<SquareMatrix> {
    let n = s.n();
    if s.skew.ncols() != n || s.sym_traceless.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: s.sym_traceless.nrows(),
        });
    }
    let mut a = &s.skew + &s.sym_traceless;
    for i in 0..n {
        a[(i, i)] += s.lambda;
    }
    block_join(&BlockForm {
        a,
        b: s.b.clone(),
        c: s.c.clone(),
        d: s.mu,
    })
}

pub(crate) fn orthogonality_residual(r: &DMatrix<f64>) -> f64 {
    let n = r.nrows();
    (r.transpose() * r - DMatrix::identity(n, n)).amax()
}

pub(crate) fn check_orthogonal(r: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !r.is_square() {
        return Err(Error::NotSquare {
            rows: r.nrows(),
            cols: r.ncols(),
        });
    }
    let res = orthogonality_residual(r);
    if res > tol {
        return Err(Error::NotOrthogonal(res));
    }
    Ok(())
}

pub(crate) fn check_time_sign(eps: f64) -> Result<()> {
    if eps == 1.0 || eps == -1.0 {
        Ok(())
    } else {
        Err(Error::InvalidTimeSign(eps))
    }
}

/// `k Z k^{-1}` for `k = diag(R, eps)`, evaluated blockwise as
/// `(R A R^t, eps R b; eps (R c)^t, d)`.
pub fn ad_rotation(r: &DMatrix<f64>, eps: f64, z: &SquareMatrix) -> Result<SquareMatrix> {
    check_orthogonal(r, 1e-10)?;
    check_time_sign(eps)?;
    let blocks = block_split(z);
    if r.nrows() != blocks.n() {
        return Err(Error::DimensionMismatch {
            expected: blocks.n(),
            found: r.nrows(),
        });
    }
    block_join(&BlockForm {
        a: r * &blocks.a * r.transpose(),
        b: r * &blocks.b * eps,
        c: r * &blocks.c * eps,
        d: blocks.d,
    })
}

/// Basis `E_ij - E_ji` (`i < j`) of the skew-symmetric component, i.e. of
/// the Lie algebra of `K`.
pub fn skew_basis(n: usize) -> Vec<SquareMatrix> {
    let mut out = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut m = DMatrix::zeros(n + 1, n + 1);
            m[(i, j)] = 1.0;
            m[(j, i)] = -1.0;
            out.push(SquareMatrix::wrap(m));
        }
    }
    out
}

/// The `2n` elementary matrices spanning `M3`: the `b` entries then the `c` entries.
pub fn m3_basis(n: usize) -> Vec<SquareMatrix> {
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m[(i, n)] = 1.0;
        out.push(SquareMatrix::wrap(m));
    }
    for i in 0..n {
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m[(n, i)] = 1.0;
        out.push(SquareMatrix::wrap(m));
    }
    out
}

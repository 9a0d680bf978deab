//! Vectorization, Kronecker products and the structured factor matrices.
//!
//! Every reshape in this crate uses column-major order: `vec(W)` stacks the
//! columns of `W`, and `mat(w, k, l)` undoes it. With that convention a
//! rank-one term satisfies `vec(a bᵀ) = b ⊗ a`, so a filter
//! `W = U⁽¹⁾ U⁽²⁾ᵀ` is linear in either factor:
//!
//! ```text
//! vec(W) = A⁽¹⁾[U⁽²⁾] vec(U⁽¹⁾) = A⁽²⁾[U⁽¹⁾] vec(U⁽²⁾)
//! A⁽¹⁾ = [u⁽²⁾_1 ⊗ I_{M1}, …, u⁽²⁾_R ⊗ I_{M1}]
//! A⁽²⁾ = [I_{M2} ⊗ u⁽¹⁾_1, …, I_{M2} ⊗ u⁽¹⁾_R]
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions of the factorization: `W` is `m1 × m2` and is built from `r`
/// rank-one terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KroneckerShape {
    pub m1: usize,
    pub m2: usize,
    pub r: usize,
}

impl KroneckerShape {
    pub fn new(m1: usize, m2: usize, r: usize) -> Result<Self> {
        let shape = Self { m1, m2, r };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m1 == 0 || self.m2 == 0 {
            return Err(Error::InvalidShape(format!(
                "m1 = {}, m2 = {} must both be positive",
                self.m1, self.m2
            )));
        }
        if self.r == 0 || self.r > self.m1.min(self.m2) {
            return Err(Error::InvalidShape(format!(
                "rank {} outside 1..={}",
                self.r,
                self.m1.min(self.m2)
            )));
        }
        Ok(())
    }

    /// Full filter length `m1 · m2`.
    pub fn m(&self) -> usize {
        self.m1 * self.m2
    }

    /// Number of free parameters `(m1 + m2) · r`.
    pub fn n_params(&self) -> usize {
        (self.m1 + self.m2) * self.r
    }

    pub fn max_rank(&self) -> usize {
        self.m1.min(self.m2)
    }

    /// Same `(m1, m2)` with a different construction rank.
    pub fn with_rank(&self, r: usize) -> Result<Self> {
        Self::new(self.m1, self.m2, r)
    }
}

/// Which factor a structured matrix linearizes the model in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::One => 1,
            Side::Two => 2,
        }
    }
}

/// The factors `U⁽¹⁾` (`m1 × r`) and `U⁽²⁾` (`m2 × r`).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub u1: DMatrix<f64>,
    pub u2: DMatrix<f64>,
}

impl FactorPair {
    pub fn new(u1: DMatrix<f64>, u2: DMatrix<f64>) -> Result<Self> {
        if u1.ncols() != u2.ncols() {
            return Err(Error::Dimension(format!(
                "factor column counts differ: {} vs {}",
                u1.ncols(),
                u2.ncols()
            )));
        }
        if !u1.iter().chain(u2.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("factor pair"));
        }
        Ok(Self { u1, u2 })
    }

    pub fn zeros(shape: &KroneckerShape) -> Self {
        Self {
            u1: DMatrix::zeros(shape.m1, shape.r),
            u2: DMatrix::zeros(shape.m2, shape.r),
        }
    }

    pub fn rank(&self) -> usize {
        self.u1.ncols()
    }

    pub fn factor(&self, side: Side) -> &DMatrix<f64> {
        match side {
            Side::One => &self.u1,
            Side::Two => &self.u2,
        }
    }

    pub fn check_shape(&self, shape: &KroneckerShape) -> Result<()> {
        if self.u1.nrows() != shape.m1
            || self.u2.nrows() != shape.m2
            || self.u1.ncols() != shape.r
            || self.u2.ncols() != shape.r
        {
            return Err(Error::Dimension(format!(
                "factors {}×{} / {}×{} do not conform to shape ({}, {}, {})",
                self.u1.nrows(),
                self.u1.ncols(),
                self.u2.nrows(),
                self.u2.ncols(),
                shape.m1,
                shape.m2,
                shape.r
            )));
        }
        Ok(())
    }

    /// Stacked parameter vector `[vec U⁽¹⁾; vec U⁽²⁾]`.
    pub fn stacked(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.u1.len() + self.u2.len());
        out.rows_mut(0, self.u1.len())
            .copy_from_slice(self.u1.as_slice());
        out.rows_mut(self.u1.len(), self.u2.len())
            .copy_from_slice(self.u2.as_slice());
        out
    }

    /// `‖U⁽¹⁾‖_F² + ‖U⁽²⁾‖_F²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.u1.norm_squared() + self.u2.norm_squared()
    }
}

/// A dense `A⁽ᵏ⁾`, tagged with the side it linearizes.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredFactorMatrix {
    a: DMatrix<f64>,
    side: Side,
}

impl StructuredFactorMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.a
    }

    pub fn side(&self) -> Side {
        self.side
    }
}

/// Column-major stacking of `w`.
pub fn vec(w: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(w.as_slice())
}

/// Inverse of [`vec`]: reshape a length `k·l` vector into a `k × l` matrix.
pub fn mat(w: &DVector<f64>, k: usize, l: usize) -> Result<DMatrix<f64>> {
    if k * l != w.len() {
        return Err(Error::NotDivisible { len: w.len(), k, l });
    }
    Ok(DMatrix::from_column_slice(k, l, w.as_slice()))
}

/// Kronecker product of two vectors; entry `i·q + j` is `a_i b_j`.
pub fn kron(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let q = b.len();
    DVector::from_fn(a.len() * q, |idx, _| a[idx / q] * b[idx % q])
}

/// Builds `A⁽¹⁾[U⁽²⁾]` (side one) or `A⁽²⁾[U⁽¹⁾]` (side two).
///
/// Columns are grouped by rank term: block `r` of `A⁽¹⁾` multiplies
/// `u⁽¹⁾_r`, matching the column-major layout of `vec(U⁽¹⁾)`.
pub fn build_factor_matrix(
    side: Side,
    fp: &FactorPair,
    shape: &KroneckerShape,
) -> Result<StructuredFactorMatrix> {
    fp.check_shape(shape)?;
    let (m1, m2, r) = (shape.m1, shape.m2, shape.r);
    let a = match side {
        Side::One => {
            let mut a = DMatrix::zeros(m1 * m2, m1 * r);
            for rr in 0..r {
                for i2 in 0..m2 {
                    let v = fp.u2[(i2, rr)];
                    for i1 in 0..m1 {
                        a[(i2 * m1 + i1, rr * m1 + i1)] = v;
                    }
                }
            }
            a
        }
        Side::Two => {
            let mut a = DMatrix::zeros(m1 * m2, m2 * r);
            for rr in 0..r {
                for i2 in 0..m2 {
                    for i1 in 0..m1 {
                        a[(i2 * m1 + i1, rr * m2 + i2)] = fp.u1[(i1, rr)];
                    }
                }
            }
            a
        }
    };
    Ok(StructuredFactorMatrix { a, side })
}

/// `(A⁽ᵏ⁾)ᵀ x` without materializing `A⁽ᵏ⁾`.
///
/// With `X = mat(x, m1, m2)`: side one gives `vec(X U⁽²⁾)`, side two gives
/// `vec(Xᵀ U⁽¹⁾)`.
pub fn factor_matrix_transpose_apply(
    side: Side,
    fp: &FactorPair,
    shape: &KroneckerShape,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    fp.check_shape(shape)?;
    let xm = mat(x, shape.m1, shape.m2)?;
    Ok(match side {
        Side::One => vec(&(xm * &fp.u2)),
        Side::Two => vec(&(xm.transpose() * &fp.u1)),
    })
}

/// `Â = [A⁽¹⁾ A⁽²⁾]`, the Jacobian of `vec(W)` with respect to the stacked
/// factors.
pub fn concat_factor_matrices(
    a1: &StructuredFactorMatrix,
    a2: &StructuredFactorMatrix,
) -> Result<DMatrix<f64>> {
    if a1.side != Side::One || a2.side != Side::Two {
        return Err(Error::InvalidArgument(format!(
            "expected sides (one, two), got ({:?}, {:?})",
            a1.side, a2.side
        )));
    }
    if a1.a.nrows() != a2.a.nrows() {
        return Err(Error::Dimension(format!(
            "row counts differ: {} vs {}",
            a1.a.nrows(),
            a2.a.nrows()
        )));
    }
    let (rows, c1, c2) = (a1.a.nrows(), a1.a.ncols(), a2.a.ncols());
    let mut out = DMatrix::zeros(rows, c1 + c2);
    out.columns_mut(0, c1).copy_from(&a1.a);
    out.columns_mut(c1, c2).copy_from(&a2.a);
    Ok(out)
}

/// Convenience: `Â` straight from a factor pair.
pub fn jacobian(fp: &FactorPair, shape: &KroneckerShape) -> Result<DMatrix<f64>> {
    let a1 = build_factor_matrix(Side::One, fp, shape)?;
    let a2 = build_factor_matrix(Side::Two, fp, shape)?;
    concat_factor_matrices(&a1, &a2)
}

/// `W = U⁽¹⁾ U⁽²⁾ᵀ` and `w = vec(W)`.
pub fn reconstruct(fp: &FactorPair) -> (DMatrix<f64>, DVector<f64>) {
    let w = &fp.u1 * fp.u2.transpose();
    let v = vec(&w);
    (w, v)
}

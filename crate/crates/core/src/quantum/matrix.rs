//! Validated matrix types for finite-dimensional quantum mechanics.
//!
//! [`ComplexMatrix`] is the plain container. [`DensityMatrix`],
//! [`UnitaryOp`] and [`Observable`] are newtypes that check their defining
//! property once at construction, so downstream code can rely on it.

use std::ops::Mul;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance used for the Hermiticity, trace and positivity checks.
pub const STATE_TOLERANCE: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix with finite entries and non-zero dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn new(inner: DMatrix<C64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        if inner.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(inner))
    }

    /// Builds a matrix from entries listed in row-major order.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_real_diagonal(diagonal: &[f64]) -> Self {
        let n = diagonal.len();
        Self(DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                C64::new(diagonal[r], 0.0)
            } else {
                ZERO
            }
        }))
    }

    /// Outer product `|ket><ket|`.
    pub fn projector(ket: &[C64]) -> Self {
        let n = ket.len();
        Self(DMatrix::from_fn(n, n, |r, c| ket[r] * ket[c].conj()))
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<C64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("ragged column list".into()));
        }
        Self::new(DMatrix::from_fn(rows, cols, |r, c| columns[c][r]))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.0.is_square()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        self.0.column(col).iter().copied().collect()
    }

    /// Kronecker product, `self` is the left (slower-varying) factor.
    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        max_abs_diff(&self.0, &self.0.adjoint())
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

pub(crate) fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub(crate) fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending is not
/// guaranteed.
pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(hermitize(m));
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `V f(diag) V^dagger` for a Hermitian matrix.
pub(crate) fn hermitian_function(m: &DMatrix<C64>, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
    let (values, vectors) = hermitian_eigen(m);
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let fv = f(v);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= fv);
    }
    scaled * vectors.adjoint()
}

/// Positive unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(data: ComplexMatrix) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let defect = data.hermiticity_defect();
        if defect > STATE_TOLERANCE {
            return Err(Error::NotHermitian(defect));
        }
        let trace = data.trace();
        if (trace - ONE).norm() > STATE_TOLERANCE {
            return Err(Error::TraceNotUnity(trace.re));
        }
        let (values, _) = hermitian_eigen(data.inner());
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -STATE_TOLERANCE {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { data })
    }

    /// Wraps a matrix that is a valid state by construction. Checked in
    /// debug builds only.
    pub(crate) fn from_raw(raw: DMatrix<C64>) -> Self {
        let state = Self {
            data: ComplexMatrix(hermitize(&raw)),
        };
        debug_assert!(
            Self::new(state.data.clone()).is_ok(),
            "internal state construction produced an invalid density matrix"
        );
        state
    }

    /// Normalises a positive operator, returning its trace alongside the state.
    pub fn from_unnormalized(data: ComplexMatrix) -> Result<(f64, Self)> {
        let weight = data.trace().re;
        if !(weight > 0.0) {
            return Err(Error::TraceNotUnity(weight));
        }
        let scaled = ComplexMatrix::new(data.into_inner().unscale(weight))?;
        Ok((weight, Self::new(scaled)?))
    }

    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "ket must be normalized, |psi|^2 = {norm}"
            )));
        }
        Self::new(ComplexMatrix::projector(ket))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        Self::new(ComplexMatrix::from_real_diagonal(&vec![1.0 / dim as f64; dim]))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.data
    }

    pub(crate) fn raw(&self) -> &DMatrix<C64> {
        self.data.inner()
    }

    /// Populations in the computational basis.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data.get(i, i).re).collect()
    }

    /// `<ket|rho|ket>`.
    pub fn population(&self, ket: &[C64]) -> f64 {
        let m = self.raw();
        let mut acc = ZERO;
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                acc += ket[r].conj() * m[(r, c)] * ket[c];
            }
        }
        acc.re
    }

    pub fn expectation(&self, observable: &Observable) -> f64 {
        (self.raw() * observable.raw()).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(self.raw()).0
    }
}

/// Unitary operator, `U U^dagger = I` within [`STATE_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOp {
    data: ComplexMatrix,
}

impl UnitaryOp {
    pub fn new(data: ComplexMatrix) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::DimensionMismatch("unitary must be square".into()));
        }
        let product = data.inner() * data.inner().adjoint();
        let defect = max_abs_diff(&product, &DMatrix::identity(data.nrows(), data.nrows()));
        if defect > STATE_TOLERANCE {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { data })
    }

    pub(crate) fn from_raw(raw: DMatrix<C64>) -> Self {
        let op = Self {
            data: ComplexMatrix(raw),
        };
        debug_assert!(Self::new(op.data.clone()).is_ok());
        op
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_raw(DMatrix::identity(dim, dim))
    }

    /// `exp(-i t H)` for a Hermitian generator.
    pub fn evolution(generator: &Observable, t: f64) -> Self {
        Self::from_raw(hermitian_function(generator.raw(), |e| C64::from_polar(1.0, -t * e)))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.data
    }

    pub(crate) fn raw(&self) -> &DMatrix<C64> {
        self.data.inner()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
        }
    }

    /// `U rho U^dagger`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "unitary of dim {} applied to state of dim {}",
                self.dim(),
                rho.dim()
            )));
        }
        Ok(DensityMatrix::from_raw(conjugate(self.raw(), rho.raw())))
    }

    pub fn compose(&self, after: &UnitaryOp) -> Result<UnitaryOp> {
        if after.dim() != self.dim() {
            return Err(Error::DimensionMismatch("unitary composition".into()));
        }
        Ok(Self::from_raw(after.raw() * self.raw()))
    }
}

pub(crate) fn conjugate(u: &DMatrix<C64>, rho: &DMatrix<C64>) -> DMatrix<C64> {
    u * rho * u.adjoint()
}

/// Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    data: ComplexMatrix,
}

impl Observable {
    pub fn new(data: ComplexMatrix) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::DimensionMismatch("observable must be square".into()));
        }
        let defect = data.hermiticity_defect();
        if defect > STATE_TOLERANCE {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { data })
    }

    pub(crate) fn from_raw(raw: DMatrix<C64>) -> Self {
        Self {
            data: ComplexMatrix(hermitize(&raw)),
        }
    }

    pub fn pauli_x() -> Self {
        Self::from_raw(DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]))
    }

    pub fn pauli_z() -> Self {
        Self::from_raw(DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.data
    }

    pub(crate) fn raw(&self) -> &DMatrix<C64> {
        self.data.inner()
    }

    /// `<ket_a| O |ket_b>`.
    pub fn matrix_element(&self, bra: &[C64], ket: &[C64]) -> C64 {
        let m = self.raw();
        let mut acc = ZERO;
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                acc += bra[r].conj() * m[(r, c)] * ket[c];
            }
        }
        acc
    }

    pub fn variance(&self, rho: &DensityMatrix) -> f64 {
        let mean = rho.expectation(self);
        let square = (rho.raw() * self.raw() * self.raw()).trace().re;
        square - mean * mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert_eq!(
            ComplexMatrix::from_row_slice(1, 1, &[C64::new(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        );
        assert_eq!(ComplexMatrix::new(DMatrix::zeros(0, 3)), Err(Error::EmptyMatrix));
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = ComplexMatrix::from_real_diagonal(&[0.7, 0.7]);
        assert!(matches!(DensityMatrix::new(bad_trace), Err(Error::TraceNotUnity(_))));

        let negative = ComplexMatrix::from_real_diagonal(&[1.5, -0.5]);
        assert!(matches!(DensityMatrix::new(negative), Err(Error::NotPositive(_))));

        let skew = ComplexMatrix::from_row_slice(2, 2, &[c(0.5), c(0.3), c(-0.3), c(0.5)]).unwrap();
        assert!(matches!(DensityMatrix::new(skew), Err(Error::NotHermitian(_))));

        let rect = ComplexMatrix::from_row_slice(1, 2, &[c(1.0), c(0.0)]).unwrap();
        assert!(matches!(DensityMatrix::new(rect), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn unitary_validation() {
        let not_unitary = ComplexMatrix::from_real_diagonal(&[1.0, 2.0]);
        assert!(matches!(UnitaryOp::new(not_unitary), Err(Error::NotUnitary(_))));
        let x = Observable::pauli_x();
        assert!(UnitaryOp::new(x.matrix().clone()).is_ok());
    }

    #[test]
    fn evolution_of_pauli_x_is_rotation() {
        let theta = 0.37;
        let u = UnitaryOp::evolution(&Observable::pauli_x(), theta);
        let expected = ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                c(theta.cos()),
                C64::new(0.0, -theta.sin()),
                C64::new(0.0, -theta.sin()),
                c(theta.cos()),
            ],
        )
        .unwrap();
        assert!(u.matrix().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn variance_of_pauli_on_eigenstate_vanishes() {
        let up = DensityMatrix::pure(&[ONE, ZERO]).unwrap();
        assert!(Observable::pauli_z().variance(&up).abs() < 1e-15);
        assert!((Observable::pauli_x().variance(&up) - 1.0).abs() < 1e-15);
    }
}

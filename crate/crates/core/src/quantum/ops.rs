//! Composition, reduction and distance measures.
//!
//! Tensor products order subsystems left to right: in `tensor(a, b)` the
//! index of `a` varies slowest. Every multi-party state in this crate follows
//! that convention.

use nalgebra::DMatrix;

use super::matrix::{hermitian_eigen, hermitize, ComplexMatrix, DensityMatrix, Observable, UnitaryOp, C64, ZERO};
use crate::error::{Error, Result};

/// Eigenvalues below this are treated as zero before taking square roots.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Kronecker product within one operator kind.
pub trait TensorProduct: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

impl TensorProduct for ComplexMatrix {
    fn tensor(&self, other: &Self) -> Self {
        self.kron(other)
    }
}

impl TensorProduct for DensityMatrix {
    fn tensor(&self, other: &Self) -> Self {
        DensityMatrix::from_raw(self.raw().kronecker(other.raw()))
    }
}

impl TensorProduct for UnitaryOp {
    fn tensor(&self, other: &Self) -> Self {
        UnitaryOp::from_raw(self.raw().kronecker(other.raw()))
    }
}

impl TensorProduct for Observable {
    fn tensor(&self, other: &Self) -> Self {
        Observable::from_raw(self.raw().kronecker(other.raw()))
    }
}

pub fn tensor<T: TensorProduct>(a: &T, b: &T) -> T {
    a.tensor(b)
}

fn check_subsystems(total: usize, dims: &[usize], keep: &[usize]) -> Result<Vec<usize>> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidArgument("subsystem dimensions must be positive".into()));
    }
    let product: usize = dims.iter().product();
    if product != total {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {dims:?} multiply to {product}, state has dim {total}"
        )));
    }
    if keep.is_empty() {
        return Err(Error::InvalidArgument("keep set is empty".into()));
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() {
        return Err(Error::InvalidArgument(format!(
            "duplicate subsystem in keep set {keep:?}"
        )));
    }
    if let Some(&bad) = sorted.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidArgument(format!(
            "subsystem {bad} out of range for {} subsystems",
            dims.len()
        )));
    }
    Ok(sorted)
}

/// Partial trace of an arbitrary square operator; works for unnormalised
/// operators too.
pub(crate) fn partial_trace_raw(m: &DMatrix<C64>, dims: &[usize], keep: &[usize]) -> Result<DMatrix<C64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("partial trace of a non-square matrix".into()));
    }
    let keep = check_subsystems(m.nrows(), dims, keep)?;
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();

    // Row-major strides of the full index.
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let offsets = |subsystems: &[usize]| -> Vec<usize> {
        let count: usize = subsystems.iter().map(|&s| dims[s]).product();
        (0..count)
            .map(|mut flat| {
                let mut offset = 0;
                for &s in subsystems.iter().rev() {
                    offset += (flat % dims[s]) * strides[s];
                    flat /= dims[s];
                }
                offset
            })
            .collect()
    };
    let kept_offsets = offsets(&keep);
    let traced_offsets = if traced.is_empty() { vec![0] } else { offsets(&traced) };

    let n = kept_offsets.len();
    let mut out = DMatrix::from_element(n, n, ZERO);
    for (r, &row) in kept_offsets.iter().enumerate() {
        for (c, &col) in kept_offsets.iter().enumerate() {
            out[(r, c)] = traced_offsets.iter().map(|&t| m[(row + t, col + t)]).sum();
        }
    }
    Ok(out)
}

/// Reduced state on the subsystems listed in `keep` (kept in ascending order).
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_raw(partial_trace_raw(rho.raw(), dims, keep)?))
}

/// Square root of a positive semidefinite matrix with small eigenvalues
/// clamped to zero.
pub(crate) fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (values, vectors) = hermitian_eigen(m);
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let root = if v < EIGEN_CLAMP { 0.0 } else { v.sqrt() };
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= root);
    }
    scaled * vectors.adjoint()
}

/// `tr sqrt(sqrt(a) b sqrt(a))` for positive operators (not necessarily
/// normalised).
pub(crate) fn root_fidelity_raw(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let root = psd_sqrt(a);
    let inner = hermitize(&(&root * b * &root));
    let (values, _) = hermitian_eigen(&inner);
    values.into_iter().filter(|&v| v >= EIGEN_CLAMP).map(f64::sqrt).sum()
}

/// Uhlmann fidelity `[tr sqrt(sqrt(r1) r2 sqrt(r1))]^2`, in `[0, 1]`.
pub fn fidelity(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    if r1.dim() != r2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity between dims {} and {}",
            r1.dim(),
            r2.dim()
        )));
    }
    let root = root_fidelity_raw(r1.raw(), r2.raw());
    Ok((root * root).clamp(0.0, 1.0))
}

/// Squared Bures distance `2 (1 - sqrt F)`.
pub fn bures_distance_sq(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    let f = fidelity(r1, r2)?;
    Ok((2.0 * (1.0 - f.sqrt())).clamp(0.0, 2.0))
}

/// `tr(rho^2)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.raw().iter().map(|z| z.norm_sqr()).sum()
}

/// Trace distance `1/2 || r1 - r2 ||_1`.
pub fn trace_distance(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    if r1.dim() != r2.dim() {
        return Err(Error::DimensionMismatch("trace distance".into()));
    }
    let (values, _) = hermitian_eigen(&(r1.raw() - r2.raw()));
    Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
}

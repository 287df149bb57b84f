//! Dense linear algebra for finite-dimensional quantum states.

mod matrix;
mod ops;
mod thermal;

pub use matrix::{ComplexMatrix, DensityMatrix, Observable, UnitaryOp, C64, STATE_TOLERANCE};
pub use ops::{bures_distance_sq, fidelity, partial_trace, purity, tensor, trace_distance, TensorProduct, EIGEN_CLAMP};
pub use thermal::{orthogonal_complement, thermal_state, ThermalQubitSpec, H_OVER_KB_MK_PER_GHZ};

pub(crate) use matrix::{conjugate, hermitian_eigen, ONE, ZERO};
pub(crate) use ops::{partial_trace_raw, root_fidelity_raw};

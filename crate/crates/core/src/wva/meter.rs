//! Truncated harmonic-oscillator meter.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quantum::{ComplexMatrix, DensityMatrix, Observable, C64, ONE, ZERO};

/// Fock space cut off at `dim` levels. The coupling generator is
/// `B = i (a^dagger - a)` (unit variance on the vacuum) and the kick is read
/// from the conjugate quadrature `K = (a + a^dagger) / 2`, with `[K, B] = i`
/// so that `exp(-i l B)` displaces `<K>` by `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeterModel {
    dim: usize,
}

impl MeterModel {
    pub const DEFAULT_DIM: usize = 40;

    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "meter needs at least 2 levels, got {dim}"
            )));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn lowering(&self) -> DMatrix<C64> {
        let mut a = DMatrix::from_element(self.dim, self.dim, ZERO);
        for n in 1..self.dim {
            a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        a
    }

    pub fn annihilation(&self) -> ComplexMatrix {
        ComplexMatrix::new(self.lowering()).expect("finite entries")
    }

    pub fn generator(&self) -> Observable {
        let a = self.lowering();
        let b = (a.adjoint() - &a) * C64::new(0.0, 1.0);
        Observable::new(ComplexMatrix::new(b).expect("finite")).expect("Hermitian")
    }

    pub fn readout(&self) -> Observable {
        let a = self.lowering();
        let k = (a.adjoint() + &a) * C64::new(0.5, 0.0);
        Observable::new(ComplexMatrix::new(k).expect("finite")).expect("Hermitian")
    }

    pub fn vacuum(&self) -> DensityMatrix {
        let mut ket = vec![ZERO; self.dim];
        ket[0] = ONE;
        DensityMatrix::pure(&ket).expect("normalised")
    }
}

impl Default for MeterModel {
    fn default() -> Self {
        Self { dim: Self::DEFAULT_DIM }
    }
}

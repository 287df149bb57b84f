//! Numerical quantum Fisher information of a one-parameter state family.
//!
//! Two independent routes: the symmetric-logarithmic-derivative sum with a
//! central-difference derivative, and the curvature of the Bures distance
//! between neighbouring members, Richardson-extrapolated over the step.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quantum::{hermitian_eigen, root_fidelity_raw, DensityMatrix, C64};

/// Larger gaps between the two routes mean the step is misconfigured.
pub const MAX_QFI_GAP: f64 = 0.10;

const EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiEstimate {
    pub sld: f64,
    pub bures: f64,
    /// `|sld - bures| / sld`.
    pub relative_gap: f64,
}

/// QFI of a normalised family at `g` with step `eps`.
pub fn qfi_numeric<F>(family: F, g: f64, eps: f64) -> Result<QfiEstimate>
where
    F: Fn(f64) -> Result<DensityMatrix>,
{
    qfi_numeric_weighted(|x| family(x).map(|rho| (1.0, rho)), g, eps)
}

/// QFI of the subnormalised family `w(g) rho(g)`, given as `(w, rho)`. For a
/// post-selected state this counts the post-selection probability as part of
/// the information, as the amplification formulas do.
pub fn qfi_numeric_weighted<F>(family: F, g: f64, eps: f64) -> Result<QfiEstimate>
where
    F: Fn(f64) -> Result<(f64, DensityMatrix)>,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("QFI step must be positive, got {eps}")));
    }
    let at = |x: f64| -> Result<(f64, DensityMatrix)> {
        let (w, rho) = family(x)?;
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::VanishingPostselection(w));
        }
        Ok((w, rho))
    };
    let centre = at(g)?;
    let sld = sld_information(&centre, &at(g + eps)?, &at(g - eps)?, eps);

    let bures_at = |step: f64| -> Result<f64> {
        let (w2, rho2) = at(g + step)?;
        let root = root_fidelity_raw(centre.1.matrix().inner(), rho2.matrix().inner());
        let distance = centre.0 + w2 - 2.0 * (centre.0 * w2).sqrt() * root;
        Ok(4.0 * distance / (step * step))
    };
    let bures = 2.0 * bures_at(eps / 2.0)? - bures_at(eps)?;

    let relative_gap = (sld - bures).abs() / sld.abs().max(f64::MIN_POSITIVE);
    if relative_gap > MAX_QFI_GAP {
        return Err(Error::QfiDisagreement(100.0 * relative_gap));
    }
    Ok(QfiEstimate {
        sld,
        bures,
        relative_gap,
    })
}

fn weighted(state: &(f64, DensityMatrix)) -> DMatrix<C64> {
    state.1.matrix().inner().scale(state.0)
}

/// `2 sum_jk |<j| d omega |k>|^2 / (l_j + l_k)` over the eigenbasis of `omega`.
fn sld_information(
    centre: &(f64, DensityMatrix),
    plus: &(f64, DensityMatrix),
    minus: &(f64, DensityMatrix),
    eps: f64,
) -> f64 {
    let derivative = (weighted(plus) - weighted(minus)).unscale(2.0 * eps);
    let (values, vectors) = hermitian_eigen(&weighted(centre));
    let rotated = vectors.adjoint() * derivative * &vectors;
    let floor = EIGEN_FLOOR * centre.0;
    let mut total = 0.0;
    for j in 0..values.len() {
        for k in 0..values.len() {
            let denom = values[j] + values[k];
            if denom >= floor {
                total += rotated[(j, k)].norm_sqr() / denom;
            }
        }
    }
    2.0 * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{Observable, UnitaryOp, ONE, ZERO};

    fn rotated(g: f64) -> Result<DensityMatrix> {
        let u = UnitaryOp::evolution(&Observable::pauli_x(), g / 2.0);
        u.apply(&DensityMatrix::pure(&[ONE, ZERO])?)
    }

    #[test]
    fn pure_qubit_rotation_has_unit_information() {
        for g in [0.0, 0.3, 1.1] {
            let est = qfi_numeric(rotated, g, 1e-3).unwrap();
            assert!((est.sld - 1.0).abs() < 1e-5, "{est:?}");
            assert!((est.bures - 1.0).abs() < 1e-3, "{est:?}");
        }
    }

    #[test]
    fn mixed_family_shrinks_information() {
        // r-mixed rotation: QFI = r^2 for Bloch length r.
        let r = 0.6;
        let family = |g: f64| -> Result<DensityMatrix> {
            let pure = rotated(g)?;
            let mixed = pure.matrix().inner().scale(r) + DMatrix::<C64>::identity(2, 2).scale((1.0 - r) / 2.0);
            DensityMatrix::new(crate::quantum::ComplexMatrix::new(mixed)?)
        };
        let est = qfi_numeric(family, 0.4, 1e-3).unwrap();
        assert!((est.sld - r * r).abs() < 1e-5);
        assert!((est.bures - r * r).abs() < 1e-3);
    }

    #[test]
    fn weight_only_family_is_classical() {
        // w(g) = exp(-g) on a fixed state: information (w')^2 / w = w.
        let fixed = DensityMatrix::pure(&[ONE, ZERO]).unwrap();
        let est = qfi_numeric_weighted(|g| Ok(((-g).exp(), fixed.clone())), 0.5, 1e-3).unwrap();
        assert!((est.sld - (-0.5f64).exp()).abs() < 1e-6);
        assert!((est.bures - (-0.5f64).exp()).abs() < 1e-4);
    }

    #[test]
    fn bad_step_rejected() {
        assert!(qfi_numeric(rotated, 0.0, 0.0).is_err());
        // A step so coarse that the two routes part ways.
        assert!(matches!(qfi_numeric(rotated, 0.0, 3.0), Err(Error::QfiDisagreement(_))));
    }
}

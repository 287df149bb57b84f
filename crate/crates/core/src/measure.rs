//! Measurement channels built from a thermal pointer.
//!
//! A measurement correlates the system with a pointer through a unitary and
//! then reads the pointer out with the block projectors `Pi_i`. Two
//! correlation families are supported, both built from pointer permutations
//! `P_j` chosen per system outcome `j`:
//!
//! * non-invasive: `|j>|k> -> |j> P_j|k>`; the system keeps its statistics.
//! * unbiased: `|j>|k> -> |a>|(j, n)>` where `P_j|k> = |(a, n)>`; the
//!   pointer block records `j` exactly, so pointer statistics reproduce the
//!   system statistics.
//!
//! Pointer basis index `(a, n)` is flattened as `a * m + n`, with
//! `m = d_p / d_s`, and `Pi_a` projects onto block `a`. Each `P_j` maps the
//! `m` most populated pointer states into block `j`, which maximises the
//! faithfulness for every system state. Ties go to the lexicographically
//! smallest permutation.
//!
//! States are ordered system then pointer throughout this module.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::quantum::{
    conjugate, partial_trace_raw, ComplexMatrix, DensityMatrix, ThermalQubitSpec, UnitaryOp, C64, ONE, ZERO,
};

/// Smallest outcome probability accepted when an outcome is requested.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-15;

const POPULATION_TOLERANCE: f64 = 1e-12;
const TIE_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementScheme {
    Ideal,
    Unbiased,
    NonInvasive,
}

impl MeasurementScheme {
    pub const ALL: [MeasurementScheme; 3] = [Self::Ideal, Self::Unbiased, Self::NonInvasive];

    pub fn label(self) -> &'static str {
        match self {
            Self::Ideal => "ideal",
            Self::Unbiased => "ub",
            Self::NonInvasive => "ni",
        }
    }
}

impl fmt::Display for MeasurementScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MeasurementScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ideal" => Ok(Self::Ideal),
            "ub" | "unbiased" => Ok(Self::Unbiased),
            "ni" | "noninvasive" | "non-invasive" => Ok(Self::NonInvasive),
            other => Err(Error::InvalidArgument(format!(
                "unknown measurement scheme '{other}' (expected ideal, ub or ni)"
            ))),
        }
    }
}

/// How far a measurement is from ideal on a given input state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementAudit {
    pub faithfulness: f64,
    pub unbiased_deviation: f64,
    pub noninvasive_deviation: f64,
}

/// Pointer permutation (as `k -> P(k)`) that sends the `block_size` most
/// populated pointer states into `block`, lexicographically smallest among
/// the optimal ones.
pub(crate) fn faithful_permutation(populations: &[f64], block: usize, block_size: usize) -> Vec<usize> {
    let d = populations.len();
    let target = block * block_size..(block + 1) * block_size;

    let mut sorted = populations.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let best: f64 = sorted[..block_size].iter().sum();

    let mut assigned: Vec<Option<usize>> = vec![None; d];
    let mut used = vec![false; d];
    for k in 0..d {
        let mut chosen = None;
        for v in 0..d {
            if used[v] {
                continue;
            }
            assigned[k] = Some(v);
            let mut in_block_mass = 0.0;
            let mut in_block_count = 0;
            for (kk, slot) in assigned.iter().enumerate() {
                if let Some(slot) = slot {
                    if target.contains(slot) {
                        in_block_mass += populations[kk];
                        in_block_count += 1;
                    }
                }
            }
            let mut rest: Vec<f64> = (k + 1..d).map(|kk| populations[kk]).collect();
            rest.sort_by(|a, b| b.total_cmp(a));
            let free = block_size.saturating_sub(in_block_count);
            let reachable = in_block_count <= block_size
                && free <= rest.len()
                && in_block_mass + rest[..free].iter().sum::<f64>() >= best - TIE_TOLERANCE;
            if reachable {
                chosen = Some(v);
                break;
            }
        }
        let v = chosen.expect("an optimal completion always exists");
        assigned[k] = Some(v);
        used[v] = true;
    }
    assigned.into_iter().map(|v| v.expect("complete")).collect()
}

fn diagonal_populations(pointer_state: &DensityMatrix) -> Result<Vec<f64>> {
    let m = pointer_state.matrix();
    let mut off = 0.0f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if r != c {
                off = off.max(m.get(r, c).norm());
            }
        }
    }
    if off > POPULATION_TOLERANCE {
        return Err(Error::NonDiagonalPointer(off));
    }
    Ok(pointer_state.diagonal())
}

/// Correlation unitary in the measurement frame (system basis `|j>`,
/// pointer basis `|k>`), system first. The pointer state must be diagonal in
/// that frame.
pub fn build_correlation_unitary(
    scheme: MeasurementScheme,
    system_dim: usize,
    pointer_dim: usize,
    pointer_state: &DensityMatrix,
) -> Result<UnitaryOp> {
    if pointer_state.dim() != pointer_dim {
        return Err(Error::DimensionMismatch(format!(
            "pointer state has dim {}, expected {pointer_dim}",
            pointer_state.dim()
        )));
    }
    let populations = diagonal_populations(pointer_state)?;
    Ok(UnitaryOp::from_raw(permutation_unitary(
        scheme,
        system_dim,
        &populations,
    )?))
}

fn permutation_unitary(scheme: MeasurementScheme, system_dim: usize, populations: &[f64]) -> Result<DMatrix<C64>> {
    let pointer_dim = populations.len();
    if system_dim == 0 || pointer_dim == 0 || !pointer_dim.is_multiple_of(system_dim) {
        return Err(Error::PointerDimNotMultiple {
            system: system_dim,
            pointer: pointer_dim,
        });
    }
    let block_size = pointer_dim / system_dim;
    let n = system_dim * pointer_dim;
    let mut u = DMatrix::from_element(n, n, ZERO);
    for j in 0..system_dim {
        let perm = faithful_permutation(populations, j, block_size);
        for (k, &image) in perm.iter().enumerate() {
            let col = j * pointer_dim + k;
            let row = match scheme {
                MeasurementScheme::Ideal | MeasurementScheme::NonInvasive => j * pointer_dim + image,
                MeasurementScheme::Unbiased => {
                    let (a, slot) = (image / block_size, image % block_size);
                    a * pointer_dim + j * block_size + slot
                }
            };
            u[(row, col)] = ONE;
        }
    }
    Ok(u)
}

/// A complete measurement: bases, pointer preparation, correlation unitary
/// and the equivalent Kraus decomposition of each outcome.
#[derive(Debug, Clone)]
pub struct MeasurementSetup {
    scheme: MeasurementScheme,
    system_dim: usize,
    pointer_dim: usize,
    system_basis: ComplexMatrix,
    pointer_basis: ComplexMatrix,
    pointer_populations: Vec<f64>,
    pointer_state: DensityMatrix,
    correlation: UnitaryOp,
    pointer_projectors: Vec<DMatrix<C64>>,
    kraus: Vec<Vec<DMatrix<C64>>>,
}

impl MeasurementSetup {
    /// `system_basis` and `pointer_basis` hold the measurement bases as
    /// columns; `pointer_populations` is the pointer state in its basis.
    /// The ideal scheme ignores the populations and uses a pure pointer.
    pub fn new(
        scheme: MeasurementScheme,
        system_basis: ComplexMatrix,
        pointer_basis: ComplexMatrix,
        pointer_populations: &[f64],
    ) -> Result<Self> {
        let system_dim = system_basis.nrows();
        let pointer_dim = pointer_basis.nrows();
        UnitaryOp::new(system_basis.clone())?;
        UnitaryOp::new(pointer_basis.clone())?;
        if pointer_populations.len() != pointer_dim {
            return Err(Error::DimensionMismatch(format!(
                "{} pointer populations for a {pointer_dim}-dimensional pointer",
                pointer_populations.len()
            )));
        }
        if pointer_populations.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || (pointer_populations.iter().sum::<f64>() - 1.0).abs() > POPULATION_TOLERANCE
        {
            return Err(Error::InvalidArgument(format!(
                "pointer populations {pointer_populations:?} are not a probability vector"
            )));
        }
        if !pointer_dim.is_multiple_of(system_dim) {
            return Err(Error::PointerDimNotMultiple {
                system: system_dim,
                pointer: pointer_dim,
            });
        }

        let populations = match scheme {
            MeasurementScheme::Ideal => {
                let mut pure = vec![0.0; pointer_dim];
                pure[0] = 1.0;
                pure
            }
            _ => pointer_populations.to_vec(),
        };
        let block_size = pointer_dim / system_dim;

        let frame_unitary = permutation_unitary(scheme, system_dim, &populations)?;
        let frame = system_basis.inner().kronecker(pointer_basis.inner());
        let correlation = UnitaryOp::from_raw(conjugate(&frame, &frame_unitary));

        let pointer_state = DensityMatrix::from_raw(conjugate(
            pointer_basis.inner(),
            ComplexMatrix::from_real_diagonal(&populations).inner(),
        ));

        let pointer_projectors = (0..system_dim)
            .map(|a| {
                let block: Vec<f64> = (0..pointer_dim)
                    .map(|k| if k / block_size == a { 1.0 } else { 0.0 })
                    .collect();
                conjugate(pointer_basis.inner(), ComplexMatrix::from_real_diagonal(&block).inner())
            })
            .collect();

        // Kraus operators sqrt(p_k) <n| U |k>, computed in the measurement
        // frame and rotated back with the system basis.
        let vs = system_basis.inner();
        let kraus = (0..system_dim)
            .map(|outcome| {
                let mut ops = Vec::new();
                for (k, &p) in populations.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    for n in outcome * block_size..(outcome + 1) * block_size {
                        let local = DMatrix::from_fn(system_dim, system_dim, |a, j| {
                            frame_unitary[(a * pointer_dim + n, j * pointer_dim + k)]
                        });
                        if local.iter().all(|z| *z == ZERO) {
                            continue;
                        }
                        ops.push(vs * local.scale(p.sqrt()) * vs.adjoint());
                    }
                }
                ops
            })
            .collect();

        Ok(Self {
            scheme,
            system_dim,
            pointer_dim,
            system_basis,
            pointer_basis,
            pointer_populations: populations,
            pointer_state,
            correlation,
            pointer_projectors,
            kraus,
        })
    }

    /// Qubit pointer prepared thermally in the basis of `pointer`.
    pub fn with_thermal_pointer(
        scheme: MeasurementScheme,
        system_basis: ComplexMatrix,
        pointer: &ThermalQubitSpec,
    ) -> Result<Self> {
        let (p, p_bar) = pointer.populations();
        Self::new(scheme, system_basis, pointer.basis(), &[p, p_bar])
    }

    pub fn scheme(&self) -> MeasurementScheme {
        self.scheme
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn pointer_dim(&self) -> usize {
        self.pointer_dim
    }

    pub fn outcome_count(&self) -> usize {
        self.system_dim
    }

    /// Pointer populations actually used (pure for the ideal scheme).
    pub fn pointer_populations(&self) -> &[f64] {
        &self.pointer_populations
    }

    pub fn pointer_state(&self) -> &DensityMatrix {
        &self.pointer_state
    }

    /// Correlation unitary on system (x) pointer.
    pub fn correlation_unitary(&self) -> &UnitaryOp {
        &self.correlation
    }

    pub fn system_basis(&self) -> &ComplexMatrix {
        &self.system_basis
    }

    pub fn pointer_basis(&self) -> &ComplexMatrix {
        &self.pointer_basis
    }

    pub fn pointer_projector(&self, outcome: usize) -> ComplexMatrix {
        ComplexMatrix::new(self.pointer_projectors[outcome].clone()).expect("finite projector")
    }

    fn system_projector(&self, outcome: usize) -> DMatrix<C64> {
        ComplexMatrix::projector(&self.system_basis.column(outcome)).into_inner()
    }

    fn check_system(&self, rho_s: &DensityMatrix) -> Result<()> {
        if rho_s.dim() != self.system_dim {
            return Err(Error::DimensionMismatch(format!(
                "system state has dim {}, measurement expects {}",
                rho_s.dim(),
                self.system_dim
            )));
        }
        Ok(())
    }

    fn check_joint(&self, rho_sp: &DensityMatrix) -> Result<()> {
        if rho_sp.dim() != self.system_dim * self.pointer_dim {
            return Err(Error::DimensionMismatch(format!(
                "joint state has dim {}, expected {}",
                rho_sp.dim(),
                self.system_dim * self.pointer_dim
            )));
        }
        Ok(())
    }

    /// Unnormalised conditional system state for `outcome`.
    pub(crate) fn branch(&self, rho_s: &DMatrix<C64>, outcome: usize) -> DMatrix<C64> {
        let mut acc = DMatrix::from_element(self.system_dim, self.system_dim, ZERO);
        for k in &self.kraus[outcome] {
            acc += conjugate(k, rho_s);
        }
        acc
    }
}

/// `U (rho_s (x) rho_p) U^dagger`.
pub fn correlate(setup: &MeasurementSetup, rho_s: &DensityMatrix) -> Result<DensityMatrix> {
    setup.check_system(rho_s)?;
    let product = rho_s.matrix().inner().kronecker(setup.pointer_state.matrix().inner());
    Ok(DensityMatrix::from_raw(conjugate(
        setup.correlation.matrix().inner(),
        &product,
    )))
}

fn embed_pointer(setup: &MeasurementSetup, pointer_op: &DMatrix<C64>) -> DMatrix<C64> {
    DMatrix::<C64>::identity(setup.system_dim, setup.system_dim).kronecker(pointer_op)
}

fn embed_system(setup: &MeasurementSetup, system_op: &DMatrix<C64>) -> DMatrix<C64> {
    system_op.kronecker(&DMatrix::<C64>::identity(setup.pointer_dim, setup.pointer_dim))
}

fn expectation(op: &DMatrix<C64>, rho: &DensityMatrix) -> f64 {
    (op * rho.matrix().inner()).trace().re
}

/// `C = sum_i Tr[(|i><i| (x) Pi_i) rho_SP]`.
pub fn faithfulness(setup: &MeasurementSetup, rho_sp: &DensityMatrix) -> Result<f64> {
    setup.check_joint(rho_sp)?;
    Ok((0..setup.system_dim)
        .map(|i| {
            let op = setup.system_projector(i).kronecker(&setup.pointer_projectors[i]);
            expectation(&op, rho_sp)
        })
        .sum())
}

/// Pointer readout distribution `Tr[(I (x) Pi_i) rho_SP]`.
pub fn pointer_statistics(setup: &MeasurementSetup, rho_sp: &DensityMatrix) -> Result<Vec<f64>> {
    setup.check_joint(rho_sp)?;
    Ok((0..setup.system_dim)
        .map(|i| expectation(&embed_pointer(setup, &setup.pointer_projectors[i]), rho_sp))
        .collect())
}

/// Post-measurement system statistics `Tr[(|i><i| (x) I) rho_SP]`.
pub fn system_statistics(setup: &MeasurementSetup, rho_sp: &DensityMatrix) -> Result<Vec<f64>> {
    setup.check_joint(rho_sp)?;
    Ok((0..setup.system_dim)
        .map(|i| expectation(&embed_system(setup, &setup.system_projector(i)), rho_sp))
        .collect())
}

/// Faithfulness plus the worst-case violations of unbiasedness and
/// non-invasiveness on `rho_s`.
pub fn audit(setup: &MeasurementSetup, rho_s: &DensityMatrix) -> Result<MeasurementAudit> {
    let joint = correlate(setup, rho_s)?;
    let before: Vec<f64> = (0..setup.system_dim)
        .map(|i| rho_s.population(&setup.system_basis.column(i)))
        .collect();
    let max_dev = |after: Vec<f64>| {
        after
            .iter()
            .zip(&before)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    Ok(MeasurementAudit {
        faithfulness: faithfulness(setup, &joint)?,
        unbiased_deviation: max_dev(pointer_statistics(setup, &joint)?),
        noninvasive_deviation: max_dev(system_statistics(setup, &joint)?),
    })
}

/// Result of reading the pointer once.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectiveOutcome {
    pub outcome: usize,
    pub posterior: DensityMatrix,
    pub probability: f64,
}

/// Conditional system state obtained the long way: project the joint state
/// on `Pi_outcome` and trace out the pointer. Returns the probability and the
/// normalised state.
pub fn conditional_from_joint(
    setup: &MeasurementSetup,
    rho_sp: &DensityMatrix,
    outcome: usize,
) -> Result<(f64, DensityMatrix)> {
    setup.check_joint(rho_sp)?;
    check_outcome(setup, outcome)?;
    let projector = embed_pointer(setup, &setup.pointer_projectors[outcome]);
    let projected = conjugate(&projector, rho_sp.matrix().inner());
    let reduced = partial_trace_raw(&projected, &[setup.system_dim, setup.pointer_dim], &[0])?;
    let probability = reduced.trace().re.max(0.0);
    if probability < MIN_OUTCOME_PROBABILITY {
        return Err(Error::ImprobableOutcome { outcome, probability });
    }
    Ok((probability, DensityMatrix::from_raw(reduced.unscale(probability))))
}

fn check_outcome(setup: &MeasurementSetup, outcome: usize) -> Result<()> {
    if outcome >= setup.system_dim {
        return Err(Error::InvalidArgument(format!(
            "outcome {outcome} out of range for {} outcomes",
            setup.system_dim
        )));
    }
    Ok(())
}

/// Outcome distribution of the pointer readout.
pub fn outcome_probabilities(setup: &MeasurementSetup, rho_s: &DensityMatrix) -> Result<Vec<f64>> {
    setup.check_system(rho_s)?;
    Ok((0..setup.system_dim)
        .map(|i| setup.branch(rho_s.matrix().inner(), i).trace().re.max(0.0))
        .collect())
}

/// Posterior for a requested outcome.
pub fn measure_outcome(setup: &MeasurementSetup, rho_s: &DensityMatrix, outcome: usize) -> Result<SelectiveOutcome> {
    setup.check_system(rho_s)?;
    check_outcome(setup, outcome)?;
    let branch = setup.branch(rho_s.matrix().inner(), outcome);
    let probability = branch.trace().re.max(0.0);
    if probability < MIN_OUTCOME_PROBABILITY {
        return Err(Error::ImprobableOutcome { outcome, probability });
    }
    Ok(SelectiveOutcome {
        outcome,
        posterior: DensityMatrix::from_raw(branch.unscale(probability)),
        probability,
    })
}

/// Samples a pointer outcome and returns the conditional system state.
pub fn measure_selective<R: Rng + ?Sized>(
    setup: &MeasurementSetup,
    rho_s: &DensityMatrix,
    rng: &mut R,
) -> Result<SelectiveOutcome> {
    setup.check_system(rho_s)?;
    let branches: Vec<DMatrix<C64>> = (0..setup.system_dim)
        .map(|i| setup.branch(rho_s.matrix().inner(), i))
        .collect();
    let probabilities: Vec<f64> = branches.iter().map(|b| b.trace().re.max(0.0)).collect();
    let total: f64 = probabilities.iter().sum();
    let draw = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    let mut outcome = None;
    for (i, &p) in probabilities.iter().enumerate() {
        cumulative += p;
        if p >= MIN_OUTCOME_PROBABILITY && draw < cumulative {
            outcome = Some(i);
            break;
        }
    }
    // Rounding at the top of the cumulative sum: fall back to the most likely outcome.
    let outcome = outcome.unwrap_or_else(|| {
        probabilities
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("at least one outcome")
    });
    let probability = probabilities[outcome];
    let posterior = DensityMatrix::from_raw(branches[outcome].unscale(probability));
    Ok(SelectiveOutcome {
        outcome,
        posterior,
        probability,
    })
}

/// Outcome distribution and the outcome-averaged post-measurement state.
#[derive(Debug, Clone, PartialEq)]
pub struct NonselectiveOutcome {
    pub probabilities: Vec<f64>,
    pub posterior: DensityMatrix,
}

pub fn measure_nonselective(setup: &MeasurementSetup, rho_s: &DensityMatrix) -> Result<NonselectiveOutcome> {
    setup.check_system(rho_s)?;
    let mut total = DMatrix::from_element(setup.system_dim, setup.system_dim, ZERO);
    let mut probabilities = Vec::with_capacity(setup.system_dim);
    for i in 0..setup.system_dim {
        let branch = setup.branch(rho_s.matrix().inner(), i);
        probabilities.push(branch.trace().re.max(0.0));
        total += branch;
    }
    Ok(NonselectiveOutcome {
        probabilities,
        posterior: DensityMatrix::from_raw(total),
    })
}

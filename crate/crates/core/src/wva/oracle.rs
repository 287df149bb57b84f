//! Full pointer (x) system (x) meter simulation of the post-selected meter.

use nalgebra::DMatrix;

use super::{weak_value_pure, WvaConfig};
use crate::error::{Error, Result};
use crate::measure::MeasurementSetup;
use crate::quantum::{
    conjugate, partial_trace_raw, tensor, thermal_state, ComplexMatrix, DensityMatrix, UnitaryOp, C64,
};

/// Largest population tolerated in the top two meter levels.
pub const TAIL_LIMIT: f64 = 1e-10;

const MIN_ACCEPTANCE: f64 = 1e-15;

/// One incoherent component of the input: system eigenvector `system`
/// (0 = `psi_i`, 1 = `psi_i'`) with pointer level `pointer`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRecord {
    pub system: usize,
    pub pointer: usize,
    /// Joint input weight times the probability of reading the
    /// post-selection outcome, at zero coupling.
    pub weight: f64,
    /// Mean meter displacement of this branch divided by `g`.
    pub shift: f64,
    pub amplified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    /// Normalised post-selected meter state.
    pub meter: DensityMatrix,
    /// `<K>` of `meter` divided by `g`.
    pub shift: f64,
    /// Total weight of the branches carrying an amplified kick
    /// (`|shift| > |A_w| / 2`).
    pub p_m_empirical: f64,
    /// Probability of the post-selection outcome at coupling `g`.
    pub acceptance_probability: f64,
    /// `|Tr rho_psm - 1|` after the joint evolution.
    pub trace_defect: f64,
    pub branches: Vec<BranchRecord>,
}

struct Pipeline {
    setup: MeasurementSetup,
    coupling: DMatrix<C64>,
    correlation: DMatrix<C64>,
    postselect: DMatrix<C64>,
    meter_dim: usize,
}

/// Reorders an operator on `a (x) b` to act on `b (x) a`.
fn swap_order(u: &DMatrix<C64>, dim_a: usize, dim_b: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim_a * dim_b, dim_a * dim_b, |r, c| {
        let (rb, ra) = (r / dim_a, r % dim_a);
        let (cb, ca) = (c / dim_a, c % dim_a);
        u[(ra * dim_b + rb, ca * dim_b + cb)]
    })
}

impl Pipeline {
    fn new(cfg: &WvaConfig, g: f64) -> Result<Self> {
        let system_basis = ComplexMatrix::from_columns(&[cfg.psi_f.clone(), cfg.psi_f_perp().to_vec()])?;
        let setup = MeasurementSetup::with_thermal_pointer(cfg.scheme, system_basis, &cfg.pointer_spec()?)?;
        let coupling = UnitaryOp::evolution(&tensor(&cfg.a, &cfg.b), g);
        let d_sm = 2 * cfg.meter_dim;
        let pointer_first = swap_order(setup.correlation_unitary().matrix().inner(), 2, 2);
        let correlation = pointer_first.kronecker(&DMatrix::<C64>::identity(cfg.meter_dim, cfg.meter_dim));
        let postselect = setup
            .pointer_projector(0)
            .inner()
            .kronecker(&DMatrix::<C64>::identity(d_sm, d_sm));
        Ok(Self {
            setup,
            coupling: coupling.matrix().inner().clone(),
            correlation,
            postselect,
            meter_dim: cfg.meter_dim,
        })
    }

    /// Unnormalised post-selected meter and the trace of the joint state.
    fn run(&self, rho_p: &DMatrix<C64>, rho_s: &DMatrix<C64>, rho_m: &DMatrix<C64>) -> Result<(DMatrix<C64>, f64)> {
        let rho_sm = conjugate(&self.coupling, &rho_s.kronecker(rho_m));
        let joint = conjugate(&self.correlation, &rho_p.kronecker(&rho_sm));
        let total = joint.trace().re;
        let selected = &self.postselect * joint * &self.postselect;
        let meter = partial_trace_raw(&selected, &[2, 2, self.meter_dim], &[2])?;
        Ok((meter, total))
    }
}

fn tail_population(meter: &DensityMatrix) -> f64 {
    let diag = meter.diagonal();
    diag[diag.len().saturating_sub(2)..].iter().sum()
}

/// Post-selected meter at coupling `g` as `(acceptance probability,
/// normalised state)`.
pub fn postselected_meter(cfg: &WvaConfig, g: f64) -> Result<(f64, DensityMatrix)> {
    let pipeline = Pipeline::new(cfg, g)?;
    let rho_s = thermal_state(&cfg.system_spec()?);
    let (meter, _) = pipeline.run(
        pipeline.setup.pointer_state().matrix().inner(),
        rho_s.matrix().inner(),
        cfg.meter_initial.matrix().inner(),
    )?;
    normalise(meter)
}

fn normalise(meter: DMatrix<C64>) -> Result<(f64, DensityMatrix)> {
    let weight = meter.trace().re;
    if !(weight >= MIN_ACCEPTANCE) {
        return Err(Error::VanishingPostselection(weight.max(0.0)));
    }
    let state = DensityMatrix::new(ComplexMatrix::new(meter.unscale(weight))?)?;
    Ok((weight, state))
}

fn ket_projector(ket: &[C64]) -> DMatrix<C64> {
    ComplexMatrix::projector(ket).into_inner()
}

/// Runs the joint evolution and post-selection exactly and decomposes the
/// result into branches.
pub fn oracle_simulate(cfg: &WvaConfig) -> Result<OracleOutcome> {
    cfg.validate()?;
    if cfg.g == 0.0 {
        return Err(Error::InvalidArgument("oracle kick is undefined at g = 0".into()));
    }
    let pipeline = Pipeline::new(cfg, cfg.g)?;
    let readout = cfg.readout.matrix().inner();
    let rho_m = cfg.meter_initial.matrix().inner();
    let system_spec = cfg.system_spec()?;
    let rho_s = thermal_state(&system_spec);

    let (meter_raw, total) = pipeline.run(
        pipeline.setup.pointer_state().matrix().inner(),
        rho_s.matrix().inner(),
        rho_m,
    )?;
    let (acceptance_probability, meter) = normalise(meter_raw)?;
    let tail = tail_population(&meter);
    if tail > TAIL_LIMIT {
        return Err(Error::Truncation(tail));
    }
    let shift = (readout * meter.matrix().inner()).trace().re / cfg.g;

    // Branch weights come from the measurement alone; each branch kick
    // comes from its own coupled run.
    let a_w = weak_value_pure(&cfg.psi_i, &cfg.a, &cfg.psi_f)?.norm();
    let (q, q_bar) = system_spec.populations();
    let system_kets = [system_spec.ground(), system_spec.excited()];
    let pointer_spec = cfg.pointer_spec()?;
    let pointer_kets = [pointer_spec.ground(), pointer_spec.excited()];
    let pointer_pops = pipeline.setup.pointer_populations().to_vec();
    let readout_zero = pipeline.setup.pointer_projector(0).into_inner();
    let postselect_sp = DMatrix::<C64>::identity(2, 2).kronecker(&readout_zero);
    let correlation_sp = pipeline.setup.correlation_unitary().matrix().inner();

    let mut branches = Vec::new();
    for (s, (&q_s, ket_s)) in [q, q_bar].iter().zip(&system_kets).enumerate() {
        for (k, (&p_k, ket_k)) in pointer_pops.iter().zip(&pointer_kets).enumerate() {
            if q_s * p_k == 0.0 {
                continue;
            }
            let (proj_s, proj_k) = (ket_projector(ket_s), ket_projector(ket_k));
            let joint = conjugate(correlation_sp, &proj_s.kronecker(&proj_k));
            let read = (&postselect_sp * joint).trace().re.max(0.0);
            let weight = q_s * p_k * read;
            if weight == 0.0 {
                continue;
            }
            let (branch_meter, _) = pipeline.run(&proj_k, &proj_s, rho_m)?;
            let branch_shift = match normalise(branch_meter) {
                Ok((_, state)) => (readout * state.matrix().inner()).trace().re / cfg.g,
                Err(_) => continue,
            };
            branches.push(BranchRecord {
                system: s,
                pointer: k,
                weight,
                shift: branch_shift,
                amplified: branch_shift.abs() > a_w / 2.0,
            });
        }
    }
    let p_m_empirical = branches.iter().filter(|b| b.amplified).map(|b| b.weight).sum();

    Ok(OracleOutcome {
        meter,
        shift,
        p_m_empirical,
        acceptance_probability,
        trace_defect: (total - 1.0).abs(),
        branches,
    })
}

//! Weak-value amplification with a thermal system and a thermal pointer.
//!
//! The system starts in `q |psi_i><psi_i| + q_bar |psi_i'><psi_i'|`, couples
//! weakly to a meter through `exp(-i g A (x) B)`, and is post-selected on
//! `psi_f` by a thermal pointer measurement. Only the `psi_i` component
//! produces the amplified kick `g A_w`; the thermal component and, for the
//! non-invasive scheme, pointer errors dilute it. [`closed_form_report`]
//! evaluates the first-order formulas and [`oracle_simulate`] runs the full
//! pointer (x) system (x) meter evolution.

mod meter;
mod oracle;
mod qfi;

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::MeasurementScheme;
use crate::quantum::{orthogonal_complement, DensityMatrix, Observable, ThermalQubitSpec, C64, STATE_TOLERANCE};

pub use meter::MeterModel;
pub use oracle::{oracle_simulate, postselected_meter, BranchRecord, OracleOutcome, TAIL_LIMIT};
pub use qfi::{qfi_numeric, qfi_numeric_weighted, QfiEstimate};

/// Largest `|g A_w|` accepted without `allow_strong_coupling`.
pub const MAX_WEAK_COUPLING: f64 = 0.1;

const MIN_POSTSELECTION: f64 = 1e-15;

/// One weak-value amplification experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct WvaConfig {
    pub psi_i: Vec<C64>,
    pub psi_f: Vec<C64>,
    pub a: Observable,
    pub g: f64,
    pub meter_dim: usize,
    pub b: Observable,
    /// Quadrature conjugate to `b`, used to read the kick.
    pub readout: Observable,
    pub meter_initial: DensityMatrix,
    pub t_s_mk: f64,
    pub t_p_mk: f64,
    pub freq_s_ghz: f64,
    pub freq_p_ghz: f64,
    pub scheme: MeasurementScheme,
    pub allow_strong_coupling: bool,
}

impl WvaConfig {
    /// `psi_i = |down>`, `A = sigma_x`, `psi_f = cos(theta)|up> + sin(theta)|down>`,
    /// so `A_w = cot(theta)`. Index 0 is `|down>`. Vacuum meter, 5 GHz qubits.
    pub fn aav(theta: f64, g: f64, scheme: MeasurementScheme, t_s_mk: f64, t_p_mk: f64) -> Self {
        let meter = MeterModel::default();
        Self {
            psi_i: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            psi_f: vec![C64::new(theta.sin(), 0.0), C64::new(theta.cos(), 0.0)],
            a: Observable::pauli_x(),
            g,
            meter_dim: meter.dim(),
            b: meter.generator(),
            readout: meter.readout(),
            meter_initial: meter.vacuum(),
            t_s_mk,
            t_p_mk,
            freq_s_ghz: 5.0,
            freq_p_ghz: 5.0,
            scheme,
            allow_strong_coupling: false,
        }
    }

    /// Replaces the meter with a vacuum oscillator of `dim` levels.
    pub fn with_meter_dim(mut self, dim: usize) -> Result<Self> {
        let meter = MeterModel::new(dim)?;
        self.meter_dim = dim;
        self.b = meter.generator();
        self.readout = meter.readout();
        self.meter_initial = meter.vacuum();
        Ok(self)
    }

    pub fn psi_i_perp(&self) -> [C64; 2] {
        orthogonal_complement(qubit(&self.psi_i))
    }

    pub fn psi_f_perp(&self) -> [C64; 2] {
        orthogonal_complement(qubit(&self.psi_f))
    }

    /// Thermal system with its energy on `psi_i'`.
    pub fn system_spec(&self) -> Result<ThermalQubitSpec> {
        ThermalQubitSpec::with_ground(self.freq_s_ghz, self.t_s_mk, qubit(&self.psi_i))
    }

    /// Thermal pointer prepared in the post-selection basis.
    pub fn pointer_spec(&self) -> Result<ThermalQubitSpec> {
        ThermalQubitSpec::with_ground(self.freq_p_ghz, self.t_p_mk, qubit(&self.psi_f))
    }

    pub fn meter_variance(&self) -> f64 {
        self.b.variance(&self.meter_initial)
    }

    /// Checks every invariant and returns `P_s`.
    pub fn validate(&self) -> Result<f64> {
        if self.psi_i.len() != 2 || self.psi_f.len() != 2 || self.a.dim() != 2 {
            return Err(Error::DimensionMismatch(
                "thermal weak-value model needs a qubit system".into(),
            ));
        }
        for (name, ket) in [("psi_i", &self.psi_i), ("psi_f", &self.psi_f)] {
            let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
            if (norm - 1.0).abs() > STATE_TOLERANCE {
                return Err(Error::InvalidArgument(format!("{name} has norm^2 {norm}")));
            }
        }
        if self.b.dim() != self.meter_dim
            || self.meter_initial.dim() != self.meter_dim
            || self.readout.dim() != self.meter_dim
        {
            return Err(Error::DimensionMismatch(format!(
                "meter operators do not match meter_dim {}",
                self.meter_dim
            )));
        }
        if !self.g.is_finite() {
            return Err(Error::InvalidArgument("coupling must be finite".into()));
        }
        self.system_spec()?;
        self.pointer_spec()?;
        let mean_b = self.meter_initial.expectation(&self.b);
        if mean_b.abs() > STATE_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "meter generator must have zero mean, got {mean_b:.3e}"
            )));
        }
        let p_s = overlap(&self.psi_f, &self.psi_i).norm_sqr();
        if p_s < MIN_POSTSELECTION {
            return Err(Error::VanishingPostselection(p_s));
        }
        let a_w = weak_value_pure(&self.psi_i, &self.a, &self.psi_f)?;
        let kick = (self.g * a_w).norm();
        if kick > MAX_WEAK_COUPLING && !self.allow_strong_coupling {
            return Err(Error::CouplingOutOfRange(kick));
        }
        let bound = kick * kick * self.meter_variance();
        if bound >= 1.0 {
            return Err(Error::ValidityBound(bound));
        }
        Ok(p_s)
    }
}

fn qubit(ket: &[C64]) -> [C64; 2] {
    [ket[0], ket[1]]
}

fn overlap(bra: &[C64], ket: &[C64]) -> C64 {
    bra.iter().zip(ket).map(|(b, k)| b.conj() * k).sum()
}

/// `<psi_f| A rho |psi_f> / <psi_f| rho |psi_f>`.
pub fn weak_value(rho: &DensityMatrix, a: &Observable, psi_f: &[C64]) -> Result<C64> {
    if rho.dim() != a.dim() || psi_f.len() != a.dim() {
        return Err(Error::DimensionMismatch("weak value operands".into()));
    }
    let m = rho.matrix().inner();
    let op = a.matrix().inner() * m;
    let bra = nalgebra::DVector::from_iterator(psi_f.len(), psi_f.iter().copied());
    let numerator = (bra.adjoint() * &op * &bra)[(0, 0)];
    let denominator = (bra.adjoint() * m * &bra)[(0, 0)].re;
    if denominator < MIN_POSTSELECTION {
        return Err(Error::VanishingPostselection(denominator));
    }
    Ok(numerator / denominator)
}

/// `<psi_f| A |psi_i> / <psi_f|psi_i>`.
pub fn weak_value_pure(psi_i: &[C64], a: &Observable, psi_f: &[C64]) -> Result<C64> {
    if psi_i.len() != a.dim() || psi_f.len() != a.dim() {
        return Err(Error::DimensionMismatch("weak value operands".into()));
    }
    let amplitude = overlap(psi_f, psi_i);
    if amplitude.norm_sqr() < MIN_POSTSELECTION {
        return Err(Error::VanishingPostselection(amplitude.norm_sqr()));
    }
    Ok(a.matrix_element(psi_f, psi_i) / amplitude)
}

/// Weak value for the orthogonal post-selection `psi_f'` (the
/// non-amplified branch).
pub fn weak_value_perp(rho: &DensityMatrix, a: &Observable, psi_f_perp: &[C64]) -> Result<C64> {
    weak_value(rho, a, psi_f_perp)
}

/// Closed-form quantities for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct WvaReport {
    pub a_w: C64,
    pub a_w_perp: C64,
    pub a_w_true: C64,
    pub delta_m: f64,
    pub p_m: f64,
    pub p_s: f64,
    pub i_ps: f64,
    pub i_th: f64,
    pub oracle_shift: Option<f64>,
}

/// `(delta_M, P_M)` for a scheme given populations and `P_s`.
pub fn degradation(scheme: MeasurementScheme, q: (f64, f64), p: (f64, f64), p_s: f64) -> (f64, f64) {
    let (q, q_bar) = q;
    let p_s_bar = 1.0 - p_s;
    match scheme {
        MeasurementScheme::Ideal | MeasurementScheme::Unbiased => (q_bar * p_s_bar / (q * p_s), q * p_s),
        MeasurementScheme::NonInvasive => {
            let (p, p_bar) = p;
            let wrong = (p * q_bar + p_bar * q) * p_s_bar;
            let right = (p * q + p_bar * q_bar) * p_s;
            (wrong / right, right)
        }
    }
}

pub fn closed_form_report(cfg: &WvaConfig) -> Result<WvaReport> {
    let p_s = cfg.validate()?;
    let a_w = weak_value_pure(&cfg.psi_i, &cfg.a, &cfg.psi_f)?;
    let a_w_perp = weak_value_pure(&cfg.psi_i, &cfg.a, &cfg.psi_f_perp())?;
    let q = cfg.system_spec()?.populations();
    let p = cfg.pointer_spec()?.populations();
    let (delta_m, p_m) = degradation(cfg.scheme, q, p, p_s);
    let a_w_true = a_w / (1.0 + delta_m);
    let var_b = cfg.meter_variance();
    let true_bound = (cfg.g * a_w_true).norm_sqr() * var_b;
    if true_bound >= 1.0 {
        return Err(Error::ValidityBound(true_bound));
    }
    let i_ps = 4.0 * p_s * a_w.norm_sqr() * (1.0 - (cfg.g * a_w).norm_sqr() * var_b);
    let i_th = 4.0 * p_m * a_w_true.norm_sqr() * (1.0 - true_bound);
    Ok(WvaReport {
        a_w,
        a_w_perp,
        a_w_true,
        delta_m,
        p_m,
        p_s,
        i_ps,
        i_th,
        oracle_shift: None,
    })
}

/// Closed form plus, optionally, the oracle kick.
pub fn evaluate(cfg: &WvaConfig, with_oracle: bool) -> Result<WvaReport> {
    let mut report = closed_form_report(cfg)?;
    if with_oracle {
        report.oracle_shift = Some(oracle_simulate(cfg)?.shift);
    }
    Ok(report)
}

/// System temperature at which the unbiased true amplification drops to
/// `target` (`A_w / (1 + delta) = target`), for a real weak value. `None`
/// when no positive temperature reaches it.
pub fn unbiased_threshold_mk(a_w: f64, p_s: f64, freq_s_ghz: f64, target: f64) -> Option<f64> {
    if !(a_w > target && target > 0.0) {
        return None;
    }
    // delta = r (1 - P_s) / P_s with r = q_bar / q.
    let delta = a_w / target - 1.0;
    let ratio = delta * p_s / (1.0 - p_s);
    if !(ratio > 0.0 && ratio < 1.0) {
        return None;
    }
    Some(-crate::quantum::H_OVER_KB_MK_PER_GHZ * freq_s_ghz / ratio.ln())
}

/// One sweep grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub t_s_mk: f64,
    pub t_p_mk: f64,
    pub scheme: MeasurementScheme,
    pub report: WvaReport,
}

/// Evaluates `template` on the `t_s x t_p` grid, `t_s` major. Points run in
/// parallel; row order is fixed by the grid.
pub fn sweep(template: &WvaConfig, t_s_grid: &[f64], t_p_grid: &[f64], with_oracle: bool) -> Result<Vec<SweepRow>> {
    let points: Vec<(f64, f64)> = t_s_grid
        .iter()
        .flat_map(|&ts| t_p_grid.iter().map(move |&tp| (ts, tp)))
        .collect();
    points
        .par_iter()
        .map(|&(t_s_mk, t_p_mk)| {
            let mut cfg = template.clone();
            cfg.t_s_mk = t_s_mk;
            cfg.t_p_mk = t_p_mk;
            Ok(SweepRow {
                t_s_mk,
                t_p_mk,
                scheme: cfg.scheme,
                report: evaluate(&cfg, with_oracle)?,
            })
        })
        .collect()
}

/// Angle of the AAV post-selection for a desired real weak value.
pub fn aav_angle(a_w: f64) -> f64 {
    FRAC_PI_2 - a_w.atan()
}

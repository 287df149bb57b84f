//! Sequential phase estimation on a single probe that is never reset.
//!
//! Each run prepares a thermal qubit once and then alternates `n_s` times
//! between the rotation `exp(-i theta sigma_x)` and a measurement in the
//! `{|down>, |up>}` basis through a freshly prepared thermal pointer. The
//! conditional state after each readout feeds the next cycle. Basis index 0
//! is `|down>` (ground), index 1 is `|up>`.

mod mle;

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{measure_selective, MeasurementScheme, MeasurementSetup};
use crate::quantum::{
    conjugate, purity, thermal_state, ComplexMatrix, DensityMatrix, Observable, ThermalQubitSpec, UnitaryOp, C64, ZERO,
};
use crate::rng::substream;

pub use mle::{log_likelihood, mle, sandwich_sigma, MleResult, FD_STEP, PROBABILITY_FLOOR};

/// Trajectories per work unit. Fixed so that floating-point reductions do
/// not depend on the thread count.
const CHUNK: usize = 64;

/// Evenly spaced search grid `lo..=hi` with `points` entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl ThetaGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let grid = Self { lo, hi, points };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidArgument(format!(
                "theta grid needs lo < hi, got {}..{}",
                self.lo, self.hi
            )));
        }
        if self.points < 3 {
            return Err(Error::InvalidArgument(format!(
                "theta grid needs at least 3 points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.lo + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeqConfig {
    pub theta_true: f64,
    pub n_s: usize,
    pub nu: usize,
    pub scheme: MeasurementScheme,
    pub system_spec: ThermalQubitSpec,
    pub pointer_spec: ThermalQubitSpec,
    pub seed: u64,
    pub theta_grid: ThetaGrid,
}

impl SeqConfig {
    /// 5 GHz qubits at 100 mK, `theta = pi / 100`, 120 steps, 500 runs.
    pub fn standard(scheme: MeasurementScheme, seed: u64) -> Self {
        let spec = ThermalQubitSpec::computational(5.0, 100.0).expect("valid spec");
        Self {
            theta_true: PI / 100.0,
            n_s: 120,
            nu: 500,
            scheme,
            system_spec: spec.clone(),
            pointer_spec: spec,
            seed,
            theta_grid: ThetaGrid {
                lo: 1e-4,
                hi: 0.3,
                points: 600,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_s == 0 || self.nu == 0 {
            return Err(Error::InvalidArgument(format!(
                "n_s and nu must be at least 1, got {} and {}",
                self.n_s, self.nu
            )));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.theta_true) {
            return Err(Error::InvalidArgument(format!(
                "theta_true {} outside [0, pi/2]",
                self.theta_true
            )));
        }
        self.theta_grid.validate()?;
        if !(self.theta_grid.lo <= self.theta_true && self.theta_true <= self.theta_grid.hi) {
            return Err(Error::InvalidArgument(format!(
                "theta grid {}..{} does not bracket theta_true {}",
                self.theta_grid.lo, self.theta_grid.hi, self.theta_true
            )));
        }
        Ok(())
    }

    pub fn setup(&self) -> Result<MeasurementSetup> {
        MeasurementSetup::with_thermal_pointer(self.scheme, ComplexMatrix::identity(2), &self.pointer_spec)
    }
}

/// Per-step outcome counts across `nu` runs; `counts[i] = [down, up]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeTally {
    pub counts: Vec<[u64; 2]>,
    pub nu: u64,
}

impl OutcomeTally {
    pub fn new(counts: Vec<[u64; 2]>, nu: u64) -> Result<Self> {
        if let Some(i) = counts.iter().position(|row| row[0] + row[1] != nu) {
            return Err(Error::InvalidArgument(format!(
                "tally row {i} does not sum to nu = {nu}"
            )));
        }
        Ok(Self { counts, nu })
    }

    pub fn steps(&self) -> usize {
        self.counts.len()
    }

    /// Row-wise sum of two tallies over the same steps.
    pub fn merge(&self, other: &OutcomeTally) -> Result<OutcomeTally> {
        if self.steps() != other.steps() {
            return Err(Error::DimensionMismatch("tallies cover different step counts".into()));
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| [a[0] + b[0], a[1] + b[1]])
            .collect();
        Ok(OutcomeTally {
            counts,
            nu: self.nu + other.nu,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRun {
    pub tally: OutcomeTally,
    /// Purity of the run-averaged state; entry 0 is the initial state.
    pub purity_trace: Vec<f64>,
    /// Run-averaged purity of the conditional states.
    pub conditional_purity_trace: Vec<f64>,
    /// Outcome of run `r` at step `i` at index `r * n_s + i`.
    pub outcomes: Vec<u8>,
}

/// `exp(-i theta sigma_x)`.
pub fn rotation(theta: f64) -> UnitaryOp {
    UnitaryOp::evolution(&Observable::pauli_x(), theta)
}

struct ChunkResult {
    counts: Vec<[u64; 2]>,
    state_sum: Vec<DMatrix<C64>>,
    purity_sum: Vec<f64>,
    outcomes: Vec<u8>,
}

pub fn run_trajectories(cfg: &SeqConfig) -> Result<TrajectoryRun> {
    cfg.validate()?;
    let setup = cfg.setup()?;
    let u = rotation(cfg.theta_true);
    let initial = thermal_state(&cfg.system_spec);
    let n_s = cfg.n_s;

    let starts: Vec<usize> = (0..cfg.nu).step_by(CHUNK).collect();
    let chunks: Vec<ChunkResult> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(cfg.nu);
            let mut chunk = ChunkResult {
                counts: vec![[0; 2]; n_s],
                state_sum: vec![DMatrix::from_element(2, 2, ZERO); n_s],
                purity_sum: vec![0.0; n_s],
                outcomes: Vec::with_capacity((end - start) * n_s),
            };
            for run in start..end {
                let mut rng = substream(cfg.seed, run as u64);
                let mut rho = initial.clone();
                for step in 0..n_s {
                    rho = u.apply(&rho)?;
                    let out = measure_selective(&setup, &rho, &mut rng)?;
                    chunk.counts[step][out.outcome] += 1;
                    chunk.outcomes.push(out.outcome as u8);
                    rho = out.posterior;
                    chunk.state_sum[step] += rho.matrix().inner();
                    chunk.purity_sum[step] += purity(&rho);
                }
            }
            Ok(chunk)
        })
        .collect::<Result<_>>()?;

    let mut counts = vec![[0u64; 2]; n_s];
    let mut state_sum = vec![DMatrix::from_element(2, 2, ZERO); n_s];
    let mut purity_sum = vec![0.0; n_s];
    let mut outcomes = Vec::with_capacity(cfg.nu * n_s);
    for chunk in chunks {
        for step in 0..n_s {
            counts[step][0] += chunk.counts[step][0];
            counts[step][1] += chunk.counts[step][1];
            state_sum[step] += &chunk.state_sum[step];
            purity_sum[step] += chunk.purity_sum[step];
        }
        outcomes.extend(chunk.outcomes);
    }

    let nu = cfg.nu as f64;
    let initial_purity = purity(&initial);
    let mut purity_trace = vec![initial_purity];
    purity_trace.extend(
        state_sum
            .iter()
            .map(|s| s.iter().map(|z| z.norm_sqr()).sum::<f64>() / (nu * nu)),
    );
    let mut conditional_purity_trace = vec![initial_purity];
    conditional_purity_trace.extend(purity_sum.iter().map(|p| p / nu));

    Ok(TrajectoryRun {
        tally: OutcomeTally::new(counts, cfg.nu as u64)?,
        purity_trace,
        conditional_purity_trace,
        outcomes,
    })
}

/// Exact outcome distribution at each step, obtained by propagating the
/// outcome-averaged state. Averaging over outcomes commutes with the linear
/// evolution, so row `i` is the exact marginal at step `i`.
pub fn model_probabilities(scheme: MeasurementScheme, theta: f64, cfg: &SeqConfig) -> Result<Vec<[f64; 2]>> {
    let mut cfg = cfg.clone();
    cfg.scheme = scheme;
    let model = Model::new(&cfg)?;
    model.rows(theta)
}

/// Reusable pieces of the forward model for one configuration.
pub(crate) struct Model {
    setup: MeasurementSetup,
    initial: DensityMatrix,
    n_s: usize,
}

impl Model {
    pub(crate) fn new(cfg: &SeqConfig) -> Result<Self> {
        Ok(Self {
            setup: cfg.setup()?,
            initial: thermal_state(&cfg.system_spec),
            n_s: cfg.n_s,
        })
    }

    pub(crate) fn rows(&self, theta: f64) -> Result<Vec<[f64; 2]>> {
        // Raw matrices: every step is a CPTP map of a valid state, and the
        // per-step validation would dominate the likelihood scan.
        let u = rotation(theta);
        let mut rho = self.initial.matrix().inner().clone();
        let mut rows = Vec::with_capacity(self.n_s);
        for _ in 0..self.n_s {
            let rotated = conjugate(u.matrix().inner(), &rho);
            let down = self.setup.branch(&rotated, 0);
            let up = self.setup.branch(&rotated, 1);
            rows.push([down.trace().re.max(0.0), up.trace().re.max(0.0)]);
            rho = down + up;
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(rows)
    }
}

/// Tally drawn directly from model rows, each step independently.
pub fn synthetic_tally<R: Rng + ?Sized>(probs: &[[f64; 2]], nu: u64, rng: &mut R) -> OutcomeTally {
    let counts = probs
        .iter()
        .map(|row| {
            let up = (0..nu).filter(|_| rng.random::<f64>() < row[1]).count() as u64;
            [nu - up, up]
        })
        .collect();
    OutcomeTally { counts, nu }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scheme: MeasurementScheme, theta: f64) -> SeqConfig {
        let mut cfg = SeqConfig::standard(scheme, 3);
        cfg.theta_true = theta;
        cfg.theta_grid = ThetaGrid::new(0.0, 0.3, 61).unwrap();
        cfg.n_s = 12;
        cfg.nu = 150;
        cfg
    }

    #[test]
    fn grid_values() {
        assert_eq!(
            ThetaGrid::new(0.0, 1.0, 5).unwrap().values(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert!(ThetaGrid::new(1.0, 1.0, 5).is_err());
        assert!(ThetaGrid::new(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = small(MeasurementScheme::Ideal, 0.03);
        cfg.n_s = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = small(MeasurementScheme::Ideal, 0.03);
        cfg.theta_true = 0.5;
        assert!(cfg.validate().is_err());
        cfg.theta_true = -0.1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ideal_full_flip_from_ground() {
        let mut cfg = small(MeasurementScheme::Ideal, FRAC_PI_2);
        cfg.system_spec = ThermalQubitSpec::computational(5.0, 0.0).unwrap();
        cfg.theta_grid = ThetaGrid::new(0.0, FRAC_PI_2, 11).unwrap();
        cfg.n_s = 1;
        let run = run_trajectories(&cfg).unwrap();
        assert_eq!(run.tally.counts, vec![[0, cfg.nu as u64]]);
    }

    #[test]
    fn ideal_without_rotation_keeps_thermal_statistics() {
        let cfg = small(MeasurementScheme::Ideal, 0.0);
        let rows = model_probabilities(MeasurementScheme::Ideal, 0.0, &cfg).unwrap();
        let (q, q_bar) = cfg.system_spec.populations();
        for row in &rows {
            assert!((row[0] - q).abs() < 1e-12 && (row[1] - q_bar).abs() < 1e-12);
        }
        let run = run_trajectories(&cfg).unwrap();
        for p in &run.purity_trace {
            assert!((p - run.purity_trace[0]).abs() < 0.05);
        }
    }

    #[test]
    fn model_rows_follow_bloch_recursion() {
        // z_i = z_0 cos(2 theta)^i before each readout; UB also shrinks z by
        // (p - p_bar) per readout.
        let theta = 0.07;
        let cfg = small(MeasurementScheme::Ideal, theta);
        let (q, _) = cfg.system_spec.populations();
        let (p, p_bar) = cfg.pointer_spec.populations();
        let c = (2.0 * theta).cos();
        for scheme in MeasurementScheme::ALL {
            let rows = model_probabilities(scheme, theta, &cfg).unwrap();
            let mut z = 2.0 * q - 1.0;
            for row in &rows {
                z *= c;
                let expected = match scheme {
                    MeasurementScheme::NonInvasive => p * (1.0 + z) / 2.0 + p_bar * (1.0 - z) / 2.0,
                    _ => (1.0 + z) / 2.0,
                };
                assert!((row[0] - expected).abs() < 1e-12, "{scheme}");
                assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
                if scheme == MeasurementScheme::Unbiased {
                    z *= p - p_bar;
                }
            }
        }
    }

    #[test]
    fn trajectories_are_reproducible() {
        let cfg = small(MeasurementScheme::NonInvasive, 0.03);
        let a = run_trajectories(&cfg).unwrap();
        let b = run_trajectories(&cfg).unwrap();
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.seed += 1;
        assert_ne!(run_trajectories(&other).unwrap().outcomes, a.outcomes);
    }

    #[test]
    fn tally_rows_sum_to_nu() {
        let run = run_trajectories(&small(MeasurementScheme::Unbiased, 0.05)).unwrap();
        assert!(run.tally.counts.iter().all(|r| r[0] + r[1] == 150));
        assert_eq!(run.outcomes.len(), 150 * 12);
        assert!(OutcomeTally::new(vec![[1, 2]], 4).is_err());
    }
}

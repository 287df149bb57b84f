//! Composite-likelihood estimate of the rotation angle.
//!
//! Per-step outcome counts are treated as independent binomial samples of
//! the exact step marginals, so `l(theta) = sum_i sum_a n_ia log p_ia(theta)`.
//! Correlations between steps of one run are ignored by this likelihood.

use super::{Model, OutcomeTally, SeqConfig};
use crate::error::{Error, Result};

/// Step of the central second difference for the curvature.
pub const FD_STEP: f64 = 1e-4;

/// Probabilities are clamped to `[floor, 1 - floor]` before logarithms.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

const REFINE_TOLERANCE: f64 = 1e-10;
const REFINE_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub theta_hat: f64,
    /// `(-l''(theta_hat))^(-1/2)`; unset when the curvature is not negative.
    pub sigma: Option<f64>,
    pub loglik_samples: Vec<(f64, f64)>,
    pub converged: bool,
}

pub fn log_likelihood(tally: &OutcomeTally, probs: &[[f64; 2]]) -> Result<f64> {
    if tally.steps() != probs.len() {
        return Err(Error::DimensionMismatch(format!(
            "tally has {} steps, model has {}",
            tally.steps(),
            probs.len()
        )));
    }
    Ok(tally
        .counts
        .iter()
        .zip(probs)
        .map(|(n, p)| {
            (0..2)
                .map(|a| n[a] as f64 * p[a].clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR).ln())
                .sum::<f64>()
        })
        .sum())
}

/// Grid search, then successive parabolic interpolation inside the bracket
/// around the best grid point, then a finite-difference curvature.
pub fn mle(tally: &OutcomeTally, cfg: &SeqConfig) -> Result<MleResult> {
    cfg.theta_grid.validate()?;
    if tally.steps() != cfg.n_s {
        return Err(Error::DimensionMismatch(format!(
            "tally has {} steps, configuration has n_s = {}",
            tally.steps(),
            cfg.n_s
        )));
    }
    let model = Model::new(cfg)?;
    let l = |theta: f64| -> Result<f64> { log_likelihood(tally, &model.rows(theta)?) };

    let grid = cfg.theta_grid.values();
    let loglik_samples = grid.iter().map(|&t| Ok((t, l(t)?))).collect::<Result<Vec<_>>>()?;
    let best = loglik_samples
        .iter()
        .enumerate()
        .fold(0, |best, (i, s)| if s.1 > loglik_samples[best].1 { i } else { best });

    if best == 0 || best == grid.len() - 1 {
        let theta_hat = grid[best];
        return Ok(MleResult {
            theta_hat,
            sigma: curvature_sigma(&l, theta_hat)?,
            loglik_samples,
            converged: false,
        });
    }

    let theta_hat = refine(
        &l,
        loglik_samples[best - 1],
        loglik_samples[best],
        loglik_samples[best + 1],
    )?;
    let sigma = curvature_sigma(&l, theta_hat)?;
    Ok(MleResult {
        theta_hat,
        sigma,
        loglik_samples,
        converged: sigma.is_some(),
    })
}

fn curvature_sigma(l: &impl Fn(f64) -> Result<f64>, theta: f64) -> Result<Option<f64>> {
    let second = (l(theta + FD_STEP)? - 2.0 * l(theta)? + l(theta - FD_STEP)?) / (FD_STEP * FD_STEP);
    Ok(if second < 0.0 {
        Some((-second).sqrt().recip())
    } else {
        None
    })
}

/// Maximises `l` inside `(a, c)` given `l(b) >= l(a), l(c)`.
fn refine(l: &impl Fn(f64) -> Result<f64>, a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Result<f64> {
    let (mut a, mut b, mut c) = (a, b, c);
    for _ in 0..REFINE_ITERATIONS {
        if c.0 - a.0 < REFINE_TOLERANCE {
            break;
        }
        let x = parabola_vertex(a, b, c)
            .filter(|x| *x > a.0 && *x < c.0 && (x - b.0).abs() > REFINE_TOLERANCE / 4.0)
            .unwrap_or({
                // Bisect the larger half when the vertex is unusable.
                if b.0 - a.0 > c.0 - b.0 {
                    0.5 * (a.0 + b.0)
                } else {
                    0.5 * (b.0 + c.0)
                }
            });
        let probe = (x, l(x)?);
        if probe.1 >= b.1 {
            if x < b.0 {
                c = b;
            } else {
                a = b;
            }
            b = probe;
        } else if x < b.0 {
            a = probe;
        } else {
            c = probe;
        }
    }
    Ok(b.0)
}

fn parabola_vertex(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<f64> {
    let num = (b.0 - a.0).powi(2) * (b.1 - c.1) - (b.0 - c.0).powi(2) * (b.1 - a.1);
    let den = (b.0 - a.0) * (b.1 - c.1) - (b.0 - c.0) * (b.1 - a.1);
    if den == 0.0 || !den.is_finite() {
        None
    } else {
        Some(b.0 - 0.5 * num / den)
    }
}

/// Godambe (sandwich) standard error of the composite estimate, using the
/// per-run score contributions in `outcomes` (`run * n_s + step`). Accounts
/// for the correlations the composite likelihood ignores.
pub fn sandwich_sigma(cfg: &SeqConfig, outcomes: &[u8], theta: f64) -> Result<Option<f64>> {
    let n_s = cfg.n_s;
    if n_s == 0 || !outcomes.len().is_multiple_of(n_s) {
        return Err(Error::DimensionMismatch(
            "outcome record is not a whole number of runs".into(),
        ));
    }
    let model = Model::new(cfg)?;
    let clamp = |p: f64| p.clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR);
    let plus = model.rows(theta + FD_STEP)?;
    let minus = model.rows(theta - FD_STEP)?;
    let centre = model.rows(theta)?;
    // d log p / d theta per step and outcome.
    let score: Vec<[f64; 2]> = plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| {
            [
                (clamp(p[0]).ln() - clamp(m[0]).ln()) / (2.0 * FD_STEP),
                (clamp(p[1]).ln() - clamp(m[1]).ln()) / (2.0 * FD_STEP),
            ]
        })
        .collect();
    let mut variability = 0.0;
    let mut sensitivity = 0.0;
    for run in outcomes.chunks(n_s) {
        let s: f64 = run.iter().enumerate().map(|(i, &o)| score[i][o as usize]).sum();
        variability += s * s;
    }
    let runs = (outcomes.len() / n_s) as f64;
    for (row, s) in centre.iter().zip(&score) {
        sensitivity += runs * (clamp(row[0]) * s[0] * s[0] + clamp(row[1]) * s[1] * s[1]);
    }
    if !(sensitivity > 0.0) {
        return Ok(None);
    }
    Ok(Some(variability.sqrt() / sensitivity))
}

use std::f64::consts::PI;

use proptest::prelude::*;
use qmeter_core::measure::{measure_nonselective, measure_selective, MeasurementScheme};
use qmeter_core::quantum::thermal_state;
use qmeter_core::rng::substream;
use qmeter_core::seq::{mle, model_probabilities, rotation, run_trajectories, synthetic_tally, SeqConfig, ThetaGrid};

fn short(scheme: MeasurementScheme, n_s: usize, nu: usize, seed: u64) -> SeqConfig {
    let mut cfg = SeqConfig::standard(scheme, seed);
    cfg.n_s = n_s;
    cfg.nu = nu;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn model_rows_are_distributions(theta in 0.0..1.5f64) {
        let cfg = short(MeasurementScheme::Ideal, 30, 1, 0);
        for scheme in MeasurementScheme::ALL {
            for row in model_probabilities(scheme, theta, &cfg).unwrap() {
                prop_assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
                prop_assert!(row[0] >= 0.0 && row[1] >= 0.0);
            }
        }
    }
}

#[test]
fn non_invasive_trajectories_keep_the_diagonal() {
    let cfg = short(MeasurementScheme::NonInvasive, 60, 20, 5);
    let setup = cfg.setup().unwrap();
    let u = rotation(cfg.theta_true);
    for run in 0..cfg.nu as u64 {
        let mut rng = substream(cfg.seed, run);
        let mut rho = thermal_state(&cfg.system_spec);
        for _ in 0..cfg.n_s {
            rho = u.apply(&rho).unwrap();
            let before = rho.diagonal();
            // A single readout collapses the state; averaged over outcomes
            // the diagonal is untouched at every point of the trajectory.
            let avg = measure_nonselective(&setup, &rho).unwrap();
            let kept = avg.posterior.diagonal();
            assert!((kept[0] - before[0]).abs() < 1e-12 && (kept[1] - before[1]).abs() < 1e-12);
            rho = measure_selective(&setup, &rho, &mut rng).unwrap().posterior;
        }
    }
}

#[test]
fn identical_seeds_reproduce_everything() {
    let cfg = short(MeasurementScheme::NonInvasive, 40, 100, 11);
    let a = run_trajectories(&cfg).unwrap();
    let b = run_trajectories(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(mle(&a.tally, &cfg).unwrap(), mle(&b.tally, &cfg).unwrap());
}

#[test]
fn sigma_shrinks_with_more_runs() {
    let mut last = f64::INFINITY;
    for nu in [50, 200, 800] {
        let cfg = short(MeasurementScheme::Ideal, 120, nu, 3);
        let run = run_trajectories(&cfg).unwrap();
        let fit = mle(&run.tally, &cfg).unwrap();
        let sigma = fit.sigma.unwrap();
        assert!(sigma < last, "nu {nu}: {sigma} !< {last}");
        last = sigma;
    }
}

#[test]
fn monte_carlo_frequencies_converge_to_model() {
    let nu = 100_000;
    for scheme in MeasurementScheme::ALL {
        let cfg = short(scheme, 20, nu, 21);
        let run = run_trajectories(&cfg).unwrap();
        let rows = model_probabilities(scheme, cfg.theta_true, &cfg).unwrap();
        let worst = run
            .tally
            .counts
            .iter()
            .zip(&rows)
            .map(|(n, p)| (n[1] as f64 / nu as f64 - p[1]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 5.0 / (nu as f64).sqrt(), "{scheme}: {worst}");
    }
}

#[test]
fn synthetic_tallies_recover_theta() {
    let mut cfg = short(MeasurementScheme::Ideal, 120, 500, 0);
    cfg.theta_grid = ThetaGrid::new(1e-4, 0.1, 200).unwrap();
    let rows = model_probabilities(cfg.scheme, PI / 100.0, &cfg).unwrap();
    let mut covered = 0;
    for seed in 0..100 {
        let tally = synthetic_tally(&rows, 500, &mut substream(1000 + seed, 0));
        let fit = mle(&tally, &cfg).unwrap();
        if fit.converged && (fit.theta_hat - PI / 100.0).abs() <= 3.0 * fit.sigma.unwrap() {
            covered += 1;
        }
    }
    assert!(covered >= 95, "{covered}/100");
}

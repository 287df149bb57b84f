use proptest::prelude::*;
use qmeter_core::measure::MeasurementScheme;
use qmeter_core::wva::{
    closed_form_report, oracle_simulate, postselected_meter, qfi_numeric_weighted, sweep, WvaConfig,
};

const THETA: f64 = 0.01;

fn a_w() -> f64 {
    1.0 / THETA.tan()
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn sweep_invariants_on_twenty_by_twenty_grid() {
    let temps = grid(10.0, 200.0, 20);
    for scheme in [MeasurementScheme::Unbiased, MeasurementScheme::NonInvasive] {
        let template = WvaConfig::aav(THETA, 1e-4, scheme, 0.0, 0.0);
        let rows = sweep(&template, &temps, &temps, false).unwrap();
        assert_eq!(rows.len(), 400);
        for row in &rows {
            let r = &row.report;
            assert!(r.delta_m >= 0.0);
            assert!(r.a_w_true.norm() <= r.a_w.norm());
            assert!((0.0..=1.0).contains(&r.p_m));
            if scheme == MeasurementScheme::Unbiased {
                assert!(r.i_th <= r.i_ps);
            }
        }
        if scheme == MeasurementScheme::Unbiased {
            for chunk in rows.chunks(temps.len()) {
                assert!(chunk.iter().all(|row| row.report == chunk[0].report));
            }
        } else {
            // Strictly decreasing along both temperature axes.
            for i in 0..temps.len() {
                for j in 0..temps.len() {
                    let here = rows[i * temps.len() + j].report.a_w_true.re;
                    if j + 1 < temps.len() {
                        assert!(rows[i * temps.len() + j + 1].report.a_w_true.re < here);
                    }
                    if i + 1 < temps.len() {
                        assert!(rows[(i + 1) * temps.len() + j].report.a_w_true.re < here);
                    }
                }
            }
        }
    }
}

#[test]
fn ni_crossing_at_fridge_floor() {
    // Cold system: the NI pointer threshold sits where the UB system one does.
    let temps = grid(40.0, 60.0, 2001);
    let template = WvaConfig::aav(THETA, 1e-4, MeasurementScheme::NonInvasive, 15.0, 0.0);
    let rows = sweep(&template, &[15.0], &temps, false).unwrap();
    let crossing = rows
        .windows(2)
        .find(|w| w[0].report.a_w_true.re >= 1.0 && w[1].report.a_w_true.re < 1.0)
        .unwrap();
    assert!((crossing[0].t_p_mk - 52.0).abs() < 0.1, "{}", crossing[0].t_p_mk);
    let at_30 = closed_form_report(&WvaConfig::aav(THETA, 1e-4, MeasurementScheme::NonInvasive, 15.0, 30.0)).unwrap();
    assert!((at_30.a_w_true.re - 23.0).abs() < 1.0, "{}", at_30.a_w_true.re);
}

#[test]
fn oracle_postselection_matches_closed_form() {
    for scheme in [MeasurementScheme::Unbiased, MeasurementScheme::NonInvasive] {
        for (t_s, t_p) in [(10.0, 10.0), (40.0, 90.0), (120.0, 30.0), (200.0, 200.0)] {
            let cfg = WvaConfig::aav(THETA, 1e-4, scheme, t_s, t_p);
            let out = oracle_simulate(&cfg).unwrap();
            let report = closed_form_report(&cfg).unwrap();
            assert!((out.p_m_empirical - report.p_m).abs() < 1e-10, "{scheme} {t_s} {t_p}");
            assert!(out.trace_defect < 1e-10);
            assert!((out.meter.matrix().trace().re - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn unbiased_oracle_kick_is_diluted() {
    // Amplified branch weight q P_s, thermal branch weight q_bar (1 - P_s)
    // with kick tan(theta); the second term is what 1 / (1 + delta) drops.
    for (t_s, t_p) in [(20.0, 10.0), (45.0, 150.0), (60.0, 150.0), (100.0, 40.0)] {
        let cfg = WvaConfig::aav(THETA, 5e-4, MeasurementScheme::Unbiased, t_s, t_p);
        let out = oracle_simulate(&cfg).unwrap();
        let report = closed_form_report(&cfg).unwrap();
        let (q, q_bar) = cfg.system_spec().unwrap().populations();
        let (w1, w2) = (q * report.p_s, q_bar * (1.0 - report.p_s));
        let mixture = (w1 * a_w() + w2 * THETA.tan()) / (w1 + w2);
        assert!((out.shift / mixture - 1.0).abs() < 1e-2, "{t_s} {t_p}");
        let diluted = out.shift / a_w() * (1.0 + report.delta_m);
        if report.delta_m < 10.0 {
            assert!((diluted - 1.0).abs() < 1e-2, "{t_s} {t_p}: {diluted}");
        }
    }
}

fn qfi(cfg: &WvaConfig) -> qmeter_core::wva::QfiEstimate {
    let eps = 0.01 / a_w();
    qfi_numeric_weighted(|g| postselected_meter(cfg, g), cfg.g, eps).unwrap()
}

#[test]
fn zero_temperature_qfi_matches_closed_form() {
    for kick in [0.01, 0.05] {
        let cfg = WvaConfig::aav(THETA, kick / a_w(), MeasurementScheme::Unbiased, 0.0, 0.0);
        let est = qfi(&cfg);
        let report = closed_form_report(&cfg).unwrap();
        assert!(est.relative_gap < 0.02, "{est:?}");
        assert!(
            (est.sld / report.i_ps - 1.0).abs() < 0.02,
            "{} vs {}",
            est.sld,
            report.i_ps
        );
    }
}

#[test]
fn finite_temperature_qfi_tracks_amplified_weight() {
    // Numerically the post-selected meter carries 4 P_M |A_w|^2 (1 - |g A_w|^2):
    // the thermal branch dilutes the mean kick but not the information.
    for (scheme, t_s, t_p) in [
        (MeasurementScheme::Unbiased, 20.0, 15.0),
        (MeasurementScheme::Unbiased, 40.0, 100.0),
        (MeasurementScheme::NonInvasive, 15.0, 30.0),
    ] {
        let cfg = WvaConfig::aav(THETA, 0.01 / a_w(), scheme, t_s, t_p);
        let est = qfi(&cfg);
        let report = closed_form_report(&cfg).unwrap();
        let expected = 4.0 * report.p_m * a_w() * a_w() * (1.0 - 1e-4);
        assert!(est.relative_gap < 0.02);
        assert!((est.sld / expected - 1.0).abs() < 0.02);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 60, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn unbiased_report_ignores_pointer(t_s in 0.0..300.0f64, t_p1 in 0.0..300.0f64, t_p2 in 0.0..300.0f64, theta in 0.005..0.5f64) {
        let a = closed_form_report(&WvaConfig::aav(theta, 1e-5, MeasurementScheme::Unbiased, t_s, t_p1)).unwrap();
        let b = closed_form_report(&WvaConfig::aav(theta, 1e-5, MeasurementScheme::Unbiased, t_s, t_p2)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn true_amplification_never_exceeds_ideal(t_s in 0.0..300.0f64, t_p in 0.0..300.0f64, theta in 0.005..0.7f64) {
        for scheme in MeasurementScheme::ALL {
            let r = closed_form_report(&WvaConfig::aav(theta, 1e-5, scheme, t_s, t_p)).unwrap();
            prop_assert!(r.delta_m >= 0.0);
            prop_assert!(r.a_w_true.norm() <= r.a_w.norm());
        }
    }
}

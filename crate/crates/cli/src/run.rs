//! Dispatch of a parsed [`RunConfig`] and the CSV/JSON writers.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::time::Instant;

use qmeter_core::measure::{audit, MeasurementSetup};
use qmeter_core::quantum::{thermal_state, ComplexMatrix};
use qmeter_core::seq::{mle, model_probabilities, run_trajectories, MleResult, SeqConfig, TrajectoryRun};
use qmeter_core::wva::{evaluate, sweep, SweepRow, WvaConfig};
use qmeter_core::Error;
use serde::Serialize;

use crate::args::{RunConfig, Task, FRIDGE_FLOOR_MK};

/// Failure after parsing, with its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::InvalidArgument(_)
            | Error::NegativeTemperature(_)
            | Error::DimensionMismatch(_)
            | Error::PointerDimNotMultiple { .. }
            | Error::NonDiagonalPointer(_)
            | Error::EmptyMatrix => 2,
            _ => 1,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub rows: usize,
    /// JSON that goes to stdout when no summary path was given.
    pub stdout: Option<String>,
}

/// Runs `cfg`, prints the one-line summary to stderr and returns the exit code.
pub fn execute(cfg: &RunConfig) -> i32 {
    let start = Instant::now();
    let name = cfg.subcommand().name();
    match run(cfg) {
        Ok(summary) => {
            if let Some(text) = &summary.stdout {
                print!("{text}");
            }
            eprintln!(
                "qmeter {name}: {} rows written to {} in {:.3} s",
                summary.rows,
                cfg.out.display(),
                start.elapsed().as_secs_f64()
            );
            0
        }
        Err(err) => {
            eprintln!("qmeter {name}: {err}");
            err.code
        }
    }
}

/// Runs `cfg` on a pool of the requested size and writes its outputs.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| RunError {
            code: 1,
            message: format!("cannot start worker pool: {e}"),
        })?;
    pool.install(|| match &cfg.task {
        Task::WvaPoint { wva, oracle } => {
            let report = evaluate(wva, *oracle)?;
            let row = SweepRow {
                t_s_mk: wva.t_s_mk,
                t_p_mk: wva.t_p_mk,
                scheme: wva.scheme,
                report,
            };
            write_output(&cfg.out, &sweep_csv("wva-point", wva, &[row], *oracle))?;
            Ok(RunSummary { rows: 1, stdout: None })
        }
        Task::WvaSweep {
            wva,
            t_s_grid,
            t_p_grid,
            oracle,
        } => {
            let rows = sweep(wva, t_s_grid, t_p_grid, *oracle)?;
            write_output(&cfg.out, &sweep_csv("wva-sweep", wva, &rows, *oracle))?;
            Ok(RunSummary {
                rows: rows.len(),
                stdout: None,
            })
        }
        Task::SeqRun { seq, summary } => {
            let run = run_trajectories(seq)?;
            let fit = mle(&run.tally, seq)?;
            let model = model_probabilities(seq.scheme, fit.theta_hat, seq)?;
            let p_up: Vec<f64> = model.iter().map(|row| row[1]).collect();
            let json = seq_summary_json(seq, &fit);
            write_output(&cfg.out, &seq_csv(seq, &run, &fit, &p_up))?;
            let stdout = match summary {
                Some(path) => {
                    write_output(path, &json)?;
                    None
                }
                None => Some(json),
            };
            Ok(RunSummary { rows: seq.n_s, stdout })
        }
        Task::Audit {
            scheme,
            system,
            pointer,
        } => {
            let setup = MeasurementSetup::with_thermal_pointer(*scheme, ComplexMatrix::identity(2), pointer)?;
            let result = audit(&setup, &thermal_state(system))?;
            let record = AuditRecord {
                scheme: scheme.label(),
                t_s_mk: system.temperature_mk(),
                t_p_mk: pointer.temperature_mk(),
                faithfulness: result.faithfulness,
                ub_dev: result.unbiased_deviation,
                ni_dev: result.noninvasive_deviation,
            };
            write_output(&cfg.out, &to_json(&record))?;
            Ok(RunSummary { rows: 1, stdout: None })
        }
    })
}

fn write_output(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|e| RunError {
        code: 2,
        message: format!("cannot write `out` file {}: {e}", path.display()),
    })
}

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e15)`.
pub fn format_number(v: f64) -> String {
    let mag = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&mag) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub const SWEEP_HEADER: &str = "t_s_mk,t_p_mk,scheme,a_w,delta_m,a_w_true,p_m,i_ps,i_th";
pub const SEQ_HEADER: &str = "step,scheme,count_up,count_down,model_p_up,avg_purity";

fn theta_of(wva: &WvaConfig) -> f64 {
    wva.psi_f[0].re.atan2(wva.psi_f[1].re)
}

pub fn sweep_csv(kind: &str, wva: &WvaConfig, rows: &[SweepRow], oracle: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# qmeter {kind}");
    let _ = writeln!(out, "# scheme = {}", wva.scheme.label());
    let _ = writeln!(out, "# theta = {}", format_number(theta_of(wva)));
    let _ = writeln!(out, "# g = {}", format_number(wva.g));
    let _ = writeln!(out, "# meter_dim = {}", wva.meter_dim);
    let _ = writeln!(out, "# freq_s_ghz = {}", format_number(wva.freq_s_ghz));
    let _ = writeln!(out, "# freq_p_ghz = {}", format_number(wva.freq_p_ghz));
    let _ = writeln!(out, "# fridge_floor_mk = {}", format_number(FRIDGE_FLOOR_MK));
    out.push_str(SWEEP_HEADER);
    out.push_str(if oracle { ",oracle_shift\n" } else { "\n" });
    for row in rows {
        let r = &row.report;
        let fields = [
            format_number(row.t_s_mk),
            format_number(row.t_p_mk),
            row.scheme.label().to_string(),
            format_number(r.a_w.re),
            format_number(r.delta_m),
            format_number(r.a_w_true.re),
            format_number(r.p_m),
            format_number(r.i_ps),
            format_number(r.i_th),
        ];
        out.push_str(&fields.join(","));
        if oracle {
            out.push(',');
            out.push_str(&r.oracle_shift.map(format_number).unwrap_or_default());
        }
        out.push('\n');
    }
    out
}

pub fn seq_csv(seq: &SeqConfig, run: &TrajectoryRun, fit: &MleResult, p_up: &[f64]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# qmeter seq-run");
    let _ = writeln!(out, "# scheme = {}", seq.scheme.label());
    let _ = writeln!(out, "# theta_true = {}", format_number(seq.theta_true));
    let _ = writeln!(out, "# theta_hat = {}", format_number(fit.theta_hat));
    let _ = writeln!(out, "# nu = {}", seq.nu);
    let _ = writeln!(out, "# seed = {}", seq.seed);
    let _ = writeln!(out, "# t_s_mk = {}", format_number(seq.system_spec.temperature_mk()));
    let _ = writeln!(out, "# t_p_mk = {}", format_number(seq.pointer_spec.temperature_mk()));
    let _ = writeln!(
        out,
        "# model_p_up is evaluated at theta_hat; avg_purity is the purity of the run-averaged state"
    );
    let _ = writeln!(out, "{SEQ_HEADER}");
    for (step, counts) in run.tally.counts.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            step + 1,
            seq.scheme.label(),
            counts[1],
            counts[0],
            format_number(p_up[step]),
            format_number(run.purity_trace[step]),
        );
    }
    out
}

#[derive(Serialize)]
struct SeqSummary<'a> {
    scheme: &'a str,
    theta_true: f64,
    theta_hat: f64,
    sigma: Option<f64>,
    n_s: usize,
    nu: usize,
    seed: u64,
    converged: bool,
}

pub fn seq_summary_json(seq: &SeqConfig, fit: &MleResult) -> String {
    to_json(&SeqSummary {
        scheme: seq.scheme.label(),
        theta_true: seq.theta_true,
        theta_hat: fit.theta_hat,
        sigma: fit.sigma,
        n_s: seq.n_s,
        nu: seq.nu,
        seed: seq.seed,
        converged: fit.converged,
    })
}

#[derive(Serialize)]
struct AuditRecord {
    scheme: &'static str,
    t_s_mk: f64,
    t_p_mk: f64,
    #[serde(rename = "C")]
    faithfulness: f64,
    ub_dev: f64,
    ni_dev: f64,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("plain record serializes");
    text.push('\n');
    text
}

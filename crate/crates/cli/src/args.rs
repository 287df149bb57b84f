//! Flag table, config-file reader and the merge of both into a [`RunConfig`].
//!
//! Config files are flat `key = value` lines whose keys are the long flag
//! names of the chosen subcommand. Anything given on the command line wins.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::io;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};
use qmeter_core::measure::MeasurementScheme;
use qmeter_core::quantum::ThermalQubitSpec;
use qmeter_core::seq::{SeqConfig, ThetaGrid};
use qmeter_core::wva::WvaConfig;

/// Upper bound on the number of points in one range specification.
pub const MAX_GRID_POINTS: usize = 100_000;
/// Temperature printed as the dilution-refrigerator floor in CSV metadata.
pub const FRIDGE_FLOOR_MK: f64 = 15.0;
pub const THREADS_ENV: &str = "QMETER_THREADS";

const DEFAULT_FREQ_GHZ: f64 = 5.0;
const DEFAULT_WVA_THETA: f64 = 0.01;
const DEFAULT_G: f64 = 1e-4;
const DEFAULT_SEQ_TEMP_MK: f64 = 100.0;
const DEFAULT_THETA_GRID: &str = "0.0001:0.3:600";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    WvaPoint,
    WvaSweep,
    SeqRun,
    Audit,
}

impl Subcommand {
    pub const ALL: [Subcommand; 4] = [Self::WvaPoint, Self::WvaSweep, Self::SeqRun, Self::Audit];

    pub fn name(self) -> &'static str {
        match self {
            Self::WvaPoint => "wva-point",
            Self::WvaSweep => "wva-sweep",
            Self::SeqRun => "seq-run",
            Self::Audit => "audit",
        }
    }

    fn about(self) -> &'static str {
        match self {
            Self::WvaPoint => "Weak-value amplification report at one temperature pair (CSV, one row)",
            Self::WvaSweep => "Weak-value amplification over a (T_S, T_P) grid (CSV)",
            Self::SeqRun => "Sequential phase estimation without resetting (CSV per step, JSON summary)",
            Self::Audit => "Faithfulness and UB/NI deviations of one measurement (JSON)",
        }
    }

    fn flags(self) -> &'static [Flag] {
        match self {
            Self::WvaPoint => WVA_POINT_FLAGS,
            Self::WvaSweep => WVA_SWEEP_FLAGS,
            Self::SeqRun => SEQ_FLAGS,
            Self::Audit => AUDIT_FLAGS,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Flag {
    name: &'static str,
    value: Option<&'static str>,
    help: &'static str,
}

const fn value(name: &'static str, value_name: &'static str, help: &'static str) -> Flag {
    Flag {
        name,
        value: Some(value_name),
        help,
    }
}

const fn switch(name: &'static str, help: &'static str) -> Flag {
    Flag {
        name,
        value: None,
        help,
    }
}

const OUT: Flag = value("out", "PATH", "Output file (required)");
const THREADS: Flag = value("threads", "N", "Worker threads; QMETER_THREADS applies when absent");
const SCHEME: Flag = value("scheme", "ideal|ub|ni", "Measurement scheme (required)");
const FREQ: Flag = value("freq", "GHZ", "System and pointer frequency [default: 5]");
const FREQ_S: Flag = value("freq-s", "GHZ", "System frequency, overrides --freq");
const FREQ_P: Flag = value("freq-p", "GHZ", "Pointer frequency, overrides --freq");
const G: Flag = value("g", "G", "Coupling strength [default: 1e-4]");
const WVA_THETA: Flag = value("theta", "RAD", "Post-selection angle, A_w = cot(theta) [default: 0.01]");
const METER_DIM: Flag = value("meter-dim", "N", "Meter truncation [default: 40]");
const ORACLE: Flag = switch("oracle", "Also run the full joint-state simulation");
const STRONG: Flag = switch("allow-strong-coupling", "Lift the |g A_w| <= 0.1 guard");

const WVA_POINT_FLAGS: &[Flag] = &[
    SCHEME,
    value("ts", "MK", "System temperature [default: 15]"),
    value("tp", "MK", "Pointer temperature [default: 15]"),
    WVA_THETA,
    G,
    FREQ,
    FREQ_S,
    FREQ_P,
    METER_DIM,
    ORACLE,
    STRONG,
    OUT,
    THREADS,
];

const WVA_SWEEP_FLAGS: &[Flag] = &[
    SCHEME,
    value("ts", "LO:HI:N", "System temperature grid in mK, or a single value"),
    value("tp", "LO:HI:N", "Pointer temperature grid in mK, or a single value"),
    WVA_THETA,
    G,
    FREQ,
    FREQ_S,
    FREQ_P,
    METER_DIM,
    ORACLE,
    STRONG,
    OUT,
    THREADS,
];

const SEQ_FLAGS: &[Flag] = &[
    SCHEME,
    value("theta", "RAD", "True rotation angle per step [default: pi/100]"),
    value("ns", "N", "Measurements per run [default: 120]"),
    value("nu", "N", "Independent runs [default: 500]"),
    value("seed", "N", "Random seed [default: 0]"),
    value("ts", "MK", "Probe temperature [default: 100]"),
    value("tp", "MK", "Pointer temperature [default: 100]"),
    FREQ,
    FREQ_S,
    FREQ_P,
    value("grid", "LO:HI:N", "Likelihood search grid [default: 0.0001:0.3:600]"),
    value("summary", "PATH", "Write the estimate as JSON here instead of stdout"),
    OUT,
    THREADS,
];

const AUDIT_FLAGS: &[Flag] = &[
    SCHEME,
    value("ts", "MK", "System temperature [default: 15]"),
    value("tp", "MK", "Pointer temperature [default: 15]"),
    FREQ,
    FREQ_S,
    FREQ_P,
    OUT,
    THREADS,
];

/// Parsed invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn subcommand(&self) -> Subcommand {
        match self.task {
            Task::WvaPoint { .. } => Subcommand::WvaPoint,
            Task::WvaSweep { .. } => Subcommand::WvaSweep,
            Task::SeqRun { .. } => Subcommand::SeqRun,
            Task::Audit { .. } => Subcommand::Audit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    WvaPoint {
        wva: WvaConfig,
        oracle: bool,
    },
    WvaSweep {
        wva: WvaConfig,
        t_s_grid: Vec<f64>,
        t_p_grid: Vec<f64>,
        oracle: bool,
    },
    SeqRun {
        seq: SeqConfig,
        summary: Option<PathBuf>,
    },
    Audit {
        scheme: MeasurementScheme,
        system: ThermalQubitSpec,
        pointer: ThermalQubitSpec,
    },
}

/// Why parsing stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    /// `--help` or `--version`: print to stdout, exit 0.
    Info(String),
    /// Malformed input: one-line diagnostic, exit 2.
    Usage(String),
}

impl ParseError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Info(_) => 0,
            Self::Usage(_) => 2,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Info(text) | Self::Usage(text) => f.write_str(text),
        }
    }
}

impl std::error::Error for ParseError {}

fn usage(msg: impl Into<String>) -> ParseError {
    ParseError::Usage(msg.into())
}

pub fn command() -> Command {
    let mut cmd = Command::new("qmeter")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Thermal quantum measurement simulations: weak-value sweeps, sequential estimation, audits")
        .subcommand_required(true)
        .after_help(
            "Every subcommand accepts --config FILE with `key = value` lines; keys are the \
             long flag names without dashes in front, `#` starts a comment, and flags on the \
             command line override the file. Exit codes: 0 success, 1 numerical validity \
             failure, 2 configuration error.",
        );
    for sub in Subcommand::ALL {
        let mut sc = Command::new(sub.name()).about(sub.about()).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("Read `key = value` settings from FILE"),
        );
        for flag in sub.flags() {
            let arg = Arg::new(flag.name).long(flag.name).help(flag.help);
            sc = sc.arg(match flag.value {
                Some(name) => arg.value_name(name).num_args(1).allow_hyphen_values(true),
                None => arg.action(ArgAction::SetTrue),
            });
        }
        cmd = cmd.subcommand(sc);
    }
    cmd
}

/// Reads `argv` using the real filesystem and `QMETER_THREADS`.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, ParseError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let env_threads = std::env::var(THREADS_ENV).ok();
    parse_args_with(argv, &|path| std::fs::read_to_string(path), env_threads.as_deref())
}

/// [`parse_args`] with the config-file reader and the thread variable injected.
pub fn parse_args_with<I, T>(
    argv: I,
    loader: &dyn Fn(&str) -> io::Result<String>,
    env_threads: Option<&str>,
) -> Result<RunConfig, ParseError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = command().try_get_matches_from(argv).map_err(|err| match err.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ParseError::Info(err.render().to_string()),
        _ => usage(first_line(&err.to_string())),
    })?;
    let (name, sub_matches) = matches.subcommand().expect("subcommand is required");
    let sub = Subcommand::ALL
        .into_iter()
        .find(|s| s.name() == name)
        .expect("registered subcommand");

    let mut settings = Settings::default();
    if let Some(path) = sub_matches.get_one::<String>("config") {
        let text = loader(path).map_err(|err| usage(format!("cannot read config `{path}`: {err}")))?;
        for (key, val) in parse_config_text(&text).map_err(usage)? {
            if !sub.flags().iter().any(|f| f.name == key) {
                return Err(usage(format!(
                    "unknown key `{key}` in config `{path}` for {}",
                    sub.name()
                )));
            }
            settings.file.insert(key, val);
        }
    }
    collect_flags(sub, sub_matches, &mut settings);
    settings.env_threads = env_threads.map(str::to_owned);
    build(sub, &settings)
}

fn first_line(text: &str) -> String {
    text.lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("invalid arguments")
        .trim()
        .to_string()
}

/// Splits a config file into `(key, value)` pairs in file order.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut seen = BTreeMap::new();
    let mut pairs = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, val) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", no + 1))?;
        let (key, val) = (key.trim(), val.trim());
        if key.is_empty() {
            return Err(format!("config line {}: missing key", no + 1));
        }
        if val.is_empty() {
            return Err(format!("config line {}: empty value for `{key}`", no + 1));
        }
        if seen.insert(key.to_string(), no).is_some() {
            return Err(format!("config line {}: duplicate key `{key}`", no + 1));
        }
        pairs.push((key.to_string(), val.to_string()));
    }
    Ok(pairs)
}

/// Parses `lo:hi:n` into `n` evenly spaced values, or a single number into one.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [single] => Ok(vec![parse_number(single)?]),
        [lo, hi, n] => {
            let (lo, hi) = (parse_number(lo)?, parse_number(hi)?);
            let n: usize = n
                .parse()
                .map_err(|_| format!("point count `{n}` is not a whole number"))?;
            if n == 0 {
                return Err("empty grid".into());
            }
            if n > MAX_GRID_POINTS {
                return Err(format!("{n} points exceeds the limit of {MAX_GRID_POINTS}"));
            }
            if hi < lo {
                return Err(format!("upper end {hi} is below lower end {lo}"));
            }
            if n == 1 {
                return if lo == hi {
                    Ok(vec![lo])
                } else {
                    Err("a one-point grid needs lo == hi".into())
                };
            }
            let span = hi - lo;
            Ok((0..n)
                .map(|i| {
                    if i + 1 == n {
                        hi
                    } else {
                        lo + span * i as f64 / (n - 1) as f64
                    }
                })
                .collect())
        }
        _ => Err(format!("`{spec}` is neither a number nor lo:hi:n")),
    }
}

fn parse_number(text: &str) -> Result<f64, String> {
    let v: f64 = text.parse().map_err(|_| format!("`{text}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{text}` is not finite"))
    }
}

#[derive(Debug, Default)]
struct Settings {
    file: BTreeMap<String, String>,
    flags: BTreeMap<String, String>,
    env_threads: Option<String>,
}

fn collect_flags(sub: Subcommand, matches: &ArgMatches, settings: &mut Settings) {
    for flag in sub.flags() {
        if matches.value_source(flag.name) != Some(ValueSource::CommandLine) {
            continue;
        }
        let val = match flag.value {
            Some(_) => matches.get_one::<String>(flag.name).cloned().unwrap_or_default(),
            None => "true".to_string(),
        };
        settings.flags.insert(flag.name.to_string(), val);
    }
}

impl Settings {
    fn raw(&self, key: &str) -> Option<&str> {
        self.flags.get(key).or_else(|| self.file.get(key)).map(String::as_str)
    }

    fn parse<T>(&self, key: &str, f: impl FnOnce(&str) -> Result<T, String>) -> Result<Option<T>, ParseError> {
        self.raw(key)
            .map(|raw| f(raw).map_err(|e| usage(format!("invalid value for `{key}`: {e}"))))
            .transpose()
    }

    fn required<T>(&self, key: &str, f: impl FnOnce(&str) -> Result<T, String>) -> Result<T, ParseError> {
        self.parse(key, f)?
            .ok_or_else(|| usage(format!("missing required setting `{key}`")))
    }

    fn number(&self, key: &str, default: f64) -> Result<f64, ParseError> {
        Ok(self.parse(key, parse_number)?.unwrap_or(default))
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, ParseError> {
        Ok(self.parse(key, parse_count)?.unwrap_or(default))
    }

    fn switch(&self, key: &str) -> Result<bool, ParseError> {
        Ok(self
            .parse(key, |raw| match raw {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(format!("`{other}` is not true or false")),
            })?
            .unwrap_or(false))
    }

    fn temperature(&self, key: &str, default: f64) -> Result<f64, ParseError> {
        let t = self.number(key, default)?;
        if t < 0.0 {
            return Err(usage(format!(
                "invalid value for `{key}`: temperature {t} mK is negative"
            )));
        }
        Ok(t)
    }

    fn temperature_grid(&self, key: &str) -> Result<Vec<f64>, ParseError> {
        let grid = self.required(key, parse_range)?;
        if let Some(t) = grid.iter().find(|t| **t < 0.0) {
            return Err(usage(format!(
                "invalid value for `{key}`: temperature {t} mK is negative"
            )));
        }
        Ok(grid)
    }

    /// `(system, pointer)` frequencies in GHz.
    fn frequencies(&self) -> Result<(f64, f64), ParseError> {
        let both = self.number("freq", DEFAULT_FREQ_GHZ)?;
        let pair = (self.number("freq-s", both)?, self.number("freq-p", both)?);
        for (key, f) in [("freq-s", pair.0), ("freq-p", pair.1)] {
            if f <= 0.0 {
                return Err(usage(format!(
                    "invalid value for `{key}`: frequency {f} GHz must be positive"
                )));
            }
        }
        Ok(pair)
    }

    /// Flag, then environment, then config file.
    fn threads(&self) -> Result<Option<usize>, ParseError> {
        let from = |key: &str, raw: &str| {
            parse_count(raw)
                .and_then(|n| {
                    if n == 0 {
                        Err("must be at least 1".to_string())
                    } else {
                        Ok(n)
                    }
                })
                .map_err(|e| usage(format!("invalid value for `{key}`: {e}")))
        };
        if let Some(raw) = self.flags.get("threads") {
            return from("threads", raw).map(Some);
        }
        if let Some(raw) = &self.env_threads {
            return from(THREADS_ENV, raw).map(Some);
        }
        self.file.get("threads").map(|raw| from("threads", raw)).transpose()
    }
}

fn parse_count(text: &str) -> Result<usize, String> {
    text.parse()
        .map_err(|_| format!("`{text}` is not a non-negative whole number"))
}

fn parse_scheme(text: &str) -> Result<MeasurementScheme, String> {
    text.parse()
        .map_err(|_| format!("`{text}` is not one of ideal, ub, ni"))
}

fn wva_config(settings: &Settings, t_s: f64, t_p: f64) -> Result<WvaConfig, ParseError> {
    let scheme = settings.required("scheme", parse_scheme)?;
    let theta = settings.number("theta", DEFAULT_WVA_THETA)?;
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(usage(format!(
            "invalid value for `theta`: {theta} is outside (0, pi/2)"
        )));
    }
    let g = settings.number("g", DEFAULT_G)?;
    let (freq_s, freq_p) = settings.frequencies()?;
    let mut wva = WvaConfig::aav(theta, g, scheme, t_s, t_p);
    if let Some(dim) = settings.parse("meter-dim", parse_count)? {
        wva = wva
            .with_meter_dim(dim)
            .map_err(|e| usage(format!("invalid value for `meter-dim`: {e}")))?;
    }
    wva.freq_s_ghz = freq_s;
    wva.freq_p_ghz = freq_p;
    wva.allow_strong_coupling = settings.switch("allow-strong-coupling")?;
    Ok(wva)
}

fn build(sub: Subcommand, settings: &Settings) -> Result<RunConfig, ParseError> {
    let task = match sub {
        Subcommand::WvaPoint => {
            let t_s = settings.temperature("ts", FRIDGE_FLOOR_MK)?;
            let t_p = settings.temperature("tp", FRIDGE_FLOOR_MK)?;
            Task::WvaPoint {
                wva: wva_config(settings, t_s, t_p)?,
                oracle: settings.switch("oracle")?,
            }
        }
        Subcommand::WvaSweep => {
            let t_s_grid = settings.temperature_grid("ts")?;
            let t_p_grid = settings.temperature_grid("tp")?;
            Task::WvaSweep {
                wva: wva_config(settings, t_s_grid[0], t_p_grid[0])?,
                t_s_grid,
                t_p_grid,
                oracle: settings.switch("oracle")?,
            }
        }
        Subcommand::SeqRun => Task::SeqRun {
            seq: seq_config(settings)?,
            summary: settings.parse("summary", |s| Ok(PathBuf::from(s)))?,
        },
        Subcommand::Audit => {
            let scheme = settings.required("scheme", parse_scheme)?;
            let (freq_s, freq_p) = settings.frequencies()?;
            let t_s = settings.temperature("ts", FRIDGE_FLOOR_MK)?;
            let t_p = settings.temperature("tp", FRIDGE_FLOOR_MK)?;
            Task::Audit {
                scheme,
                system: spec(freq_s, t_s)?,
                pointer: spec(freq_p, t_p)?,
            }
        }
    };
    Ok(RunConfig {
        out: settings.required("out", |s| Ok(PathBuf::from(s)))?,
        threads: settings.threads()?,
        task,
    })
}

fn spec(freq: f64, temp: f64) -> Result<ThermalQubitSpec, ParseError> {
    ThermalQubitSpec::computational(freq, temp).map_err(|e| usage(e.to_string()))
}

fn seq_config(settings: &Settings) -> Result<SeqConfig, ParseError> {
    let scheme = settings.required("scheme", parse_scheme)?;
    let mut seq = SeqConfig::standard(scheme, 0);
    seq.theta_true = settings.number("theta", PI / 100.0)?;
    seq.n_s = settings.count("ns", seq.n_s)?;
    seq.nu = settings.count("nu", seq.nu)?;
    seq.seed = settings
        .parse("seed", |s| s.parse::<u64>().map_err(|_| format!("`{s}` is not a u64")))?
        .unwrap_or(0);
    let (freq_s, freq_p) = settings.frequencies()?;
    seq.system_spec = spec(freq_s, settings.temperature("ts", DEFAULT_SEQ_TEMP_MK)?)?;
    seq.pointer_spec = spec(freq_p, settings.temperature("tp", DEFAULT_SEQ_TEMP_MK)?)?;
    let grid = settings
        .raw("grid")
        .unwrap_or(DEFAULT_THETA_GRID)
        .split(':')
        .map(str::to_owned)
        .collect::<Vec<_>>();
    seq.theta_grid = match grid.as_slice() {
        [lo, hi, n] => {
            let bad = |e: String| usage(format!("invalid value for `grid`: {e}"));
            ThetaGrid::new(
                parse_number(lo).map_err(bad)?,
                parse_number(hi).map_err(bad)?,
                parse_count(n).map_err(bad)?,
            )
            .map_err(|e| bad(e.to_string()))?
        }
        _ => return Err(usage("invalid value for `grid`: expected lo:hi:n")),
    };
    if seq.theta_grid.points > MAX_GRID_POINTS {
        return Err(usage(format!(
            "invalid value for `grid`: more than {MAX_GRID_POINTS} points"
        )));
    }
    seq.validate().map_err(|e| usage(e.to_string()))?;
    Ok(seq)
}

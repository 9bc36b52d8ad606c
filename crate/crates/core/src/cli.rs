//! Scenario runner behind the `ptqudit` binary.
//!
//! Settings are layered: built-in defaults, then a `--preset`, then the
//! `key = value` file given by `--config`, then explicit flags. Output goes to
//! stdout unless `--out` is given; a relative `--out` is resolved against
//! `PTQUDIT_OUT_DIR` when that variable is set.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dynamics::{
    default_tmax, sample_trajectory, EvolvedDensity, InitialState, Observable, PureState,
    TimeSeries, DEFAULT_STEPS,
};
use crate::linalg::{eig, C64};
use crate::model::{build_hamiltonian, PhaseLabel, PtHamiltonian};
use crate::spectral::{
    geometric_grid, growth_exponent_fit, growth_rate_fit, puiseux_fit, PowerLawFit, RateFit,
    GROWTH_WINDOW,
};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const OUT_DIR_VAR: &str = "PTQUDIT_OUT_DIR";

const CSV_DIGITS: usize = 12;
const JSON_DIGITS: usize = 17;
const SKEWED_WEIGHTS: [f64; 4] = [0.925, 0.025, 0.025, 0.025];

#[derive(Debug, Parser)]
#[command(
    name = "ptqudit",
    version,
    about = "Dynamics and exceptional-point diagnostics of a PT-symmetric qudit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Eigenvalues of H as (Re, Im) pairs.
    Spectrum,
    /// Scaled mode occupations P1..Pd and their sum.
    Evolve,
    /// Total, gain-sector and loss-sector entropies (d = 4).
    Entropy,
    /// Bloch coordinates of the two qubit reductions (d = 4).
    Bloch,
    /// Power-law fits of the perturbed spectrum against δ (γ = J).
    Puiseux,
    /// Power-law exponent of an observable over the late-time window.
    FitGrowth,
    /// Exponential rate of an observable over the late-time window.
    FitRate,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Coupling J (> 0).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub j_coupling: Option<f64>,
    /// Gain/loss rate γ.
    #[arg(
        long,
        global = true,
        allow_negative_numbers = true,
        conflicts_with = "gamma_ratio"
    )]
    pub gamma: Option<f64>,
    /// Gain/loss rate as γ/J.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma_ratio: Option<f64>,
    /// Hilbert-space dimension d = 2j + 1.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// End of the time grid.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tmax: Option<f64>,
    /// Number of grid points, both ends included.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// symmetric | mode1 | paper-mixed | pure:a+bi,... | mixed:w1,...
    #[arg(long, global = true)]
    pub initial: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// key = value settings file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// Smallest δ of the Puiseux grid.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta_min: Option<f64>,
    /// Largest δ of the Puiseux grid.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta_max: Option<f64>,
    /// Geometric grid points per decade of δ.
    #[arg(long, global = true)]
    pub delta_per_decade: Option<usize>,
    /// Column fitted by fit-growth and fit-rate.
    #[arg(long, global = true)]
    pub key: Option<String>,
    /// Fit window start, in units of 1/J.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub window_min: Option<f64>,
    /// Fit window end, in units of 1/J.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub window_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Parameter sets of the four occupation panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig2d,
}

impl Preset {
    pub fn gamma_ratio(self) -> f64 {
        match self {
            Preset::Fig2a => 0.0,
            Preset::Fig2b => 0.2,
            Preset::Fig2c => 1.0,
            Preset::Fig2d => 1.2,
        }
    }

    pub fn initial(self) -> &'static str {
        match self {
            Preset::Fig2a => "mode1",
            _ => "symmetric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum GammaSpec {
    Absolute(f64),
    Ratio(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Symmetric,
    Mode1,
    PaperMixed,
    Pure(Vec<C64>),
    Mixed(Vec<f64>),
}

impl InitialSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "symmetric" => return Ok(InitialSpec::Symmetric),
            "mode1" => return Ok(InitialSpec::Mode1),
            "paper-mixed" => return Ok(InitialSpec::PaperMixed),
            _ => {}
        }
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| Error::domain(format!("unrecognised initial state {s:?}")))?;
        let items: Vec<&str> = body.split(',').map(str::trim).collect();
        match kind {
            "pure" => Ok(InitialSpec::Pure(
                items
                    .iter()
                    .map(|t| parse_complex(t))
                    .collect::<Result<_>>()?,
            )),
            "mixed" => Ok(InitialSpec::Mixed(
                items
                    .iter()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| Error::domain(format!("bad weight {t:?}")))
                    })
                    .collect::<Result<_>>()?,
            )),
            _ => Err(Error::domain(format!(
                "unknown initial-state kind {kind:?}"
            ))),
        }
    }

    pub fn build(&self, d: usize) -> Result<InitialState> {
        let check = |n: usize| {
            if n == d {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "initial state has {n} entries, dimension is {d}"
                )))
            }
        };
        Ok(match self {
            InitialSpec::Symmetric => InitialState::Pure(PureState::symmetric(d)?),
            InitialSpec::Mode1 => InitialState::Pure(PureState::basis(d, 0)?),
            InitialSpec::PaperMixed => {
                if d != 4 {
                    return Err(Error::domain(format!(
                        "paper-mixed is defined for d = 4, got {d}"
                    )));
                }
                InitialState::Mixed(EvolvedDensity::mixed(&SKEWED_WEIGHTS)?)
            }
            InitialSpec::Pure(a) => {
                check(a.len())?;
                InitialState::Pure(PureState::normalized(a.clone())?)
            }
            InitialSpec::Mixed(w) => {
                check(w.len())?;
                InitialState::Mixed(EvolvedDensity::mixed(w)?)
            }
        })
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`.
pub fn parse_complex(s: &str) -> Result<C64> {
    let bad = || Error::domain(format!("bad complex number {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let num = |x: &str| -> Result<f64> {
        let v: f64 = x.parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    let Some(body) = t.strip_suffix('i') else {
        return Ok(C64::new(num(&t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (num(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => num(x)?,
    };
    Ok(C64::new(re, im))
}

/// Fully resolved and validated settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub coupling: f64,
    pub gamma: f64,
    pub dim: usize,
    /// `None` selects the command's default horizon.
    pub tmax: Option<f64>,
    pub steps: usize,
    pub initial: InitialSpec,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_per_decade: usize,
    pub key: String,
    /// Fit window in units of 1/J.
    pub window: (f64, f64),
}

#[derive(Debug, Default)]
struct Layer {
    coupling: Option<f64>,
    gamma: Option<GammaSpec>,
    dim: Option<usize>,
    tmax: Option<f64>,
    steps: Option<usize>,
    initial: Option<String>,
    format: Option<Format>,
    out: Option<PathBuf>,
    preset: Option<Preset>,
    delta_min: Option<f64>,
    delta_max: Option<f64>,
    delta_per_decade: Option<usize>,
    key: Option<String>,
    window_min: Option<f64>,
    window_max: Option<f64>,
}

impl Layer {
    fn from_flags(f: &Flags) -> Self {
        Self {
            coupling: f.j_coupling,
            gamma: f
                .gamma
                .map(GammaSpec::Absolute)
                .or(f.gamma_ratio.map(GammaSpec::Ratio)),
            dim: f.dim,
            tmax: f.tmax,
            steps: f.steps,
            initial: f.initial.clone(),
            format: f.format,
            out: f.out.clone(),
            preset: f.preset,
            delta_min: f.delta_min,
            delta_max: f.delta_max,
            delta_per_decade: f.delta_per_decade,
            key: f.key.clone(),
            window_min: f.window_min,
            window_max: f.window_max,
        }
    }

    fn from_config(text: &str) -> Result<Self> {
        let mut layer = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::domain(format!("config line {}: expected key = value", n + 1))
            })?;
            let (k, v) = (k.trim().replace('_', "-"), v.trim());
            let real = || -> Result<f64> {
                v.parse().map_err(|_| {
                    Error::domain(format!("config line {}: bad number {v:?} for {k}", n + 1))
                })
            };
            let int = || -> Result<usize> {
                v.parse().map_err(|_| {
                    Error::domain(format!("config line {}: bad integer {v:?} for {k}", n + 1))
                })
            };
            let choice = |m: String| Error::domain(format!("config line {}: {m}", n + 1));
            match k.as_str() {
                "j-coupling" => layer.coupling = Some(real()?),
                "gamma" | "gamma-ratio" if layer.gamma.is_some() => {
                    return Err(Error::domain(format!(
                        "config line {}: gamma given twice",
                        n + 1
                    )));
                }
                "gamma" => layer.gamma = Some(GammaSpec::Absolute(real()?)),
                "gamma-ratio" => layer.gamma = Some(GammaSpec::Ratio(real()?)),
                "dim" => layer.dim = Some(int()?),
                "tmax" => layer.tmax = Some(real()?),
                "steps" => layer.steps = Some(int()?),
                "initial" => layer.initial = Some(v.to_string()),
                "format" => layer.format = Some(Format::from_str(v, true).map_err(choice)?),
                "out" => layer.out = Some(PathBuf::from(v)),
                "preset" => layer.preset = Some(Preset::from_str(v, true).map_err(choice)?),
                "delta-min" => layer.delta_min = Some(real()?),
                "delta-max" => layer.delta_max = Some(real()?),
                "delta-per-decade" => layer.delta_per_decade = Some(int()?),
                "key" => layer.key = Some(v.to_string()),
                "window-min" => layer.window_min = Some(real()?),
                "window-max" => layer.window_max = Some(real()?),
                _ => {
                    return Err(Error::domain(format!(
                        "config line {}: unknown key {k:?}",
                        n + 1
                    )))
                }
            }
        }
        Ok(layer)
    }

    /// Fields set in `top` win.
    fn over(self, top: Layer) -> Layer {
        Layer {
            coupling: top.coupling.or(self.coupling),
            gamma: top.gamma.or(self.gamma),
            dim: top.dim.or(self.dim),
            tmax: top.tmax.or(self.tmax),
            steps: top.steps.or(self.steps),
            initial: top.initial.or(self.initial),
            format: top.format.or(self.format),
            out: top.out.or(self.out),
            preset: top.preset.or(self.preset),
            delta_min: top.delta_min.or(self.delta_min),
            delta_max: top.delta_max.or(self.delta_max),
            delta_per_decade: top.delta_per_decade.or(self.delta_per_decade),
            key: top.key.or(self.key),
            window_min: top.window_min.or(self.window_min),
            window_max: top.window_max.or(self.window_max),
        }
    }
}

impl ScenarioConfig {
    /// Merges the config file (if any) under the flags and validates.
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let flag_layer = Layer::from_flags(flags);
        let merged = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::domain(format!("cannot read config {}: {e}", path.display()))
                })?;
                Layer::from_config(&text)?.over(flag_layer)
            }
            None => flag_layer,
        };
        Self::from_layer(merged)
    }

    fn from_layer(l: Layer) -> Result<Self> {
        let coupling = l.coupling.unwrap_or(1.0);
        if !(coupling.is_finite() && coupling > 0.0) {
            return Err(Error::domain(format!(
                "J must be positive and finite, got {coupling}"
            )));
        }
        let gamma = match l
            .gamma
            .or(l.preset.map(|p| GammaSpec::Ratio(p.gamma_ratio())))
        {
            Some(GammaSpec::Absolute(g)) => g,
            Some(GammaSpec::Ratio(r)) => r * coupling,
            None => 0.0,
        };
        let dim = l.dim.unwrap_or(4);
        if dim < 2 {
            return Err(Error::domain(format!(
                "dimension must be at least 2, got {dim}"
            )));
        }
        if let Some(t) = l.tmax {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::domain(format!(
                    "tmax must be positive and finite, got {t}"
                )));
            }
        }
        let steps = l.steps.unwrap_or(DEFAULT_STEPS);
        if steps < 2 {
            return Err(Error::domain(format!(
                "steps must be at least 2, got {steps}"
            )));
        }
        let initial_text = l.initial.or(l.preset.map(|p| p.initial().to_string()));
        let initial = InitialSpec::parse(initial_text.as_deref().unwrap_or("symmetric"))?;
        initial.build(dim)?;
        let delta_min = l.delta_min.unwrap_or(1e-4);
        let delta_max = l.delta_max.unwrap_or(1e-1);
        if !(delta_min > 0.0 && delta_max <= 1.0 && delta_min < delta_max) {
            return Err(Error::domain(format!(
                "δ range must satisfy 0 < min < max <= 1, got [{delta_min}, {delta_max}]"
            )));
        }
        let delta_per_decade = l.delta_per_decade.unwrap_or(12);
        if delta_per_decade == 0 {
            return Err(Error::domain("delta-per-decade must be positive"));
        }
        let window = (
            l.window_min.unwrap_or(GROWTH_WINDOW.0),
            l.window_max.unwrap_or(GROWTH_WINDOW.1),
        );
        if !(window.0 >= 0.0 && window.0 < window.1 && window.1.is_finite()) {
            return Err(Error::domain(format!(
                "fit window [{}, {}] is empty",
                window.0, window.1
            )));
        }
        let cfg = Self {
            coupling,
            gamma,
            dim,
            tmax: l.tmax,
            steps,
            initial,
            format: l.format.unwrap_or(Format::Csv),
            out: l.out,
            delta_min,
            delta_max,
            delta_per_decade,
            key: l.key.unwrap_or_else(|| "trace".into()),
            window,
        };
        cfg.hamiltonian()?;
        Ok(cfg)
    }

    pub fn hamiltonian(&self) -> Result<PtHamiltonian> {
        build_hamiltonian(self.coupling, self.gamma, self.dim)
    }

    pub fn initial_state(&self) -> Result<InitialState> {
        self.initial.build(self.dim)
    }

    pub fn delta_grid(&self) -> Vec<f64> {
        geometric_grid(self.delta_min, self.delta_max, self.delta_per_decade)
    }

    /// Fit window in absolute time.
    pub fn time_window(&self) -> (f64, f64) {
        (self.window.0 / self.coupling, self.window.1 / self.coupling)
    }

    /// Where output goes, with `PTQUDIT_OUT_DIR` applied to relative paths.
    pub fn output_path(&self) -> Option<PathBuf> {
        self.out
            .as_ref()
            .map(|p| match std::env::var_os(OUT_DIR_VAR) {
                Some(dir) if p.is_relative() => Path::new(&dir).join(p),
                _ => p.clone(),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
    Text(String),
}

/// Column-labelled rows ready for CSV or JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn from_series(series: &TimeSeries) -> Self {
        let mut columns = vec!["t".to_string()];
        columns.extend(series.keys().iter().cloned());
        let rows = series
            .times()
            .iter()
            .zip(series.rows())
            .map(|(t, r)| {
                std::iter::once(*t)
                    .chain(r.iter().copied())
                    .map(Cell::Num)
                    .collect()
            })
            .collect();
        Self { columns, rows }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format_g(*x, CSV_DIGITS),
                    Cell::Int(n) => n.to_string(),
                    Cell::Bool(b) => b.to_string(),
                    Cell::Text(t) => t.clone(),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = String::from("[");
        for (i, row) in self.rows.iter().enumerate() {
            s.push_str(if i == 0 { "\n  {" } else { ",\n  {" });
            for (j, (col, cell)) in self.columns.iter().zip(row).enumerate() {
                if j > 0 {
                    s.push_str(", ");
                }
                let value = match cell {
                    Cell::Num(x) if x.is_finite() => format_g(*x, JSON_DIGITS),
                    Cell::Num(_) => "null".into(),
                    Cell::Int(n) => n.to_string(),
                    Cell::Bool(b) => b.to_string(),
                    Cell::Text(t) => json_string(t),
                };
                let _ = write!(s, "{}: {value}", json_string(col));
            }
            s.push('}');
        }
        s.push_str(if self.rows.is_empty() { "]\n" } else { "\n]\n" });
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// C `%.{digits}g`.
pub fn format_g(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn observables(list: &[Observable]) -> BTreeSet<Observable> {
    list.iter().copied().collect()
}

fn trajectory(cfg: &ScenarioConfig, list: &[Observable]) -> Result<TimeSeries> {
    let h = cfg.hamiltonian()?;
    let tmax = cfg.tmax.unwrap_or_else(|| default_tmax(&h));
    sample_trajectory(
        &cfg.initial_state()?,
        &h,
        tmax,
        cfg.steps,
        &observables(list),
    )
}

fn require_two_qubits(cfg: &ScenarioConfig, what: &str) -> Result<()> {
    if cfg.dim == 4 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{what} needs d = 4, got {}",
            cfg.dim
        )))
    }
}

/// Columns `t, P1..Pd, trace`.
pub fn run_evolve(cfg: &ScenarioConfig) -> Result<Table> {
    Ok(Table::from_series(&trajectory(
        cfg,
        &[Observable::Occupations, Observable::Trace],
    )?))
}

/// Columns `t, S_total, S_gain, S_loss`.
pub fn run_entropy(cfg: &ScenarioConfig) -> Result<Table> {
    require_two_qubits(cfg, "entropy")?;
    Ok(Table::from_series(&trajectory(
        cfg,
        &[Observable::Entropy, Observable::SubsystemEntropies],
    )?))
}

/// Columns `t, gx, gy, gz, lx, ly, lz`.
pub fn run_bloch(cfg: &ScenarioConfig) -> Result<Table> {
    require_two_qubits(cfg, "bloch")?;
    Ok(Table::from_series(&trajectory(cfg, &[Observable::Bloch])?))
}

/// Columns `re, im`, sorted by real then imaginary part.
pub fn run_spectrum(cfg: &ScenarioConfig) -> Result<Table> {
    let h = cfg.hamiltonian()?;
    let mut values = eig(h.matrix())?.values;
    // real parts within round-off of each other tie, so conjugate pairs sort by Im
    let tol = 1e-9 * values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let key = |z: &C64| (z.re / tol).round() + 0.0;
    values.sort_by(|a, b| key(a).total_cmp(&key(b)).then(a.im.total_cmp(&b.im)));
    Ok(Table {
        columns: vec!["re".into(), "im".into()],
        rows: values
            .iter()
            .map(|z| vec![Cell::Num(z.re), Cell::Num(z.im)])
            .collect(),
    })
}

const FIT_COLUMNS: [&str; 6] = [
    "exponent",
    "intercept",
    "r_squared",
    "window_min",
    "window_max",
    "n_points",
];

fn fit_row(label: Option<&str>, f: &PowerLawFit) -> Vec<Cell> {
    let mut row: Vec<Cell> = label.map(|l| Cell::Text(l.into())).into_iter().collect();
    row.extend([
        Cell::Num(f.exponent),
        Cell::Num(f.intercept),
        Cell::Num(f.r_squared),
        Cell::Num(f.window.0),
        Cell::Num(f.window.1),
        Cell::Int(f.n_points),
        Cell::Bool(f.accepted),
    ]);
    row
}

fn fit_columns(first: Option<&str>, lead: &str) -> Vec<String> {
    let mut cols: Vec<String> = first.map(String::from).into_iter().collect();
    cols.push(lead.into());
    cols.extend(FIT_COLUMNS[1..].iter().map(|s| s.to_string()));
    cols.push("accepted".into());
    cols
}

/// One row per fitted quantity: `real`, `imag`, `modulus`, `mean_modulus`.
/// A part whose values vanish identically is reported with empty fields.
pub fn run_puiseux(cfg: &ScenarioConfig) -> Result<Table> {
    let h = cfg.hamiltonian()?;
    if h.phase() != PhaseLabel::ExceptionalPoint {
        return Err(Error::domain(format!(
            "puiseux needs γ = J, got γ/J = {}",
            cfg.gamma / cfg.coupling
        )));
    }
    let report = puiseux_fit(&h, &cfg.delta_grid())?;
    let mut rows = Vec::new();
    for (label, fit) in [("real", &report.real), ("imag", &report.imag)] {
        rows.push(match fit {
            Some(f) => fit_row(Some(label), f),
            None => {
                let mut r = vec![Cell::Text(label.into())];
                r.extend(std::iter::repeat_n(Cell::Num(f64::NAN), 5));
                r.extend([Cell::Int(report.deltas.len()), Cell::Bool(false)]);
                r
            }
        });
    }
    rows.push(fit_row(Some("modulus"), &report.modulus));
    rows.push(fit_row(Some("mean_modulus"), &report.mean));
    Ok(Table {
        columns: fit_columns(Some("part"), "exponent"),
        rows,
    })
}

fn fit_series(cfg: &ScenarioConfig) -> Result<TimeSeries> {
    let (_, hi) = cfg.time_window();
    let tmax = cfg.tmax.unwrap_or(hi);
    let list = [
        Observable::Occupations,
        Observable::Trace,
        Observable::Entropy,
    ];
    let h = cfg.hamiltonian()?;
    let mut list = list.to_vec();
    if cfg.dim == 4 {
        list.push(Observable::SubsystemEntropies);
    }
    sample_trajectory(
        &cfg.initial_state()?,
        &h,
        tmax,
        cfg.steps,
        &observables(&list),
    )
}

/// Power-law fit of `cfg.key` (default `trace`, i.e. Σ P_k).
pub fn run_fit_growth(cfg: &ScenarioConfig) -> Result<Table> {
    let series = fit_series(cfg)?;
    let fit = growth_exponent_fit(&series, &cfg.key, cfg.time_window())?;
    Ok(Table {
        columns: fit_columns(None, "exponent"),
        rows: vec![fit_row(None, &fit)],
    })
}

/// Exponential-rate fit of `cfg.key`.
pub fn run_fit_rate(cfg: &ScenarioConfig) -> Result<Table> {
    let series = fit_series(cfg)?;
    let fit: RateFit = growth_rate_fit(&series, &cfg.key, cfg.time_window())?;
    let as_power = PowerLawFit {
        exponent: fit.rate,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        window: fit.window,
        n_points: fit.n_points,
        accepted: fit.accepted,
    };
    Ok(Table {
        columns: fit_columns(None, "rate"),
        rows: vec![fit_row(None, &as_power)],
    })
}

pub fn run(command: Command, cfg: &ScenarioConfig) -> Result<Table> {
    match command {
        Command::Spectrum => run_spectrum(cfg),
        Command::Evolve => run_evolve(cfg),
        Command::Entropy => run_entropy(cfg),
        Command::Bloch => run_bloch(cfg),
        Command::Puiseux => run_puiseux(cfg),
        Command::FitGrowth => run_fit_growth(cfg),
        Command::FitRate => run_fit_rate(cfg),
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_VALIDATION
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let cfg = match ScenarioConfig::resolve(&cli.flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(stderr, "ptqudit: {e}");
            return EXIT_VALIDATION;
        }
    };
    let table = match run(cli.command, &cfg) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(stderr, "ptqudit: {e}");
            return exit_code(&e);
        }
    };
    let text = table.render(cfg.format);
    let written = match cfg.output_path() {
        Some(path) => {
            std::fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| format!("cannot write output: {e}")),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(m) => {
            let _ = writeln!(stderr, "ptqudit: {m}");
            EXIT_VALIDATION
        }
    }
}

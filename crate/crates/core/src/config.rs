//! Run configuration: TOML files with `--set key=value` overrides.
//!
//! The grammar is documented in `docs/formats.md`. Every table rejects
//! unknown keys, and every error carries the dotted key path it refers to.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dipole::{dressed_triplet, DressedTriplet, EmitterPairConfig};
use crate::error::{Error, Result};
use crate::liouvillian::{SensorSpec, DEFAULT_EPSILON};
use crate::observables::{Filter, SpectrumMethod};

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_CHECKPOINT_EVERY: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Spectrum,
    G2map,
    G2tau,
    Csi,
    Bell,
    Dressed,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TaskKind::Spectrum => "spectrum",
            TaskKind::G2map => "g2map",
            TaskKind::G2tau => "g2tau",
            TaskKind::Csi => "csi",
            TaskKind::Bell => "bell",
            TaskKind::Dressed => "dressed",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::invalid("output.format", format!("expected csv or json, got `{s}`"))),
        }
    }
}

/// A frequency given either as a number or as a dressed-triplet label such
/// as `"D13"`, `"-D23"` or `"+D12"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Frequency {
    Value(f64),
    Label(String),
}

impl Frequency {
    pub fn resolve(&self, triplet: &DressedTriplet, field: &str) -> Result<f64> {
        match self {
            Frequency::Value(v) => Ok(*v),
            Frequency::Label(s) => {
                let (sign, rest) = match s.trim().strip_prefix('-') {
                    Some(r) => (-1.0, r),
                    None => (1.0, s.trim().trim_start_matches('+')),
                };
                let v = match rest {
                    "0" => 0.0,
                    "D12" => triplet.delta_12,
                    "D23" => triplet.delta_23,
                    "D13" => triplet.delta_13,
                    _ => {
                        return Err(Error::invalid(
                            field,
                            format!("unknown frequency label `{s}` (use a number or [+-]D12, D23, D13)"),
                        ))
                    }
                };
                Ok(sign * v)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSection {
    /// Γₛ.
    #[serde(default = "default_linewidth")]
    pub linewidth: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_linewidth() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl Default for SensorSection {
    fn default() -> Self {
        Self {
            linewidth: default_linewidth(),
            epsilon: default_epsilon(),
        }
    }
}

impl SensorSection {
    pub fn filter(&self) -> Filter {
        Filter::new(self.linewidth).with_epsilon(self.epsilon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub kind: TaskKind,
    /// Spectrum method; sensor scan unless set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<SpectrumMethod>,
    /// Fixed frequencies for `g2tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega1: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega2: Option<Frequency>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        crate::observables::linspace(self.min, self.max, self.points)
    }

    fn validate(&self, field: &str) -> Result<()> {
        if self.points == 0 {
            return Err(Error::invalid(format!("{field}.points"), "must be ≥ 1"));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            return Err(Error::invalid(field, "need finite min ≤ max"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Frequency axis for spectra and the ω₁ axis for maps and lines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega1: Option<Axis>,
    /// ω₂ axis for maps; defaults to the ω₁ axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega2: Option<Axis>,
    /// When set, `csi`, `bell` and `g2map` sweep the line `ω₁ + ω₂ = antidiagonal`
    /// along the ω₁ axis instead of the full map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antidiagonal: Option<Frequency>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauSection {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl TauSection {
    pub fn values(&self) -> Vec<f64> {
        crate::observables::linspace(self.min, self.max, self.points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Write the wall-clock line into the header. Disable for byte-identical reruns.
    #[serde(default = "yes")]
    pub timestamp: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            path: None,
            format: OutputFormat::Csv,
            timestamp: true,
            checkpoint: None,
            checkpoint_every: DEFAULT_CHECKPOINT_EVERY,
        }
    }
}

fn yes() -> bool {
    true
}

fn default_checkpoint_every() -> usize {
    DEFAULT_CHECKPOINT_EVERY
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParallelismSection {
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Cap on concurrent four-sensor solves.
    #[serde(default = "default_bell_workers")]
    pub bell_workers: usize,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn default_bell_workers() -> usize {
    (default_workers() / 2).max(1)
}

impl Default for ParallelismSection {
    fn default() -> Self {
        Self {
            workers: default_workers(),
            bell_workers: default_bell_workers(),
        }
    }
}

/// As written in the file, before defaults that depend on the physics.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    version: Option<u32>,
    #[serde(default)]
    emitter: EmitterPairConfig,
    #[serde(default)]
    sensors: SensorSection,
    task: TaskSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    tau: Option<TauSection>,
    #[serde(default)]
    output: OutputSection,
    #[serde(default)]
    parallelism: ParallelismSection,
}

/// A fully resolved and validated run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub emitter: EmitterPairConfig,
    pub sensors: SensorSection,
    pub task: TaskSection,
    pub grid: GridSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<TauSection>,
    pub output: OutputSection,
    pub parallelism: ParallelismSection,
}

impl RunConfig {
    /// Parses TOML text, applies `key=value` overrides, fills defaults and validates.
    pub fn from_toml_str(text: &str, overrides: &[String], origin: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let raw: RawConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            Error::Config {
                path: if path == "." { origin.to_string() } else { path },
                message: e.into_inner().to_string(),
            }
        })?;
        Self::resolve(raw)
    }

    /// Round-trips through the TOML echo, so configs written by
    /// [`RunConfig::to_toml`] reload to an identical value.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        let version = raw.version.unwrap_or(CONFIG_VERSION);
        if version != CONFIG_VERSION {
            return Err(config_error(
                "version",
                format!("unsupported config version {version}, expected {CONFIG_VERSION}"),
            ));
        }
        let mut cfg = RunConfig {
            version,
            emitter: raw.emitter,
            sensors: raw.sensors,
            task: raw.task,
            grid: raw.grid,
            tau: raw.tau,
            output: raw.output,
            parallelism: raw.parallelism,
        };
        cfg.validate_physics()?;
        cfg.fill_defaults()?;
        cfg.validate_layout()?;
        Ok(cfg)
    }

    pub fn triplet(&self) -> Result<DressedTriplet> {
        Ok(dressed_triplet(&self.emitter, &self.emitter.effective_coefficients()?))
    }

    fn validate_physics(&self) -> Result<()> {
        self.emitter.validate().map_err(|e| prefixed(e, "emitter"))?;
        SensorSpec::new(0.0, self.sensors.linewidth)
            .with_epsilon(self.sensors.epsilon)
            .validate()
            .map_err(|e| prefixed(e, "sensors"))?;
        if !(self.sensors.epsilon > 0.0) {
            return Err(config_error("sensors.epsilon", "must be > 0"));
        }
        self.emitter.effective_coefficients().map_err(|e| prefixed(e, "emitter"))?;
        Ok(())
    }

    fn fill_defaults(&mut self) -> Result<()> {
        let triplet = self.triplet()?;
        let span = triplet.delta_13 + 10.0;
        let points = match self.task.kind {
            TaskKind::Spectrum => 401,
            TaskKind::G2map => 101,
            TaskKind::Csi | TaskKind::Bell => 81,
            TaskKind::G2tau | TaskKind::Dressed => 0,
        };
        if points > 0 && self.grid.omega1.is_none() {
            self.grid.omega1 = Some(Axis {
                min: -span,
                max: span,
                points,
            });
        }
        if self.task.kind == TaskKind::Spectrum && self.task.method.is_none() {
            self.task.method = Some(SpectrumMethod::SensorScan);
        }
        let needs_tau = self.task.kind == TaskKind::G2tau
            || (self.task.kind == TaskKind::Spectrum && self.task.method == Some(SpectrumMethod::G1Fourier));
        if needs_tau && self.tau.is_none() {
            self.tau = Some(if self.task.kind == TaskKind::G2tau {
                TauSection {
                    min: -3.0,
                    max: 3.0,
                    points: 121,
                }
            } else {
                TauSection {
                    min: 0.0,
                    max: 50.0,
                    points: 5001,
                }
            });
        }
        Ok(())
    }

    fn validate_layout(&self) -> Result<()> {
        if let Some(a) = &self.grid.omega1 {
            a.validate("grid.omega1").map_err(|e| prefixed(e, ""))?;
        }
        if let Some(a) = &self.grid.omega2 {
            a.validate("grid.omega2").map_err(|e| prefixed(e, ""))?;
        }
        let triplet = self.triplet()?;
        if let Some(s) = &self.grid.antidiagonal {
            s.resolve(&triplet, "grid.antidiagonal").map_err(|e| prefixed(e, ""))?;
        }
        match self.task.kind {
            TaskKind::G2tau => {
                for (name, f) in [("task.omega1", &self.task.omega1), ("task.omega2", &self.task.omega2)] {
                    match f {
                        None => return Err(config_error(name, "required for task g2tau")),
                        Some(f) => {
                            f.resolve(&triplet, name).map_err(|e| prefixed(e, ""))?;
                        }
                    }
                }
            }
            _ => {
                if self.task.omega1.is_some() || self.task.omega2.is_some() {
                    return Err(config_error("task.omega1", "only used by task g2tau"));
                }
            }
        }
        if self.task.method.is_some() && self.task.kind != TaskKind::Spectrum {
            return Err(config_error("task.method", "only used by task spectrum"));
        }
        if let Some(t) = &self.tau {
            if t.points == 0 || !(t.min.is_finite() && t.max.is_finite()) || t.max < t.min {
                return Err(config_error("tau", "need finite min ≤ max and points ≥ 1"));
            }
            if self.task.method == Some(SpectrumMethod::G1Fourier) && (t.min != 0.0 || t.points < 2 || t.max <= 0.0) {
                return Err(config_error("tau", "the Fourier spectrum needs min = 0, max > 0, points ≥ 2"));
            }
        }
        if self.output.checkpoint_every == 0 {
            return Err(config_error("output.checkpoint_every", "must be ≥ 1"));
        }
        if self.parallelism.workers == 0 {
            return Err(config_error("parallelism.workers", "must be ≥ 1"));
        }
        if self.parallelism.bell_workers == 0 {
            return Err(config_error("parallelism.bell_workers", "must be ≥ 1"));
        }
        Ok(())
    }
}

/// Loads and validates a configuration file.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    RunConfig::from_toml_str(&text, overrides, &path.display().to_string())
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Turns a validation error from a physics module into a config error whose
/// path is rooted at `section`.
fn prefixed(e: Error, section: &str) -> Error {
    match e {
        Error::InvalidParameter { field, reason } => {
            let leaf = field.strip_prefix("sensor.").unwrap_or(&field);
            let path = if section.is_empty() {
                leaf.to_string()
            } else {
                format!("{section}.{leaf}")
            };
            Error::Config { path, message: reason }
        }
        Error::Config { .. } => e,
        other => Error::Config {
            path: section.to_string(),
            message: other.to_string(),
        },
    }
}

/// Applies `a.b.c=value`. The value is parsed as TOML and falls back to a
/// bare string, so `--set task.kind=csi` and `--set emitter.rabi=25` both work.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| config_error(spec, "override must look like key=value"))?;
    let key = key.trim();
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));

    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_error(key, "empty key segment"));
    }
    let mut node = table;
    for (i, part) in parts[..parts.len() - 1].iter().enumerate() {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| config_error(&parts[..=i].join("."), "is not a table"))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

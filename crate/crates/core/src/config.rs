//! Model parameters and their validation.
//!
//! A [`SystemConfig`] is built from a flat key-value map, usually parsed from a
//! TOML file plus `KEY=VALUE` overrides. Recognized keys:
//!
//! | key               | type          | default |
//! |-------------------|---------------|---------|
//! | `g`               | float ≥ 0     | required |
//! | `gamma`           | float ≥ 0     | required |
//! | `n_max`           | integer ≥ 1   | required |
//! | `omega_p`         | float         | 0 |
//! | `Omega`           | float         | 0 |
//! | `trunc_tol`       | float in (0,1)| 1e-12 |
//! | `suppressed_modes`| integer list  | empty |

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_TRUNC_TOL: f64 = 1e-12;

/// One raw parameter value before validation.
#[derive(Clone, Debug, PartialEq)]
pub enum RawValue {
    Int(i64),
    Float(f64),
    List(Vec<i64>),
}

impl RawValue {
    fn as_f64(&self, field: &str) -> Result<f64> {
        match *self {
            RawValue::Int(i) => Ok(i as f64),
            RawValue::Float(x) => Ok(x),
            RawValue::List(_) => Err(Error::config(field, "must be a number")),
        }
    }

    /// Parses the textual form used on the command line: `3`, `0.5`, `1e-12`,
    /// `[1, 2]` or `1,2`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let is_list = text.starts_with('[') || text.contains(',');
        if is_list {
            let inner = text.trim_start_matches('[').trim_end_matches(']');
            let items = inner
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<i64>()
                        .map_err(|_| Error::Parse(format!("`{s}` is not an integer")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(RawValue::List(items));
        }
        if let Ok(i) = text.parse::<i64>() {
            return Ok(RawValue::Int(i));
        }
        text.parse::<f64>()
            .map(RawValue::Float)
            .map_err(|_| Error::Parse(format!("`{text}` is not a number or integer list")))
    }
}

pub type RawParams = BTreeMap<String, RawValue>;

const KNOWN_KEYS: [&str; 7] = [
    "g",
    "gamma",
    "omega_p",
    "Omega",
    "n_max",
    "trunc_tol",
    "suppressed_modes",
];

pub fn is_config_key(key: &str) -> bool {
    KNOWN_KEYS.contains(&key)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemConfig {
    /// Photon-phonon coupling rate.
    pub g: f64,
    /// Optical energy decay rate, identical for every ladder mode.
    pub gamma: f64,
    /// Central optical angular frequency (mode m = 0).
    pub omega_p: f64,
    /// Phonon angular frequency, also the ladder spacing.
    #[serde(rename = "Omega")]
    pub omega: f64,
    /// Highest retained phonon number / scattering order.
    pub n_max: usize,
    pub trunc_tol: f64,
    /// Ladder modes removed from the Hamiltonian (stop-bands).
    pub suppressed_modes: BTreeSet<i64>,
}

impl SystemConfig {
    /// Lossless config with defaults for everything but `g` and `n_max`.
    pub fn lossless(g: f64, n_max: usize) -> Result<Self> {
        SystemConfig {
            g,
            gamma: 0.0,
            omega_p: 0.0,
            omega: 0.0,
            n_max,
            trunc_tol: DEFAULT_TRUNC_TOL,
            suppressed_modes: BTreeSet::new(),
        }
        .validated()
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validated()
    }

    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        self.n_max = n_max;
        self.validated()
    }

    pub fn with_frequencies(mut self, omega_p: f64, omega: f64) -> Result<Self> {
        self.omega_p = omega_p;
        self.omega = omega;
        self.validated()
    }

    pub fn with_suppressed<I: IntoIterator<Item = i64>>(mut self, modes: I) -> Result<Self> {
        self.suppressed_modes = modes.into_iter().collect();
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        check_rate("g", self.g)?;
        check_rate("gamma", self.gamma)?;
        if !self.omega_p.is_finite() {
            return Err(Error::config("omega_p", "must be finite"));
        }
        if !self.omega.is_finite() {
            return Err(Error::config("Omega", "must be finite"));
        }
        if self.n_max < 1 {
            return Err(Error::config("n_max", "must be at least 1"));
        }
        if !(self.trunc_tol > 0.0 && self.trunc_tol < 1.0) {
            return Err(Error::config("trunc_tol", "must lie in (0, 1)"));
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn is_suppressed(&self, mode: i64) -> bool {
        self.suppressed_modes.contains(&mode)
    }

    /// Whether the Stokes step between phonon levels `n` and `n+1` survives,
    /// i.e. neither ladder mode `-n` nor `-(n+1)` carries a stop-band.
    pub fn link_active(&self, n: usize) -> bool {
        let upper = -(n as i64);
        !self.is_suppressed(upper) && !self.is_suppressed(upper - 1)
    }

    /// True when some reachable mode (m ≤ 0) is suppressed, which invalidates
    /// the closed-form solutions.
    pub fn suppresses_reachable_mode(&self) -> bool {
        self.suppressed_modes.iter().any(|&m| m <= 0)
    }

    /// Angular frequency of ladder mode `m`.
    pub fn mode_frequency(&self, m: i64) -> f64 {
        self.omega_p + m as f64 * self.omega
    }

    /// Converts a dimensionless `gt` into the loss exponent `γt`.
    pub fn loss_exponent(&self, gt: f64) -> Result<f64> {
        if self.gamma == 0.0 {
            Ok(0.0)
        } else if self.g == 0.0 {
            Err(Error::Usage(
                "loss exponent γt is undefined from gt when g = 0".into(),
            ))
        } else {
            Ok(gt * self.gamma / self.g)
        }
    }
}

fn check_rate(field: &str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::config(field, "must be finite"));
    }
    if value < 0.0 {
        return Err(Error::config(field, "must be nonnegative"));
    }
    Ok(())
}

fn required(raw: &RawParams, key: &str) -> Result<f64> {
    let value = raw
        .get(key)
        .ok_or_else(|| Error::config(key, "is required"))?
        .as_f64(key)?;
    if !value.is_finite() {
        return Err(Error::config(key, "must be finite"));
    }
    Ok(value)
}

fn optional(raw: &RawParams, key: &str, default: f64) -> Result<f64> {
    match raw.get(key) {
        None => Ok(default),
        Some(v) => {
            let value = v.as_f64(key)?;
            if !value.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
            Ok(value)
        }
    }
}

/// Validates a raw parameter map and fills defaults.
pub fn make_config(raw: &RawParams) -> Result<SystemConfig> {
    if let Some(unknown) = raw.keys().find(|k| !is_config_key(k)) {
        return Err(Error::config(unknown, "is not a recognized parameter"));
    }
    let n_max = match raw.get("n_max") {
        None => return Err(Error::config("n_max", "is required")),
        Some(RawValue::Int(i)) if *i < 1 => {
            return Err(Error::config("n_max", "must be at least 1"))
        }
        Some(RawValue::Int(i)) => *i as usize,
        Some(_) => return Err(Error::config("n_max", "must be an integer")),
    };
    let suppressed_modes = match raw.get("suppressed_modes") {
        None => BTreeSet::new(),
        Some(RawValue::List(v)) => v.iter().copied().collect(),
        Some(RawValue::Int(i)) => BTreeSet::from([*i]),
        Some(RawValue::Float(_)) => {
            return Err(Error::config(
                "suppressed_modes",
                "must be a list of integers",
            ))
        }
    };
    SystemConfig {
        g: required(raw, "g")?,
        gamma: required(raw, "gamma")?,
        omega_p: optional(raw, "omega_p", 0.0)?,
        omega: optional(raw, "Omega", 0.0)?,
        n_max,
        trunc_tol: optional(raw, "trunc_tol", DEFAULT_TRUNC_TOL)?,
        suppressed_modes,
    }
    .validated()
}

/// Reads a flat TOML table into raw parameters. Non-config keys are kept so
/// that experiment settings can live in the same file.
pub fn parse_params(text: &str) -> Result<RawParams> {
    let table: toml::Table = text.parse().map_err(|e| Error::Parse(format!("{e}")))?;
    let mut raw = RawParams::new();
    for (key, value) in table {
        let parsed = match value {
            toml::Value::Integer(i) => RawValue::Int(i),
            toml::Value::Float(x) => RawValue::Float(x),
            toml::Value::Array(items) => RawValue::List(
                items
                    .iter()
                    .map(|item| {
                        item.as_integer()
                            .ok_or_else(|| Error::config(&key, "must be a list of integers"))
                    })
                    .collect::<Result<_>>()?,
            ),
            other => {
                return Err(Error::config(
                    &key,
                    format!("has unsupported value `{other}`"),
                ))
            }
        };
        raw.insert(key, parsed);
    }
    Ok(raw)
}

pub fn load_params(path: &Path) -> Result<RawParams> {
    parse_params(&std::fs::read_to_string(path)?)
}

/// Splits `KEY=VALUE`.
pub fn parse_override(text: &str) -> Result<(String, RawValue)> {
    let (key, value) = text
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("override `{text}` is not KEY=VALUE")))?;
    Ok((key.trim().to_string(), RawValue::parse(value)?))
}

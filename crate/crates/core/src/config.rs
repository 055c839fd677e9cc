//! Run configuration: flat `key = value` files plus command-line overrides.
//!
//! ```text
//! # link
//! distance = 80
//! jitter = 0.025
//! schemes = bpsk, qpsk
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys, malformed values
//! and out-of-range values are rejected with the key named in the error.
//! Overrides are applied after the file, so they win.

use std::path::Path;
use std::str::FromStr;

use crate::channel::{JitterInterpretation, LinkConfig};
use crate::error::{Error, Result};
use crate::experiments::{Method, SweepSpec};
use crate::montecarlo::{McConfig, McMode};
use crate::ser::ModulationScheme;

/// Every accepted key, in the order they are documented.
pub const KEYS: &[&str] = &[
    "frequency",
    "gain_tx",
    "gain_rx",
    "distance",
    "aperture_radius",
    "beam_waist",
    "jitter",
    "jitter_interpretation",
    "temperature",
    "pressure",
    "relative_humidity",
    "scheme",
    "snr_db",
    "mode",
    "trials",
    "seed",
    "chunk_size",
    "confidence_level",
    "snr_min",
    "snr_max",
    "snr_step",
    "distances",
    "jitters",
    "schemes",
    "methods",
    "f_min",
    "f_max",
    "f_step",
];

/// Frequency grid for absorption tables, Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub f_min: f64,
    pub f_max: f64,
    pub f_step: f64,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self {
            f_min: 200e9,
            f_max: 400e9,
            f_step: 1e9,
        }
    }
}

impl FrequencyGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.f_max - self.f_min) / self.f_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| self.f_min + i as f64 * self.f_step)
            .collect()
    }
}

/// Everything a CLI invocation may need.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub link: LinkConfig,
    pub mc: McConfig,
    /// Scheme for single-point commands.
    pub scheme: ModulationScheme,
    /// Average SNR (dB) for single-point commands.
    pub snr_db: f64,
    /// Sweep grids; `base` and `mc` mirror `link` and `mc`.
    pub sweep: SweepSpec,
    pub frequencies: FrequencyGrid,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sweep = SweepSpec::default();
        Self {
            link: sweep.base,
            mc: sweep.mc,
            scheme: ModulationScheme::Bpsk,
            snr_db: 40.0,
            sweep,
            frequencies: FrequencyGrid::default(),
        }
    }
}

fn config_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| config_err(key, format!("cannot parse `{}`: {e}", value.trim())))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(config_err(key, "list must not be empty"));
    }
    Ok(items)
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse_value(key, value)?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(config_err(
            key,
            format!("must be a positive finite number, got {v}"),
        ))
    }
}

fn finite(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse_value(key, value)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(key, format!("must be finite, got {v}")))
    }
}

/// Parse a config source into `(line number, key, value)` triples.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(config_err(
                line,
                format!("line {}: expected `key = value`", i + 1),
            ));
        };
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Set (`snr_min`, `snr_max`, `snr_step`); resolved into a grid at the end.
#[derive(Debug, Default)]
struct SnrRange {
    min: Option<f64>,
    max: Option<f64>,
    step: Option<f64>,
}

fn apply(cfg: &mut RunConfig, snr: &mut SnrRange, key: &str, value: &str) -> Result<()> {
    let link = &mut cfg.link;
    match key {
        "frequency" => link.frequency = positive(key, value)?,
        "gain_tx" => link.gain_tx = finite(key, value)?,
        "gain_rx" => link.gain_rx = finite(key, value)?,
        "distance" => link.distance = positive(key, value)?,
        "aperture_radius" => link.aperture_radius = positive(key, value)?,
        "beam_waist" => link.beam_waist = positive(key, value)?,
        "jitter" => {
            let v: f64 = parse_value(key, value)?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(config_err(key, format!("must be non-negative, got {v}")));
            }
            link.jitter_value = v;
        }
        "jitter_interpretation" => {
            link.jitter_interpretation = parse_value::<JitterInterpretation>(key, value)?
        }
        "temperature" => link.conditions.temperature = positive(key, value)?,
        "pressure" => link.conditions.pressure = positive(key, value)?,
        "relative_humidity" => {
            let v: f64 = parse_value(key, value)?;
            if !(0.0..=100.0).contains(&v) {
                return Err(config_err(key, format!("must lie in [0, 100], got {v}")));
            }
            link.conditions.relative_humidity = v;
        }
        "scheme" => cfg.scheme = parse_value(key, value)?,
        "snr_db" => cfg.snr_db = finite(key, value)?,
        "mode" => cfg.mc.mode = parse_value::<McMode>(key, value)?,
        "trials" => {
            cfg.mc.num_trials = parse_value(key, value)?;
            if cfg.mc.num_trials == 0 {
                return Err(config_err(key, "must be at least 1"));
            }
        }
        "seed" => cfg.mc.seed = parse_value(key, value)?,
        "chunk_size" => {
            cfg.mc.chunk_size = parse_value(key, value)?;
            if cfg.mc.chunk_size == 0 {
                return Err(config_err(key, "must be at least 1"));
            }
        }
        "confidence_level" => {
            let v: f64 = parse_value(key, value)?;
            if !(v > 0.0 && v < 1.0) {
                return Err(config_err(key, format!("must lie in (0, 1), got {v}")));
            }
            cfg.mc.confidence_level = v;
        }
        "snr_min" => snr.min = Some(finite(key, value)?),
        "snr_max" => snr.max = Some(finite(key, value)?),
        "snr_step" => snr.step = Some(positive(key, value)?),
        "distances" => {
            cfg.sweep.distances = parse_list(key, value)?;
            if cfg
                .sweep
                .distances
                .iter()
                .any(|d| !(d.is_finite() && *d > 0.0))
            {
                return Err(config_err(key, "distances must be positive"));
            }
        }
        "jitters" => {
            cfg.sweep.jitter_values = parse_list(key, value)?;
            if cfg
                .sweep
                .jitter_values
                .iter()
                .any(|j| !(j.is_finite() && *j >= 0.0))
            {
                return Err(config_err(key, "jitter values must be non-negative"));
            }
        }
        "schemes" => cfg.sweep.schemes = parse_list(key, value)?,
        "methods" => cfg.sweep.methods = parse_list::<Method>(key, value)?,
        "f_min" => cfg.frequencies.f_min = positive(key, value)?,
        "f_max" => cfg.frequencies.f_max = positive(key, value)?,
        "f_step" => cfg.frequencies.f_step = positive(key, value)?,
        other => {
            return Err(config_err(
                other,
                format!("unknown key (accepted keys: {})", KEYS.join(", ")),
            ))
        }
    }
    Ok(())
}

fn snr_grid(range: &SnrRange, default: &[f64]) -> Result<Vec<f64>> {
    if range.min.is_none() && range.max.is_none() && range.step.is_none() {
        return Ok(default.to_vec());
    }
    let min = range.min.unwrap_or(default[0]);
    let max = range.max.unwrap_or(default[default.len() - 1]);
    let step = range.step.unwrap_or(2.0);
    if max < min {
        return Err(config_err(
            "snr_max",
            format!("{max} is below snr_min {min}"),
        ));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(config_err("snr_step", "grid would exceed 10^6 points"));
    }
    Ok((0..=n).map(|i| min + i as f64 * step).collect())
}

/// Build a validated [`RunConfig`] from an optional file and key/value
/// overrides. Without a file and overrides this is the default configuration.
pub fn parse_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let text = match path {
        Some(p) => {
            std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?
        }
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}

/// [`parse_config`] on in-memory text.
pub fn parse_config_str(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut snr = SnrRange::default();
    for (line, key, value) in parse_pairs(text)? {
        apply(&mut cfg, &mut snr, &key, &value).map_err(|e| match e {
            Error::Config { key, msg } => Error::Config {
                key,
                msg: format!("line {line}: {msg}"),
            },
            other => other,
        })?;
    }
    for (key, value) in overrides {
        apply(&mut cfg, &mut snr, key, value)?;
    }
    cfg.sweep.snr_grid = snr_grid(&snr, &cfg.sweep.snr_grid)?;
    cfg.sweep.base = cfg.link;
    cfg.sweep.mc = cfg.mc;

    if cfg.frequencies.f_max < cfg.frequencies.f_min {
        return Err(config_err("f_max", "must not be below f_min"));
    }
    cfg.link
        .validate()
        .map_err(|e| config_err("link", e.to_string()))?;
    cfg.sweep
        .validate()
        .map_err(|e| config_err("sweep", e.to_string()))?;
    Ok(cfg)
}

//! Experiment configuration in a flat `section.key = value` format.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Every key is optional; omitted keys take the evaluation-corridor
//! defaults. List values are comma separated.
//!
//! ```text
//! # two schemes, finer sweep
//! steering.modes = static, unbiased
//! sweep.step = 0.005
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::error::Error;
use crate::mobility::{LatencyBudget, MobilityModel};
use crate::scene::{Scene, SceneParams};
use crate::steering::{PositionGrid, SteeringMode};
use crate::tracer::TracerConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("duplicate key `{0}`")]
    DuplicateKey(String),

    #[error("`{key}`: expected {expected}, got `{value}`")]
    Type {
        key: String,
        expected: &'static str,
        value: String,
    },

    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// Key path the error refers to, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::UnknownKey(k) | ConfigError::DuplicateKey(k) => Some(k),
            ConfigError::Type { key, .. } | ConfigError::Invalid { key, .. } => Some(key),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Static,
    Unbiased,
    Biased,
}

impl ModeKind {
    fn as_str(&self) -> &'static str {
        match self {
            ModeKind::Static => "static",
            ModeKind::Unbiased => "unbiased",
            ModeKind::Biased => "biased",
        }
    }
}

impl FromStr for ModeKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "static" => Ok(ModeKind::Static),
            "unbiased" => Ok(ModeKind::Unbiased),
            "biased" => Ok(ModeKind::Biased),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepRange {
    /// `start + k * step` for every k that stays within `stop`.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scene: SceneParams,
    /// `Δx_Tx`, spacing of candidate user positions, m.
    pub tx_step: f64,
    pub tx_power_dbm: f64,
    pub latency: LatencyBudget,
    pub mobility: MobilityModel,
    pub mode_kinds: Vec<ModeKind>,
    /// One biased scheme is run per entry.
    pub bias_p: Vec<f64>,
    pub j_c: usize,
    /// Dislocation span covered by the position grid; defaults to the
    /// sweep stop.
    pub max_dislocation: Option<f64>,
    /// Also trace the plain mirror ceiling.
    pub baseline: bool,
    pub tracer: TracerConfig,
    pub sweep: SweepRange,
    pub output_csv: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scene: SceneParams::default(),
            tx_step: 0.002,
            tx_power_dbm: 20.0,
            latency: LatencyBudget::default(),
            mobility: MobilityModel::default(),
            mode_kinds: vec![ModeKind::Static, ModeKind::Unbiased, ModeKind::Biased],
            bias_p: vec![0.1, 0.3, 0.5],
            j_c: 0,
            max_dislocation: None,
            baseline: true,
            tracer: TracerConfig::default(),
            sweep: SweepRange {
                start: 0.0,
                stop: 0.5,
                step: 0.01,
            },
            output_csv: None,
        }
    }
}

impl ExperimentConfig {
    pub fn tx_power_w(&self) -> f64 {
        10f64.powf((self.tx_power_dbm - 30.0) / 10.0)
    }

    pub fn position_grid(&self) -> PositionGrid {
        PositionGrid {
            tx_step: self.tx_step,
            max_dislocation: self.max_dislocation.unwrap_or(self.sweep.stop),
        }
    }

    /// Steering schemes in configuration order, biased expanded per `bias_p`.
    pub fn modes(&self) -> Vec<SteeringMode> {
        let mut out = Vec::new();
        for kind in &self.mode_kinds {
            match kind {
                ModeKind::Static => out.push(SteeringMode::Static),
                ModeKind::Unbiased => out.push(SteeringMode::Unbiased),
                ModeKind::Biased => out.extend(self.bias_p.iter().map(|&bias_p| {
                    SteeringMode::Biased {
                        bias_p,
                        j_c: self.j_c,
                    }
                })),
            }
        }
        out
    }

    pub fn build_scene(&self) -> Result<Scene, ConfigError> {
        Scene::from_params(&self.scene).map_err(|e| match e {
            Error::InvalidParameter { name, reason } if name.starts_with("scene.") => {
                ConfigError::invalid(name, reason)
            }
            other => ConfigError::invalid("scene", other.to_string()),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.build_scene()?;
        if !(self.tx_step > 0.0 && self.tx_step.is_finite()) {
            return Err(ConfigError::invalid("scene.delta_tx", "must be > 0"));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(ConfigError::invalid("tx.power_dbm", "must be finite"));
        }
        self.latency
            .validate()
            .map_err(|e| remap(e, "latency"))?;
        MobilityModel::new(self.mobility.speed).map_err(|e| remap(e, "mobility.speed"))?;

        let s = &self.sweep;
        if !(s.step > 0.0 && s.step.is_finite()) {
            return Err(ConfigError::invalid("sweep.step", format!("{} must be > 0", s.step)));
        }
        if !(s.start.is_finite() && s.stop.is_finite()) {
            return Err(ConfigError::invalid("sweep.start", "must be finite"));
        }
        if s.stop < s.start {
            return Err(ConfigError::invalid(
                "sweep.stop",
                format!("{} is below sweep.start {}", s.stop, s.start),
            ));
        }

        if self.mode_kinds.is_empty() {
            return Err(ConfigError::invalid("steering.modes", "at least one mode required"));
        }
        if self.mode_kinds.contains(&ModeKind::Biased) && self.bias_p.is_empty() {
            return Err(ConfigError::invalid("steering.bias_p", "biased mode needs a value"));
        }
        if let Some(p) = self.bias_p.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(ConfigError::invalid("steering.bias_p", format!("{p} outside (0, 1)")));
        }
        let grid = PositionGrid::new(self.tx_step, self.max_dislocation.unwrap_or(s.stop))
            .map_err(|e| remap(e, "steering.max_dislocation"))?;
        if self.j_c > grid.last_index() {
            return Err(ConfigError::invalid(
                "steering.j_c",
                format!("{} exceeds the last position index {}", self.j_c, grid.last_index()),
            ));
        }
        self.tracer.validate().map_err(|e| remap(e, "tracer"))?;
        Ok(())
    }

    /// Serialize every key. `parse_config(&c.to_document())` reproduces `c`.
    pub fn to_document(&self) -> String {
        let mut d = String::new();
        let s = &self.scene;
        let l = &self.latency;
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let kinds: Vec<&str> = self.mode_kinds.iter().map(ModeKind::as_str).collect();
        let entries: Vec<(&str, String)> = vec![
            ("scene.H", s.ceiling_height.to_string()),
            ("scene.L", s.length.to_string()),
            ("scene.offset", s.offset.to_string()),
            ("scene.h", s.user_height.to_string()),
            ("scene.rx_x", s.rx_x.to_string()),
            ("scene.rx_y_rel", s.rx_y_rel.to_string()),
            ("scene.delta_hsf", s.delta_hsf.to_string()),
            ("scene.delta_tx", self.tx_step.to_string()),
            ("scene.aperture", s.aperture.to_string()),
            ("antenna.tx_beam_deg", s.tx_beam_deg.to_string()),
            ("antenna.rx_beam_deg", s.rx_beam_deg.to_string()),
            ("antenna.rx_tilt_ccw_deg", s.rx_tilt_ccw_deg.to_string()),
            ("tx.power_dbm", self.tx_power_dbm.to_string()),
            ("latency.tau_s", l.tau_s.to_string()),
            ("latency.tau_n_fwd", l.tau_n_fwd.to_string()),
            ("latency.tau_q", l.tau_q.to_string()),
            ("latency.tau_p", l.tau_p.to_string()),
            ("latency.tau_n_rev", l.tau_n_rev.to_string()),
            ("latency.tau_c", l.tau_c.to_string()),
            ("mobility.speed", self.mobility.speed.to_string()),
            ("steering.modes", kinds.join(",")),
            ("steering.bias_p", join(&self.bias_p)),
            ("steering.j_c", self.j_c.to_string()),
            ("tracer.n_rays", self.tracer.n_rays.to_string()),
            ("tracer.max_bounces", self.tracer.max_bounces.to_string()),
            ("tracer.spreading", self.tracer.spreading.as_str().to_string()),
            ("sweep.start", self.sweep.start.to_string()),
            ("sweep.stop", self.sweep.stop.to_string()),
            ("sweep.step", self.sweep.step.to_string()),
            ("sweep.baseline", self.baseline.to_string()),
        ];
        for (k, v) in entries {
            let _ = writeln!(d, "{k} = {v}");
        }
        if let Some(m) = self.max_dislocation {
            let _ = writeln!(d, "steering.max_dislocation = {m}");
        }
        if let Some(p) = &self.output_csv {
            let _ = writeln!(d, "output.csv = {}", p.display());
        }
        d
    }
}

fn remap(e: Error, fallback: &str) -> ConfigError {
    match e {
        Error::InvalidParameter { name, reason } if name.contains('.') => {
            ConfigError::invalid(name, reason)
        }
        other => ConfigError::invalid(fallback, other.to_string()),
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError::Type {
            key: key.into(),
            expected: "a finite number",
            value: v.into(),
        })
}

fn parse_uint<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse::<T>().map_err(|_| ConfigError::Type {
        key: key.into(),
        expected: "a non-negative integer",
        value: v.into(),
    })
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::Type {
            key: key.into(),
            expected: "a boolean",
            value: v.into(),
        }),
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen = std::collections::HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                message: format!("expected `section.key = value`, got `{line}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::DuplicateKey(key.into()));
        }
        let f = |v| parse_f64(key, v);
        match key {
            "scene.H" => cfg.scene.ceiling_height = f(value)?,
            "scene.L" => cfg.scene.length = f(value)?,
            "scene.offset" => cfg.scene.offset = f(value)?,
            "scene.h" => cfg.scene.user_height = f(value)?,
            "scene.rx_x" => cfg.scene.rx_x = f(value)?,
            "scene.rx_y_rel" => cfg.scene.rx_y_rel = f(value)?,
            "scene.delta_hsf" => cfg.scene.delta_hsf = f(value)?,
            "scene.delta_tx" => cfg.tx_step = f(value)?,
            "scene.aperture" => cfg.scene.aperture = f(value)?,
            "antenna.tx_beam_deg" => cfg.scene.tx_beam_deg = f(value)?,
            "antenna.rx_beam_deg" => cfg.scene.rx_beam_deg = f(value)?,
            "antenna.rx_tilt_ccw_deg" => cfg.scene.rx_tilt_ccw_deg = f(value)?,
            "tx.power_dbm" => cfg.tx_power_dbm = f(value)?,
            "latency.tau_s" => cfg.latency.tau_s = f(value)?,
            "latency.tau_n_fwd" => cfg.latency.tau_n_fwd = f(value)?,
            "latency.tau_q" => cfg.latency.tau_q = f(value)?,
            "latency.tau_p" => cfg.latency.tau_p = f(value)?,
            "latency.tau_n_rev" => cfg.latency.tau_n_rev = f(value)?,
            "latency.tau_c" => cfg.latency.tau_c = f(value)?,
            "mobility.speed" => cfg.mobility.speed = f(value)?,
            "steering.modes" => {
                cfg.mode_kinds = split_list(value)
                    .map(|m| {
                        m.parse().map_err(|_| ConfigError::Type {
                            key: key.into(),
                            expected: "a list of static, unbiased, biased",
                            value: m.into(),
                        })
                    })
                    .collect::<Result<_, _>>()?;
            }
            "steering.bias_p" => {
                cfg.bias_p = split_list(value).map(f).collect::<Result<_, _>>()?;
            }
            "steering.j_c" => cfg.j_c = parse_uint(key, value)?,
            "steering.max_dislocation" => cfg.max_dislocation = Some(f(value)?),
            "tracer.n_rays" => cfg.tracer.n_rays = parse_uint(key, value)?,
            "tracer.max_bounces" => cfg.tracer.max_bounces = parse_uint(key, value)?,
            "tracer.spreading" => {
                cfg.tracer.spreading = value.parse().map_err(|_| ConfigError::Type {
                    key: key.into(),
                    expected: "geometric or inverse_square",
                    value: value.into(),
                })?;
            }
            "sweep.start" => cfg.sweep.start = f(value)?,
            "sweep.stop" => cfg.sweep.stop = f(value)?,
            "sweep.step" => cfg.sweep.step = f(value)?,
            "sweep.baseline" => cfg.baseline = parse_bool(key, value)?,
            "output.csv" => {
                cfg.output_csv = (!value.is_empty()).then(|| PathBuf::from(value));
            }
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

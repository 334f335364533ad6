use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, NlsError, Result};
use crate::evolve::EvolveConfig;
use crate::morawetz::RPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Gaussian,
    GroundStateMultiple,
    FromFile,
}

/// The initial data choice resolved from the flat config keys.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `a·e^{-r²/w²}`
    Gaussian { amplitude: f64, width: f64 },
    /// `c·Q` with `Q` sampled on the run grid.
    GroundStateMultiple { multiple: f64 },
    /// CSV with columns `r, re, im` (header optional), linearly interpolated onto the grid.
    FromFile { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RPolicyKind {
    Fixed,
    Scaling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryFormat {
    Binary,
    Csv,
    None,
}

fn default_name() -> String {
    "experiment".into()
}
fn one() -> f64 {
    1.0
}
fn stride_one() -> usize {
    1
}
fn guard() -> f64 {
    0.9
}
fn blowup() -> f64 {
    10.0
}
fn yes() -> bool {
    true
}
fn quarter() -> f64 {
    0.25
}
fn half() -> f64 {
    0.5
}
fn scattering_tol() -> f64 {
    1e-2
}
fn energy_tol() -> f64 {
    1e-3
}
fn boundary_limit() -> f64 {
    1e-3
}
fn scaling() -> RPolicyKind {
    RPolicyKind::Scaling
}
fn binary() -> TrajectoryFormat {
    TrajectoryFormat::Binary
}
fn out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Flat experiment description. Every key except `p`, `r_max`, `n`, `dt`,
/// `t_end` and `initial` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub p: f64,
    pub r_max: f64,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "stride_one")]
    pub snapshot_stride: usize,
    #[serde(default = "guard")]
    pub boundary_guard: f64,
    #[serde(default = "blowup")]
    pub blowup_factor: f64,
    #[serde(default = "yes")]
    pub nonlinear: bool,

    pub initial: InitialKind,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default = "one")]
    pub multiple: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,

    /// Normalize sub-threshold data to `M = E` before evolving.
    #[serde(default = "yes")]
    pub rescale: bool,
    #[serde(default = "scaling")]
    pub r_policy: RPolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Exponent fit over `t ∈ [fit_window·T, T]`.
    #[serde(default = "quarter")]
    pub fit_window: f64,
    /// Scattering increments over `t ∈ [(1 - tail_fraction)·T, T]`.
    #[serde(default = "half")]
    pub tail_fraction: f64,
    /// Scattering requires `Σd_k < scattering_tol·‖u₀‖_{H¹}`.
    #[serde(default = "scattering_tol")]
    pub scattering_tol: f64,
    #[serde(default = "energy_tol")]
    pub energy_tol: f64,
    #[serde(default = "boundary_limit")]
    pub boundary_limit: f64,
    #[serde(default = "binary")]
    pub trajectory_format: TrajectoryFormat,
    #[serde(default = "out_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn evolve_config(&self) -> EvolveConfig {
        EvolveConfig {
            dt: self.dt,
            t_end: self.t_end,
            snapshot_stride: self.snapshot_stride,
            p: self.p,
            boundary_guard: self.boundary_guard,
            blowup_factor: self.blowup_factor,
            nonlinear: self.nonlinear,
        }
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        Ok(match self.initial {
            InitialKind::Gaussian => InitialData::Gaussian {
                amplitude: self.amplitude,
                width: self.width,
            },
            InitialKind::GroundStateMultiple => InitialData::GroundStateMultiple { multiple: self.multiple },
            InitialKind::FromFile => InitialData::FromFile {
                path: self
                    .path
                    .clone()
                    .ok_or_else(|| NlsError::Config("initial = \"from_file\" needs a path".into()))?,
            },
        })
    }

    pub fn r_policy(&self) -> Result<RPolicy> {
        match self.r_policy {
            RPolicyKind::Scaling => Ok(RPolicy::Scaling),
            RPolicyKind::Fixed => self
                .radius
                .map(RPolicy::Fixed)
                .ok_or_else(|| NlsError::Config("r_policy = \"fixed\" needs a radius".into())),
        }
    }

    /// Rejects out-of-range parameters before any computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(NlsError::Config(what));
        check_exponent(self.p).map_err(|e| NlsError::Config(e.to_string()))?;
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return bad(format!("r_max must be positive, got {}", self.r_max));
        }
        if self.n < crate::radial::MIN_NODES {
            return bad(format!("n must be at least {}, got {}", crate::radial::MIN_NODES, self.n));
        }
        self.evolve_config().validate().map_err(|e| NlsError::Config(e.to_string()))?;
        if !self.amplitude.is_finite() || !self.multiple.is_finite() {
            return bad("amplitude and multiple must be finite".into());
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return bad(format!("width must be positive, got {}", self.width));
        }
        self.initial_data()?;
        if let RPolicy::Fixed(r) = self.r_policy()? {
            if !(r >= 1.0 && 2.0 * r < self.r_max) {
                return bad(format!("fixed radius must satisfy 1 <= R and 2R < r_max, got {r}"));
            }
        }
        if !(self.fit_window > 0.0 && self.fit_window < 1.0) {
            return bad(format!("fit_window must lie in (0, 1), got {}", self.fit_window));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return bad(format!("tail_fraction must lie in (0, 1], got {}", self.tail_fraction));
        }
        for (key, v) in [
            ("scattering_tol", self.scattering_tol),
            ("energy_tol", self.energy_tol),
            ("boundary_limit", self.boundary_limit),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{key} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| NlsError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| NlsError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| NlsError::Config(e.to_string()))
    }

    /// Reads `.json` as JSON and anything else as the flat key-value format.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        if let Some(p) = cfg.path.as_mut() {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Same experiment with twice the nodes and half the time step.
    pub fn refined(&self) -> Self {
        let mut c = self.clone();
        c.n *= 2;
        c.dt *= 0.5;
        c.snapshot_stride *= 2;
        c
    }
}

pub const PRESET_NAMES: [&str; 3] = ["subthreshold-p3", "soliton-p2", "negative-energy-p3"];

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let text = match name {
        "subthreshold-p3" => include_str!("../../presets/subthreshold-p3.toml"),
        "soliton-p2" => include_str!("../../presets/soliton-p2.toml"),
        "negative-energy-p3" => include_str!("../../presets/negative-energy-p3.toml"),
        other => {
            return Err(NlsError::Config(format!(
                "unknown preset {other:?}; known presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    ExperimentConfig::from_toml(text)
}

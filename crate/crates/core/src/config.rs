//! Experiment configuration: strict JSON, unknown keys rejected.
//!
//! Every section except `commands` is optional and falls back to the
//! defaults below. Tolerances are looked up by name; a name not in
//! [`TOLERANCE_NAMES`] is a config error.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cocycle::Variant;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::wiener::{BatchConfig, WienerVariant};

/// Tolerance names with their defaults.
pub const TOLERANCE_NAMES: &[(&str, f64)] = &[
    ("cocycle", 1e-6),
    ("unitarity", 1e-6),
    ("markov", 1e-12),
    ("limit", 1e-8),
    ("increments", 1e-6),
    ("wold_angle", 1e-4),
    ("reduction", 1e-6),
    ("spectrum", 1e-4),
    ("unimodular", 1e-6),
    ("hs_saturation", 0.01),
    ("hs_oracle", 1e-6),
    ("r2_slope", 0.5),
    ("r2_cross_check", 1e-6),
    ("b2", 1e-6),
    ("b3", 2e-3),
    ("feldman", 0.1),
    ("mc_z", 3.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyCocycle,
    VerifyMarkov,
    Wold,
    Spectrum,
    HsSeries,
    B2b3,
    Feldman,
    WienerMc,
}

impl Command {
    pub const ORDER: [Command; 8] = [
        Command::VerifyCocycle,
        Command::VerifyMarkov,
        Command::Wold,
        Command::Spectrum,
        Command::HsSeries,
        Command::B2b3,
        Command::Feldman,
        Command::WienerMc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyCocycle => "verify-cocycle",
            Command::VerifyMarkov => "verify-markov",
            Command::Wold => "wold",
            Command::Spectrum => "spectrum",
            Command::HsSeries => "hs-series",
            Command::B2b3 => "b2b3",
            Command::Feldman => "feldman",
            Command::WienerMc => "wiener-mc",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = crate::default_grid();
        Self {
            x_min: g.x_min(),
            x_max: g.x_max(),
            n: g.n(),
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        GridSpec::new(self.x_min, self.x_max, self.n)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WoldConfig {
    pub t_step: f64,
    pub t_probe: f64,
    /// Orbit depth; `None` covers the half-line.
    pub depth: Option<usize>,
    pub spectrum_times: Vec<f64>,
}

impl Default for WoldConfig {
    fn default() -> Self {
        Self {
            t_step: 0.25,
            t_probe: 1.0,
            depth: None,
            spectrum_times: vec![1.0, std::f64::consts::PI],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HsConfig {
    pub t: f64,
    pub basis_dims: Vec<usize>,
    /// Length of `[0, window)` tiled by the block basis.
    pub window: f64,
    pub include_zero_mode: bool,
}

impl Default for HsConfig {
    fn default() -> Self {
        Self {
            t: 1.0,
            basis_dims: vec![64, 128, 256],
            window: crate::hs::DEFAULT_WINDOW,
            include_zero_mode: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct B2b3Config {
    pub mu: [f64; 2],
    pub probe: f64,
}

impl Default for B2b3Config {
    fn default() -> Self {
        Self {
            mu: [-0.5, 0.0],
            probe: 1e3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeldmanConfig {
    pub t: f64,
    pub dims: Vec<usize>,
}

impl Default for FeldmanConfig {
    fn default() -> Self {
        Self {
            t: 1.0,
            dims: vec![64, 128, 256],
        }
    }
}

/// The drift function `a` of the Wiener cocycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ASpec {
    Constant(f64),
    /// Left-point samples at `k·dt`; zero beyond.
    Samples(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub a_spec: ASpec,
    pub variant: WienerVariant,
    /// Cocycle parameter for the isometry and martingale checks.
    pub t: f64,
    pub probe_times: Vec<f64>,
    /// `(s, t)` for the composed-cocycle check.
    pub cocycle_pair: [f64; 2],
}

impl Default for McConfig {
    fn default() -> Self {
        let b = BatchConfig::default();
        Self {
            dt: b.dt,
            horizon: b.horizon,
            n_paths: b.n_paths,
            seed: b.seed,
            a_spec: ASpec::Constant(1.0),
            variant: WienerVariant::GirsanovUnitary,
            t: 1.0,
            probe_times: vec![0.5, 1.0],
            cocycle_pair: [0.5, 0.5],
        }
    }
}

impl McConfig {
    pub fn batch(&self) -> BatchConfig {
        BatchConfig {
            dt: self.dt,
            horizon: self.horizon,
            n_paths: self.n_paths,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub zeros: Vec<[f64; 2]>,
    /// Rotation frequencies; defaults to `Im λ_k`.
    #[serde(default)]
    pub frequencies: Option<Vec<f64>>,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_riesz_k", rename = "riesz_K")]
    pub riesz_k: usize,
    #[serde(default)]
    pub wold: WoldConfig,
    #[serde(default)]
    pub hs: HsConfig,
    #[serde(default)]
    pub b2b3: B2b3Config,
    #[serde(default)]
    pub feldman: FeldmanConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub commands: Vec<Command>,
}

fn default_times() -> Vec<f64> {
    vec![-1.0, -0.5, -0.25, 0.25, 0.5, 1.0]
}

fn default_riesz_k() -> usize {
    32
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        for (name, value) in &self.tolerances {
            if !TOLERANCE_NAMES.iter().any(|(n, _)| n == name) {
                let known: Vec<&str> = TOLERANCE_NAMES.iter().map(|(n, _)| *n).collect();
                return Err(Error::Config(format!(
                    "unknown tolerance \"{name}\"; known names: {}",
                    known.join(", ")
                )));
            }
            if !(*value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!(
                    "tolerance \"{name}\" must be positive, got {value}"
                )));
            }
        }
        if self.commands.is_empty() {
            return Err(Error::Config("no commands given".into()));
        }
        if let Some(f) = &self.frequencies {
            if f.len() != self.zeros.len() {
                return Err(Error::Config(format!(
                    "{} frequencies for {} zeros",
                    f.len(),
                    self.zeros.len()
                )));
            }
        }
        self.grid.build()?;
        Ok(())
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances.get(name).copied().unwrap_or_else(|| {
            TOLERANCE_NAMES
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, v)| *v)
                .expect("tolerance name is registered")
        })
    }

    /// Commands deduplicated into the canonical execution order.
    pub fn ordered_commands(&self) -> Vec<Command> {
        Command::ORDER
            .into_iter()
            .filter(|c| self.commands.contains(c))
            .collect()
    }
}

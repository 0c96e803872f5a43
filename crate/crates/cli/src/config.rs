use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use prethermal::hamiltonian::Boundary;
use prethermal::krylov::KrylovConfig;
use prethermal::{ModelParams, RangeMode};
use serde::{Deserialize, Serialize};

/// Model couplings without the drive frequency, which the sweep varies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "J", default = "default_j")]
    pub ising: f64,
    #[serde(rename = "Jx", default = "default_jx")]
    pub xx: f64,
    #[serde(default = "default_hx")]
    pub hx: f64,
    #[serde(default = "default_hy")]
    pub hy: f64,
    #[serde(default = "default_hz")]
    pub hz: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub range: RangeMode,
    #[serde(default)]
    pub boundary: Boundary,
}

fn default_j() -> f64 {
    ModelParams::DEFAULT_J
}
fn default_jx() -> f64 {
    ModelParams::DEFAULT_JX
}
fn default_hx() -> f64 {
    ModelParams::DEFAULT_HX
}
fn default_hy() -> f64 {
    ModelParams::DEFAULT_HY
}
fn default_hz() -> f64 {
    ModelParams::DEFAULT_HZ
}
fn default_alpha() -> f64 {
    ModelParams::DEFAULT_ALPHA
}

impl ModelConfig {
    pub fn with_omega(&self, omega: f64) -> Result<ModelParams> {
        let p = ModelParams {
            sites: self.sites,
            ising: self.ising,
            xx: self.xx,
            hx: self.hx,
            hy: self.hy,
            hz: self.hz,
            alpha: self.alpha,
            range: self.range,
            omega,
            boundary: self.boundary,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateConfig {
    pub domain_walls: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub points_per_decade: u32,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { points_per_decade: 10 }
    }
}

/// Time windows for the deviation-curve fits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub plateau: Option<(f64, f64)>,
    pub slope: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: ModelConfig,
    pub omegas: Vec<f64>,
    pub initial_states: Vec<InitialStateConfig>,
    pub periods_max: u64,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    #[serde(default)]
    pub krylov: KrylovConfig,
    /// Relative paths are taken from the directory holding the config file.
    pub output_dir: PathBuf,
    /// Comma-separated observable request, e.g. `energy,entropy,locals`.
    #[serde(default = "default_observables")]
    pub observables: String,
    /// Also evolve under each truncated generator for deviation curves.
    #[serde(default)]
    pub deff_evolution: bool,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: u64,
    /// Plateau reference time; defaults depend on the interaction range.
    #[serde(default)]
    pub t_pre: Option<f64>,
    #[serde(default)]
    pub delta_observable: Option<String>,
    #[serde(default)]
    pub windows: WindowConfig,
}

fn default_orders() -> Vec<usize> {
    vec![0, 2, 4]
}
fn default_observables() -> String {
    "energy,entropy".into()
}
fn default_checkpoint_every() -> u64 {
    1000
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if cfg.output_dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.omegas.is_empty() || self.initial_states.is_empty() {
            bail!("config needs at least one omega and one initial state");
        }
        for &w in &self.omegas {
            self.model.with_omega(w)?;
        }
        if self.periods_max == 0 {
            bail!("periods_max must be at least 1");
        }
        if self.checkpoint_every == 0 {
            bail!("checkpoint_every must be positive");
        }
        if let Some(o) = self.orders.iter().find(|&&o| o > prethermal::magnus::MAX_ORDER) {
            bail!("order {o} exceeds the supported maximum");
        }
        self.krylov.validate()?;
        Ok(())
    }

    /// Plateau reference time: 300 for short-range and 200 for long-range chains.
    pub fn t_pre(&self) -> f64 {
        self.t_pre.unwrap_or(match self.model.range {
            RangeMode::ShortRange => 300.0,
            RangeMode::LongRange => 200.0,
        })
    }
}

//! Layered configuration: built-in defaults, then a TOML file, then
//! `key=value` overrides with dotted keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::env::RewardParams;
use crate::error::{Error, Result};
use crate::hazards::{EnergyModelParams, NavLossConfig, WindConfig};
use crate::kinematics::KinematicsConfig;
use crate::scenario::ScenarioConfig;

const TOP_LEVEL_KEYS: &[&str] = &[
    "seed",
    "network",
    "synthetic",
    "fleet_size",
    "od_weights",
    "duration_s",
    "turnaround_s",
    "cruise_speed_kn",
    "region_margin_deg",
    "lanes",
    "energy",
    "nav",
    "wind",
    "reward",
    "kinematics",
    "env",
    "harness",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSettings {
    pub decision_interval_s: f64,
    /// Integration step inside a decision interval; must divide it evenly.
    pub kinematic_dt_s: f64,
    pub heading_step_deg: f64,
    pub waypoint_window: usize,
    pub nearest_vertiports: usize,
    pub intruders: usize,
    /// Touchdowns within this distance of a vertiport count as landing there.
    pub landing_radius_m: f64,
    pub distance_scale_m: f64,
    pub wind_scale_ms: f64,
    /// Build observation vectors. Scripted policies that ignore them can turn this off.
    pub observe: bool,
    pub record_transcript: bool,
}

impl Default for EnvSettings {
    fn default() -> Self {
        EnvSettings {
            decision_interval_s: 60.0,
            kinematic_dt_s: 1.0,
            heading_step_deg: 5.0,
            waypoint_window: 3,
            nearest_vertiports: 3,
            intruders: 3,
            landing_radius_m: 300.0,
            distance_scale_m: 100_000.0,
            wind_scale_ms: 30.0,
            observe: true,
            record_transcript: true,
        }
    }
}

impl EnvSettings {
    pub fn substeps(&self) -> u32 {
        (self.decision_interval_s / self.kinematic_dt_s).round() as u32
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.decision_interval_s > 0.0 && self.decision_interval_s.is_finite()) {
            return Err(Error::config("env.decision_interval_s must be positive"));
        }
        if !(self.kinematic_dt_s > 0.0 && self.kinematic_dt_s <= self.decision_interval_s) {
            return Err(Error::config("env.kinematic_dt_s must lie in (0, decision_interval_s]"));
        }
        let n = self.substeps() as f64;
        if ((n * self.kinematic_dt_s) - self.decision_interval_s).abs() > 1e-9 {
            return Err(Error::config("env.kinematic_dt_s must divide env.decision_interval_s"));
        }
        if !(self.heading_step_deg.is_finite() && self.heading_step_deg >= 0.0) {
            return Err(Error::config("env.heading_step_deg must be finite and >= 0"));
        }
        for (k, v) in [
            ("landing_radius_m", self.landing_radius_m),
            ("distance_scale_m", self.distance_scale_m),
            ("wind_scale_ms", self.wind_scale_ms),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("env.{k} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QSettings {
    pub episodes: u32,
    /// Decision steps per training episode.
    pub steps: u64,
    pub eta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub energy_bins: usize,
    pub distance_bins: usize,
    /// Upper edge of the last route-distance bin, meters.
    pub distance_max_m: f64,
}

impl Default for QSettings {
    fn default() -> Self {
        QSettings {
            episodes: 20,
            steps: 240,
            eta: 0.1,
            gamma: 0.99,
            epsilon: 0.1,
            energy_bins: 10,
            distance_bins: 10,
            distance_max_m: 80_000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessSettings {
    /// Decision steps per run.
    pub steps: u64,
    /// "unequipped", "random" or "tabular_q"
    pub policy: String,
    /// Completed flights per rolling-mean window.
    pub rolling_window: usize,
    /// Sweep worker threads; 0 uses every available core.
    pub workers: usize,
    /// Saved table for `policy = "tabular_q"`.
    pub q_table: Option<PathBuf>,
    pub q: QSettings,
}

impl Default for HarnessSettings {
    fn default() -> Self {
        HarnessSettings {
            steps: 1440,
            policy: "unequipped".into(),
            rolling_window: 500,
            workers: 0,
            q_table: None,
            q: QSettings::default(),
        }
    }
}

/// Fully resolved simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seed: u64,
    #[serde(flatten)]
    pub scenario: ScenarioConfig,
    pub energy: EnergyModelParams,
    pub nav: NavLossConfig,
    pub wind: WindConfig,
    pub reward: RewardParams,
    pub kinematics: KinematicsConfig,
    pub env: EnvSettings,
    pub harness: HarnessSettings,
    /// Directory relative file references resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            scenario: ScenarioConfig::default(),
            energy: EnergyModelParams::default(),
            nav: NavLossConfig::default(),
            wind: WindConfig::default(),
            reward: RewardParams::default(),
            kinematics: KinematicsConfig::default(),
            env: EnvSettings::default(),
            harness: HarnessSettings::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.energy.validate()?;
        self.reward.validate()?;
        self.kinematics.validate()?;
        self.env.validate()?;
        if !(0.0..=1.0).contains(&self.nav.p_nav) {
            return Err(Error::config("nav.p_nav must lie in [0, 1]"));
        }
        if self.harness.rolling_window == 0 {
            return Err(Error::config("harness.rolling_window must be >= 1"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        ConfigDoc::parse(text, Path::new("."))?.build()
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let mut doc = ConfigDoc::load(path)?;
        for o in overrides {
            doc.apply_override(o)?;
        }
        doc.build()
    }
}

/// An unresolved configuration document that overrides can still be layered onto.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigDoc {
    table: Table,
    base_dir: PathBuf,
}

impl ConfigDoc {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        Ok(ConfigDoc {
            table,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Applies `key=value`. The value is read as a TOML value, falling back to
    /// a bare string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override `{assignment}` is not key=value")))?;
        self.set(key.trim(), parse_value(value.trim()))
    }

    pub fn set(&mut self, key: &str, value: Value) -> Result<()> {
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::config(format!("malformed key `{key}`")));
        }
        let (last, parents) = parts.split_last().expect("split yields at least one part");
        let mut table = &mut self.table;
        for p in parents {
            let entry = table.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| Error::config(format!("`{p}` in `{key}` is not a table")))?;
        }
        table.insert(last.to_string(), value);
        Ok(())
    }

    pub fn build(&self) -> Result<SimConfig> {
        if let Some(k) = self.table.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
            return Err(Error::config(format!("unknown key `{k}`")));
        }
        let mut cfg = SimConfig::deserialize(Value::Table(self.table.clone()))
            .map_err(|e| Error::config(e.to_string()))?;
        cfg.base_dir = self.base_dir.clone();
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_value(text: &str) -> Value {
    format!("v = {text}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

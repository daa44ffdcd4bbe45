//! Session configuration.
//!
//! The file format is flat `key = value` text (a TOML subset). Every key is
//! optional; missing keys take the defaults below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{SpaceConfig, SpaceError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartMode {
    Auto,
    Stepwise,
}

/// How guiding feedback is spread over the last `reward_length` steps in
/// autonomous mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GuidingProfile {
    /// `valence * exp(-j)` for the pair `j` steps back.
    Exponential,
    /// Gamma density over the delay in seconds, normalized to peak at 1.
    Gamma { shape: f64, scale: f64 },
}

impl Default for GuidingProfile {
    fn default() -> Self {
        GuidingProfile::Exponential
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    // space
    pub n: usize,
    pub step: f64,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,

    // reward network
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub replay_capacity: usize,
    pub reward_value: f64,
    pub reward_length: usize,
    pub trajectory_capacity: usize,
    pub credit_min_delay: f64,
    pub credit_max_delay: f64,
    pub guiding_profile: GuidingProfile,

    // exploration
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay: f64,
    pub action_hz: f64,
    pub num_tilings: usize,
    pub tile_width: f64,
    pub bonus_beta: f64,
    pub bonus_c: f64,
    pub change_zone_samples: usize,

    // service
    pub mode: StartMode,
    pub port_osc: u16,
    pub port_ui: u16,
    pub log_path: Option<PathBuf>,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n: 10,
            step: 0.01,
            lo: None,
            hi: None,
            hidden_layers: 2,
            hidden_units: 100,
            batch_size: 32,
            learning_rate: 0.002,
            replay_capacity: 700,
            reward_value: 1.0,
            reward_length: 10,
            trajectory_capacity: 64,
            credit_min_delay: 0.2,
            credit_max_delay: 4.0,
            guiding_profile: GuidingProfile::Exponential,
            epsilon_start: 0.1,
            epsilon_end: 0.0,
            epsilon_decay: 2000.0,
            action_hz: 10.0,
            num_tilings: 64,
            tile_width: 0.4,
            bonus_beta: 1.0,
            bonus_c: 0.01,
            change_zone_samples: 1000,
            mode: StartMode::Auto,
            port_osc: 57120,
            port_ui: 57121,
            log_path: None,
            seed: 0,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn space(&self) -> Result<SpaceConfig, SpaceError> {
        let lo = self.lo.clone().unwrap_or_else(|| vec![0.0; self.n]);
        let hi = self.hi.clone().unwrap_or_else(|| vec![1.0; self.n]);
        if lo.len() != self.n {
            return Err(SpaceError::DimensionMismatch { expected: self.n, got: lo.len() });
        }
        SpaceConfig::with_bounds(lo, hi, self.step)
    }

    /// Seconds between autonomous actions.
    pub fn tick_period(&self) -> std::time::Duration {
        std::time::Duration::from_secs_f64(1.0 / self.action_hz)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.space()?;
        let check = |ok: bool, key: &'static str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Invalid { key, reason: reason.to_owned() })
            }
        };
        check(self.hidden_layers >= 1, "hidden_layers", "must be at least 1")?;
        check(self.hidden_units >= 1, "hidden_units", "must be at least 1")?;
        check(self.batch_size >= 1, "batch_size", "must be at least 1")?;
        check(self.learning_rate > 0.0, "learning_rate", "must be positive")?;
        check(self.replay_capacity >= 1, "replay_capacity", "must be at least 1")?;
        check(self.reward_value > 0.0, "reward_value", "must be positive")?;
        check(self.reward_length >= 1, "reward_length", "must be at least 1")?;
        check(
            self.trajectory_capacity >= self.reward_length,
            "trajectory_capacity",
            "must be at least reward_length",
        )?;
        check(
            0.0 <= self.credit_min_delay && self.credit_min_delay <= self.credit_max_delay,
            "credit_min_delay",
            "must satisfy 0 <= credit_min_delay <= credit_max_delay",
        )?;
        check(
            0.0 <= self.epsilon_end && self.epsilon_end <= self.epsilon_start && self.epsilon_start <= 1.0,
            "epsilon_start",
            "must satisfy 0 <= epsilon_end <= epsilon_start <= 1",
        )?;
        check(self.epsilon_decay > 0.0, "epsilon_decay", "must be positive")?;
        check(self.action_hz > 0.0, "action_hz", "must be positive")?;
        check(self.num_tilings >= 1, "num_tilings", "must be at least 1")?;
        check(self.tile_width > 0.0, "tile_width", "must be positive")?;
        check(self.bonus_c > 0.0, "bonus_c", "must be positive")?;
        check(self.change_zone_samples >= 1, "change_zone_samples", "must be at least 1")?;
        if let GuidingProfile::Gamma { shape, scale } = self.guiding_profile {
            check(shape > 0.0 && scale > 0.0, "guiding_profile", "gamma shape and scale must be positive")?;
        }
        Ok(())
    }
}

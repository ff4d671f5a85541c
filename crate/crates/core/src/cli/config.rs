//! Rollout config files.
//!
//! A TOML key/value document; unknown keys are rejected.
//!
//! ```toml
//! policy = "rolling-sink"
//! k = 6
//! s = 5
//! block_size = 3
//! convention = "palindrome"
//! steps = 4
//! horizon = 200
//! seed = 0
//! frame_dim = 8
//! record_frames = true
//!
//! [denoiser]
//! kind = "context-mean"
//! anchor_weight = 1.0
//! innovation_scale = 0.1
//! bias = 0.05
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::denoisers::{DenoiserSpec, PosteriorMode};
use crate::engine::RolloutConfig;
use crate::sampler::TimestepSchedule;
use crate::schedule::{Policy, PolicyConfig, RollConvention};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default = "defaults::policy")]
    pub policy: Policy,
    #[serde(default = "defaults::k", alias = "K")]
    pub k: usize,
    #[serde(default = "defaults::s", alias = "S")]
    pub s: usize,
    #[serde(default = "defaults::block_size")]
    pub block_size: usize,
    #[serde(default)]
    pub convention: RollConvention,
    /// Number of uniformly spaced denoising steps (T).
    #[serde(default = "defaults::steps")]
    pub steps: usize,
    /// Explicit timesteps from 1000 down to 0; overrides `steps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timesteps: Option<Vec<f64>>,
    #[serde(default = "defaults::horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::frame_dim")]
    pub frame_dim: usize,
    #[serde(default = "defaults::record_frames")]
    pub record_frames: bool,
    #[serde(default = "defaults::denoiser")]
    pub denoiser: DenoiserSpec,
}

mod defaults {
    use super::*;

    pub fn policy() -> Policy {
        Policy::RollingSink
    }
    pub fn k() -> usize {
        6
    }
    pub fn s() -> usize {
        5
    }
    pub fn block_size() -> usize {
        3
    }
    pub fn steps() -> usize {
        4
    }
    pub fn horizon() -> usize {
        100
    }
    pub fn frame_dim() -> usize {
        8
    }
    pub fn record_frames() -> bool {
        true
    }
    pub fn denoiser() -> DenoiserSpec {
        DenoiserSpec::Analytic {
            rho: 0.9,
            posterior: PosteriorMode::Sample,
        }
    }
}

impl Default for ConfigFile {
    fn default() -> Self {
        toml::from_str("").expect("all keys have defaults")
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.message().to_owned()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn policy_config(&self) -> Result<PolicyConfig> {
        PolicyConfig::new(self.k, self.s, self.block_size, self.policy, self.convention)
    }

    pub fn rollout_config(&self) -> Result<RolloutConfig> {
        let timesteps = match &self.timesteps {
            Some(ts) => TimestepSchedule::new(ts.clone())?,
            None => TimestepSchedule::uniform(self.steps)?,
        };
        let cfg = RolloutConfig {
            policy: self.policy_config()?,
            timesteps,
            denoiser: self.denoiser.clone(),
            horizon: self.horizon,
            seed: self.seed,
            frame_dim: self.frame_dim,
            record_frames: self.record_frames,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

//! Experiment settings from flags and an optional TOML file. Flags win.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use projsim::{DynamicsOrder, EnvKind, ExperimentConfig, Policy, PsParams};

#[derive(Debug)]
pub enum ConfigError {
    Missing(&'static str),
    File(PathBuf, String),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Missing(field) => {
                write!(f, "`{field}` is required (flag or config file)")
            }
            ConfigError::File(path, msg) => write!(f, "{}: {msg}", path.display()),
            ConfigError::Invalid(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Args, Debug, Default)]
pub struct ExperimentArgs {
    /// TOML file with any of the settings below
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub env: Option<EnvKind>,
    #[arg(long)]
    pub policy: Option<Policy>,
    /// Glow damping rate in [0, 1]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Forgetting rate in [0, 1) (default 0)
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Softmax inverse temperature (default 1)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Reward on success (default 1)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Ensemble size (default 1000)
    #[arg(long)]
    pub agents: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed (default 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Mountain car: bins per axis (default 20)
    #[arg(long)]
    pub grid_percepts: Option<usize>,
    /// Mountain car: position update order (default printed)
    #[arg(long)]
    pub dynamics: Option<DynamicsOrder>,
    /// Step cap per trial (default 1000000)
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Clear glow at the start of each trial (default: glow carries over)
    #[arg(long)]
    pub glow_reset: bool,
    /// Output directory (default .)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    env: Option<EnvKind>,
    policy: Option<Policy>,
    eta: Option<f64>,
    gamma: Option<f64>,
    alpha: Option<f64>,
    lambda: Option<f64>,
    agents: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
    grid_percepts: Option<usize>,
    dynamics: Option<DynamicsOrder>,
    max_steps: Option<u64>,
    glow_reset: Option<bool>,
    out: Option<PathBuf>,
}

fn load(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::File(path.to_path_buf(), e.to_string()))?;
    toml::from_str(&text).map_err(|e| ConfigError::File(path.to_path_buf(), e.to_string()))
}

#[derive(Debug)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub out: PathBuf,
}

impl ExperimentArgs {
    /// Merge flags over the file. A sweep supplies its own `eta` values, so
    /// `need_eta` is false there and a placeholder is used.
    pub fn resolve(self, need_eta: bool) -> Result<Resolved, ConfigError> {
        let file = match &self.config {
            Some(path) => load(path)?,
            None => FileConfig::default(),
        };
        let env = self.env.or(file.env).ok_or(ConfigError::Missing("env"))?;
        let policy = self
            .policy
            .or(file.policy)
            .ok_or(ConfigError::Missing("policy"))?;
        let trials = self
            .trials
            .or(file.trials)
            .ok_or(ConfigError::Missing("trials"))?;
        let eta = match self.eta.or(file.eta) {
            Some(eta) => eta,
            None if need_eta => return Err(ConfigError::Missing("eta")),
            None => 1.0,
        };
        let params = PsParams::new(
            self.lambda.or(file.lambda).unwrap_or(1.0),
            self.gamma.or(file.gamma).unwrap_or(0.0),
            eta,
            self.alpha.or(file.alpha).unwrap_or(1.0),
            policy,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let mut config =
            ExperimentConfig::new(env, params, trials, self.seed.or(file.seed).unwrap_or(0));
        if let Some(agents) = self.agents.or(file.agents) {
            config.agents = agents;
        }
        if let Some(bins) = self.grid_percepts.or(file.grid_percepts) {
            config.grid_percepts = bins;
        }
        if let Some(order) = self.dynamics.or(file.dynamics) {
            config.dynamics = order;
        }
        if let Some(cap) = self.max_steps.or(file.max_steps) {
            config.max_steps_per_trial = cap;
        }
        config.glow_reset_between_trials = self.glow_reset || file.glow_reset.unwrap_or(false);
        config
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let out = self.out.or(file.out).unwrap_or_else(|| PathBuf::from("."));
        Ok(Resolved { config, out })
    }
}

//! Ensemble experiments: many independent agents, each learning over a
//! sequence of trials, summarized per trial across the ensemble.
//!
//! Agent `i` draws from its own ChaCha stream `i` under the master seed, so
//! results do not depend on how agents are scheduled across threads. The
//! per-trial statistics are folded in agent order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{ClipNetwork, PsParams};
use crate::error::{invalid, Error, Result};
use crate::gridworld::{GridAction, GridWorld, TERMINAL_PERCEPT};
use crate::mountain_car::{Discretizer, DynamicsOrder, McAction, MountainCar, ResetMode};

pub type AgentRng = ChaCha8Rng;

/// Independent random stream for agent `index`.
pub fn agent_rng(master_seed: u64, index: u64) -> AgentRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub percept: usize,
    pub reward: f64,
    pub done: bool,
}

/// Episodic task with discrete percepts and actions.
pub trait Environment {
    fn n_percepts(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Start a new episode and return the initial percept.
    fn reset(&mut self, rng: &mut dyn RngCore) -> Result<usize>;
    fn step(&mut self, action: usize) -> Result<Step>;
}

impl Environment for GridWorld {
    fn n_percepts(&self) -> usize {
        GridWorld::n_percepts(self)
    }

    fn n_actions(&self) -> usize {
        GridAction::ALL.len()
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> Result<usize> {
        Ok(GridWorld::reset(self))
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        let action = GridAction::from_index(action).ok_or(Error::ActionOutOfRange {
            index: action,
            count: GridAction::ALL.len(),
        })?;
        let s = GridWorld::step(self, action)?;
        Ok(Step {
            percept: s.percept,
            reward: s.reward,
            done: s.done,
        })
    }
}

impl Environment for MountainCar {
    fn n_percepts(&self) -> usize {
        self.discretizer().n_percepts()
    }

    fn n_actions(&self) -> usize {
        McAction::ALL.len()
    }

    fn reset(&mut self, mut rng: &mut dyn RngCore) -> Result<usize> {
        let state = MountainCar::reset(self, &mut rng);
        self.discretizer().percept(state)
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        let action = McAction::from_index(action).ok_or(Error::ActionOutOfRange {
            index: action,
            count: McAction::ALL.len(),
        })?;
        let s = MountainCar::step(self, action)?;
        let percept = if s.done {
            TERMINAL_PERCEPT
        } else {
            self.discretizer().percept(s.state)?
        };
        Ok(Step {
            percept,
            reward: s.reward,
            done: s.done,
        })
    }
}

/// Something that picks actions from percepts and learns from rewards.
pub trait Agent {
    /// Called before the first step of every trial.
    fn begin_trial(&mut self);
    fn act<R: Rng + ?Sized>(&mut self, percept: usize, rng: &mut R) -> Result<usize>;
    /// Called once per step with the reward the environment returned.
    fn learn(&mut self, reward: f64) -> Result<()>;
}

/// Projective-simulation agent: a clip network plus its hyperparameters.
#[derive(Debug, Clone)]
pub struct PsAgent {
    pub network: ClipNetwork,
    pub params: PsParams,
    pub reset_glow_each_trial: bool,
}

impl PsAgent {
    pub fn new(n_percepts: usize, n_actions: usize, params: PsParams) -> Result<Self> {
        Ok(Self {
            network: ClipNetwork::new(n_percepts, n_actions)?,
            params,
            reset_glow_each_trial: false,
        })
    }
}

impl Agent for PsAgent {
    fn begin_trial(&mut self) {
        if self.reset_glow_each_trial {
            self.network.reset_glow();
        }
    }

    fn act<R: Rng + ?Sized>(&mut self, percept: usize, rng: &mut R) -> Result<usize> {
        self.network.sample_action(percept, &self.params, rng)
    }

    fn learn(&mut self, reward: f64) -> Result<()> {
        self.network
            .learn_step(&self.params, reward * self.params.lambda())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    /// Steps taken, including the goal-entering step.
    pub steps: u64,
    /// The step cap ended the trial before the goal was reached.
    pub capped: bool,
}

/// Run one trial: reset, then perceive, act, step, learn until done or capped.
pub fn run_trial<A: Agent, E: Environment>(
    agent: &mut A,
    env: &mut E,
    rng: &mut AgentRng,
    max_steps: u64,
) -> Result<TrialOutcome> {
    agent.begin_trial();
    let mut percept = env.reset(rng)?;
    let mut steps = 0;
    loop {
        let action = agent.act(percept, rng)?;
        let step = env.step(action)?;
        agent.learn(step.reward)?;
        steps += 1;
        if step.done {
            return Ok(TrialOutcome {
                steps,
                capped: false,
            });
        }
        if steps >= max_steps {
            return Ok(TrialOutcome {
                steps,
                capped: true,
            });
        }
        percept = step.percept;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvKind {
    #[serde(rename = "gridworld")]
    GridWorld,
    #[serde(rename = "mc-random")]
    MountainCarRandom,
    #[serde(rename = "mc-fixed")]
    MountainCarFixed,
}

impl std::str::FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gridworld" => Ok(EnvKind::GridWorld),
            "mc-random" => Ok(EnvKind::MountainCarRandom),
            "mc-fixed" => Ok(EnvKind::MountainCarFixed),
            other => Err(invalid("env", format!("unknown environment `{other}`"))),
        }
    }
}

impl std::fmt::Display for EnvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnvKind::GridWorld => "gridworld",
            EnvKind::MountainCarRandom => "mc-random",
            EnvKind::MountainCarFixed => "mc-fixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub agents: usize,
    pub trials: usize,
    pub params: PsParams,
    pub seed: u64,
    pub max_steps_per_trial: u64,
    /// Clear glow at the start of every trial. Off by default: glow keeps
    /// decaying across trial boundaries, so with `eta = 0` every edge ever
    /// taken is rewarded again at each goal.
    pub glow_reset_between_trials: bool,
    /// Mountain-car only.
    pub dynamics: DynamicsOrder,
    /// Mountain-car only: bins per axis of the `(x, v)` grid.
    pub grid_percepts: usize,
}

impl ExperimentConfig {
    pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

    /// Desk-scale defaults: 1000 agents, unit reward, no damping, `alpha = 1`,
    /// glow carried across trials.
    pub fn new(env: EnvKind, params: PsParams, trials: usize, seed: u64) -> Self {
        Self {
            env,
            agents: 1000,
            trials,
            params,
            seed,
            max_steps_per_trial: Self::DEFAULT_MAX_STEPS,
            glow_reset_between_trials: false,
            dynamics: DynamicsOrder::Printed,
            grid_percepts: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents == 0 {
            return Err(invalid("agents", "need at least one agent"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "need at least one trial"));
        }
        if self.max_steps_per_trial == 0 {
            return Err(invalid("max_steps_per_trial", "cap must be at least 1"));
        }
        if self.grid_percepts == 0 {
            return Err(invalid("grid_percepts", "need at least one bin per axis"));
        }
        // round-trips the range checks for configs built by hand or deserialized
        PsParams::new(
            self.params.lambda(),
            self.params.gamma(),
            self.params.eta(),
            self.params.alpha(),
            self.params.policy(),
        )?;
        Ok(())
    }
}

/// Per-trial statistics over the agent ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub mean_steps: Vec<f64>,
    /// Population standard deviation across agents.
    pub std_steps: Vec<f64>,
    /// Trials that hit the step cap, over all agents.
    pub capped_trials: u64,
}

impl LearningCurve {
    /// Aggregate per-agent step counts (`steps[agent][trial]`), folding agents
    /// in the given order.
    pub fn from_agent_steps(steps: &[Vec<u64>], capped_trials: u64) -> Self {
        let trials = steps.first().map_or(0, Vec::len);
        let n = steps.len() as f64;
        let mut mean_steps = Vec::with_capacity(trials);
        let mut std_steps = Vec::with_capacity(trials);
        for t in 0..trials {
            let mean = steps.iter().map(|s| s[t] as f64).sum::<f64>() / n;
            let var = steps
                .iter()
                .map(|s| (s[t] as f64 - mean).powi(2))
                .sum::<f64>()
                / n;
            mean_steps.push(mean);
            std_steps.push(var.sqrt());
        }
        Self {
            mean_steps,
            std_steps,
            capped_trials,
        }
    }

    pub fn trials(&self) -> usize {
        self.mean_steps.len()
    }

    /// Mean steps at 1-based trial number `trial`.
    pub fn at(&self, trial: usize) -> f64 {
        self.mean_steps[trial - 1]
    }

    pub fn final_mean(&self) -> f64 {
        *self
            .mean_steps
            .last()
            .expect("curve has at least one trial")
    }

    /// Average of `mean_steps` over 1-based trials `first..=last`.
    pub fn average(&self, first: usize, last: usize) -> f64 {
        let slice = &self.mean_steps[first - 1..last];
        slice.iter().sum::<f64>() / slice.len() as f64
    }

    pub fn average_std(&self, first: usize, last: usize) -> f64 {
        let slice = &self.std_steps[first - 1..last];
        slice.iter().sum::<f64>() / slice.len() as f64
    }
}

/// Environment each agent starts from; cloned per agent.
enum Template {
    Grid(GridWorld),
    Car(MountainCar),
}

impl Template {
    fn for_config(config: &ExperimentConfig) -> Result<Self> {
        let mode = match config.env {
            EnvKind::GridWorld => return Ok(Template::Grid(GridWorld::default_maze())),
            EnvKind::MountainCarRandom => ResetMode::RandomUniform,
            EnvKind::MountainCarFixed => ResetMode::FixedBottom,
        };
        let disc = Discretizer::square(config.grid_percepts)?;
        Ok(Template::Car(MountainCar::new(mode, config.dynamics, disc)))
    }

    fn run_agent(&self, config: &ExperimentConfig, index: usize) -> Result<(Vec<u64>, u64)> {
        match self {
            Template::Grid(world) => run_agent(world.clone(), config, index),
            Template::Car(car) => run_agent(car.clone(), config, index),
        }
    }
}

fn run_agent<E: Environment>(
    mut env: E,
    config: &ExperimentConfig,
    index: usize,
) -> Result<(Vec<u64>, u64)> {
    let mut agent = PsAgent::new(env.n_percepts(), env.n_actions(), config.params)?;
    agent.reset_glow_each_trial = config.glow_reset_between_trials;
    let mut rng = agent_rng(config.seed, index as u64);
    let mut steps = Vec::with_capacity(config.trials);
    let mut capped = 0;
    for _ in 0..config.trials {
        let outcome = run_trial(&mut agent, &mut env, &mut rng, config.max_steps_per_trial)?;
        capped += u64::from(outcome.capped);
        steps.push(outcome.steps);
    }
    Ok((steps, capped))
}

/// Per-agent step counts, `steps[agent][trial]`, plus the capped-trial count.
pub fn run_ensemble(config: &ExperimentConfig) -> Result<(Vec<Vec<u64>>, u64)> {
    config.validate()?;
    let template = Template::for_config(config)?;
    let per_agent: Vec<(Vec<u64>, u64)> = (0..config.agents)
        .into_par_iter()
        .map(|i| template.run_agent(config, i))
        .collect::<Result<_>>()?;
    let capped = per_agent.iter().map(|(_, c)| c).sum();
    Ok((per_agent.into_iter().map(|(s, _)| s).collect(), capped))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<LearningCurve> {
    let (steps, capped) = run_ensemble(config)?;
    Ok(LearningCurve::from_agent_steps(&steps, capped))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eta: f64,
    pub mean_steps: f64,
}

/// Mean steps at 1-based `probe_trial` for each glow rate in `etas`.
pub fn eta_sweep(
    base: &ExperimentConfig,
    etas: &[f64],
    probe_trial: usize,
) -> Result<Vec<SweepRow>> {
    if etas.is_empty() {
        return Err(invalid("etas", "need at least one glow rate"));
    }
    if probe_trial == 0 || probe_trial > base.trials {
        return Err(invalid(
            "probe_trial",
            format!("must lie in 1..={}, got {probe_trial}", base.trials),
        ));
    }
    let mut rows = Vec::with_capacity(etas.len());
    for &eta in etas {
        // Later trials never influence earlier ones, so stop at the probe.
        let config = ExperimentConfig {
            params: base.params.with_eta(eta)?,
            trials: probe_trial,
            ..base.clone()
        };
        let curve = run_experiment(&config)?;
        rows.push(SweepRow {
            eta,
            mean_steps: curve.at(probe_trial),
        });
    }
    Ok(rows)
}

/// Row with the fewest mean steps.
pub fn sweep_argmin(rows: &[SweepRow]) -> Option<SweepRow> {
    rows.iter()
        .copied()
        .min_by(|a, b| a.mean_steps.total_cmp(&b.mean_steps))
}

/// `n` log-spaced points in `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// Default sweep grid: 30 log-spaced glow rates in `[1e-3, 1]`.
pub fn default_eta_grid() -> Vec<f64> {
    let mut etas = log_spaced(1e-3, 1.0, 30);
    // exp(ln(1)) is exact but guard the top end against rounding anyway
    if let Some(last) = etas.last_mut() {
        *last = 1.0;
    }
    etas
}

/// Least-squares slope of `mean_steps` against trial number over the first
/// `window` trials.
pub fn initial_slope(curve: &LearningCurve, window: usize) -> Result<f64> {
    if window < 2 || window > curve.trials() {
        return Err(invalid(
            "window",
            format!("must lie in 2..={}, got {window}", curve.trials()),
        ));
    }
    let ys = &curve.mean_steps[..window];
    let n = window as f64;
    let x_mean = (n + 1.0) / 2.0;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = (i + 1) as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    Ok(sxy / sxx)
}

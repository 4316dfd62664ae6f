//! Mountain-car dynamics and uniform state discretization.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::output::format_sig6;

pub const X_MIN: f64 = -1.2;
pub const X_GOAL: f64 = 0.5;
pub const V_MAX: f64 = 0.07;
pub const ENGINE_ACCEL: f64 = 0.001;
pub const GRAVITY: f64 = 0.0025;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McState {
    pub x: f64,
    pub v: f64,
}

impl McState {
    pub const fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }

    /// Start used for the fixed-start task: near the valley floor, at rest.
    pub const BOTTOM: McState = McState::new(-0.5, 0.0);

    pub fn in_bounds(&self) -> bool {
        (X_MIN..=X_GOAL).contains(&self.x) && (-V_MAX..=V_MAX).contains(&self.v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum McAction {
    Reverse,
    NoThrust,
    Forward,
}

impl McAction {
    pub const ALL: [McAction; 3] = [McAction::Reverse, McAction::NoThrust, McAction::Forward];

    /// Thrust sign: -1, 0 or +1.
    pub fn thrust(self) -> f64 {
        match self {
            McAction::Reverse => -1.0,
            McAction::NoThrust => 0.0,
            McAction::Forward => 1.0,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }
}

/// Which velocity drives the position update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicsOrder {
    /// `x_new = x_old + v_old`
    #[default]
    #[serde(alias = "asprinted")]
    Printed,
    /// `x_new = x_old + v_new` (after velocity clamping)
    Conventional,
}

impl std::str::FromStr for DynamicsOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "printed" | "asprinted" | "as-printed" => Ok(DynamicsOrder::Printed),
            "conventional" => Ok(DynamicsOrder::Conventional),
            other => Err(invalid("dynamics", format!("unknown order `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResetMode {
    /// `x ~ U[-1.2, 0.5)`, `v ~ U[-0.07, 0.07]`
    RandomUniform,
    /// `(x, v) = (-0.5, 0)`
    FixedBottom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McStep {
    pub state: McState,
    pub reward: f64,
    pub done: bool,
}

/// One step of the dynamics. Position is clamped to `[-1.2, 0.5]`; moving past
/// the left wall stops the car, reaching `x >= 0.5` ends the episode.
///
/// The wall test is strict. A car resting exactly on `x = -1.2` is not past
/// the wall, so gravity can pull it back out. With an inclusive test and the
/// printed update `x + v_old`, a stopped car would stay pinned there forever.
pub fn mc_step(state: McState, action: McAction, order: DynamicsOrder) -> McStep {
    let McState { x, v } = state;
    let v_new =
        (v + ENGINE_ACCEL * action.thrust() - GRAVITY * (3.0 * x).cos()).clamp(-V_MAX, V_MAX);
    let x_new = match order {
        DynamicsOrder::Printed => x + v,
        DynamicsOrder::Conventional => x + v_new,
    };
    if x_new >= X_GOAL {
        McStep {
            state: McState::new(X_GOAL, v_new),
            reward: 1.0,
            done: true,
        }
    } else if x_new < X_MIN {
        McStep {
            state: McState::new(X_MIN, 0.0),
            reward: 0.0,
            done: false,
        }
    } else {
        McStep {
            state: McState::new(x_new, v_new),
            reward: 0.0,
            done: false,
        }
    }
}

pub fn mc_reset<R: Rng + ?Sized>(mode: ResetMode, rng: &mut R) -> McState {
    match mode {
        ResetMode::FixedBottom => McState::BOTTOM,
        ResetMode::RandomUniform => {
            let x = rng.gen_range(X_MIN..X_GOAL);
            let v = rng.gen_range(-V_MAX..=V_MAX);
            McState::new(x, v)
        }
    }
}

/// Uniform grid over the bounded `(x, v)` box. Bins are left-closed; the
/// upper edge falls into the last bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discretizer {
    bins_x: usize,
    bins_v: usize,
}

impl Default for Discretizer {
    fn default() -> Self {
        Self {
            bins_x: 20,
            bins_v: 20,
        }
    }
}

impl Discretizer {
    pub fn new(bins_x: usize, bins_v: usize) -> Result<Self> {
        if bins_x == 0 || bins_v == 0 {
            return Err(invalid("bins", "need at least one bin per axis"));
        }
        Ok(Self { bins_x, bins_v })
    }

    pub fn square(bins: usize) -> Result<Self> {
        Self::new(bins, bins)
    }

    pub fn bins_x(&self) -> usize {
        self.bins_x
    }

    pub fn bins_v(&self) -> usize {
        self.bins_v
    }

    pub fn n_percepts(&self) -> usize {
        self.bins_x * self.bins_v
    }

    pub fn percept(&self, state: McState) -> Result<usize> {
        if !state.in_bounds() {
            return Err(Error::StateOutOfBounds {
                x: state.x,
                v: state.v,
            });
        }
        let bin = |value: f64, lo: f64, span: f64, bins: usize| {
            let b = ((value - lo) / span * bins as f64).floor() as usize;
            b.min(bins - 1)
        };
        let bx = bin(state.x, X_MIN, X_GOAL - X_MIN, self.bins_x);
        let bv = bin(state.v, -V_MAX, 2.0 * V_MAX, self.bins_v);
        Ok(bx * self.bins_v + bv)
    }
}

/// Single-episode environment holding the current state.
#[derive(Debug, Clone)]
pub struct MountainCar {
    state: McState,
    done: bool,
    order: DynamicsOrder,
    mode: ResetMode,
    discretizer: Discretizer,
}

impl MountainCar {
    pub fn new(mode: ResetMode, order: DynamicsOrder, discretizer: Discretizer) -> Self {
        Self {
            state: McState::BOTTOM,
            done: false,
            order,
            mode,
            discretizer,
        }
    }

    pub fn state(&self) -> McState {
        self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn discretizer(&self) -> &Discretizer {
        &self.discretizer
    }

    pub fn order(&self) -> DynamicsOrder {
        self.order
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> McState {
        self.state = mc_reset(self.mode, rng);
        self.done = false;
        self.state
    }

    /// Start a live episode from an explicit state.
    pub fn set_state(&mut self, state: McState) -> Result<()> {
        if !state.in_bounds() {
            return Err(Error::StateOutOfBounds {
                x: state.x,
                v: state.v,
            });
        }
        self.state = state;
        self.done = false;
        Ok(())
    }

    pub fn step(&mut self, action: McAction) -> Result<McStep> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let step = mc_step(self.state, action, self.order);
        self.state = step.state;
        self.done = step.done;
        Ok(step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub x: f64,
    pub v: f64,
    pub action: McAction,
    pub reward: f64,
}

pub fn write_trajectory_csv<W: Write>(mut out: W, rows: &[TrajectoryRow]) -> Result<()> {
    writeln!(out, "step,x,v,action,reward")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.step,
            format_sig6(r.x),
            format_sig6(r.v),
            r.action.thrust() as i32,
            format_sig6(r.reward)
        )?;
    }
    Ok(())
}

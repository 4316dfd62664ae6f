//! Work-energy analysis of the mountain-car track.
//!
//! The car's tangential dynamics are `dv/dt = a - g cos(phi)` with
//! `g cos(phi) = 0.0025 cos(3x)`, so the track height is
//! `h(x) = 0.0025 / (3g) * sin(3x) + C`. Equating engine work with the change
//! in mechanical energy bounds how far a single push can carry the car.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mountain_car::{McAction, McState, McStep, ENGINE_ACCEL, GRAVITY, X_GOAL, X_MIN};
use crate::output::format_sig6;

const ROOT_TOL: f64 = 1e-9;
const SCAN_STEP: f64 = 1e-4;

/// Step limit for [`baseline_strategy`].
pub const BASELINE_STEP_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub g_accel: f64,
    pub a_engine: f64,
    pub integration_constant: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self {
            g_accel: GRAVITY,
            a_engine: ENGINE_ACCEL,
            integration_constant: 0.0,
        }
    }
}

impl PhysicsParams {
    pub fn new(g_accel: f64, a_engine: f64, integration_constant: f64) -> Result<Self> {
        if !(g_accel > 0.0 && g_accel.is_finite()) {
            return Err(invalid("g_accel", "must be positive"));
        }
        if !(a_engine >= 0.0 && a_engine.is_finite()) {
            return Err(invalid("a_engine", "must be non-negative"));
        }
        Ok(Self {
            g_accel,
            a_engine,
            integration_constant,
        })
    }

    pub fn height(&self, x: f64) -> f64 {
        GRAVITY / (3.0 * self.g_accel) * (3.0 * x).sin() + self.integration_constant
    }

    /// `dh/dx`
    pub fn slope(&self, x: f64) -> f64 {
        GRAVITY / self.g_accel * (3.0 * x).cos()
    }

    /// Engine work minus potential-energy gain (per unit mass) for a push
    /// from `x0` to `x`. Non-negative exactly where the car still moves.
    fn surplus(&self, x0: f64, x: f64) -> f64 {
        self.a_engine * (x - x0).abs() - self.g_accel * (self.height(x) - self.height(x0))
    }
}

/// Height of the track, `0.0025 / (3g) sin(3x) + C`.
pub fn height(x: f64, params: &PhysicsParams) -> f64 {
    params.height(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Left,
    Right,
}

/// Turning point of a car starting at rest at `x0` and pushing constantly in
/// `direction`: the first point past `x0` where all engine work has been
/// converted to height. Returns the domain edge if the car never stops.
pub fn max_reach(x0: f64, direction: Direction, params: &PhysicsParams) -> f64 {
    let (sign, edge) = match direction {
        Direction::Left => (-1.0, X_MIN),
        Direction::Right => (1.0, X_GOAL),
    };
    let f = |x: f64| params.surplus(x0, x);

    let mut inside = x0;
    loop {
        let next = x0 + sign * ((inside - x0).abs() + SCAN_STEP);
        let next = if sign > 0.0 {
            next.min(edge)
        } else {
            next.max(edge)
        };
        if f(next) < 0.0 {
            return bisect(f, inside, next);
        }
        if next == edge {
            return edge;
        }
        inside = next;
    }
}

/// Root of `f` between `good` (`f >= 0`) and `bad` (`f < 0`).
fn bisect(f: impl Fn(f64) -> f64, mut good: f64, mut bad: f64) -> f64 {
    while (bad - good).abs() > ROOT_TOL {
        let mid = 0.5 * (good + bad);
        if f(mid) >= 0.0 {
            good = mid;
        } else {
            bad = mid;
        }
    }
    0.5 * (good + bad)
}

/// Whether a constant forward push from rest at `x0` can reach `x_goal`:
/// `a (x_goal - x0) >= g (h(x_goal) - h(x0))`.
pub fn feasibility_check(x0: f64, x_goal: f64, params: &PhysicsParams) -> bool {
    params.a_engine * (x_goal - x0) >= params.g_accel * (params.height(x_goal) - params.height(x0))
}

/// Location of the lowest point of the track on `[-1.2, 0.5]`, found as the
/// root of `dh/dx` where it turns from negative to positive.
pub fn height_minimum(params: &PhysicsParams) -> f64 {
    let mut x = X_MIN;
    while x < X_GOAL {
        let next = (x + 1e-3).min(X_GOAL);
        if params.slope(x) < 0.0 && params.slope(next) >= 0.0 {
            // slope is increasing through the root; bisect on -slope
            return bisect(|t| -params.slope(t), x, next);
        }
        x = next;
    }
    // monotone track: lowest endpoint
    if params.height(X_MIN) <= params.height(X_GOAL) {
        X_MIN
    } else {
        X_GOAL
    }
}

pub fn height_profile(params: &PhysicsParams, points: usize) -> Vec<(f64, f64)> {
    let n = points.max(2);
    (0..n)
        .map(|i| {
            let x = X_MIN + (X_GOAL - X_MIN) * i as f64 / (n - 1) as f64;
            (x, params.height(x))
        })
        .collect()
}

pub fn write_height_csv<W: Write>(mut out: W, profile: &[(f64, f64)]) -> Result<()> {
    writeln!(out, "x,height")?;
    for (x, h) in profile {
        writeln!(out, "{},{}", format_sig6(*x), format_sig6(*h))?;
    }
    Ok(())
}

/// When the baseline strategy stops reversing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchRule {
    /// Reverse until the velocity is back at `>= 0` after having been negative.
    VelocityReversal,
    /// Reverse for exactly this many steps.
    AfterReverseSteps(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRun {
    pub total_steps: usize,
    pub reverse_steps: usize,
    pub forward_steps: usize,
    pub max_abs_velocity: f64,
    /// Leftmost position visited.
    pub min_x: f64,
    pub actions: Vec<McAction>,
}

/// Push left, then push right until the goal is reached.
pub fn baseline_strategy(
    start: McState,
    switch: SwitchRule,
    mut step: impl FnMut(McState, McAction) -> McStep,
) -> Result<BaselineRun> {
    let mut state = start;
    let mut reversing = switch != SwitchRule::AfterReverseSteps(0);
    let mut seen_negative = false;
    let mut actions = Vec::new();
    let mut max_abs_velocity = state.v.abs();
    let mut min_x = state.x;

    while actions.len() < BASELINE_STEP_LIMIT {
        if reversing {
            reversing = match switch {
                SwitchRule::VelocityReversal => !(seen_negative && state.v >= 0.0),
                SwitchRule::AfterReverseSteps(n) => actions.len() < n,
            };
        }
        let action = if reversing {
            McAction::Reverse
        } else {
            McAction::Forward
        };
        let next = step(state, action);
        actions.push(action);
        state = next.state;
        seen_negative |= state.v < 0.0;
        max_abs_velocity = max_abs_velocity.max(state.v.abs());
        min_x = min_x.min(state.x);
        if next.done {
            let reverse_steps = actions.iter().filter(|&&a| a == McAction::Reverse).count();
            return Ok(BaselineRun {
                total_steps: actions.len(),
                reverse_steps,
                forward_steps: actions.len() - reverse_steps,
                max_abs_velocity,
                min_x,
                actions,
            });
        }
    }
    Err(Error::BaselineDidNotFinish(BASELINE_STEP_LIMIT))
}

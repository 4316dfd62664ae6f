//! Two-layer projective-simulation clip network.
//!
//! Every percept clip is connected to every action clip. Each edge carries an
//! h-value (its unnormalized strength, initially 1) and a glow value in
//! `[0, 1]` that is set to 1 when the edge is traversed and decays by a factor
//! `1 - eta` after every time step. A reward `lambda` adds `g * lambda` to every
//! edge, while damping `gamma` relaxes all h-values toward 1.
//!
//! Both per-step relaxations apply to *every* edge, so a naive implementation
//! costs `O(percepts * actions)` per step. The network instead stores
//! `h - 1` and `g` relative to running scale factors, which turns the global
//! decays into a single multiplication. Scales are folded back into the
//! per-edge values before they can underflow. Reads always return the true
//! values.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Scale factors below this are folded into the per-edge values.
const FOLD_THRESHOLD: f64 = 1e-200;

/// Rule turning a row of h-values into hopping probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// `p(a) = h(s,a) / sum_k h(s,k)`
    Basic,
    /// `p(a) = exp(alpha h(s,a)) / sum_k exp(alpha h(s,k))`
    Softmax,
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Policy::Basic => f.write_str("basic"),
            Policy::Softmax => f.write_str("softmax"),
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "basic" => Ok(Policy::Basic),
            "softmax" => Ok(Policy::Softmax),
            other => Err(invalid("policy", format!("unknown policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct RawParams {
    lambda: f64,
    gamma: f64,
    eta: f64,
    alpha: f64,
    policy: Policy,
}

/// Agent hyperparameters. Ranges are checked on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct PsParams {
    lambda: f64,
    gamma: f64,
    eta: f64,
    alpha: f64,
    policy: Policy,
}

impl PsParams {
    pub fn new(lambda: f64, gamma: f64, eta: f64, alpha: f64, policy: Policy) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid(
                "lambda",
                format!("must be finite and >= 0, got {lambda}"),
            ));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invalid("gamma", format!("must lie in [0, 1], got {gamma}")));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(invalid("eta", format!("must lie in [0, 1], got {eta}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(invalid(
                "alpha",
                format!("must be finite and > 0, got {alpha}"),
            ));
        }
        Ok(Self {
            lambda,
            gamma,
            eta,
            alpha,
            policy,
        })
    }

    /// Unit reward, `alpha = 1` and the given damping, glow rate and policy.
    pub fn with_policy(policy: Policy, gamma: f64, eta: f64) -> Result<Self> {
        Self::new(1.0, gamma, eta, 1.0, policy)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// Same parameters with a different glow rate.
    pub fn with_eta(self, eta: f64) -> Result<Self> {
        Self::new(self.lambda, self.gamma, eta, self.alpha, self.policy)
    }
}

impl TryFrom<RawParams> for PsParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        Self::new(raw.lambda, raw.gamma, raw.eta, raw.alpha, raw.policy)
    }
}

impl From<PsParams> for RawParams {
    fn from(p: PsParams) -> Self {
        RawParams {
            lambda: p.lambda,
            gamma: p.gamma,
            eta: p.eta,
            alpha: p.alpha,
            policy: p.policy,
        }
    }
}

/// Hopping probabilities from one percept clip to every action clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

/// Which edge quantity to export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeValue {
    H,
    Glow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipNetwork {
    n_percepts: usize,
    n_actions: usize,
    /// `(h - 1) / h_scale`, row-major by percept.
    excess: Vec<f64>,
    h_scale: f64,
    /// `g / glow_scale`; zero means the edge is not glowing.
    glow: Vec<f64>,
    glow_scale: f64,
    /// Edges whose stored glow is non-zero.
    glowing: Vec<usize>,
}

impl ClipNetwork {
    /// Fresh network: every h-value is 1 and no edge glows.
    pub fn new(n_percepts: usize, n_actions: usize) -> Result<Self> {
        if n_percepts == 0 {
            return Err(invalid("n_percepts", "need at least one percept clip"));
        }
        if n_actions == 0 {
            return Err(invalid("n_actions", "need at least one action clip"));
        }
        let edges = n_percepts * n_actions;
        Ok(Self {
            n_percepts,
            n_actions,
            excess: vec![0.0; edges],
            h_scale: 1.0,
            glow: vec![0.0; edges],
            glow_scale: 1.0,
            glowing: Vec::new(),
        })
    }

    pub fn n_percepts(&self) -> usize {
        self.n_percepts
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn check_percept(&self, percept: usize) -> Result<()> {
        if percept < self.n_percepts {
            Ok(())
        } else {
            Err(Error::PerceptOutOfRange {
                index: percept,
                count: self.n_percepts,
            })
        }
    }

    fn edge(&self, percept: usize, action: usize) -> Result<usize> {
        self.check_percept(percept)?;
        if action >= self.n_actions {
            return Err(Error::ActionOutOfRange {
                index: action,
                count: self.n_actions,
            });
        }
        Ok(percept * self.n_actions + action)
    }

    #[inline]
    fn h_at(&self, edge: usize) -> f64 {
        1.0 + self.excess[edge] * self.h_scale
    }

    #[inline]
    fn g_at(&self, edge: usize) -> f64 {
        (self.glow[edge] * self.glow_scale).min(1.0)
    }

    /// Current h-value of the edge `percept -> action`.
    pub fn h(&self, percept: usize, action: usize) -> Result<f64> {
        self.edge(percept, action).map(|e| self.h_at(e))
    }

    /// Current glow value of the edge `percept -> action`.
    pub fn g(&self, percept: usize, action: usize) -> Result<f64> {
        self.edge(percept, action).map(|e| self.g_at(e))
    }

    /// Overwrite an h-value. Values below 1 are rejected so the floor holds.
    pub fn set_h(&mut self, percept: usize, action: usize, value: f64) -> Result<()> {
        let e = self.edge(percept, action)?;
        if !(value.is_finite() && value >= 1.0) {
            return Err(invalid(
                "h",
                format!("must be finite and >= 1, got {value}"),
            ));
        }
        self.excess[e] = (value - 1.0) / self.h_scale;
        Ok(())
    }

    /// All h-values, row-major (`percept * n_actions + action`).
    pub fn h_matrix(&self) -> Vec<f64> {
        (0..self.excess.len()).map(|e| self.h_at(e)).collect()
    }

    /// All glow values, row-major.
    pub fn g_matrix(&self) -> Vec<f64> {
        (0..self.glow.len()).map(|e| self.g_at(e)).collect()
    }

    pub fn hop_probabilities(
        &self,
        percept: usize,
        params: &PsParams,
    ) -> Result<ProbabilityVector> {
        self.check_percept(percept)?;
        let row = percept * self.n_actions..(percept + 1) * self.n_actions;
        let weights: Vec<f64> = match params.policy {
            Policy::Basic => row.map(|e| self.h_at(e)).collect(),
            Policy::Softmax => {
                let logits: Vec<f64> = row.map(|e| params.alpha * self.h_at(e)).collect();
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                logits.iter().map(|l| (l - max).exp()).collect()
            }
        };
        let total: f64 = weights.iter().sum();
        Ok(ProbabilityVector(
            weights.into_iter().map(|w| w / total).collect(),
        ))
    }

    /// Draw an action for `percept` and mark the traversed edge with full glow.
    pub fn sample_action<R: Rng + ?Sized>(
        &mut self,
        percept: usize,
        params: &PsParams,
        rng: &mut R,
    ) -> Result<usize> {
        self.check_percept(percept)?;
        let base = percept * self.n_actions;
        let n = self.n_actions;
        let u: f64 = rng.gen();

        // Two passes over the row: one for the normalizer, one to locate `u`.
        // Nothing is allocated on this path.
        let action = match params.policy {
            Policy::Basic => {
                let total: f64 = (base..base + n).map(|e| self.h_at(e)).sum();
                pick(u * total, (base..base + n).map(|e| self.h_at(e)))
            }
            Policy::Softmax => {
                let alpha = params.alpha;
                let max = (base..base + n)
                    .map(|e| alpha * self.h_at(e))
                    .fold(f64::NEG_INFINITY, f64::max);
                let weight = |e: usize| (alpha * self.h_at(e) - max).exp();
                let total: f64 = (base..base + n).map(weight).sum();
                pick(u * total, (base..base + n).map(weight))
            }
        };

        let e = base + action;
        if self.glow[e] == 0.0 {
            self.glowing.push(e);
        }
        self.glow[e] = 1.0 / self.glow_scale;
        Ok(action)
    }

    /// One time step of learning: reward and damping on every edge using the
    /// current glow, then glow decay.
    pub fn learn_step(&mut self, params: &PsParams, reward: f64) -> Result<()> {
        if reward.is_nan() || reward < 0.0 {
            return Err(Error::NegativeReward(reward));
        }

        if params.gamma > 0.0 {
            self.h_scale *= 1.0 - params.gamma;
            if self.h_scale < FOLD_THRESHOLD {
                let scale = self.h_scale;
                self.excess.iter_mut().for_each(|x| *x *= scale);
                self.h_scale = 1.0;
            }
        }

        if reward > 0.0 {
            for &e in &self.glowing {
                let g = (self.glow[e] * self.glow_scale).min(1.0);
                self.excess[e] += g * reward / self.h_scale;
            }
        }

        if params.eta > 0.0 {
            self.glow_scale *= 1.0 - params.eta;
            if self.glow_scale < FOLD_THRESHOLD {
                self.fold_glow();
            }
        }
        Ok(())
    }

    fn fold_glow(&mut self) {
        let scale = self.glow_scale;
        let glow = &mut self.glow;
        self.glowing.retain(|&e| {
            glow[e] *= scale;
            glow[e] > 0.0
        });
        self.glow_scale = 1.0;
    }

    /// Clear all glow; h-values are untouched.
    pub fn reset_glow(&mut self) {
        for e in self.glowing.drain(..) {
            self.glow[e] = 0.0;
        }
        self.glow_scale = 1.0;
    }

    /// Dump h or glow values as CSV: one row per percept, one column per action.
    pub fn write_csv<W: Write>(&self, mut out: W, which: EdgeValue) -> Result<()> {
        let header: Vec<String> = (0..self.n_actions).map(|a| format!("a{a}")).collect();
        writeln!(out, "percept,{}", header.join(","))?;
        for s in 0..self.n_percepts {
            let row: Vec<String> = (0..self.n_actions)
                .map(|a| {
                    let e = s * self.n_actions + a;
                    let v = match which {
                        EdgeValue::H => self.h_at(e),
                        EdgeValue::Glow => self.g_at(e),
                    };
                    crate::output::format_sig6(v)
                })
                .collect();
            writeln!(out, "{s},{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Index of the first weight whose running sum exceeds `threshold`. Rounding
/// can leave `threshold` at or past the final sum; the last positive weight is
/// returned then.
fn pick(threshold: f64, weights: impl Iterator<Item = f64>) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last_positive = i;
        }
        acc += w;
        if threshold < acc {
            return i;
        }
    }
    last_positive
}

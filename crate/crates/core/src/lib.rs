//! Projective-simulation agents on the grid-world maze and the mountain-car
//! task, with an ensemble experiment harness and a work-energy oracle for the
//! mountain-car track.

pub mod agent;
pub mod error;
pub mod gridworld;
pub mod harness;
pub mod mountain_car;
pub mod output;
pub mod physics;

pub use agent::{ClipNetwork, EdgeValue, Policy, ProbabilityVector, PsParams};
pub use error::{Error, Result};
pub use gridworld::{Cell, GridAction, GridWorld};
pub use harness::{
    eta_sweep, initial_slope, run_experiment, run_trial, Agent, EnvKind, Environment,
    ExperimentConfig, LearningCurve, PsAgent, SweepRow,
};
pub use mountain_car::{Discretizer, DynamicsOrder, McAction, McState, MountainCar, ResetMode};
pub use output::RunManifest;
pub use physics::{Direction, PhysicsParams, SwitchRule};

//! Hyper-parameter design, exploration schedules and the controllers.

pub mod controllers;
pub mod hyper;
pub mod schedule;

use thiserror::Error;

use crate::arx::ArxError;

pub use controllers::{
    build_controller, exploit_decision, Algorithm, CertaintyEquivalence, Controller, ControllerDecision, Mode, Oracle,
    ProbingController,
};
pub use hyper::{
    compute_bu, compute_episode_constants, first_episode_target, solve_delta1, solve_hyperparams, ConstantsRule,
    Delta1Solution, HyperConfig, HyperParams, ThetaSet, ThetaSummary,
};
pub use schedule::{Episode, ExplorationSchedule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error(transparent)]
    Plant(#[from] ArxError),
    #[error("invalid parameter set: {0}")]
    InvalidThetaSet(String),
    #[error("invalid design quantities: {0}")]
    InvalidSummary(String),
    #[error("no positive delta1 satisfies the stability inequalities")]
    NoSolution,
}

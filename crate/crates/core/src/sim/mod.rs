//! Fixed-step simulation of the capture and escort stages.

mod config;
mod engine;
mod log;

pub use config::{ArrivalConfig, AssignmentConfig, Derived, ScenarioGeometry, SimConfig};
pub use engine::{check_escort_guarantees, run, Simulation, World};
pub use log::{FailureReason, Metrics, Outcome, Stage, StepRecord, TrajectoryLog};

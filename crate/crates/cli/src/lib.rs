//! Scenario files, export and batch runs for the herding simulator.

pub mod app;
pub mod batch;
pub mod export;
pub mod scenario;
pub mod snapshot;

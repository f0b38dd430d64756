//! Experiment harness and data formats around [`tomoframe_core`].

pub mod config;
pub mod error;
pub mod exchange;
pub mod experiments;
pub mod output;
pub mod scenarios;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use experiments::{run_experiment, run_success_curve, ExperimentRecord, PointRecord, RunOptions};
pub use scenarios::{builtin_scenarios, scenario, Scenario};

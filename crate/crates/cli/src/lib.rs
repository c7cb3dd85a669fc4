//! Config-driven command line front end for the `spdelab` solver.
//!
//! A run is `parse_config` → [`run::run_summary`] → [`output::emit_outputs`].

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod verify;

pub use config::{parse_config, Command, ExperimentConfig};
pub use error::CliError;
pub use output::{emit_outputs, Check, RunOutput, RunSummary, Table};
pub use run::{run, run_summary};

/// Version of the config and summary schemas.
pub const SCHEMA_VERSION: u32 = 1;

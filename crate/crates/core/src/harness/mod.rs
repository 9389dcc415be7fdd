//! Scenario configuration, orchestration, validation and file output behind the CLI.

pub mod cli;
pub mod config;
pub mod output;
pub mod run;
pub mod validate;

pub use config::{load_config, parse_config, Model, OutputRequest, ScenarioConfig};
pub use run::{run_scenario, run_selected, Provenance, ResultRecord, RunOptions};
pub use validate::{validate_all, CheckResult, ValidationReport};

//! Batch runner for time changes by inverse killed subordinators.
//!
//! Reads one TOML experiment file, dispatches to the estimators and solvers
//! of [`timechange_core`], and writes CSV tables, a JSON summary and an SVG
//! plot. See `docs/config.md` for the schema.

pub mod cli;
pub mod config;
pub mod error;
pub mod executor;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod report;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use executor::RayonExecutor;
pub use experiments::run_experiment;
pub use report::{Record, ValidationReport};

//! Command-line front end: scenario files, reports, trace export and plots.

pub mod commands;
pub mod error;
pub mod plot;
pub mod report;
pub mod scenario_file;
pub mod trace_csv;

pub use error::{CliError, CliResult};
pub use scenario_file::ScenarioFile;

//! Configuration, figure scenarios and file output for the `rvo` binary.

pub mod config;
pub mod error;
pub mod output;
pub mod scenario;

pub use config::{load_config, parse_config, RunConfig, Scenario};
pub use error::CliError;
pub use output::{read_trace, write_trace};
pub use scenario::{run_scenario, RunManifest};

//! Command-line harness around `fracisaacs`: single-stage subcommands and
//! seeded experiment suites with hashed artifacts.

pub mod artifacts;
pub mod error;
pub mod random;
pub mod stages;
pub mod suite;

pub use error::{CliError, CliResult};
pub use stages::{run_stage, SpecContext, Stage, StageOutcome, StageParams};
pub use suite::{run_suite, ExperimentSuite, Manifest};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

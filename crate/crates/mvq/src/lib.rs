//! Command-line front end of `mvq-core`: run configurations, result files,
//! the cached exact Burgers CDF and the benchmark experiments.

// `!(a < b)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod report;
pub mod runner;
pub mod truecdf;

pub use config::{load_config, parse_config, RunConfig};
pub use error::CliError;
pub use report::{ErrorReport, Stat, Summary};
pub use runner::{run_config, RunOptions, RunOutput};

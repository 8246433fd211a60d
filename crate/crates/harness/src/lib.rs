//! Configuration, experiment drivers and CSV/manifest output for the
//! `plasmotrack` command line tool.

// `!(x > 0.0)` is used on purpose so NaN fails validation too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coercivity;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod setup;
pub mod track;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use output::Report;

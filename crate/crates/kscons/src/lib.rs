//! Configuration, scenarios, file formats and reports around `kscons-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod fields;
pub mod io;
pub mod mms;
pub mod report;
pub mod scenarios;

pub use config::{load_config, load_str, LoadedConfig, RunConfig, ScenarioKind};
pub use error::HarnessError;

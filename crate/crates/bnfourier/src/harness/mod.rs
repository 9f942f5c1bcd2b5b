//! Configured, seeded experiment pipelines and their tabular output.

pub mod config;
pub mod experiments;
pub mod record;

pub use config::{Experiment, ExperimentConfig, Format};
pub use experiments::run;
pub use record::{all_pass, emit, parse_json, render, ResultRecord, Value};

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "BNF_OUT_DIR";

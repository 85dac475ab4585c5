// SPDX-License-Identifier: MIT OR Apache-2.0

//! Configuration, end-to-end pipelines, the worked example and Monte Carlo
//! comparisons.

pub mod config;
pub mod montecarlo;
pub mod pipeline;
pub mod random;
pub mod repro;

pub use config::{load_config, ConfigError, ExperimentConfig, Method};
pub use montecarlo::{run_monte_carlo, MonteCarloReport};
pub use pipeline::{emit_report, run_pipeline, RunReport};
pub use repro::run_paper_repro;

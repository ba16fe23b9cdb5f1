//! Experiment engine and file outputs for the prola bandit.
//!
//! - [`config`] — TOML experiment configs with full validation and
//!   default resolution;
//! - [`presets`] — the case-study reward presets;
//! - [`experiment`] — seeded, replication-parallel simulation and
//!   aggregation;
//! - [`outputs`] — CSV/SVG/metadata writers with atomic file replacement;
//! - [`svg`] — the native chart renderer behind the plots.
//!
//! The `prola` binary in this crate exposes the `run`, `sweep`,
//! `presets`, and `validate` subcommands over this library.

pub mod config;
pub mod error;
pub mod experiment;
pub mod outputs;
pub mod presets;
pub mod svg;

pub use config::{load_config, load_config_path, ExperimentConfig};
pub use error::RunnerError;
pub use experiment::{run_experiment, run_replication, AggregateResult};
pub use outputs::write_outputs;

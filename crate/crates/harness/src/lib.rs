//! Experiment registry and artifact pipeline for the `spinchain` simulator.
//!
//! Presets reproduce the published runs; overrides come from flat dotted-key
//! config files and the command line. Runs emit a profile CSV, a JSON summary
//! carrying every parameter needed to replay them, and SVG plots rendered from
//! the CSV alone.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod error;
pub mod portrait;
pub mod preset;
pub mod run;
pub mod svg;
pub mod sweep;

pub use config::{apply_overrides, parse_config, Override};
pub use error::HarnessError;
pub use preset::{preset, ExperimentPreset, PresetName};
pub use run::{replay, run_dual, run_preset, simulate, simulate_final, Artifacts, RunReport};
pub use sweep::{run_sweep, threshold_speed_search, SweepSpec, ThresholdResult};

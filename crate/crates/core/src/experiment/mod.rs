//! Experiment layer: configs, presets, run directories and sweeps.

pub mod config;
pub mod plot;
pub mod presets;
pub mod runner;

pub use config::{ExperimentConfig, Method, Start};
pub use presets::{preset, Preset, PRESET_NAMES};
pub use runner::{execute, run_experiment, sweep, ExperimentOutput, ExperimentRecord, SweepRow};

//! Experiment runner for the GLNN precoder and the WMMSE baseline.
//!
//! Four evaluations (SE against power, SE against estimation error, a
//! three-phase mobility run, timing against antenna count) plus a self-test
//! of the core invariants. Each run writes `results.csv`, `summary.csv`,
//! SVG plots and `run_meta.txt`; see [`results`] for the CSV layout.

pub mod checks;
pub mod experiments;
pub mod plot;
pub mod results;
pub mod selftest;
pub mod settings;

pub use experiments::{run, write_outputs, ExperimentOutput, RunOptions};
pub use settings::{Algorithm, ExperimentKind, LabConfig};

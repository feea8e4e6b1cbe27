//! Replicate-level orchestration of the simulation studies and emission of
//! machine-readable plot data.
//!
//! An [`ExperimentConfig`] names a scenario and a `ζ` grid. For every grid
//! point [`run_experiment`] generates `replicates` datasets, fits them and
//! records the overfitting markers, optionally de-biases each fit, and solves
//! the RS equations once. [`emit_plotdata`] turns the resulting
//! [`ReportBundle`] into CSV tables plus a `manifest.json` index.

mod config;
mod emit;
mod run;
mod stats;

pub use config::{ExperimentConfig, Scenario, Stages};
pub use emit::{emit_plotdata, replicate_value, Manifest, ManifestEntry};
pub use run::{
    run_experiment, DebiasRecord, ReplicateData, ReplicateRecord, ReportBundle, RsPoint, RsRecord, ZetaBlock,
};
pub use stats::{histogram, levels, mode_bin, quantile, Bin, Summary};

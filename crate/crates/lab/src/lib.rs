//! Experiment runner for the decoupling library.
//!
//! A run reads an [`ExperimentConfig`], integrates every curve of every panel
//! and writes one CSV per panel plus a JSON metadata sidecar. Noise
//! realizations run in parallel on the current rayon pool and are reduced in
//! realization order, so results do not depend on the thread count.

pub mod config;
mod error;
pub mod output;
pub mod presets;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{LabError, Result};
pub use run::{run_preset, CurveTable, RunOutput};

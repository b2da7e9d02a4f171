//! Command-line front end binding the pipeline into a tool: dataset
//! manifests, configuration, feature extraction, classifier and policy
//! training, evaluation, synthetic data generation, and report emission.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod rundir;
pub mod tones;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use manifest::{DatasetManifest, ManifestRecord, Split};

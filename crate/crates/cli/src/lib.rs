//! File formats, synthetic instances and experiment runs for the
//! `bidguard` command.

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod synth;

pub use config::{AttackSpec, Experiment, ExperimentConfig, InstanceSource, Overrides};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, Manifest, RunStatus, Runner};
pub use synth::{generate_instance, SyntheticSpec};

//! Config-driven experiment runner for the `dfvote` binary.

pub mod config;
pub mod error;
pub mod ingest;
pub mod run;

pub use config::{ConfigSource, CwmChecks, ExperimentConfig, Kind, Thresholds};
pub use error::CliError;
pub use ingest::{ingest_margins, read_margins, Ingested};
pub use run::{run, Outcome};

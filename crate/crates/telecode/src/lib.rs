//! Configuration, persistence and parallel sweeps for `telecode-core`.

pub mod config;
pub mod error;
pub mod export;
pub mod records;
pub mod sweep;

pub use config::SweepConfig;
pub use error::{CliError, Result};
pub use sweep::{run_sweep, RunManifest, SweepOptions};

//! Command-line surface for the `merton_pl` filters: ingestion of `date,value`
//! series, TOML run configuration, and the result files a run leaves behind.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod output;

pub use config::{ModelKind, RunConfig};
pub use error::{CliError, Result};
pub use ingest::{ReturnSeries, SeriesKind};

//! Particle filtering and learning for Merton's jump model, with and without
//! stochastic volatility.
//!
//! The crate is organised bottom-up:
//!
//! - [`stats`]: seedable streams, samplers and exact log densities.
//! - [`engine`]: the generic resample / propagate / update loop.
//! - [`pure`]: constant-volatility jump model learning `(μ, σ², λ)`.
//! - [`sv`]: jump + stochastic-volatility model learning `(μ, λ)`.
//! - [`simulate`]: ground-truth simulators and brute-force oracles.

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod engine;
pub mod error;
pub mod pure;
pub mod simulate;
pub mod stats;
pub mod sv;

pub use engine::{Filter, FilterConfig, Model, Particle, Population, StepDiagnostics, StepSummary, SummaryOptions};
pub use error::{Error, Result};
pub use pure::{MertonPure, PureFixedParams, PureSuffStats};
pub use stats::{ResampleScheme, RngStream};
pub use sv::{MertonSv, SvFixedParams, SvSuffStats};

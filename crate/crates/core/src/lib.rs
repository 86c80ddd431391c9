//! High-SNR capacity analysis of multi-antenna channels impaired by phase
//! noise.
//!
//! The library evaluates the capacity prelog and the *phase-noise number*
//! `χ` (the constant term in `C(ρ) = ½ ln ρ + χ + o(1)`) for single-antenna
//! links and for uplink/downlink links with `M` base-station antennas driven
//! either by a common local oscillator (CLO) or by separate ones (SLO).
//!
//! Module map:
//! - [`specfun`]: Bessel, digamma, incomplete-gamma and Euler-product functions.
//! - [`circular`]: laws on the circle, their entropies and the
//!   conditional-phase-entropy estimator.
//! - [`models`]: oscillator phase-noise processes.
//! - [`capacity`]: phase-noise numbers and bounds for every scenario.
//! - [`outage`]: quasi-static Rayleigh outage analysis and a link simulator.
//!
//! All information quantities are in nats; convert with [`nats_to_bits`]
//! at output boundaries only.

pub mod capacity;
pub mod circular;
pub mod error;
pub mod models;
pub mod outage;
pub mod rng;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};

/// Convert nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Convert an SNR in dB to the linear `ρ`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

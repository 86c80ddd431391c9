//! Monte-Carlo lower bound `I(t; x) = h(t) − h(t | x)` on the noncoherent
//! SIMO rate, with `t = ‖y‖²` and a `Gamma(1/2, 1)` amplitude input.
//!
//! Given `x`, `t` is noncentral chi-squared with `2M` degrees of freedom and
//! noncentrality `‖h‖²|x|²`, whatever the phase process. `h(t)` comes from a
//! log-binned histogram of simulated `t`; `h(t | x)` from a table of exact
//! conditional entropies interpolated in `ln λ`.

use std::f64::consts::{E, LN_2, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::channel::{simulate_channel, InputPolicy, SimulationOptions};
use crate::capacity::{ChannelSpec, Direction, SnrSpec};
use crate::error::{Error, Result};
use crate::models::{OscillatorTopology, PhaseNoiseModel};
use crate::rng::{Domain, StreamFactory};
use crate::stats::{histogram_entropy_log_bins, mean_and_std, NoncentralChiSquared};

/// Above this noncentrality the conditional entropy uses its large-`λ` form.
const ASYMPTOTIC_LAMBDA: f64 = 5.0e3;
/// Below this noncentrality the conditional entropy is taken at this value.
const MIN_LAMBDA: f64 = 1.0e-6;
/// Table nodes per unit of `ln λ`.
const NODES_PER_LOG_UNIT: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateLbConfig {
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for RateLbConfig {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            seed: 0x1b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateLbEstimate {
    /// `h(t) − h(t|x)` in nats per channel use.
    pub value: f64,
    /// Standard error of the `h(t|x)` average (the histogram term's
    /// sampling error is not included).
    pub std_error: f64,
    pub h_t: f64,
    pub h_t_given_x: f64,
    /// `½ ln ρ + ½ ln(‖h‖²/2)`.
    pub asymptote: f64,
    pub n_samples: usize,
}

/// `h(t | x)` for `t ~ χ'²(dof, λ)`, in nats.
pub fn conditional_energy_entropy(dof: f64, lambda: f64) -> Result<f64> {
    if lambda > ASYMPTOTIC_LAMBDA {
        // t = r², r ≈ N(√λ, 1)
        return Ok(0.5 * (TAU * E).ln() + LN_2 + 0.5 * lambda.ln());
    }
    Ok(NoncentralChiSquared::new(dof, lambda.max(MIN_LAMBDA))?.entropy())
}

struct EntropyTable {
    ln_lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl EntropyTable {
    fn new(dof: f64, lambda_max: f64) -> Result<Self> {
        let ln_lo = MIN_LAMBDA.ln();
        let ln_hi = lambda_max.max(MIN_LAMBDA * 10.0).ln();
        let nodes = (((ln_hi - ln_lo) * NODES_PER_LOG_UNIT).ceil() as usize).max(2) + 1;
        let step = (ln_hi - ln_lo) / (nodes - 1) as f64;
        let values = (0..nodes)
            .into_par_iter()
            .map(|i| conditional_energy_entropy(dof, (ln_lo + i as f64 * step).exp()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ln_lo, step, values })
    }

    fn eval(&self, lambda: f64) -> f64 {
        let pos = ((lambda.max(MIN_LAMBDA).ln() - self.ln_lo) / self.step).max(0.0);
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let frac = (pos - i as f64).min(1.0);
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

/// Lower bound on the noncoherent separate-oscillator uplink rate at SNR `ρ`.
pub fn rate_lb_noncoherent_mc(h: &[Complex64], snr: SnrSpec, config: &RateLbConfig) -> Result<RateLbEstimate> {
    let spec = ChannelSpec::new(Direction::Uplink, OscillatorTopology::Slo, h.to_vec(), PhaseNoiseModel::Noncoherent)?;
    if config.n_samples < 1000 {
        return Err(Error::InsufficientSamples {
            got: config.n_samples,
            need: 1000,
            hint: "the energy histogram needs at least 1000 channel uses; 1e6 gives ~0.01 nat accuracy",
        });
    }
    let batch = simulate_channel(
        &spec,
        snr,
        &InputPolicy::GammaAmplitude,
        config.n_samples,
        &StreamFactory::new(config.seed).child(Domain::RateBound, 0),
        SimulationOptions::default(),
    )?;
    let gain = spec.norm_sqr();
    let dof = 2.0 * spec.antennas() as f64;
    let lambdas: Vec<f64> = batch.s.iter().map(|s| gain * s.norm_sqr()).collect();
    let lambda_max = lambdas.iter().copied().fold(0.0, f64::max);
    let table = EntropyTable::new(dof, lambda_max.min(ASYMPTOTIC_LAMBDA))?;
    let cond: Vec<f64> = lambdas
        .iter()
        .map(|&l| if l > ASYMPTOTIC_LAMBDA { conditional_energy_entropy(dof, l) } else { Ok(table.eval(l)) })
        .collect::<Result<_>>()?;
    let (h_cond, sd) = mean_and_std(&cond);
    let h_t = histogram_entropy_log_bins(&batch.t)?;
    Ok(RateLbEstimate {
        value: h_t - h_cond,
        std_error: sd / (cond.len() as f64).sqrt(),
        h_t,
        h_t_given_x: h_cond,
        asymptote: 0.5 * snr.rho().ln() + 0.5 * (gain / 2.0).ln(),
        n_samples: config.n_samples,
    })
}

//! Monte-Carlo estimation of the entropy of a phase given noisy circular
//! observations of it.
//!
//! A target `φ` is drawn from a prior, an optional shared offset `a` and
//! independent perturbations `θ_m` are added, and the estimator averages
//! `-ln p(φ | v)` over draws of `v_m = φ + a + θ_m (mod 2π)`. The posterior
//! normaliser is a periodic trapezoid sum over `quadrature_nodes` points.

use std::f64::consts::TAU;

use rayon::prelude::*;

use super::entropy::{EntropyEstimate, EstimateKind};
use super::CircularDistribution;
use crate::error::{domain, Error, Result};
use crate::rng::{chunks, Domain, StreamFactory};
use crate::specfun::log_bessel_i0;
use crate::stats::bootstrap_std_error;

/// Monte-Carlo settings for the conditional-entropy estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionalEntropyConfig {
    pub n_samples: usize,
    pub quadrature_nodes: usize,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for ConditionalEntropyConfig {
    fn default() -> Self {
        Self {
            n_samples: 20_000,
            quadrature_nodes: 1024,
            bootstrap_resamples: 200,
            seed: 0x5eed,
        }
    }
}

/// Law of the phase being estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prior {
    Uniform,
    Law(CircularDistribution),
}

/// `h(φ | φ + θ_1, …, φ + θ_M)` with `φ` uniform and `θ_m` independent with
/// the given laws.
pub fn conditional_phase_entropy(
    models: &[CircularDistribution],
    config: &ConditionalEntropyConfig,
) -> Result<EntropyEstimate> {
    conditional_entropy(&Prior::Uniform, models, None, config)
}

/// Log-density with the Tikhonov normaliser evaluated once.
#[derive(Debug, Clone, Copy)]
struct LnDensity {
    law: CircularDistribution,
    offset: f64,
}

impl LnDensity {
    fn new(law: CircularDistribution) -> Result<Self> {
        let offset = match law {
            CircularDistribution::Tikhonov { lambda } => log_bessel_i0(lambda)?,
            _ => 0.0,
        };
        Ok(Self { law, offset })
    }

    fn eval(&self, t: f64) -> f64 {
        match self.law {
            CircularDistribution::Tikhonov { lambda } => {
                lambda * t.cos() - super::LN_2PI - self.offset
            }
            law => law.ln_pdf(t),
        }
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// General estimator of `h(φ | {φ + a + θ_m})`.
///
/// `shared` is an offset common to all observations (a transmitter
/// oscillator, say); it requires a uniform prior.
pub fn conditional_entropy(
    prior: &Prior,
    noise: &[CircularDistribution],
    shared: Option<&CircularDistribution>,
    config: &ConditionalEntropyConfig,
) -> Result<EntropyEstimate> {
    if noise.is_empty() {
        return Err(domain("conditional_entropy", "need at least one observation model"));
    }
    if config.n_samples < 2 {
        return Err(Error::InsufficientSamples {
            got: config.n_samples,
            need: 2,
            hint: "the Monte-Carlo mean needs samples",
        });
    }
    if config.quadrature_nodes < 16 {
        return Err(domain(
            "conditional_entropy",
            format!("quadrature_nodes = {} is below 16", config.quadrature_nodes),
        ));
    }
    for law in noise.iter().chain(shared) {
        law.validate()?;
    }
    let prior_law = match prior {
        Prior::Uniform => CircularDistribution::Uniform,
        Prior::Law(law) => {
            law.validate()?;
            *law
        }
    };
    if shared.is_some() && !prior_law.is_uniform() {
        return Err(Error::Usage("a shared offset requires a uniform prior".into()));
    }

    let nodes = config.quadrature_nodes;
    let step = TAU / nodes as f64;
    let precision: f64 = noise
        .iter()
        .chain(shared)
        .chain(std::iter::once(&prior_law))
        .map(|law| law.width().powi(-2))
        .sum();
    let posterior_width = precision.powf(-0.5);
    if posterior_width < 4.0 * step {
        return Err(Error::Degenerate(format!(
            "posterior width {posterior_width:.3e} rad is below four grid steps ({:.3e} rad); \
             the entropy is effectively -inf at this resolution, raise quadrature_nodes",
            4.0 * step
        )));
    }

    let prior_density = LnDensity::new(prior_law)?;
    let noise_density = noise.iter().map(|l| LnDensity::new(*l)).collect::<Result<Vec<_>>>()?;
    let shared_density = shared.map(|l| LnDensity::new(*l)).transpose()?;
    let grid: Vec<f64> = (0..nodes).map(|j| j as f64 * step).collect();
    let ln_step = step.ln();

    let streams = StreamFactory::new(config.seed);
    let per_chunk: Vec<Vec<f64>> = chunks(config.n_samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(index, start, end)| {
            let mut rng = streams.stream(Domain::ConditionalEntropy, index as u64);
            let mut ln_g = vec![0.0; nodes];
            let mut scratch = vec![0.0; nodes];
            let mut obs = vec![0.0; noise.len()];
            (start..end)
                .map(|_| {
                    let phi = prior_law.sample(&mut rng).radians();
                    let offset = shared.map_or(0.0, |s| s.sample(&mut rng).radians());
                    for (v, law) in obs.iter_mut().zip(noise) {
                        *v = phi + offset + law.sample(&mut rng).radians();
                    }
                    for (g, &u) in ln_g.iter_mut().zip(&grid) {
                        *g = obs.iter().zip(&noise_density).map(|(v, d)| d.eval(v - u)).sum();
                    }
                    let (ln_num, ln_norm) = match &shared_density {
                        Some(sd) => {
                            for ((s, g), &u) in scratch.iter_mut().zip(&ln_g).zip(&grid) {
                                *s = sd.eval(u - phi) + g;
                            }
                            (log_sum_exp(&scratch) + ln_step, log_sum_exp(&ln_g) + ln_step)
                        }
                        None => {
                            let num = prior_density.eval(phi)
                                + obs.iter().zip(&noise_density).map(|(v, d)| d.eval(v - phi)).sum::<f64>();
                            for ((s, g), &u) in scratch.iter_mut().zip(&ln_g).zip(&grid) {
                                *s = prior_density.eval(u) + g;
                            }
                            (num, log_sum_exp(&scratch) + ln_step)
                        }
                    };
                    ln_norm - ln_num
                })
                .collect()
        })
        .collect();
    let values: Vec<f64> = per_chunk.into_iter().flatten().collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if !mean.is_finite() {
        return Err(Error::Degenerate("conditional entropy estimate is not finite".into()));
    }
    let mut boot_rng = streams.stream(Domain::Bootstrap, 0);
    let std_error = bootstrap_std_error(&values, config.bootstrap_resamples, &mut boot_rng);
    Ok(EntropyEstimate {
        value: mean,
        method: EstimateKind::MonteCarlo,
        std_error,
    })
}

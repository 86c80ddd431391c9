//! Distributional checks of the samplers and of the energy statistic.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use super::channel::{simulate_channel, InputPolicy, SimulationOptions};
use crate::capacity::{ChannelSpec, Direction, SnrSpec};
use crate::circular::CircularDistribution;
use crate::error::Result;
use crate::models::{sample_path, OscillatorTopology, PhaseNoiseModel};
use crate::rng::{Domain, StreamFactory};
use crate::specfun::regularized_gamma_p;
use crate::stats::{ks_test, mean_and_std, NoncentralChiSquared};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    pub seed: u64,
    /// Sample size of each KS test.
    pub ks_samples: usize,
    /// Sample size of the input-power moment check.
    pub moment_samples: usize,
    /// KS tests pass when `p > alpha`.
    pub alpha: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            ks_samples: 2000,
            moment_samples: 200_000,
            alpha: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    /// KS distance, or the z-score of a moment check.
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub passed: bool,
}

fn ks_check(name: String, mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64, alpha: f64) -> ValidationCheck {
    let out = ks_test(&mut samples, cdf);
    ValidationCheck {
        name,
        statistic: out.statistic,
        p_value: Some(out.p_value),
        passed: out.p_value > alpha,
    }
}

/// CDF on `[0, 2π)` from a cumulative trapezoid table of the density.
fn circular_cdf(law: CircularDistribution) -> impl Fn(f64) -> f64 {
    const NODES: usize = 20_000;
    let step = TAU / NODES as f64;
    let mut table = vec![0.0; NODES + 1];
    let mut prev = law.ln_pdf(0.0).exp();
    for i in 1..=NODES {
        let f = law.ln_pdf(i as f64 * step).exp();
        table[i] = table[i - 1] + 0.5 * step * (prev + f);
        prev = f;
    }
    let total = table[NODES];
    move |theta: f64| {
        let pos = (theta / step).clamp(0.0, NODES as f64);
        let i = (pos.floor() as usize).min(NODES - 1);
        let frac = pos - i as f64;
        (table[i] + frac * (table[i + 1] - table[i])) / total
    }
}

/// Run every check with independent streams derived from `config.seed`.
pub fn run_validation_suite(config: &ValidationConfig) -> Result<Vec<ValidationCheck>> {
    let root = StreamFactory::new(config.seed);
    let mut checks = Vec::new();
    let mut index = 0u64;
    let mut next = || {
        index += 1;
        root.child(Domain::Validation, index)
    };

    for m in [1usize, 2, 4, 8] {
        for amp in [0.0, 1.0, 10.0] {
            let spec =
                ChannelSpec::with_gains(Direction::Uplink, OscillatorTopology::Slo, &vec![1.0; m], PhaseNoiseModel::Noncoherent)?;
            let batch = simulate_channel(
                &spec,
                SnrSpec::new(1.0)?,
                &InputPolicy::Symbols(vec![Complex64::new(amp, 0.0)]),
                config.ks_samples,
                &next(),
                SimulationOptions::default(),
            )?;
            let law = NoncentralChiSquared::new(2.0 * m as f64, m as f64 * amp * amp)?;
            checks.push(ks_check(
                format!("energy_noncentral_chi2_M{m}_amp{amp}"),
                batch.t,
                |t| law.cdf(t),
                config.alpha,
            ));
        }
    }

    let rho = 100.0;
    let spec = ChannelSpec::with_gains(Direction::Uplink, OscillatorTopology::Slo, &[1.0], PhaseNoiseModel::Noncoherent)?;
    let batch = simulate_channel(
        &spec,
        SnrSpec::new(rho)?,
        &InputPolicy::GammaAmplitude,
        config.moment_samples,
        &next(),
        SimulationOptions::default(),
    )?;
    let power: Vec<f64> = batch.s.iter().map(|s| s.norm_sqr()).collect();
    let (mean, sd) = mean_and_std(&power);
    let z = (mean - 2.0 * rho) / (sd / (power.len() as f64).sqrt());
    checks.push(ValidationCheck {
        name: "gamma_input_mean_power".into(),
        statistic: z,
        p_value: None,
        passed: z.abs() < 3.0,
    });
    let shape: Vec<f64> = power.iter().take(config.ks_samples).map(|p| p / (4.0 * rho)).collect();
    checks.push(ks_check(
        "gamma_input_amplitude_law".into(),
        shape,
        |s| regularized_gamma_p(0.5, s).unwrap_or(1.0),
        config.alpha,
    ));

    let path = sample_path(
        &PhaseNoiseModel::wiener(0.1)?,
        OscillatorTopology::Slo,
        config.ks_samples,
        64,
        &next(),
    )?;
    let column: Vec<f64> = (0..config.ks_samples).map(|m| path.get(m, 63)).collect();
    checks.push(ks_check("wiener_marginal_uniform".into(), column, |t| t / TAU, config.alpha));

    for (name, law) in [
        ("tikhonov_sampler_lambda5", CircularDistribution::tikhonov(5.0)?),
        ("wrapped_gaussian_sampler_sigma2", CircularDistribution::wrapped_gaussian(2.0)?),
    ] {
        let mut rng = next().stream(Domain::Validation, 0);
        let draws: Vec<f64> = (0..config.ks_samples).map(|_| law.sample(&mut rng).radians()).collect();
        checks.push(ks_check(name.into(), draws, circular_cdf(law), config.alpha));
    }
    Ok(checks)
}

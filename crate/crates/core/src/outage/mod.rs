//! Quasi-static Rayleigh fading: outage of the high-SNR rate `½ ln ρ + χ(h)`.
//!
//! The rate is evaluated per fading draw from the closed-form phase-noise
//! number, which depends on `h` only through a scalar gain statistic
//! (`‖h‖²` or `max_m |h_m|²`). The analytic oracle uses the laws of those
//! statistics under i.i.d. `CN(0,1)` entries: `Gamma(M, 1)` and the maximum of
//! `M` unit exponentials.

mod channel;
mod rate_lb;
mod validation;

pub use channel::{
    antenna_select, conjugate_beamform, mrc_combine, simulate_channel, ChannelBatch, ChannelSample, InputPolicy,
    Precoder, SimulationOptions,
};
pub use rate_lb::{conditional_energy_entropy, rate_lb_noncoherent_mc, RateLbConfig, RateLbEstimate};
pub use validation::{run_validation_suite, ValidationCheck, ValidationConfig};

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::{phase_noise_number, CapacityConfig, ChannelSpec, Direction, SnrSpec};
use crate::error::{domain, Error, Result};
use crate::models::{OscillatorTopology, PhaseNoiseModel};
use crate::rng::{chunks, Domain, StreamFactory};
use crate::specfun::{inverse_regularized_gamma_p, regularized_gamma_p};
use crate::stats::{quantile_with_ci, Z95};

/// i.i.d. `CN(0,1)` gains, constant over a codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FadingEnsemble {
    pub antennas: usize,
}

impl FadingEnsemble {
    pub fn new(antennas: usize) -> Result<Self> {
        if antennas == 0 {
            return Err(domain("FadingEnsemble", "need at least one antenna"));
        }
        Ok(Self { antennas })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        (0..self.antennas).map(|_| cn01(rng)).collect()
    }

    /// `n` draws reduced to a statistic, in draw order. Draw `i` depends only
    /// on `(seed, i)`.
    pub fn map_draws<T, F>(&self, n: usize, streams: &StreamFactory, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[Complex64]) -> T + Sync,
    {
        let per_chunk: Vec<Vec<T>> = chunks(n)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(index, start, end)| {
                let mut rng = streams.stream(Domain::Fading, index as u64);
                let mut h = vec![Complex64::new(0.0, 0.0); self.antennas];
                (start..end)
                    .map(|_| {
                        for z in h.iter_mut() {
                            *z = cn01(&mut rng);
                        }
                        f(&h)
                    })
                    .collect()
            })
            .collect();
        per_chunk.into_iter().flatten().collect()
    }
}

pub(crate) fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Scalar function of `h` that carries all gain dependence of `χ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GainStatistic {
    /// `‖h‖²` (coherent combining or beamforming).
    NormSquared,
    /// `max_m |h_m|²` (antenna selection).
    MaxSquared,
}

impl GainStatistic {
    pub fn for_scenario(direction: Direction, topology: OscillatorTopology) -> Self {
        match (direction, topology) {
            (Direction::Downlink, OscillatorTopology::Slo) => Self::MaxSquared,
            _ => Self::NormSquared,
        }
    }

    pub fn eval(self, h: &[Complex64]) -> f64 {
        match self {
            Self::NormSquared => h.iter().map(|z| z.norm_sqr()).sum(),
            Self::MaxSquared => h.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max),
        }
    }

    /// `Pr{G ≤ x}` under i.i.d. `CN(0,1)` entries.
    pub fn cdf(self, antennas: usize, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Self::NormSquared => regularized_gamma_p(antennas as f64, x).unwrap_or(1.0),
            Self::MaxSquared => (antennas as f64 * (-(-x).exp()).ln_1p()).exp(),
        }
    }

    /// `ε`-quantile of `G`.
    pub fn quantile(self, antennas: usize, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        match self {
            Self::NormSquared => inverse_regularized_gamma_p(antennas as f64, eps),
            Self::MaxSquared => Ok(-(-(eps.ln() / antennas as f64).exp()).ln_1p()),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(domain("outage", format!("epsilon = {eps} must lie in (0, 1)")))
    }
}

/// A link without its gains: the fading ensemble supplies `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageScenario {
    pub direction: Direction,
    pub topology: OscillatorTopology,
    pub antennas: usize,
    pub model: PhaseNoiseModel,
}

impl OutageScenario {
    pub fn statistic(&self) -> GainStatistic {
        GainStatistic::for_scenario(self.direction, self.topology)
    }

    /// `χ(h) − ½ ln(G(h)/2)`, which does not depend on `h`. Refuses
    /// scenarios whose `χ` is only bounded.
    pub fn chi_constant(&self, config: &CapacityConfig) -> Result<f64> {
        let reference = ChannelSpec::with_gains(self.direction, self.topology, &vec![1.0; self.antennas], self.model)?;
        let result = phase_noise_number(&reference, config)?;
        let chi = result.chi_exact.ok_or_else(|| {
            Error::Precondition(format!(
                "phase-noise number of {:?}/{:?} with {:?} is only bounded; outage would mix bound looseness \
                 with fading",
                self.direction, self.topology, self.model
            ))
        })?;
        Ok(chi - 0.5 * (self.statistic().eval(&reference.h) / 2.0).ln())
    }
}

/// Empirical outage CDF of the high-SNR rate on a grid of rates (bits).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageCurve {
    pub rate_grid_bits: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub n_samples: usize,
    /// 95% normal-approximation half-widths, one per grid point.
    pub ci_halfwidth: Vec<f64>,
}

/// Sorted per-draw rates `½ log₂ ρ + χ(h_i)/ln 2` in bits.
pub fn rate_samples_bits(
    scenario: &OutageScenario,
    snr: SnrSpec,
    n_samples: usize,
    seed: u64,
    config: &CapacityConfig,
) -> Result<Vec<f64>> {
    if n_samples == 0 {
        return Err(Error::InsufficientSamples {
            got: 0,
            need: 1,
            hint: "outage needs fading draws",
        });
    }
    let constant = scenario.chi_constant(config)?;
    let stat = scenario.statistic();
    let base = 0.5 * snr.rho().ln() + constant;
    let ensemble = FadingEnsemble::new(scenario.antennas)?;
    let mut rates = ensemble.map_draws(n_samples, &StreamFactory::new(seed), |h| {
        (base + 0.5 * (stat.eval(h) / 2.0).ln()) / LN_2
    });
    rates.sort_by(f64::total_cmp);
    Ok(rates)
}

pub fn outage_cdf_mc(
    scenario: &OutageScenario,
    snr: SnrSpec,
    rate_grid_bits: &[f64],
    n_samples: usize,
    seed: u64,
    config: &CapacityConfig,
) -> Result<OutageCurve> {
    if rate_grid_bits.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(domain("outage_cdf_mc", "rate grid must be strictly ascending"));
    }
    let rates = rate_samples_bits(scenario, snr, n_samples, seed, config)?;
    let n = rates.len() as f64;
    let probabilities: Vec<f64> = rate_grid_bits
        .iter()
        .map(|&r| rates.partition_point(|&v| v <= r) as f64 / n)
        .collect();
    let ci_halfwidth = probabilities.iter().map(|p| Z95 * (p * (1.0 - p) / n).sqrt()).collect();
    Ok(OutageCurve {
        rate_grid_bits: rate_grid_bits.to_vec(),
        probabilities,
        n_samples,
        ci_halfwidth,
    })
}

/// Analytic `Pr{½ log₂ ρ + χ(h)/ln 2 ≤ R}`.
pub fn outage_cdf_analytic(
    scenario: &OutageScenario,
    snr: SnrSpec,
    rate_bits: f64,
    config: &CapacityConfig,
) -> Result<f64> {
    let constant = scenario.chi_constant(config)?;
    let x = 2.0 * (2.0 * (rate_bits * LN_2 - 0.5 * snr.rho().ln() - constant)).exp();
    Ok(scenario.statistic().cdf(scenario.antennas, x))
}

/// An `ε`-outage rate with its 95% half-width (bits).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageRate {
    pub rate_bits: f64,
    pub ci_halfwidth: f64,
}

pub fn outage_rate_mc(
    scenario: &OutageScenario,
    snr: SnrSpec,
    eps: f64,
    n_samples: usize,
    seed: u64,
    config: &CapacityConfig,
) -> Result<OutageRate> {
    check_eps(eps)?;
    let rates = rate_samples_bits(scenario, snr, n_samples, seed, config)?;
    let (rate_bits, ci_halfwidth) = quantile_with_ci(&rates, eps);
    Ok(OutageRate { rate_bits, ci_halfwidth })
}

/// Gain-dependent part of the `ε`-outage rate, `½ log₂(G_ε / 2)` (bits), with
/// `G = ‖h‖²` for a common oscillator and `G = max_m |h_m|²` (downlink antenna
/// selection) for separate oscillators.
pub fn outage_rate_analytic(topology: OscillatorTopology, antennas: usize, eps: f64) -> Result<f64> {
    if antennas == 0 {
        return Err(domain("outage_rate_analytic", "need at least one antenna"));
    }
    let stat = GainStatistic::for_scenario(Direction::Downlink, topology);
    Ok(0.5 * (stat.quantile(antennas, eps)? / 2.0).log2())
}

/// Full analytic `ε`-outage rate in bits.
pub fn outage_rate_analytic_full(
    scenario: &OutageScenario,
    snr: SnrSpec,
    eps: f64,
    config: &CapacityConfig,
) -> Result<f64> {
    let g = scenario.statistic().quantile(scenario.antennas, eps)?;
    Ok((0.5 * snr.rho().ln() + scenario.chi_constant(config)? + 0.5 * (g / 2.0).ln()) / LN_2)
}

/// Analytic `ΔR = R_clo − R_slo` at outage level `ε` (bits).
pub fn delta_r_analytic(antennas: usize, eps: f64) -> Result<f64> {
    Ok(outage_rate_analytic(OscillatorTopology::Clo, antennas, eps)?
        - outage_rate_analytic(OscillatorTopology::Slo, antennas, eps)?)
}

/// Monte-Carlo `ΔR` with common fading draws for both topologies.
pub fn delta_r_mc(
    model: PhaseNoiseModel,
    antennas: usize,
    snr: SnrSpec,
    eps: f64,
    n_samples: usize,
    seed: u64,
    config: &CapacityConfig,
) -> Result<OutageRate> {
    let scenario = |topology| OutageScenario {
        direction: Direction::Downlink,
        topology,
        antennas,
        model,
    };
    let clo = outage_rate_mc(&scenario(OscillatorTopology::Clo), snr, eps, n_samples, seed, config)?;
    let slo = outage_rate_mc(&scenario(OscillatorTopology::Slo), snr, eps, n_samples, seed, config)?;
    Ok(OutageRate {
        rate_bits: clo.rate_bits - slo.rate_bits,
        ci_halfwidth: clo.ci_halfwidth.hypot(slo.ci_halfwidth),
    })
}

/// Monte-Carlo settings for [`gap_vs_m`].
#[derive(Debug, Clone, PartialEq)]
pub struct GapMcConfig {
    pub snr: SnrSpec,
    /// Wiener innovation stds (radians); one MC column per value.
    pub sigmas: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub antennas: usize,
    pub delta_r_analytic_bits: f64,
    /// `(σ, ΔR, 95% half-width)` per Monte-Carlo column.
    pub mc: Vec<(f64, f64, f64)>,
}

pub fn gap_vs_m(
    eps: f64,
    antenna_counts: &[usize],
    mc: Option<&GapMcConfig>,
    config: &CapacityConfig,
) -> Result<Vec<GapRow>> {
    check_eps(eps)?;
    antenna_counts
        .iter()
        .map(|&m| {
            let mut columns = Vec::new();
            if let Some(mc) = mc {
                for &sigma in &mc.sigmas {
                    let gap = delta_r_mc(PhaseNoiseModel::wiener(sigma)?, m, mc.snr, eps, mc.n_samples, mc.seed, config)?;
                    columns.push((sigma, gap.rate_bits, gap.ci_halfwidth));
                }
            }
            Ok(GapRow {
                antennas: m,
                delta_r_analytic_bits: delta_r_analytic(m, eps)?,
                mc: columns,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wiener(deg: f64) -> PhaseNoiseModel {
        PhaseNoiseModel::wiener(deg.to_radians()).unwrap()
    }

    fn dl(topology: OscillatorTopology, antennas: usize, model: PhaseNoiseModel) -> OutageScenario {
        OutageScenario {
            direction: Direction::Downlink,
            topology,
            antennas,
            model,
        }
    }

    #[test]
    fn delta_r_values() {
        // oracle values from independent quantile evaluations
        for (m, want) in [(1, 0.0), (2, 0.24221), (5, 0.64353), (20, 1.355_384_832), (128, 2.40990)] {
            let got = delta_r_analytic(m, 0.1).unwrap();
            assert!((got - want).abs() < 1e-5, "M={m}: {got}");
        }
        let mut prev = -1.0;
        for m in 1..=128 {
            let d = delta_r_analytic(m, 0.1).unwrap();
            assert!(d > prev);
            prev = d;
        }
        assert!(delta_r_analytic(3, 0.0).is_err());
        assert!(delta_r_analytic(3, 1.0).is_err());
    }

    #[test]
    fn statistic_laws() {
        for stat in [GainStatistic::NormSquared, GainStatistic::MaxSquared] {
            for m in [1usize, 3, 20] {
                for eps in [0.01, 0.1, 0.5, 0.9] {
                    let q = stat.quantile(m, eps).unwrap();
                    assert!((stat.cdf(m, q) - eps).abs() < 1e-10, "{stat:?} {m} {eps}");
                }
            }
        }
        assert_eq!(GainStatistic::MaxSquared.cdf(4, 0.0), 0.0);
        assert!((GainStatistic::MaxSquared.cdf(2, 1.0) - (1.0 - (-1f64).exp()).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn bounded_scenarios_refused() {
        let s = OutageScenario {
            direction: Direction::Uplink,
            topology: OscillatorTopology::Slo,
            antennas: 4,
            model: wiener(6.0),
        };
        let snr = SnrSpec::from_db(20.0).unwrap();
        let err = outage_cdf_mc(&s, snr, &[0.0, 1.0], 100, 1, &CapacityConfig::default());
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn empirical_cdf_tracks_oracle() {
        let cfg = CapacityConfig::default();
        let snr = SnrSpec::from_db(20.0).unwrap();
        for s in [dl(OscillatorTopology::Clo, 4, wiener(6.0)), dl(OscillatorTopology::Slo, 4, wiener(6.0))] {
            let grid: Vec<f64> = (0..40).map(|i| 4.0 + 0.1 * i as f64).collect();
            let curve = outage_cdf_mc(&s, snr, &grid, 200_000, 3, &cfg).unwrap();
            for ((r, p), ci) in grid.iter().zip(&curve.probabilities).zip(&curve.ci_halfwidth) {
                let exact = outage_cdf_analytic(&s, snr, *r, &cfg).unwrap();
                assert!((p - exact).abs() <= 3.0 * ci.max(1e-4), "R={r}: {p} vs {exact}");
            }
            assert!(curve.probabilities.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn single_antenna_topologies_coincide() {
        let cfg = CapacityConfig::default();
        let snr = SnrSpec::from_db(10.0).unwrap();
        let grid = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
        let a = outage_cdf_mc(&dl(OscillatorTopology::Clo, 1, wiener(6.0)), snr, &grid, 20_000, 5, &cfg).unwrap();
        let b = outage_cdf_mc(&dl(OscillatorTopology::Slo, 1, wiener(6.0)), snr, &grid, 20_000, 5, &cfg).unwrap();
        assert_eq!(a.probabilities, b.probabilities);
    }

    #[test]
    fn mc_gap_matches_analytic() {
        let cfg = CapacityConfig::default();
        let snr = SnrSpec::from_db(20.0).unwrap();
        for m in [2usize, 5] {
            let gap = delta_r_mc(wiener(6.0), m, snr, 0.1, 200_000, 11, &cfg).unwrap();
            let want = delta_r_analytic(m, 0.1).unwrap();
            assert!((gap.rate_bits - want).abs() < 0.02, "M={m}: {gap:?} vs {want}");
        }
        let full = outage_rate_analytic_full(&dl(OscillatorTopology::Clo, 5, wiener(6.0)), snr, 0.1, &cfg).unwrap();
        let mc = outage_rate_mc(&dl(OscillatorTopology::Clo, 5, wiener(6.0)), snr, 0.1, 200_000, 2, &cfg).unwrap();
        assert!((full - mc.rate_bits).abs() < 3.0 * mc.ci_halfwidth + 1e-3);
    }

    #[test]
    fn gap_table_shape() {
        let rows = gap_vs_m(0.1, &[1, 20], None, &CapacityConfig::default()).unwrap();
        assert!(rows[0].delta_r_analytic_bits.abs() < 1e-12);
        assert!((rows[1].delta_r_analytic_bits - 1.36).abs() < 0.01);
        assert!(rows[1].mc.is_empty());
    }

    #[test]
    fn draws_independent_of_workers() {
        let s = dl(OscillatorTopology::Slo, 3, wiener(6.0));
        let snr = SnrSpec::from_db(20.0).unwrap();
        let cfg = CapacityConfig::default();
        let a = rate_samples_bits(&s, snr, 10_000, 4, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let b = pool.install(|| rate_samples_bits(&s, snr, 10_000, 4, &cfg)).unwrap();
        assert_eq!(a, b);
    }
}

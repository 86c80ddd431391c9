//! Phase-noise numbers `χ` and the high-SNR expansion `C(ρ) ≈ ½ ln ρ + χ`.
//!
//! Conventions: noise variance 2, power constraint `E‖x‖² ≤ 2ρ`, all values
//! in nats. The prelog is ½ in every scenario covered here.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circular::{
    conditional_entropy, conditional_phase_entropy, entropy, CircularDistribution, ConditionalEntropyConfig,
    EntropyEstimate, EntropyMethod, Prior, LN_2PI,
};
use crate::error::{domain, Error, Result};
use crate::models::{past_mutual_information, ModelDescriptor, OscillatorTopology, PhaseNoiseModel};
use crate::rng::{Domain, StreamFactory};

pub const PRELOG: f64 = 0.5;

/// Largest innovation std (radians) for which the averaging lower bound on
/// separate-oscillator Wiener receivers is used. Above it the wrapped mean of
/// the antenna phases is no longer close to a normal law and the bound can
/// overshoot; the common-oscillator value is returned instead.
pub const WIENER_CHAIN_MAX_SIGMA: f64 = 55.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Uplink,
    Downlink,
}

/// A multi-antenna link with deterministic gains `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub direction: Direction,
    pub topology: OscillatorTopology,
    pub h: Vec<Complex64>,
    pub model: PhaseNoiseModel,
}

impl ChannelSpec {
    pub fn new(
        direction: Direction,
        topology: OscillatorTopology,
        h: Vec<Complex64>,
        model: PhaseNoiseModel,
    ) -> Result<Self> {
        let spec = Self { direction, topology, h, model };
        spec.validate()?;
        Ok(spec)
    }

    /// Real, non-negative gains.
    pub fn with_gains(
        direction: Direction,
        topology: OscillatorTopology,
        gains: &[f64],
        model: PhaseNoiseModel,
    ) -> Result<Self> {
        Self::new(direction, topology, gains.iter().map(|&g| Complex64::new(g, 0.0)).collect(), model)
    }

    pub fn antennas(&self) -> usize {
        self.h.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.h.is_empty() {
            return Err(domain("ChannelSpec", "h must have at least one entry"));
        }
        if self.h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(domain("ChannelSpec", "h has non-finite entries"));
        }
        if self.norm_sqr() <= 0.0 {
            return Err(domain("ChannelSpec", "h must be nonzero"));
        }
        self.model.validate()
    }

    fn expect(&self, direction: Direction, topology: Option<OscillatorTopology>, op: &str) -> Result<()> {
        self.validate()?;
        if self.direction != direction || topology.is_some_and(|t| t != self.topology) {
            return Err(Error::Precondition(format!(
                "{op} needs direction {direction:?}{}, got {:?}/{:?}",
                topology.map_or(String::new(), |t| format!(" and topology {t:?}")),
                self.direction,
                self.topology
            )));
        }
        Ok(())
    }
}

/// JSON form of a [`ChannelSpec`]: gains as `[re, im]` pairs, angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpecDescriptor {
    pub direction: Direction,
    pub topology: OscillatorTopology,
    pub h: Vec<[f64; 2]>,
    pub model: ModelDescriptor,
}

impl TryFrom<ChannelSpecDescriptor> for ChannelSpec {
    type Error = Error;

    fn try_from(d: ChannelSpecDescriptor) -> Result<Self> {
        Self::new(
            d.direction,
            d.topology,
            d.h.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
            PhaseNoiseModel::try_from(d.model)?,
        )
    }
}

impl From<&ChannelSpec> for ChannelSpecDescriptor {
    fn from(s: &ChannelSpec) -> Self {
        Self {
            direction: s.direction,
            topology: s.topology,
            h: s.h.iter().map(|z| [z.re, z.im]).collect(),
            model: s.model.into(),
        }
    }
}

/// Linear SNR `ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSpec {
    rho: f64,
}

impl SnrSpec {
    pub fn new(rho: f64) -> Result<Self> {
        if rho.is_finite() && rho > 0.0 {
            Ok(Self { rho })
        } else {
            Err(domain("SnrSpec", format!("rho = {rho} must be finite and > 0")))
        }
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(crate::db_to_linear(db))
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// `χ` with its bounds, in nats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseNoiseNumberResult {
    pub prelog: f64,
    pub chi_lower: f64,
    /// Absent when no evaluable upper bound is known for the scenario.
    pub chi_upper: Option<f64>,
    pub chi_exact: Option<f64>,
    /// Monte-Carlo standard error of the reported values (0 when analytic).
    pub std_error: f64,
    pub formula_tags: Vec<String>,
}

impl PhaseNoiseNumberResult {
    fn exact(value: f64, std_error: f64, tags: Vec<String>) -> Self {
        Self {
            prelog: PRELOG,
            chi_lower: value,
            chi_upper: Some(value),
            chi_exact: Some(value),
            std_error,
            formula_tags: tags,
        }
    }

    fn bounds(lower: f64, upper: Option<f64>, std_error: f64, tags: Vec<String>) -> Self {
        Self {
            prelog: PRELOG,
            chi_lower: lower,
            chi_upper: upper,
            chi_exact: None,
            std_error,
            formula_tags: tags,
        }
    }

    /// Lower ≤ exact ≤ upper within `tol`.
    pub fn is_ordered(&self, tol: f64) -> bool {
        let up = self.chi_upper.unwrap_or(f64::INFINITY);
        let ex_ok = self
            .chi_exact
            .is_none_or(|e| self.chi_lower <= e + tol && e <= up + tol);
        self.chi_lower <= up + tol && ex_ok
    }

    /// Best available point value: exact if known, otherwise the lower bound.
    pub fn point(&self) -> f64 {
        self.chi_exact.unwrap_or(self.chi_lower)
    }
}

/// Which evaluator supplies wrapped-Gaussian entropies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    #[default]
    Exact,
    /// `0.5 ln(2πe σ²)` in place of the wrapped entropy.
    GaussianApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CapacityConfig {
    pub entropy_mode: EntropyMode,
    pub conditional: ConditionalEntropyConfig,
}

impl CapacityConfig {
    pub fn gaussian_approx() -> Self {
        Self {
            entropy_mode: EntropyMode::GaussianApprox,
            ..Self::default()
        }
    }
}

fn gain_term(norm_sqr: f64) -> f64 {
    0.5 * (norm_sqr / 2.0).ln()
}

fn law_entropy(law: &CircularDistribution, mode: EntropyMode, tags: &mut Vec<String>) -> Result<EntropyEstimate> {
    let method = match (mode, law) {
        (EntropyMode::GaussianApprox, CircularDistribution::WrappedGaussian { .. }) => {
            push_tag(tags, "entropy:gaussian-approx");
            EntropyMethod::GaussianApprox
        }
        _ => EntropyMethod::Auto,
    };
    entropy(law, method)
}

fn rate(model: &PhaseNoiseModel, mode: EntropyMode, tags: &mut Vec<String>) -> Result<f64> {
    model.validate()?;
    Ok(law_entropy(&model.innovation_law(), mode, tags)?.value)
}

fn push_tag(tags: &mut Vec<String>, tag: &str) {
    if !tags.iter().any(|t| t == tag) {
        tags.push(tag.to_owned());
    }
}

fn tags(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| (*s).to_owned()).collect()
}

/// Index of the largest `|h_m|`, lowest index on ties.
pub fn select_antenna(h: &[Complex64]) -> usize {
    let mut best = 0;
    for (m, z) in h.iter().enumerate() {
        if z.norm_sqr() > h[best].norm_sqr() {
            best = m;
        }
    }
    best
}

/// Single-antenna link: `χ = ½ ln(|h|²/2) + ln 2π − h({θ_k})`.
pub fn pnn_siso(h: Complex64, model: &PhaseNoiseModel, config: &CapacityConfig) -> Result<PhaseNoiseNumberResult> {
    let spec = ChannelSpec::new(Direction::Uplink, OscillatorTopology::Clo, vec![h], *model)?;
    let mut t = tags(&["siso"]);
    let chi = gain_term(spec.norm_sqr()) + LN_2PI - rate(model, config.entropy_mode, &mut t)?;
    Ok(PhaseNoiseNumberResult::exact(chi, 0.0, t))
}

fn clo_value(spec: &ChannelSpec, config: &CapacityConfig, tag: &str) -> Result<PhaseNoiseNumberResult> {
    let mut t = tags(&[tag]);
    let chi = gain_term(spec.norm_sqr()) + LN_2PI - rate(&spec.model, config.entropy_mode, &mut t)?;
    Ok(PhaseNoiseNumberResult::exact(chi, 0.0, t))
}

/// Uplink, common oscillator: maximal-ratio combining gives gain `‖h‖`.
pub fn pnn_ul_clo(spec: &ChannelSpec, config: &CapacityConfig) -> Result<PhaseNoiseNumberResult> {
    spec.expect(Direction::Uplink, Some(OscillatorTopology::Clo), "pnn_ul_clo")?;
    clo_value(spec, config, "ul-clo:mrc")
}

/// Downlink, common oscillator: maximum-ratio transmission gives gain `‖h‖`.
pub fn pnn_dl_clo(spec: &ChannelSpec, config: &CapacityConfig) -> Result<PhaseNoiseNumberResult> {
    spec.expect(Direction::Downlink, Some(OscillatorTopology::Clo), "pnn_dl_clo")?;
    clo_value(spec, config, "dl-clo:mrt")
}

fn derived_config(config: &ConditionalEntropyConfig, index: u64) -> ConditionalEntropyConfig {
    ConditionalEntropyConfig {
        seed: StreamFactory::new(config.seed).child(Domain::Derived, index).seed(),
        ..*config
    }
}

/// Uplink, separate oscillators.
///
/// Memoryless models: both bounds reduce to `h(φ | φ+θ_1, …, φ+θ_M)`; they
/// are evaluated with independent Monte-Carlo runs and `chi_exact` is their
/// mean. Wiener: lower bound from the averaging argument, upper bound from
/// conditioning on the uniform marginal plus the per-antenna past information.
pub fn pnn_ul_slo(spec: &ChannelSpec, config: &CapacityConfig) -> Result<PhaseNoiseNumberResult> {
    spec.expect(Direction::Uplink, Some(OscillatorTopology::Slo), "pnn_ul_slo")?;
    let m = spec.antennas();
    let g = gain_term(spec.norm_sqr());
    if let PhaseNoiseModel::CompositeWiener { .. } = spec.model {
        return pnn_ul_slo_composite(spec, config);
    }
    if m == 1 {
        let mut r = clo_value(spec, config, "ul-slo:single-antenna")?;
        r.formula_tags.push("reduces-to-siso".into());
        return Ok(r);
    }
    match spec.model {
        PhaseNoiseModel::Noncoherent => Ok(PhaseNoiseNumberResult::exact(g, 0.0, tags(&["ul-slo:uniform-memoryless"]))),
        PhaseNoiseModel::PartiallyCoherent { residual } => {
            let laws = vec![residual; m];
            let lo = conditional_phase_entropy(&laws, &derived_config(&config.conditional, 0))?;
            let hi = conditional_phase_entropy(&laws, &derived_config(&config.conditional, 1))?;
            let lower = g + LN_2PI - lo.value;
            let upper = g + LN_2PI - hi.value;
            let se = lo.std_error.hypot(hi.std_error);
            let mut r = PhaseNoiseNumberResult::bounds(
                lower,
                Some(upper),
                se,
                tags(&["ul-slo:memoryless-conditional", "monte-carlo"]),
            );
            r.chi_exact = Some(0.5 * (lower + upper));
            Ok(r)
        }
        PhaseNoiseModel::Wiener { sigma_delta } => {
            let mut t = Vec::new();
            let lower = if sigma_delta <= WIENER_CHAIN_MAX_SIGMA {
                push_tag(&mut t, "ul-slo:wiener-averaging-lower");
                let eff = CircularDistribution::wrapped_gaussian(sigma_delta / (m as f64).sqrt())?;
                g + LN_2PI - law_entropy(&eff, config.entropy_mode, &mut t)?.value
            } else {
                push_tag(&mut t, "ul-slo:clo-value-lower");
                g + LN_2PI - rate(&spec.model, EntropyMode::Exact, &mut t)?
            };
            push_tag(&mut t, "ul-slo:uniform-marginal-upper");
            let upper = g + m as f64 * past_mutual_information(&spec.model)?;
            Ok(PhaseNoiseNumberResult::bounds(lower, Some(upper), 0.0, t))
        }
        PhaseNoiseModel::CompositeWiener { .. } => unreachable!(),
    }
}

/// Uplink with a Wiener transmit oscillator and separate Wiener receive
/// oscillators: lower bound with effective variance `σ_tx² + σ_rx²/M`.
pub fn pnn_ul_slo_composite(spec: &ChannelSpec, config: &CapacityConfig) -> Result<PhaseNoiseNumberResult> {
    spec.expect(Direction::Uplink, Some(OscillatorTopology::Slo), "pnn_ul_slo_composite")?;
    let PhaseNoiseModel::CompositeWiener { sigma_tx, sigma_rx } = spec.model else {
        return Err(Error::Precondition("pnn_ul_slo_composite needs a composite model".into()));
    };
    let m = spec.antennas() as f64;
    let g = gain_term(spec.norm_sqr());
    let mut t = Vec::new();
    let lower = if sigma_tx.hypot(sigma_rx) <= WIENER_CHAIN_MAX_SIGMA {
        push_tag(&mut t, "ul-slo:composite-averaging-lower");
        let eff = CircularDistribution::wrapped_gaussian((sigma_tx * sigma_tx + sigma_rx * sigma_rx / m).sqrt())?;
        g + LN_2PI - law_entropy(&eff, config.entropy_mode, &mut t)?.value
    } else {
        push_tag(&mut t, "ul-slo:clo-value-lower");
        g + LN_2PI - rate(&spec.model, EntropyMode::Exact, &mut t)?
    };
    push_tag(&mut t, "upper-bound-unavailable");
    Ok(PhaseNoiseNumberResult::bounds(lower, None, 0.0, t))
}

/// Monte-Carlo counterpart of the composite lower bound:
/// `h(φ | φ + a + θ_1, …, φ + a + θ_M)` with `a` the transmit innovation and
/// `θ_m` the receive innovations.
pub fn composite_innovation_entropy_mc(
    sigma_tx: f64,
    sigma_rx: f64,
    antennas: usize,
    config: &ConditionalEntropyConfig,
) -> Result<EntropyEstimate> {
    PhaseNoiseModel::composite(sigma_tx, sigma_rx)?;
    let rx = if sigma_rx > 0.0 {
        CircularDistribution::wrapped_gaussian(sigma_rx)?
    } else {
        return entropy(&CircularDistribution::wrapped_gaussian(sigma_tx)?, EntropyMethod::Auto);
    };
    let noise = vec![rx; antennas.max(1)];
    if sigma_tx > 0.0 {
        let tx = CircularDistribution::wrapped_gaussian(sigma_tx)?;
        conditional_entropy(&Prior::Uniform, &noise, Some(&tx), config)
    } else {
        conditional_entropy(&Prior::Uniform, &noise, None, config)
    }
}

/// Largest eigenvalue of `(1 − c²) diag(g²) + c² g gᵀ`, i.e.
/// `sup_{‖x‖=1} E|Σ_m g_m e^{jθ_m} x_m|²` for i.i.d. phases with `E e^{jθ} = c`.
pub fn max_array_gain(gains: &[f64], c: f64) -> f64 {
    let c2 = (c * c).clamp(0.0, 1.0);
    let d: Vec<f64> = gains.iter().map(|g| (1.0 - c2) * g * g).collect();
    let z2: Vec<f64> = gains.iter().map(|g| c2 * g * g).collect();
    let z_total: f64 = z2.iter().sum();
    let d_max = d.iter().copied().fold(0.0, f64::max);
    if z_total == 0.0 {
        return d_max;
    }
    // secular equation 1 = Σ z_i² / (μ − d_i) on (d_max, d_max + ‖z‖²]
    let secular = |mu: f64| 1.0 - d.iter().zip(&z2).map(|(di, zi)| zi / (mu - di)).sum::<f64>();
    let (mut lo, mut hi) = (d_max, d_max + z_total);
    if secular(hi) <= 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if secular(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Downlink bounds.
///
/// Lower bound: transmit from the strongest antenna only. Upper bound: CLO
/// value for a common oscillator; equal to the lower bound for i.i.d.
/// uniform-marginal separate oscillators; for separate partially coherent
/// oscillators, the array-gain supremum combined with a Monte-Carlo lower
/// bound on the phase-entropy infimum (not tight); absent for the composite
/// model.
pub fn pnn_dl_bounds(spec: &ChannelSpec, config: &CapacityConfig) -> Result<PhaseNoiseNumberResult> {
    spec.expect(Direction::Downlink, None, "pnn_dl_bounds")?;
    let best = spec.h[select_antenna(&spec.h)].norm_sqr();
    let mut t = tags(&["dl:antenna-selection-lower"]);
    let h_rate = rate(&spec.model, config.entropy_mode, &mut t)?;
    let lower = LN_2PI + gain_term(best) - h_rate;
    match spec.topology {
        OscillatorTopology::Clo => {
            let exact = gain_term(spec.norm_sqr()) + LN_2PI - h_rate;
            push_tag(&mut t, "dl-clo:mrt");
            let mut r = PhaseNoiseNumberResult::exact(exact, 0.0, t);
            r.chi_lower = lower;
            Ok(r)
        }
        OscillatorTopology::Slo => match spec.model {
            PhaseNoiseModel::CompositeWiener { .. } => {
                push_tag(&mut t, "upper-bound-unavailable");
                Ok(PhaseNoiseNumberResult::bounds(lower, None, 0.0, t))
            }
            model if model.has_uniform_marginal() => {
                push_tag(&mut t, "dl-slo:uniform-marginals-exact");
                Ok(PhaseNoiseNumberResult::exact(lower, 0.0, t))
            }
            PhaseNoiseModel::PartiallyCoherent { residual } => {
                let gains: Vec<f64> = spec.h.iter().map(|z| z.norm()).collect();
                let sup = max_array_gain(&gains, residual.mean_resultant_length());
                let h_marginal = entropy(&residual, EntropyMethod::Auto)?.value;
                let (inf_term, se) = if spec.antennas() == 1 {
                    (h_marginal, 0.0)
                } else {
                    let est = conditional_entropy(
                        &Prior::Law(residual),
                        &vec![residual; spec.antennas() - 1],
                        None,
                        &derived_config(&config.conditional, 2),
                    )?;
                    (est.value.min(h_marginal), est.std_error)
                };
                push_tag(&mut t, "dl-slo:sup-inf-not-tight");
                push_tag(&mut t, "monte-carlo");
                let upper = LN_2PI + gain_term(sup) - inf_term;
                Ok(PhaseNoiseNumberResult::bounds(lower, Some(upper.max(lower)), se, t))
            }
            _ => unreachable!("non-uniform marginals only arise for partially coherent models"),
        },
    }
}

/// Downlink, separate i.i.d. oscillators with uniform marginals: antenna
/// selection is optimal.
pub fn pnn_dl_slo_uniform(spec: &ChannelSpec, config: &CapacityConfig) -> Result<PhaseNoiseNumberResult> {
    spec.expect(Direction::Downlink, Some(OscillatorTopology::Slo), "pnn_dl_slo_uniform")?;
    let iid_uniform = spec.model.has_uniform_marginal() && !matches!(spec.model, PhaseNoiseModel::CompositeWiener { .. });
    if !iid_uniform {
        return Err(Error::Precondition(format!(
            "pnn_dl_slo_uniform needs i.i.d. oscillators with uniform marginals, got {:?}",
            spec.model
        )));
    }
    let best = spec.h[select_antenna(&spec.h)].norm_sqr();
    let mut t = tags(&["dl-slo:antenna-selection"]);
    let chi = gain_term(best) + LN_2PI - rate(&spec.model, config.entropy_mode, &mut t)?;
    Ok(PhaseNoiseNumberResult::exact(chi, 0.0, t))
}

/// Dispatch on direction and topology.
pub fn phase_noise_number(spec: &ChannelSpec, config: &CapacityConfig) -> Result<PhaseNoiseNumberResult> {
    match (spec.direction, spec.topology) {
        (Direction::Uplink, OscillatorTopology::Clo) => pnn_ul_clo(spec, config),
        (Direction::Uplink, OscillatorTopology::Slo) => pnn_ul_slo(spec, config),
        (Direction::Downlink, _) => pnn_dl_bounds(spec, config),
    }
}

/// High-SNR rate interval in nats per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateInterval {
    pub lower: f64,
    pub upper: Option<f64>,
}

impl RateInterval {
    pub fn from_result(result: &PhaseNoiseNumberResult, snr: SnrSpec) -> Self {
        let base = result.prelog * snr.rho().ln();
        match result.chi_exact {
            Some(chi) => Self {
                lower: base + chi,
                upper: Some(base + chi),
            },
            None => Self {
                lower: base + result.chi_lower,
                upper: result.chi_upper.map(|u| base + u),
            },
        }
    }
}

/// `½ ln ρ + χ` for the given link.
pub fn capacity_highsnr(spec: &ChannelSpec, snr: SnrSpec, config: &CapacityConfig) -> Result<RateInterval> {
    Ok(RateInterval::from_result(&phase_noise_number(spec, config)?, snr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::entropy as circ_entropy;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    const H6: f64 = -0.837_528_962_608_082_3;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    fn cfg() -> CapacityConfig {
        CapacityConfig::default()
    }

    fn fast() -> CapacityConfig {
        CapacityConfig {
            conditional: ConditionalEntropyConfig {
                n_samples: 3000,
                quadrature_nodes: 512,
                bootstrap_resamples: 50,
                seed: 17,
            },
            ..CapacityConfig::default()
        }
    }

    fn spec(d: Direction, t: OscillatorTopology, g: &[f64], model: PhaseNoiseModel) -> ChannelSpec {
        ChannelSpec::with_gains(d, t, g, model).unwrap()
    }

    #[test]
    fn siso_values() {
        let r = pnn_siso(Complex64::new(2f64.sqrt(), 0.0), &PhaseNoiseModel::Noncoherent, &cfg()).unwrap();
        assert!(r.chi_exact.unwrap().abs() < 1e-15);
        let tik = CircularDistribution::tikhonov(10.0).unwrap();
        let r = pnn_siso(Complex64::new(1.0, 0.0), &PhaseNoiseModel::partially_coherent(tik).unwrap(), &cfg()).unwrap();
        let want = 0.5 * 0.5f64.ln() + LN_2PI - 0.294_850_889_979_578_3;
        assert!((r.chi_exact.unwrap() - want).abs() < 1e-12);
        let w = PhaseNoiseModel::wiener(deg(6.0)).unwrap();
        let r = pnn_siso(Complex64::new(0.0, 2f64.sqrt()), &w, &cfg()).unwrap();
        assert!((r.chi_exact.unwrap() - (LN_2PI - H6)).abs() < 1e-12);
        assert!((r.chi_exact.unwrap() - 2.6755).abs() < 1e-3);
    }

    #[test]
    fn clo_values() {
        let w = PhaseNoiseModel::wiener(deg(6.0)).unwrap();
        let ul = pnn_ul_clo(&spec(Direction::Uplink, OscillatorTopology::Clo, &[1.0; 4], w), &cfg()).unwrap();
        assert!((ul.chi_exact.unwrap() - (0.5 * 2f64.ln() + LN_2PI - H6)).abs() < 1e-12);
        assert!((ul.chi_exact.unwrap() - 3.0221).abs() < 1e-3);
        let nc = pnn_ul_clo(&spec(Direction::Uplink, OscillatorTopology::Clo, &[1.0, 1.0], PhaseNoiseModel::Noncoherent), &cfg()).unwrap();
        assert!(nc.chi_exact.unwrap().abs() < 1e-15);
        let dl = pnn_dl_clo(&spec(Direction::Downlink, OscillatorTopology::Clo, &[1.0; 4], w), &cfg()).unwrap();
        assert_eq!(dl.chi_exact, ul.chi_exact);
        let one = pnn_ul_clo(&spec(Direction::Uplink, OscillatorTopology::Clo, &[0.7], w), &cfg()).unwrap();
        let siso = pnn_siso(Complex64::new(0.7, 0.0), &w, &cfg()).unwrap();
        assert_eq!(one.chi_exact, siso.chi_exact);
    }

    #[test]
    fn wrong_scenario_rejected() {
        let s = spec(Direction::Downlink, OscillatorTopology::Clo, &[1.0], PhaseNoiseModel::Noncoherent);
        assert!(matches!(pnn_ul_clo(&s, &cfg()), Err(Error::Precondition(_))));
        assert!(matches!(pnn_ul_slo(&s, &cfg()), Err(Error::Precondition(_))));
        assert!(matches!(pnn_dl_slo_uniform(&s, &cfg()), Err(Error::Precondition(_))));
        let pc = PhaseNoiseModel::partially_coherent(CircularDistribution::Tikhonov { lambda: 3.0 }).unwrap();
        let s = spec(Direction::Downlink, OscillatorTopology::Slo, &[1.0, 1.0], pc);
        assert!(matches!(pnn_dl_slo_uniform(&s, &cfg()), Err(Error::Precondition(_))));
        assert!(ChannelSpec::with_gains(Direction::Uplink, OscillatorTopology::Clo, &[0.0, 0.0], pc).is_err());
        assert!(ChannelSpec::with_gains(Direction::Uplink, OscillatorTopology::Clo, &[], pc).is_err());
    }

    #[test]
    fn ul_slo_noncoherent_and_single_antenna() {
        let s = spec(Direction::Uplink, OscillatorTopology::Slo, &[1.0, 1.0], PhaseNoiseModel::Noncoherent);
        assert_eq!(pnn_ul_slo(&s, &cfg()).unwrap().chi_exact, Some(0.0));
        let w = PhaseNoiseModel::wiener(deg(10.0)).unwrap();
        let one = pnn_ul_slo(&spec(Direction::Uplink, OscillatorTopology::Slo, &[1.3], w), &cfg()).unwrap();
        let siso = pnn_siso(Complex64::new(1.3, 0.0), &w, &cfg()).unwrap();
        assert_eq!(one.chi_lower, siso.chi_exact.unwrap());
        assert_eq!(one.chi_upper, siso.chi_exact);
    }

    #[test]
    fn diversity_gain_gaussian_approx() {
        let ga = CapacityConfig::gaussian_approx();
        for m in [1usize, 2, 4, 16] {
            for sigma in [2.0, 6.0, 30.0] {
                let w = PhaseNoiseModel::wiener(deg(sigma)).unwrap();
                let g = vec![1.0; m];
                let slo = pnn_ul_slo(&spec(Direction::Uplink, OscillatorTopology::Slo, &g, w), &ga).unwrap();
                let clo = pnn_ul_clo(&spec(Direction::Uplink, OscillatorTopology::Clo, &g, w), &ga).unwrap();
                let gain = slo.chi_lower - clo.chi_exact.unwrap();
                assert!(gain >= 0.5 * (m as f64).ln() - 1e-9, "M={m} σ={sigma}: {gain}");
                if m > 1 {
                    assert!(slo.formula_tags.iter().any(|t| t == "entropy:gaussian-approx"));
                }
            }
        }
    }

    #[test]
    fn wiener_ul_slo_bounds_ordered() {
        for m in [2usize, 3, 8, 64] {
            for sigma in [0.5, 2.0, 6.0, 20.0, 40.0, 55.0, 56.0, 90.0, 170.0] {
                for mode in [EntropyMode::Exact, EntropyMode::GaussianApprox] {
                    let w = PhaseNoiseModel::wiener(deg(sigma)).unwrap();
                    let c = CapacityConfig { entropy_mode: mode, ..cfg() };
                    let r = pnn_ul_slo(&spec(Direction::Uplink, OscillatorTopology::Slo, &vec![1.0; m], w), &c).unwrap();
                    assert!(r.is_ordered(1e-9), "M={m} σ={sigma} {mode:?}: {r:?}");
                    let clo = pnn_ul_clo(&spec(Direction::Uplink, OscillatorTopology::Clo, &vec![1.0; m], w), &cfg()).unwrap();
                    assert!(r.chi_lower >= clo.chi_exact.unwrap() - 1e-12 || mode == EntropyMode::GaussianApprox);
                }
            }
        }
    }

    #[test]
    fn wiener_ul_slo_strictly_above_clo() {
        let w = PhaseNoiseModel::wiener(deg(6.0)).unwrap();
        for m in [2usize, 4] {
            let g = vec![1.0; m];
            let slo = pnn_ul_slo(&spec(Direction::Uplink, OscillatorTopology::Slo, &g, w), &cfg()).unwrap();
            let clo = pnn_ul_clo(&spec(Direction::Uplink, OscillatorTopology::Clo, &g, w), &cfg()).unwrap();
            assert!(slo.chi_lower > clo.chi_exact.unwrap());
        }
    }

    #[test]
    fn memoryless_bounds_coincide() {
        for residual in [CircularDistribution::Tikhonov { lambda: 4.0 }, CircularDistribution::WrappedGaussian { sigma: 0.6 }] {
            let pc = PhaseNoiseModel::partially_coherent(residual).unwrap();
            let r = pnn_ul_slo(&spec(Direction::Uplink, OscillatorTopology::Slo, &[1.0, 0.5, 2.0], pc), &fast()).unwrap();
            let gap = r.chi_upper.unwrap() - r.chi_lower;
            assert!(gap.abs() <= 3.0 * r.std_error, "{r:?}");
            assert!(r.std_error > 0.0);
        }
    }

    #[test]
    fn composite_reductions() {
        let g = [1.0, 1.0, 1.0];
        let c = spec(Direction::Uplink, OscillatorTopology::Slo, &g, PhaseNoiseModel::composite(0.0, deg(6.0)).unwrap());
        let w = spec(Direction::Uplink, OscillatorTopology::Slo, &g, PhaseNoiseModel::wiener(deg(6.0)).unwrap());
        let a = pnn_ul_slo(&c, &cfg()).unwrap();
        let b = pnn_ul_slo(&w, &cfg()).unwrap();
        assert!((a.chi_lower - b.chi_lower).abs() < 1e-12);
        assert!(a.chi_upper.is_none());
        let one = spec(Direction::Uplink, OscillatorTopology::Slo, &[1.0], PhaseNoiseModel::composite(deg(3.0), deg(4.0)).unwrap());
        let siso = pnn_siso(Complex64::new(1.0, 0.0), &PhaseNoiseModel::wiener(deg(5.0)).unwrap(), &cfg()).unwrap();
        assert!((pnn_ul_slo_composite(&one, &cfg()).unwrap().chi_lower - siso.chi_exact.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn composite_effective_variance_and_mc() {
        let s = deg(6.0);
        let g = vec![1.0; 9];
        let spec9 = spec(Direction::Uplink, OscillatorTopology::Slo, &g, PhaseNoiseModel::composite(s, s).unwrap());
        let r = pnn_ul_slo_composite(&spec9, &CapacityConfig::gaussian_approx()).unwrap();
        let eff = s * s * (1.0 + 1.0 / 9.0);
        let want = 0.5 * (9.0f64 / 2.0).ln() + LN_2PI - 0.5 * (std::f64::consts::TAU * std::f64::consts::E * eff).ln();
        assert!((r.chi_lower - want).abs() < 1e-12);
        let fine = ConditionalEntropyConfig { quadrature_nodes: 2048, ..fast().conditional };
        let mc = composite_innovation_entropy_mc(s, s, 9, &fine).unwrap();
        let exact = circ_entropy(&CircularDistribution::WrappedGaussian { sigma: eff.sqrt() }, EntropyMethod::Auto).unwrap();
        assert!((mc.value - exact.value).abs() < 4.0 * mc.std_error + 2e-3, "{mc:?} vs {exact:?}");
    }

    #[test]
    fn dl_values() {
        let nc = spec(Direction::Downlink, OscillatorTopology::Slo, &[1.0, 1.0], PhaseNoiseModel::Noncoherent);
        let r = pnn_dl_bounds(&nc, &cfg()).unwrap();
        assert!((r.chi_lower - 0.5 * 0.5f64.ln()).abs() < 1e-12);
        assert_eq!(r.chi_upper, Some(r.chi_lower));
        assert!((r.chi_lower + 0.34657).abs() < 1e-5);
        let w = PhaseNoiseModel::wiener(deg(6.0)).unwrap();
        let r = pnn_dl_bounds(&spec(Direction::Downlink, OscillatorTopology::Slo, &[1.0, 2.0], w), &cfg()).unwrap();
        assert!((r.chi_exact.unwrap() - (0.5 * 2f64.ln() + LN_2PI - H6)).abs() < 1e-12);
        let u = pnn_dl_slo_uniform(&spec(Direction::Downlink, OscillatorTopology::Slo, &[1.0, 1.0], w), &cfg()).unwrap();
        assert!((u.chi_exact.unwrap() - 2.3289).abs() < 1e-3);
        for model in [w, PhaseNoiseModel::Noncoherent] {
            let clo = pnn_dl_clo(&spec(Direction::Downlink, OscillatorTopology::Clo, &[1.0, 1.0], model), &cfg()).unwrap();
            let slo = pnn_dl_slo_uniform(&spec(Direction::Downlink, OscillatorTopology::Slo, &[1.0, 1.0], model), &cfg()).unwrap();
            assert!((clo.chi_exact.unwrap() - slo.chi_exact.unwrap() - 0.5 * LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn dl_clo_bounds_collapse() {
        let pc = PhaseNoiseModel::partially_coherent(CircularDistribution::Tikhonov { lambda: 2.0 }).unwrap();
        let s = spec(Direction::Downlink, OscillatorTopology::Clo, &[0.3, 1.0, 0.8], pc);
        let b = pnn_dl_bounds(&s, &cfg()).unwrap();
        let e = pnn_dl_clo(&s, &cfg()).unwrap();
        assert_eq!(b.chi_upper, e.chi_exact);
        assert!(b.chi_lower < b.chi_upper.unwrap());
    }

    #[test]
    fn dl_gap_matches_gain_ratio() {
        let h = [0.4, 1.7, 0.9];
        let w = PhaseNoiseModel::wiener(deg(12.0)).unwrap();
        let clo = pnn_dl_clo(&spec(Direction::Downlink, OscillatorTopology::Clo, &h, w), &cfg()).unwrap();
        let slo = pnn_dl_slo_uniform(&spec(Direction::Downlink, OscillatorTopology::Slo, &h, w), &cfg()).unwrap();
        let n2: f64 = h.iter().map(|x| x * x).sum();
        let want = 0.5 * (n2 / (1.7f64 * 1.7)).ln();
        assert!((clo.chi_exact.unwrap() - slo.chi_exact.unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn dl_partially_coherent_upper() {
        let pc = PhaseNoiseModel::partially_coherent(CircularDistribution::Tikhonov { lambda: 8.0 }).unwrap();
        let s = spec(Direction::Downlink, OscillatorTopology::Slo, &[1.0, 0.7], pc);
        let r = pnn_dl_bounds(&s, &fast()).unwrap();
        assert!(r.chi_upper.unwrap() > r.chi_lower);
        assert!(r.formula_tags.iter().any(|t| t == "dl-slo:sup-inf-not-tight"));
        // cannot beat a common oscillator with perfect phase knowledge
        let ceiling = gain_term(1.49) + LN_2PI;
        assert!(r.chi_upper.unwrap() < ceiling + 2.0);
    }

    #[test]
    fn array_gain_eigenvalue() {
        // brute-force maximisation over the unit circle for two antennas
        let g = [1.0, 0.6];
        for c in [0.0, 0.3, 0.8, 1.0] {
            let mut best: f64 = 0.0;
            for k in 0..20_000 {
                let t = k as f64 / 20_000.0 * std::f64::consts::PI;
                let (x0, x1) = (t.cos(), t.sin());
                let q = (1.0 - c * c) * (g[0] * g[0] * x0 * x0 + g[1] * g[1] * x1 * x1)
                    + c * c * (g[0] * x0 + g[1] * x1).powi(2);
                best = best.max(q);
            }
            assert!((max_array_gain(&g, c) - best).abs() < 1e-7, "c={c}");
        }
        assert!((max_array_gain(&[1.0, 2.0, 2.0], 1.0) - 9.0).abs() < 1e-12);
        assert_eq!(max_array_gain(&[1.0, 2.0, 2.0], 0.0), 4.0);
    }

    #[test]
    fn selection_ties_go_low() {
        let h = [Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)];
        assert_eq!(select_antenna(&h), 0);
    }

    #[test]
    fn high_snr_expansion() {
        let nc = spec(Direction::Uplink, OscillatorTopology::Clo, &[1.0, 1.0], PhaseNoiseModel::Noncoherent);
        let r = capacity_highsnr(&nc, SnrSpec::new(1.0).unwrap(), &cfg()).unwrap();
        assert!(r.lower.abs() < 1e-15 && r.upper == Some(r.lower));
        let r20 = capacity_highsnr(&nc, SnrSpec::from_db(20.0).unwrap(), &cfg()).unwrap();
        assert!((r20.lower - 2.302_585_092_994_046).abs() < 1e-12);
        assert!((crate::nats_to_bits(r20.lower) - 3.3219).abs() < 1e-4);
        let w = spec(Direction::Uplink, OscillatorTopology::Slo, &[1.0, 2.0], PhaseNoiseModel::wiener(0.2).unwrap());
        let a = capacity_highsnr(&w, SnrSpec::from_db(13.0).unwrap(), &cfg()).unwrap();
        let b = capacity_highsnr(&w, SnrSpec::from_db(23.0).unwrap(), &cfg()).unwrap();
        assert!((b.lower - a.lower - 0.5 * 10f64.ln()).abs() < 1e-12);
        assert!((b.upper.unwrap() - a.upper.unwrap() - 0.5 * 10f64.ln()).abs() < 1e-12);
        assert!(SnrSpec::new(0.0).is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        let s = spec(Direction::Downlink, OscillatorTopology::Slo, &[1.0, 0.5], PhaseNoiseModel::wiener(deg(6.0)).unwrap());
        let d = ChannelSpecDescriptor::from(&s);
        let text = serde_json::to_string(&d).unwrap();
        let back: ChannelSpecDescriptor = serde_json::from_str(&text).unwrap();
        let s2 = ChannelSpec::try_from(back).unwrap();
        assert_eq!(s.h, s2.h);
        assert_eq!(s.direction, s2.direction);
    }

    fn model_strategy() -> impl Strategy<Value = PhaseNoiseModel> {
        prop_oneof![
            Just(PhaseNoiseModel::Noncoherent),
            (0.01f64..3.0).prop_map(|s| PhaseNoiseModel::Wiener { sigma_delta: s }),
            (0.0f64..1.0, 0.01f64..1.0).prop_map(|(a, b)| PhaseNoiseModel::CompositeWiener { sigma_tx: a, sigma_rx: b }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn scaling_shifts_chi(
            gains in proptest::collection::vec(0.05f64..3.0, 1..6),
            model in model_strategy(),
            c in 0.1f64..10.0,
            down in any::<bool>(),
            slo in any::<bool>(),
        ) {
            let d = if down { Direction::Downlink } else { Direction::Uplink };
            let t = if slo { OscillatorTopology::Slo } else { OscillatorTopology::Clo };
            let a = phase_noise_number(&spec(d, t, &gains, model), &cfg()).unwrap();
            let scaled: Vec<f64> = gains.iter().map(|g| g * c).collect();
            let b = phase_noise_number(&spec(d, t, &scaled, model), &cfg()).unwrap();
            prop_assert!((b.chi_lower - a.chi_lower - c.ln()).abs() < 1e-9);
            match (a.chi_upper, b.chi_upper) {
                (Some(x), Some(y)) => prop_assert!((y - x - c.ln()).abs() < 1e-9),
                (None, None) => {}
                _ => prop_assert!(false, "upper presence changed"),
            }
            prop_assert!(a.is_ordered(1e-9), "{a:?}");
        }
    }
}

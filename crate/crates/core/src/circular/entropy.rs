use std::f64::consts::{E, LN_2, PI, TAU};

use super::{CircularDistribution, LN_2PI};
use crate::error::{domain, Error, Result};
use crate::specfun::{bessel_i1_i0_ratio, ln_euler_q_product, log_bessel_i0};

/// Default node count for the trapezoid evaluator.
pub const DEFAULT_QUADRATURE_NODES: usize = 4096;

/// Largest `q = exp(-sigma^2)` accepted by the series evaluator.
const SERIES_MAX_Q: f64 = 0.999;

/// Which evaluator computes a differential entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntropyMethod {
    /// Closed form where one exists, periodic trapezoid otherwise.
    #[default]
    Auto,
    /// Wrapped-Gaussian series (product term plus alternating sum).
    Series,
    /// `-∫ f ln f` by the trapezoid rule with the given node count.
    Quadrature { nodes: usize },
    /// Entropy of the unwrapped normal, `0.5 ln(2πe σ²)`.
    GaussianApprox,
    /// Uniform and Tikhonov closed forms.
    ClosedForm,
}

/// How an [`EntropyEstimate`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    ClosedForm,
    Series,
    Quadrature,
    GaussianApprox,
    MonteCarlo,
}

impl EstimateKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::ClosedForm => "closed_form",
            Self::Series => "series",
            Self::Quadrature => "quadrature",
            Self::GaussianApprox => "gaussian_approx",
            Self::MonteCarlo => "monte_carlo",
        }
    }
}

/// A differential entropy in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    pub value: f64,
    pub method: EstimateKind,
    /// Zero for deterministic evaluators.
    pub std_error: f64,
}

impl EntropyEstimate {
    pub(crate) fn exact(value: f64, method: EstimateKind) -> Self {
        Self {
            value,
            method,
            std_error: 0.0,
        }
    }
}

/// Differential entropy of `dist` (nats) using the selected evaluator.
pub fn entropy(dist: &CircularDistribution, method: EntropyMethod) -> Result<EntropyEstimate> {
    dist.validate()?;
    match (method, *dist) {
        (EntropyMethod::Auto, CircularDistribution::WrappedGaussian { .. }) => {
            quadrature(dist, DEFAULT_QUADRATURE_NODES)
        }
        (EntropyMethod::Auto | EntropyMethod::ClosedForm, CircularDistribution::Uniform) => {
            Ok(EntropyEstimate::exact(LN_2PI, EstimateKind::ClosedForm))
        }
        (EntropyMethod::Auto | EntropyMethod::ClosedForm, CircularDistribution::Tikhonov { lambda }) => {
            let value = LN_2PI + log_bessel_i0(lambda)? - lambda * bessel_i1_i0_ratio(lambda)?;
            Ok(EntropyEstimate::exact(value, EstimateKind::ClosedForm))
        }
        (EntropyMethod::Quadrature { nodes }, _) => quadrature(dist, nodes),
        (EntropyMethod::Series, CircularDistribution::WrappedGaussian { sigma }) => {
            wrapped_gaussian_series(sigma).map(|v| EntropyEstimate::exact(v, EstimateKind::Series))
        }
        (EntropyMethod::GaussianApprox, CircularDistribution::WrappedGaussian { sigma }) => Ok(
            EntropyEstimate::exact(gaussian_entropy(sigma), EstimateKind::GaussianApprox),
        ),
        (method, dist) => Err(Error::Usage(format!(
            "entropy method {method:?} does not apply to {dist:?}"
        ))),
    }
}

/// `0.5 ln(2πe σ²)`, the entropy of an unwrapped `N(0, σ²)`.
pub(crate) fn gaussian_entropy(sigma: f64) -> f64 {
    0.5 * (TAU * E * sigma * sigma).ln()
}

fn wrapped_gaussian_series(sigma: f64) -> Result<f64> {
    let s2 = sigma * sigma;
    let q = (-s2).exp();
    if q >= SERIES_MAX_Q {
        return Err(Error::Usage(format!(
            "series evaluator needs exp(-sigma^2) < {SERIES_MAX_Q}; sigma = {sigma} rad is too small, use quadrature"
        )));
    }
    let product_term = -(ln_euler_q_product(q)? - LN_2PI);
    let mut sum = 0.0;
    for n in 1..100_000u32 {
        let nf = f64::from(n);
        let magnitude = (-s2 * (nf * nf + nf) / 2.0).exp() / (-(-nf * s2).exp_m1()) / nf;
        sum += if n % 2 == 1 { -magnitude } else { magnitude };
        if magnitude < 1e-15 {
            break;
        }
    }
    Ok(product_term + 2.0 * sum)
}

/// Trapezoid evaluation of `-∫ f ln f`. Concentrated laws are integrated on
/// a window of ±15 widths around zero, where the integrand has decayed below
/// double precision; wide laws use the periodic rule on the whole circle.
fn quadrature(dist: &CircularDistribution, nodes: usize) -> Result<EntropyEstimate> {
    if nodes < 16 {
        return Err(domain("entropy", format!("quadrature needs >= 16 nodes, got {nodes}")));
    }
    let half_window = (15.0 * dist.width()).min(PI);
    let h = 2.0 * half_window / nodes as f64;
    let integrand = |t: f64| {
        let lf = dist.ln_pdf(t);
        let f = lf.exp();
        if f > 0.0 {
            -f * lf
        } else {
            0.0
        }
    };
    let sum: f64 = (0..nodes).map(|i| integrand(-half_window + i as f64 * h)).sum();
    let value = sum * h;
    if !value.is_finite() {
        return Err(Error::Degenerate(format!("entropy quadrature diverged for {dist:?}")));
    }
    Ok(EntropyEstimate::exact(value, EstimateKind::Quadrature))
}

/// One row of the wrapped-vs-unwrapped entropy comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyCurveRow {
    pub sigma_deg: f64,
    pub h_wrapped_bits: f64,
    pub h_unwrapped_bits: f64,
    pub abs_diff_bits: f64,
}

/// Entropy of a wrapped Gaussian (quadrature) and of the unwrapped normal,
/// in bits, on `steps` equally spaced standard deviations.
pub fn entropy_curve(sigma_min_deg: f64, sigma_max_deg: f64, steps: usize) -> Result<Vec<EntropyCurveRow>> {
    if !(sigma_min_deg.is_finite() && sigma_max_deg.is_finite() && 0.0 < sigma_min_deg && sigma_min_deg < sigma_max_deg) {
        return Err(domain(
            "entropy_curve",
            format!("need 0 < sigma_min ({sigma_min_deg}) < sigma_max ({sigma_max_deg})"),
        ));
    }
    if steps < 2 {
        return Err(domain("entropy_curve", format!("need at least 2 steps, got {steps}")));
    }
    (0..steps)
        .map(|i| {
            let sigma_deg = sigma_min_deg + (sigma_max_deg - sigma_min_deg) * i as f64 / (steps - 1) as f64;
            let sigma = sigma_deg.to_radians();
            let wrapped = quadrature(
                &CircularDistribution::wrapped_gaussian(sigma)?,
                DEFAULT_QUADRATURE_NODES,
            )?
            .value
                / LN_2;
            let unwrapped = gaussian_entropy(sigma) / LN_2;
            Ok(EntropyCurveRow {
                sigma_deg,
                h_wrapped_bits: wrapped,
                h_unwrapped_bits: unwrapped,
                abs_diff_bits: (wrapped - unwrapped).abs(),
            })
        })
        .collect()
}

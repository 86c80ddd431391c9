//! Probability laws on the circle `[0, 2π)`.
//!
//! Three families are supported: the uniform law, the wrapped Gaussian (the
//! Wiener-process innovation reduced mod 2π) and the Tikhonov / von Mises
//! law of a PLL's residual phase error. All are symmetric about zero.

mod conditional;
mod entropy;

pub use conditional::{
    conditional_entropy, conditional_phase_entropy, ConditionalEntropyConfig, Prior,
};
pub use entropy::{entropy, entropy_curve, EntropyCurveRow, EntropyEstimate, EntropyMethod, EstimateKind};

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};
use crate::specfun::{bessel_i1_i0_ratio, log_bessel_i0};

/// `ln(2π)`, the entropy of the uniform law on the circle.
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Reduce any real angle into `[0, 2π)`.
pub fn wrap(radians: f64) -> f64 {
    let r = radians.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Reduce any real angle into `(-π, π]`.
pub fn wrap_signed(radians: f64) -> f64 {
    let r = wrap(radians);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// An angle in `[0, 2π)`. Arithmetic wraps modulo 2π.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Angle(f64);

impl Angle {
    pub fn new(radians: f64) -> Self {
        Self(wrap(radians))
    }

    pub fn from_degrees(degrees: f64) -> Self {
        Self::new(degrees.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

impl std::ops::Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle::new(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle::new(self.0 - rhs.0)
    }
}

/// A circular probability law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CircularDistribution {
    Uniform,
    /// Normal law with standard deviation `sigma` (radians), wrapped mod 2π.
    WrappedGaussian { sigma: f64 },
    /// `exp(lambda cos θ) / (2π I0(lambda))`.
    Tikhonov { lambda: f64 },
}

impl CircularDistribution {
    pub fn wrapped_gaussian(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma > 0.0 {
            Ok(Self::WrappedGaussian { sigma })
        } else {
            Err(domain(
                "CircularDistribution::wrapped_gaussian",
                format!("sigma = {sigma} must be finite and > 0"),
            ))
        }
    }

    pub fn tikhonov(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda >= 0.0 {
            Ok(Self::Tikhonov { lambda })
        } else {
            Err(domain(
                "CircularDistribution::tikhonov",
                format!("lambda = {lambda} must be finite and >= 0"),
            ))
        }
    }

    /// Re-checks the parameter invariants (useful for values built with
    /// struct-literal syntax).
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Uniform => Ok(()),
            Self::WrappedGaussian { sigma } => Self::wrapped_gaussian(sigma).map(|_| ()),
            Self::Tikhonov { lambda } => Self::tikhonov(lambda).map(|_| ()),
        }
    }

    pub fn is_uniform(&self) -> bool {
        match *self {
            Self::Uniform => true,
            Self::Tikhonov { lambda } => lambda == 0.0,
            Self::WrappedGaussian { .. } => false,
        }
    }

    /// Number of images on each side used by the wrapped-Gaussian sum.
    pub fn wrap_terms(sigma: f64) -> i64 {
        (6.0 * sigma / TAU).ceil() as i64 + 2
    }

    /// Density at `theta`.
    pub fn pdf(&self, theta: Angle) -> f64 {
        self.ln_pdf(theta.radians()).exp()
    }

    /// Log-density at any real `theta` (reduced mod 2π internally).
    pub fn ln_pdf(&self, theta: f64) -> f64 {
        match *self {
            Self::Uniform => -LN_2PI,
            Self::WrappedGaussian { sigma } => wrapped_gaussian_ln_pdf(sigma, theta),
            Self::Tikhonov { lambda } => {
                lambda * theta.cos() - LN_2PI - log_bessel_i0(lambda).unwrap_or(f64::NAN)
            }
        }
    }

    /// First trigonometric moment `E[cos θ]` (all laws here are symmetric,
    /// so `E[e^{jθ}]` is real).
    pub fn mean_resultant_length(&self) -> f64 {
        match *self {
            Self::Uniform => 0.0,
            Self::WrappedGaussian { sigma } => (-0.5 * sigma * sigma).exp(),
            Self::Tikhonov { lambda } => bessel_i1_i0_ratio(lambda).unwrap_or(f64::NAN),
        }
    }

    /// Rough angular spread, used to size quadrature grids.
    pub fn width(&self) -> f64 {
        match *self {
            Self::Uniform => f64::INFINITY,
            Self::WrappedGaussian { sigma } => sigma,
            Self::Tikhonov { lambda } => {
                if lambda <= 1.0 {
                    f64::INFINITY
                } else {
                    1.0 / lambda.sqrt()
                }
            }
        }
    }

    /// Draw one angle.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Angle {
        match *self {
            Self::Uniform => Angle::new(TAU * rng.random::<f64>()),
            Self::WrappedGaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                Angle::new(sigma * z)
            }
            Self::Tikhonov { lambda } => Angle::new(sample_von_mises(lambda, rng)),
        }
    }
}

fn wrapped_gaussian_ln_pdf(sigma: f64, theta: f64) -> f64 {
    let t = wrap_signed(theta);
    let l_max = CircularDistribution::wrap_terms(sigma);
    let inv = 0.5 / (sigma * sigma);
    // the l = 0 image is the largest for t in (-π, π]
    let lead = -t * t * inv;
    let mut sum = 1.0;
    for l in 1..=l_max {
        let shift = TAU * l as f64;
        for d in [t - shift, t + shift] {
            let e = -d * d * inv - lead;
            if e > -745.0 {
                sum += e.exp();
            }
        }
    }
    lead + sum.ln() - (sigma * (TAU).sqrt()).ln()
}

/// Best–Fisher rejection sampler for the von Mises law with concentration
/// `kappa`, centred at zero. Returns a value in `(-π, π]`.
fn sample_von_mises<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    if kappa < 1e-8 {
        return TAU * rng.random::<f64>() - PI;
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            return if rng.random::<f64>() < 0.5 { -theta } else { theta };
        }
    }
}

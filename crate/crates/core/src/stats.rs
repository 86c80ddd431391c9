//! Statistical helpers: Kolmogorov–Smirnov testing, bootstrap errors,
//! histogram entropy, empirical quantiles and the noncentral chi-squared law.

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::specfun::{ln_gamma, regularized_gamma_p};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Result of a one-sample Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample KS test of `samples` against a continuous `cdf`.
/// Sorts `samples` in place.
pub fn ks_test(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> KsOutcome {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let nf = n as f64;
    let mut d = 0.0_f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    KsOutcome {
        statistic: d,
        p_value: kolmogorov_p_value(d, n),
        n,
    }
}

/// Asymptotic p-value of the KS statistic `d` for sample size `n`, with
/// Stephens' small-sample correction.
pub fn kolmogorov_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Mean and sample standard deviation.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Bootstrap standard error of the sample mean of `values`.
pub fn bootstrap_std_error<R: Rng>(values: &[f64], resamples: usize, rng: &mut R) -> f64 {
    let n = values.len();
    if n < 2 || resamples < 2 {
        return 0.0;
    }
    let means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    mean_and_std(&means).1
}

/// Differential entropy (nats) of positive samples from a histogram on
/// logarithmically spaced bins, with Miller–Madow bias correction.
/// Uses `ceil(2 n^{1/3})` bins.
pub fn histogram_entropy_log_bins(samples: &[f64]) -> Result<f64> {
    const MIN_SAMPLES: usize = 1000;
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: n,
            need: MIN_SAMPLES,
            hint: "histogram entropy needs enough samples to populate its bins; raise n_samples",
        });
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo <= 0.0 || !hi.is_finite() {
        return Err(domain("histogram_entropy_log_bins", "samples must be positive and finite"));
    }
    let bins = (2.0 * (n as f64).cbrt()).ceil() as usize;
    let ln_lo = lo.ln();
    let ln_hi = (hi * (1.0 + 1e-12)).ln();
    if ln_hi <= ln_lo {
        return Err(Error::Degenerate("all samples are identical".into()));
    }
    let step = (ln_hi - ln_lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in samples {
        let idx = (((v.ln() - ln_lo) / step) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let nf = n as f64;
    let mut entropy = 0.0;
    let mut occupied = 0usize;
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        occupied += 1;
        let left = (ln_lo + i as f64 * step).exp();
        let right = (ln_lo + (i + 1) as f64 * step).exp();
        let p = c as f64 / nf;
        entropy -= p * (p / (right - left)).ln();
    }
    Ok(entropy + (occupied as f64 - 1.0) / (2.0 * nf))
}

/// Empirical `eps`-quantile of sorted data: the smallest sample `r` with
/// `F_n(r) >= eps`, plus a 95% half-width from the binomial order-statistic
/// interval.
pub fn quantile_with_ci(sorted: &[f64], eps: f64) -> (f64, f64) {
    let n = sorted.len();
    let nf = n as f64;
    let at = |k: f64| -> f64 {
        let idx = (k.ceil() as isize - 1).clamp(0, n as isize - 1) as usize;
        sorted[idx]
    };
    let centre = at(nf * eps);
    let spread = Z95 * (nf * eps * (1.0 - eps)).sqrt();
    let lo = at(nf * eps - spread);
    let hi = at(nf * eps + spread);
    (centre, 0.5 * (hi - lo))
}

/// Noncentral chi-squared law with `dof` degrees of freedom and
/// noncentrality `lambda` (unit-variance real components).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralChiSquared {
    dof: f64,
    lambda: f64,
}

impl NoncentralChiSquared {
    pub fn new(dof: f64, lambda: f64) -> Result<Self> {
        if !(dof.is_finite() && dof > 0.0) {
            return Err(domain("NoncentralChiSquared::new", format!("dof {dof} must be > 0")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(domain(
                "NoncentralChiSquared::new",
                format!("noncentrality {lambda} must be >= 0"),
            ));
        }
        Ok(Self { dof, lambda })
    }

    pub fn mean(&self) -> f64 {
        self.dof + self.lambda
    }

    pub fn variance(&self) -> f64 {
        2.0 * (self.dof + 2.0 * self.lambda)
    }

    fn ln_central_pdf(half_dof: f64, t: f64, ln_gamma_half_dof: f64) -> f64 {
        (half_dof - 1.0) * (0.5 * t).ln() - 0.5 * t - std::f64::consts::LN_2 - ln_gamma_half_dof
    }

    /// Density at `t`, as a Poisson(`lambda/2`) mixture of central
    /// chi-squared densities with `dof + 2j` degrees of freedom. The mixture
    /// is summed outward from its largest term.
    pub fn pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let half = 0.5 * self.dof;
        if t == 0.0 {
            return match half.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Less) => f64::INFINITY,
                Some(std::cmp::Ordering::Equal) => 0.5 * (-0.5 * self.lambda).exp(),
                _ => 0.0,
            };
        }
        let mu = 0.5 * self.lambda;
        if mu == 0.0 {
            return Self::ln_central_pdf(half, t, ln_gamma(half).unwrap_or(0.0)).exp();
        }
        // term ratio T_{j+1}/T_j = mu (t/2) / ((j+1)(half + j))
        let c = mu * 0.5 * t;
        let b = half + 1.0;
        let peak = (0.5 * (-b + (b * b - 4.0 * (half - c)).sqrt())).max(0.0).floor();
        let ln_peak = peak * mu.ln() - mu - ln_gamma(peak + 1.0).unwrap_or(0.0)
            + Self::ln_central_pdf(half + peak, t, ln_gamma(half + peak).unwrap_or(0.0));
        let mut sum = 1.0;
        let mut term = 1.0;
        let mut j = peak;
        loop {
            term *= c / ((j + 1.0) * (half + j));
            sum += term;
            j += 1.0;
            if term < 1e-17 * sum {
                break;
            }
        }
        term = 1.0;
        j = peak;
        while j >= 1.0 {
            term *= j * (half + j - 1.0) / c;
            sum += term;
            j -= 1.0;
            if term < 1e-17 * sum {
                break;
            }
        }
        (ln_peak + sum.ln()).exp()
    }

    /// Cumulative distribution function; Poisson weights summed outward from
    /// their mode until the accumulated weight reaches `1 - 1e-12`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let half = 0.5 * self.dof;
        let mu = 0.5 * self.lambda;
        let x = 0.5 * t;
        if mu == 0.0 {
            return regularized_gamma_p(half, x).unwrap_or(1.0);
        }
        let mode = mu.floor();
        let ln_w = |j: f64| j * mu.ln() - mu - ln_gamma(j + 1.0).unwrap_or(0.0);
        let mut weight_sum = 0.0;
        let mut total = 0.0;
        let mut up = mode;
        let mut down = mode - 1.0;
        while weight_sum < 1.0 - 1e-12 {
            let mut progressed = false;
            if up <= mode + 50.0 * (mu.sqrt() + 10.0) {
                let w = ln_w(up).exp();
                weight_sum += w;
                total += w * regularized_gamma_p(half + up, x).unwrap_or(1.0);
                up += 1.0;
                progressed = true;
            }
            if down >= 0.0 {
                let w = ln_w(down).exp();
                weight_sum += w;
                total += w * regularized_gamma_p(half + down, x).unwrap_or(1.0);
                down -= 1.0;
                progressed = true;
            }
            if !progressed {
                break;
            }
        }
        total.clamp(0.0, 1.0)
    }

    /// Differential entropy (nats) by composite Simpson quadrature of
    /// `-f ln f` over the mean ± 40 standard deviations.
    pub fn entropy(&self) -> f64 {
        const INTERVALS: usize = 8000;
        let sd = self.variance().sqrt();
        let lo = (self.mean() - 40.0 * sd).max(0.0);
        let hi = self.mean() + 40.0 * sd;
        let h = (hi - lo) / INTERVALS as f64;
        let integrand = |t: f64| {
            let f = self.pdf(t);
            if f > 0.0 && f.is_finite() {
                -f * f.ln()
            } else {
                0.0
            }
        };
        let mut sum = integrand(lo) + integrand(hi);
        for i in 1..INTERVALS {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * integrand(lo + i as f64 * h);
        }
        sum * h / 3.0
    }
}

//! Scalar special functions used by the entropy and outage formulas.
//!
//! Everything here is pure and allocation-free. Functions that can overflow
//! for large arguments (the Bessel family) work in the log or ratio domain,
//! so a Tikhonov concentration of `1e4` is as cheap as one of `1`.

use crate::error::{domain, Result};

/// Power series for `I0`/`I1` are used below this argument; the asymptotic
/// expansion above it. At the switch point the smallest asymptotic term is
/// about `exp(-2 * 20) ≈ 4e-18`.
const BESSEL_ASYMPTOTIC_FROM: f64 = 20.0;

/// Series and products stop once a term drops below this size
/// (relative to the running value).
const TERM_TOLERANCE: f64 = 1e-18;

const MAX_SERIES_TERMS: usize = 10_000;

/// A finite, strictly positive real.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PositiveReal(f64);

impl PositiveReal {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(domain("PositiveReal::new", format!("{value} is not finite and > 0")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

fn check_nonnegative(function: &'static str, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(domain(function, format!("argument {x} is not finite")));
    }
    if x < 0.0 {
        return Err(domain(function, format!("argument {x} is negative")));
    }
    Ok(())
}

/// Sum of the power series `sum_{k>=1} (x/2)^{2k} / (k!)^2`, i.e. `I0(x) - 1`.
fn i0_series_minus_one(x: f64) -> f64 {
    let y = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_SERIES_TERMS {
        let kf = k as f64;
        term *= y / (kf * kf);
        sum += term;
        if term <= TERM_TOLERANCE * (1.0 + sum) {
            break;
        }
    }
    sum
}

/// `I1(x)` by its power series `sum_{k>=0} (x/2)^{2k+1} / (k! (k+1)!)`.
fn i1_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..MAX_SERIES_TERMS {
        let kf = k as f64;
        term *= y / (kf * (kf + 1.0));
        sum += term;
        if term <= TERM_TOLERANCE * sum {
            break;
        }
    }
    sum
}

/// Asymptotic factor `S_nu(x)` with `I_nu(x) ≈ e^x / sqrt(2 pi x) * S_nu(x)`.
/// Summation stops at the smallest term.
fn bessel_asymptotic_factor(order: u32, x: f64) -> f64 {
    let mu = 4.0 * f64::from(order * order);
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = term * -(mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= TERM_TOLERANCE * sum.abs() {
            break;
        }
    }
    sum
}

/// `ln I0(lambda)` for `lambda >= 0`.
pub fn log_bessel_i0(lambda: f64) -> Result<f64> {
    check_nonnegative("log_bessel_i0", lambda)?;
    if lambda < BESSEL_ASYMPTOTIC_FROM {
        Ok(i0_series_minus_one(lambda).ln_1p())
    } else {
        let s = bessel_asymptotic_factor(0, lambda);
        Ok(lambda - 0.5 * (2.0 * std::f64::consts::PI * lambda).ln() + s.ln())
    }
}

/// `I1(lambda) / I0(lambda)` for `lambda >= 0`. Lies in `[0, 1)`.
pub fn bessel_i1_i0_ratio(lambda: f64) -> Result<f64> {
    check_nonnegative("bessel_i1_i0_ratio", lambda)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    if lambda < BESSEL_ASYMPTOTIC_FROM {
        Ok(i1_series(lambda) / (1.0 + i0_series_minus_one(lambda)))
    } else {
        Ok(bessel_asymptotic_factor(1, lambda) / bessel_asymptotic_factor(0, lambda))
    }
}

/// Digamma function `psi(x)` for `x > 0`.
///
/// Upward recurrence `psi(x) = psi(x + 1) - 1/x` until `x >= 10`, then the
/// asymptotic series in `1/x^2`.
pub fn digamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(domain("digamma", format!("argument {x} must be finite and > 0")));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // B_2k / (2k) for k = 1..7
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    Ok(acc + x.ln() - 0.5 / x - tail)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(domain("ln_gamma", format!("argument {x} must be finite and > 0")));
    }
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEFFS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `ln prod_{l>=1} (1 - q^l)` for `0 <= q < 1`.
///
/// The product itself underflows for `q` above roughly `0.995`; callers that
/// only need the logarithm should use this form.
pub fn ln_euler_q_product(q: f64) -> Result<f64> {
    if !q.is_finite() || !(0.0..1.0).contains(&q) {
        return Err(domain(
            "euler_q_product",
            format!("q = {q} must satisfy 0 <= q < 1"),
        ));
    }
    let mut sum = 0.0;
    let mut power = q;
    while power >= TERM_TOLERANCE {
        sum += (-power).ln_1p();
        power *= q;
    }
    Ok(sum)
}

/// Euler function `prod_{l>=1} (1 - q^l)`, truncated once `q^l < 1e-18`.
pub fn euler_q_product(q: f64) -> Result<f64> {
    ln_euler_q_product(q).map(f64::exp)
}

fn check_gamma_shape(function: &'static str, a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(domain(function, format!("shape a = {a} must be finite and > 0")))
    }
}

/// Lower regularized incomplete gamma function `P(a, x)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64> {
    check_gamma_shape("regularized_gamma_p", a)?;
    check_nonnegative("regularized_gamma_p", x)?;
    Ok(gamma_p_unchecked(a, x))
}

/// Upper regularized incomplete gamma function `Q(a, x) = 1 - P(a, x)`,
/// computed without cancellation in the upper tail.
pub fn regularized_gamma_q(a: f64, x: f64) -> Result<f64> {
    check_gamma_shape("regularized_gamma_q", a)?;
    check_nonnegative("regularized_gamma_q", x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        Ok(1.0 - gamma_p_series(a, x))
    } else {
        Ok(gamma_q_continued_fraction(a, x))
    }
}

fn gamma_p_unchecked(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_continued_fraction(a, x)
    }
}

fn gamma_log_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma_unchecked(a)
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_SERIES_TERMS {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    (sum.ln() + gamma_log_prefactor(a, x)).exp().min(1.0)
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x)`.
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_SERIES_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (gamma_log_prefactor(a, x) + h.ln()).exp().clamp(0.0, 1.0)
}

/// Inverse of `P(a, .)`: returns `x >= 0` with `P(a, x) = p`.
///
/// Safeguarded Newton iteration inside a bisection bracket.
pub fn inverse_regularized_gamma_p(a: f64, p: f64) -> Result<f64> {
    check_gamma_shape("inverse_regularized_gamma_p", a)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(
            "inverse_regularized_gamma_p",
            format!("probability {p} must lie in (0, 1)"),
        ));
    }
    let mut lo = 0.0_f64;
    let mut hi = a.max(1.0);
    while gamma_p_unchecked(a, hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    let ln_gamma_a = ln_gamma_unchecked(a);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let f = gamma_p_unchecked(a, x) - p;
        if f.abs() <= 1e-15 {
            break;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = ((a - 1.0) * x.ln() - x - ln_gamma_a).exp();
        let newton = x - f / density;
        x = if density > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(x)
}

//! Symbol-level simulation of the SIMO uplink `y = Θ h x + w` and the MISO
//! downlink `y = hᵀ Θ x + w`, with `w ~ CN(0, 2)` per receive dimension.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::capacity::{select_antenna, ChannelSpec, Direction, SnrSpec};
use crate::error::{domain, Result};
use crate::models::{sample_path, PhasePath};
use crate::rng::{chunks, Domain, StreamFactory};

/// How the scalar channel input `s_k` is drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum InputPolicy {
    /// `|s|² = 4ρ g` with `g ~ Gamma(1/2, 1)`, uniform phase; `E|s|² = 2ρ`.
    GammaAmplitude,
    /// `|s|² = 2ρ`, uniform phase.
    ConstantAmplitude,
    /// Caller-supplied symbols, reused cyclically.
    Symbols(Vec<Complex64>),
}

/// Downlink mapping of `s` onto the transmit antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precoder {
    /// `x = s h* / ‖h‖`.
    #[default]
    MaximumRatio,
    /// All power on the strongest antenna.
    AntennaSelection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimulationOptions {
    /// Drop the additive noise (for algebraic checks).
    pub zero_noise: bool,
    pub precoder: Precoder,
}

/// `n` channel uses stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBatch {
    pub direction: Direction,
    /// Transmit dimension per use (1 uplink, M downlink).
    pub x_dim: usize,
    /// Receive dimension per use (M uplink, 1 downlink).
    pub y_dim: usize,
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    /// `‖y_k‖²`.
    pub t: Vec<f64>,
    /// Scalar input `s_k` before precoding.
    pub s: Vec<Complex64>,
    pub path: PhasePath,
}

/// One channel use borrowed from a [`ChannelBatch`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample<'a> {
    pub x: &'a [Complex64],
    pub y: &'a [Complex64],
    pub t: f64,
    pub phases: Vec<f64>,
}

impl ChannelBatch {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn sample(&self, k: usize) -> ChannelSample<'_> {
        ChannelSample {
            x: &self.x[k * self.x_dim..(k + 1) * self.x_dim],
            y: &self.y[k * self.y_dim..(k + 1) * self.y_dim],
            t: self.t[k],
            phases: (0..self.path.antennas()).map(|m| self.path.get(m, k)).collect(),
        }
    }
}

fn check_gains(h: &[Complex64]) -> Result<f64> {
    let norm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        Ok(norm)
    } else {
        Err(domain("frontend", "gain vector must be nonzero and finite"))
    }
}

/// `⟨h/‖h‖, y⟩ = Σ_m conj(h_m) y_m / ‖h‖`.
pub fn mrc_combine(y: &[Complex64], h: &[Complex64]) -> Result<Complex64> {
    if y.len() != h.len() {
        return Err(domain("mrc_combine", format!("y has {} entries, h has {}", y.len(), h.len())));
    }
    let norm = check_gains(h)?;
    Ok(h.iter().zip(y).map(|(a, b)| a.conj() * b).sum::<Complex64>() / norm)
}

/// `s h* / ‖h‖`.
pub fn conjugate_beamform(h: &[Complex64], s: Complex64) -> Result<Vec<Complex64>> {
    let norm = check_gains(h)?;
    Ok(h.iter().map(|z| s * z.conj() / norm).collect())
}

/// Index of the strongest antenna, lowest index on ties.
pub fn antenna_select(h: &[Complex64]) -> Result<usize> {
    check_gains(h)?;
    Ok(select_antenna(h))
}

fn draw_input<R: Rng + ?Sized>(policy: &InputPolicy, rho: f64, k: usize, rng: &mut R) -> Complex64 {
    let unit = |rng: &mut R| Complex64::from_polar(1.0, TAU * rng.random::<f64>());
    match policy {
        InputPolicy::GammaAmplitude => {
            let z: f64 = StandardNormal.sample(rng);
            // z²/2 ~ Gamma(1/2, 1)
            (2.0 * rho).sqrt() * z.abs() * unit(rng)
        }
        InputPolicy::ConstantAmplitude => (2.0 * rho).sqrt() * unit(rng),
        InputPolicy::Symbols(symbols) => symbols[k % symbols.len()],
    }
}

fn noise<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Simulate `n` uses of `spec` at SNR `snr`. Use `k` depends only on the seed
/// of `streams` and `k`.
pub fn simulate_channel(
    spec: &ChannelSpec,
    snr: SnrSpec,
    policy: &InputPolicy,
    n: usize,
    streams: &StreamFactory,
    options: SimulationOptions,
) -> Result<ChannelBatch> {
    spec.validate()?;
    if let InputPolicy::Symbols(s) = policy {
        if s.is_empty() {
            return Err(domain("simulate_channel", "symbol list is empty"));
        }
    }
    let m = spec.antennas();
    let path = sample_path(&spec.model, spec.topology, m, n, &streams.child(Domain::PhasePath, 0))?;
    let (x_dim, y_dim) = match spec.direction {
        Direction::Uplink => (1, m),
        Direction::Downlink => (m, 1),
    };
    let precoder: Vec<Complex64> = match (spec.direction, options.precoder) {
        (Direction::Uplink, _) => vec![Complex64::new(1.0, 0.0)],
        (Direction::Downlink, Precoder::MaximumRatio) => conjugate_beamform(&spec.h, Complex64::new(1.0, 0.0))?,
        (Direction::Downlink, Precoder::AntennaSelection) => {
            let mut v = vec![Complex64::new(0.0, 0.0); m];
            v[antenna_select(&spec.h)?] = Complex64::new(1.0, 0.0);
            v
        }
    };
    let rho = snr.rho();
    type Part = (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>, Vec<f64>);
    let parts: Vec<Part> = chunks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(index, start, end)| {
            let mut input_rng = streams.stream(Domain::ChannelInput, index as u64);
            let mut noise_rng = streams.stream(Domain::ChannelNoise, index as u64);
            let len = end - start;
            let mut s_out = Vec::with_capacity(len);
            let mut x_out = Vec::with_capacity(len * x_dim);
            let mut y_out = Vec::with_capacity(len * y_dim);
            let mut t_out = Vec::with_capacity(len);
            for k in start..end {
                let s = draw_input(policy, rho, k, &mut input_rng);
                s_out.push(s);
                let mut energy = 0.0;
                match spec.direction {
                    Direction::Uplink => {
                        x_out.push(s);
                        for (mm, hm) in spec.h.iter().enumerate() {
                            let rot = Complex64::from_polar(1.0, path.get(mm, k));
                            let w = if options.zero_noise { Complex64::new(0.0, 0.0) } else { noise(&mut noise_rng) };
                            let y = rot * hm * s + w;
                            energy += y.norm_sqr();
                            y_out.push(y);
                        }
                    }
                    Direction::Downlink => {
                        let mut y = Complex64::new(0.0, 0.0);
                        for (mm, (hm, p)) in spec.h.iter().zip(&precoder).enumerate() {
                            let xm = s * p;
                            x_out.push(xm);
                            y += Complex64::from_polar(1.0, path.get(mm, k)) * hm * xm;
                        }
                        if !options.zero_noise {
                            y += noise(&mut noise_rng);
                        }
                        energy = y.norm_sqr();
                        y_out.push(y);
                    }
                }
                t_out.push(energy);
            }
            (s_out, x_out, y_out, t_out)
        })
        .collect();
    let mut batch = ChannelBatch {
        direction: spec.direction,
        x_dim,
        y_dim,
        x: Vec::with_capacity(n * x_dim),
        y: Vec::with_capacity(n * y_dim),
        t: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        path,
    };
    for (s, x, y, t) in parts {
        batch.s.extend(s);
        batch.x.extend(x);
        batch.y.extend(y);
        batch.t.extend(t);
    }
    Ok(batch)
}

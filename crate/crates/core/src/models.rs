//! Oscillator phase-noise processes.
//!
//! Each model is described by its one-step innovation law (the law of `θ_k`
//! for memoryless models, of the increment `Δ_k` for Wiener models) and by
//! whether the per-sample marginal is uniform.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circular::{entropy, wrap, CircularDistribution, EntropyEstimate, EntropyMethod, LN_2PI};
use crate::error::{domain, Error, Result};
use crate::rng::{Domain, StreamFactory};

/// Per-antenna oscillator process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseNoiseModel {
    /// i.i.d. uniform phases.
    Noncoherent,
    /// i.i.d. phases with a concentrated residual law (phase-tracker error).
    PartiallyCoherent { residual: CircularDistribution },
    /// Random walk with wrapped-normal increments of std `sigma_delta` (radians).
    Wiener { sigma_delta: f64 },
    /// Transmit and receive Wiener oscillators; the TX part is common to all
    /// receive antennas.
    CompositeWiener { sigma_tx: f64, sigma_rx: f64 },
}

/// Whether all antennas share one oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OscillatorTopology {
    Clo,
    Slo,
}

impl PhaseNoiseModel {
    pub fn wiener(sigma_delta: f64) -> Result<Self> {
        let m = Self::Wiener { sigma_delta };
        m.validate()?;
        Ok(m)
    }

    pub fn composite(sigma_tx: f64, sigma_rx: f64) -> Result<Self> {
        let m = Self::CompositeWiener { sigma_tx, sigma_rx };
        m.validate()?;
        Ok(m)
    }

    pub fn partially_coherent(residual: CircularDistribution) -> Result<Self> {
        let m = Self::PartiallyCoherent { residual };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Noncoherent => Ok(()),
            Self::PartiallyCoherent { residual } => residual.validate(),
            Self::Wiener { sigma_delta } => {
                if sigma_delta.is_finite() && sigma_delta > 0.0 {
                    Ok(())
                } else {
                    Err(domain("PhaseNoiseModel::Wiener", format!("sigma_delta = {sigma_delta} must be finite and > 0")))
                }
            }
            Self::CompositeWiener { sigma_tx, sigma_rx } => {
                let ok = |s: f64| s.is_finite() && s >= 0.0;
                if !ok(sigma_tx) || !ok(sigma_rx) {
                    Err(domain(
                        "PhaseNoiseModel::CompositeWiener",
                        format!("sigma_tx = {sigma_tx}, sigma_rx = {sigma_rx} must be finite and >= 0"),
                    ))
                } else if sigma_tx == 0.0 && sigma_rx == 0.0 {
                    Err(Error::Degenerate("composite oscillator with both variances zero".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Law of one innovation: the phase itself for memoryless models, the
    /// per-antenna increment for Wiener models.
    pub fn innovation_law(&self) -> CircularDistribution {
        match *self {
            Self::Noncoherent => CircularDistribution::Uniform,
            Self::PartiallyCoherent { residual } => residual,
            Self::Wiener { sigma_delta } => CircularDistribution::WrappedGaussian { sigma: sigma_delta },
            Self::CompositeWiener { sigma_tx, sigma_rx } => CircularDistribution::WrappedGaussian {
                sigma: sigma_tx.hypot(sigma_rx),
            },
        }
    }

    /// Stationary law of a single phase sample.
    pub fn marginal_law(&self) -> CircularDistribution {
        match self {
            Self::Wiener { .. } | Self::CompositeWiener { .. } => CircularDistribution::Uniform,
            _ => self.innovation_law(),
        }
    }

    pub fn is_memoryless(&self) -> bool {
        matches!(self, Self::Noncoherent | Self::PartiallyCoherent { .. })
    }

    pub fn has_uniform_marginal(&self) -> bool {
        self.marginal_law().is_uniform()
    }
}

/// Entropy rate `h({θ_k})` in nats, using the default evaluator.
pub fn entropy_rate(model: &PhaseNoiseModel) -> Result<EntropyEstimate> {
    entropy_rate_with(model, EntropyMethod::Auto)
}

/// Entropy rate with an explicit evaluator for the innovation law.
pub fn entropy_rate_with(model: &PhaseNoiseModel, method: EntropyMethod) -> Result<EntropyEstimate> {
    model.validate()?;
    let law = model.innovation_law();
    let method = if law.is_uniform() { EntropyMethod::Auto } else { method };
    entropy(&law, method)
}

/// `I(θ_0; θ_{-∞}^{-1})` in nats.
pub fn past_mutual_information(model: &PhaseNoiseModel) -> Result<f64> {
    model.validate()?;
    match model {
        PhaseNoiseModel::Noncoherent | PhaseNoiseModel::PartiallyCoherent { .. } => Ok(0.0),
        PhaseNoiseModel::Wiener { .. } => {
            let h = entropy_rate(model)?.value;
            Ok((LN_2PI - h).max(0.0))
        }
        PhaseNoiseModel::CompositeWiener { .. } => Err(Error::Unsupported(
            "past mutual information of the composite TX/RX model is not defined".into(),
        )),
    }
}

/// Dense `M × n` phase matrix, row-major, radians in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePath {
    antennas: usize,
    len: usize,
    phases: Vec<f64>,
}

impl PhasePath {
    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.phases[m * self.len..(m + 1) * self.len]
    }

    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.phases[m * self.len + k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.phases
    }
}

fn fill_row(model: &PhaseNoiseModel, row: &mut [f64], streams: &StreamFactory, index: u64) {
    let mut rng = streams.stream(Domain::PhasePath, index);
    match *model {
        PhaseNoiseModel::Noncoherent | PhaseNoiseModel::PartiallyCoherent { .. } => {
            let law = model.innovation_law();
            for v in row.iter_mut() {
                *v = law.sample(&mut rng).radians();
            }
        }
        PhaseNoiseModel::Wiener { sigma_delta } => walk(row, sigma_delta, &mut rng),
        PhaseNoiseModel::CompositeWiener { .. } => unreachable!("composite rows are built from two walks"),
    }
}

fn walk<R: rand::Rng>(row: &mut [f64], sigma: f64, rng: &mut R) {
    let mut theta = CircularDistribution::Uniform.sample(rng).radians();
    let step = CircularDistribution::WrappedGaussian { sigma: sigma.max(f64::MIN_POSITIVE) };
    for (k, v) in row.iter_mut().enumerate() {
        if k > 0 {
            theta = wrap(theta + step.sample(rng).radians());
        }
        *v = theta;
    }
}

/// Draw an `M × n` path. Rows use independent substreams of `streams`, so
/// the result does not depend on the worker count.
pub fn sample_path(
    model: &PhaseNoiseModel,
    topology: OscillatorTopology,
    antennas: usize,
    len: usize,
    streams: &StreamFactory,
) -> Result<PhasePath> {
    model.validate()?;
    if antennas == 0 || len == 0 {
        return Err(domain("sample_path", format!("M = {antennas} and n = {len} must be >= 1")));
    }
    let mut phases = vec![0.0; antennas * len];
    match (*model, topology) {
        (PhaseNoiseModel::CompositeWiener { sigma_tx, sigma_rx }, topology) => {
            let mut tx = vec![0.0; len];
            walk(&mut tx, sigma_tx, &mut streams.stream(Domain::PhasePath, 0));
            let rx_rows = match topology {
                OscillatorTopology::Clo => 1,
                OscillatorTopology::Slo => antennas,
            };
            let mut rx = vec![0.0; rx_rows * len];
            rx.par_chunks_mut(len).enumerate().for_each(|(m, row)| {
                walk(row, sigma_rx, &mut streams.stream(Domain::PhasePath, 1 + m as u64));
            });
            phases.par_chunks_mut(len).enumerate().for_each(|(m, row)| {
                let r = &rx[(m % rx_rows) * len..(m % rx_rows + 1) * len];
                for ((v, a), b) in row.iter_mut().zip(&tx).zip(r) {
                    *v = wrap(a + b);
                }
            });
        }
        (_, OscillatorTopology::Clo) => {
            let (first, rest) = phases.split_at_mut(len);
            fill_row(model, first, streams, 0);
            for row in rest.chunks_mut(len) {
                row.copy_from_slice(first);
            }
        }
        (_, OscillatorTopology::Slo) => {
            phases
                .par_chunks_mut(len)
                .enumerate()
                .for_each(|(m, row)| fill_row(model, row, streams, m as u64));
        }
    }
    Ok(PhasePath { antennas, len, phases })
}

/// Residual-law descriptor with angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ResidualDescriptor {
    Uniform,
    WrappedGaussian { sigma_deg: f64 },
    Tikhonov { lambda: f64 },
}

/// JSON form of a [`PhaseNoiseModel`], angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelDescriptor {
    Noncoherent,
    PartiallyCoherent { residual: ResidualDescriptor },
    Wiener { sigma_delta_deg: f64 },
    CompositeWiener { sigma_tx_deg: f64, sigma_rx_deg: f64 },
}

impl TryFrom<ModelDescriptor> for PhaseNoiseModel {
    type Error = Error;

    fn try_from(d: ModelDescriptor) -> Result<Self> {
        let rad = |deg: f64| deg * PI / 180.0;
        let model = match d {
            ModelDescriptor::Noncoherent => Self::Noncoherent,
            ModelDescriptor::PartiallyCoherent { residual } => Self::PartiallyCoherent {
                residual: match residual {
                    ResidualDescriptor::Uniform => CircularDistribution::Uniform,
                    ResidualDescriptor::WrappedGaussian { sigma_deg } => {
                        CircularDistribution::wrapped_gaussian(rad(sigma_deg))?
                    }
                    ResidualDescriptor::Tikhonov { lambda } => CircularDistribution::tikhonov(lambda)?,
                },
            },
            ModelDescriptor::Wiener { sigma_delta_deg } => Self::Wiener {
                sigma_delta: rad(sigma_delta_deg),
            },
            ModelDescriptor::CompositeWiener { sigma_tx_deg, sigma_rx_deg } => Self::CompositeWiener {
                sigma_tx: rad(sigma_tx_deg),
                sigma_rx: rad(sigma_rx_deg),
            },
        };
        model.validate()?;
        Ok(model)
    }
}

impl From<PhaseNoiseModel> for ModelDescriptor {
    fn from(m: PhaseNoiseModel) -> Self {
        let deg = |r: f64| r.to_degrees();
        match m {
            PhaseNoiseModel::Noncoherent => Self::Noncoherent,
            PhaseNoiseModel::PartiallyCoherent { residual } => Self::PartiallyCoherent {
                residual: match residual {
                    CircularDistribution::Uniform => ResidualDescriptor::Uniform,
                    CircularDistribution::WrappedGaussian { sigma } => {
                        ResidualDescriptor::WrappedGaussian { sigma_deg: deg(sigma) }
                    }
                    CircularDistribution::Tikhonov { lambda } => ResidualDescriptor::Tikhonov { lambda },
                },
            },
            PhaseNoiseModel::Wiener { sigma_delta } => Self::Wiener {
                sigma_delta_deg: deg(sigma_delta),
            },
            PhaseNoiseModel::CompositeWiener { sigma_tx, sigma_rx } => Self::CompositeWiener {
                sigma_tx_deg: deg(sigma_tx),
                sigma_rx_deg: deg(sigma_rx),
            },
        }
    }
}

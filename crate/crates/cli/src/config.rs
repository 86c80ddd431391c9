//! Run configuration: a JSON file merged with command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use phasenoise::capacity::{Direction, EntropyMode};
use phasenoise::models::{ModelDescriptor, OscillatorTopology, ResidualDescriptor};

/// A configuration problem, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// One gain entry: a real number or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gain {
    Real(f64),
    Complex([f64; 2]),
}

impl Gain {
    pub fn value(self) -> Complex64 {
        match self {
            Self::Real(re) => Complex64::new(re, 0.0),
            Self::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Explicit gains, or `"rayleigh"` for one `CN(0,1)` draw per antenna.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Explicit(Vec<Gain>),
    Named(String),
}

impl GainSpec {
    /// Parses `rayleigh` or a comma list of `re` / `re:im` entries.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let text = text.trim();
        if text.eq_ignore_ascii_case("rayleigh") {
            return Ok(Self::Named("rayleigh".into()));
        }
        let gains = text
            .split(',')
            .map(|item| {
                let parts: Vec<&str> = item.trim().split(':').collect();
                let num = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| ConfigError::new("h", format!("cannot parse gain entry {item:?}")))
                };
                match parts.as_slice() {
                    [re] => Ok(Gain::Real(num(re)?)),
                    [re, im] => Ok(Gain::Complex([num(re)?, num(im)?])),
                    _ => Err(ConfigError::new("h", format!("gain entry {item:?} must be re or re:im"))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::Explicit(gains))
    }
}

/// All settings of a run. Every field is optional in the file; each
/// subcommand fills the ones it uses with defaults before running.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelDescriptor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<OscillatorTopology>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antennas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<GainSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antenna_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_sigmas_deg: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_min_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_max_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_min_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_max_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_mode: Option<EntropyMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RunConfig) -> Self {
        let base = &mut self;
        overlay!(
            base,
            top,
            model,
            direction,
            topology,
            antennas,
            h,
            snr_db,
            snr_db_list,
            seed,
            n_samples,
            epsilon,
            antenna_list,
            mc_sigmas_deg,
            sigma_min_deg,
            sigma_max_deg,
            steps,
            rate_min_bits,
            rate_max_bits,
            entropy_mode,
            format,
            output
        );
        self
    }

    /// Canonical JSON of the settings that affect results (the output path
    /// is excluded).
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        serde_json::to_string(&c).expect("config serialises")
    }
}

/// Model selection from flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelKind {
    Noncoherent,
    Wiener,
    Tikhonov,
    WrappedGaussian,
    Composite,
}

pub fn model_from_flags(
    kind: ModelKind,
    sigma_deg: Option<f64>,
    lambda: Option<f64>,
    sigma_tx_deg: Option<f64>,
    sigma_rx_deg: Option<f64>,
) -> Result<ModelDescriptor, ConfigError> {
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| ConfigError::new("model", format!("--model {kind:?} needs {flag}").to_lowercase()))
    };
    Ok(match kind {
        ModelKind::Noncoherent => ModelDescriptor::Noncoherent,
        ModelKind::Wiener => ModelDescriptor::Wiener {
            sigma_delta_deg: need(sigma_deg, "--sigma-deg")?,
        },
        ModelKind::Tikhonov => ModelDescriptor::PartiallyCoherent {
            residual: ResidualDescriptor::Tikhonov {
                lambda: need(lambda, "--lambda")?,
            },
        },
        ModelKind::WrappedGaussian => ModelDescriptor::PartiallyCoherent {
            residual: ResidualDescriptor::WrappedGaussian {
                sigma_deg: need(sigma_deg, "--sigma-deg")?,
            },
        },
        ModelKind::Composite => ModelDescriptor::CompositeWiener {
            sigma_tx_deg: need(sigma_tx_deg, "--sigma-tx-deg")?,
            sigma_rx_deg: need(sigma_rx_deg, "--sigma-rx-deg")?,
        },
    })
}

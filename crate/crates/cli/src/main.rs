//! `pncap`: phase-noise capacity computations from the command line.
//!
//! SNR is given in dB and converted with `ρ = 10^(dB/10)`, where `ρ` is the
//! ratio of the input power bound to the per-real-dimension-pair noise
//! variance 2 (not unit variance). Angles are in degrees; rates and
//! entropies are reported in the unit named by each column.
//!
//! Exit status: 0 success, 1 I/O failure, 2 configuration or input error,
//! 3 a validation check failed.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phasenoise::capacity::{Direction, EntropyMode};
use phasenoise::models::OscillatorTopology;

use commands::CommandError;
use config::{model_from_flags, ConfigError, Format, GainSpec, ModelKind, RunConfig};
use output::{Manifest, Table};

#[derive(Parser, Debug)]
#[command(name = "pncap", version, about = "High-SNR capacity of phase-noise channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Wrapped vs unwrapped Gaussian entropy over a range of standard deviations.
    EntropyCurve,
    /// Phase-noise number and bounds for one channel.
    Pnn,
    /// Outage CDF of the high-SNR rate under Rayleigh fading.
    Outage,
    /// Common minus separate oscillator outage rate versus antenna count.
    Gap,
    /// Monte-Carlo lower bound on the noncoherent rate.
    RateLb,
    /// Distributional test suite of the samplers.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::EntropyCurve => "entropy-curve",
            Self::Pnn => "pnn",
            Self::Outage => "outage",
            Self::Gap => "gap",
            Self::RateLb => "rate-lb",
            Self::Validate => "validate",
        }
    }

    fn default_format(self) -> Format {
        match self {
            Self::Pnn | Self::RateLb => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout if absent). The manifest goes to `<output>.manifest.json`.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Worker threads for Monte-Carlo loops (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    n_samples: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Comma-separated SNR list in dB (rate-lb).
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    snr_db_list: Option<Vec<f64>>,
    #[arg(long, value_enum, global = true)]
    model: Option<ModelKind>,
    /// Wiener innovation std or wrapped-Gaussian residual std, degrees.
    #[arg(long, global = true)]
    sigma_deg: Option<f64>,
    /// Tikhonov concentration.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    sigma_tx_deg: Option<f64>,
    #[arg(long, global = true)]
    sigma_rx_deg: Option<f64>,
    #[arg(long, global = true, value_parser = commands::parse_direction)]
    direction: Option<Direction>,
    #[arg(long, global = true, value_parser = commands::parse_topology)]
    topology: Option<OscillatorTopology>,
    #[arg(long, short = 'M', global = true)]
    antennas: Option<usize>,
    /// `rayleigh`, or comma-separated gains `re` or `re:im`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    h: Option<String>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Comma-separated antenna counts (gap).
    #[arg(long, global = true, value_delimiter = ',')]
    antenna_list: Option<Vec<usize>>,
    /// Comma-separated Wiener stds in degrees for Monte-Carlo gap columns.
    #[arg(long, global = true, value_delimiter = ',')]
    mc_sigmas_deg: Option<Vec<f64>>,
    #[arg(long, global = true)]
    sigma_min_deg: Option<f64>,
    #[arg(long, global = true)]
    sigma_max_deg: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    rate_min_bits: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    rate_max_bits: Option<f64>,
    /// Use `½ ln(2πeσ²)` for wrapped-Gaussian entropies.
    #[arg(long, global = true)]
    gaussian_approx: bool,
}

impl Flags {
    fn to_config(&self) -> Result<RunConfig, ConfigError> {
        let model = match self.model {
            Some(kind) => Some(model_from_flags(
                kind,
                self.sigma_deg,
                self.lambda,
                self.sigma_tx_deg,
                self.sigma_rx_deg,
            )?),
            None if self.sigma_deg.is_some()
                || self.lambda.is_some()
                || self.sigma_tx_deg.is_some()
                || self.sigma_rx_deg.is_some() =>
            {
                return Err(ConfigError::new("model", "model parameters given without --model"));
            }
            None => None,
        };
        Ok(RunConfig {
            model,
            direction: self.direction,
            topology: self.topology,
            antennas: self.antennas,
            h: self.h.as_deref().map(GainSpec::parse).transpose()?,
            snr_db: self.snr_db,
            snr_db_list: self.snr_db_list.clone(),
            seed: self.seed,
            n_samples: self.n_samples,
            epsilon: self.epsilon,
            antenna_list: self.antenna_list.clone(),
            mc_sigmas_deg: self.mc_sigmas_deg.clone(),
            sigma_min_deg: self.sigma_min_deg,
            sigma_max_deg: self.sigma_max_deg,
            steps: self.steps,
            rate_min_bits: self.rate_min_bits,
            rate_max_bits: self.rate_max_bits,
            entropy_mode: self.gaussian_approx.then_some(EntropyMode::GaussianApprox),
            format: self.format,
            output: self.output.clone(),
        })
    }
}

fn manifest_path(output: &std::path::Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn emit(table: &Table, subcommand: Command, cfg: &RunConfig) -> std::io::Result<()> {
    let bytes = table.render(cfg.format.unwrap_or(subcommand.default_format()))?;
    let manifest = Manifest::new(subcommand.name(), cfg);
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, &bytes)?;
            manifest.write_to(std::fs::File::create(manifest_path(path))?)
        }
        None => {
            std::io::stdout().lock().write_all(&bytes)?;
            manifest.write_to(std::io::stderr().lock())
        }
    }
}

fn run(cli: Cli) -> Result<(), (u8, String)> {
    let config_err = |e: ConfigError| (2, format!("config error: {e}"));
    if let Some(n) = cli.flags.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| (2, format!("cannot set thread count: {e}")))?;
    }
    let file = match &cli.flags.config {
        Some(path) => RunConfig::load(path).map_err(config_err)?,
        None => RunConfig::default(),
    };
    let mut cfg = file.overlay(cli.flags.to_config().map_err(config_err)?);
    let result = match cli.command {
        Command::EntropyCurve => commands::entropy_curve_cmd(&mut cfg),
        Command::Pnn => commands::pnn_cmd(&mut cfg),
        Command::Outage => commands::outage_cmd(&mut cfg),
        Command::Gap => commands::gap_cmd(&mut cfg),
        Command::RateLb => commands::rate_lb_cmd(&mut cfg),
        Command::Validate => commands::validate_cmd(&mut cfg),
    };
    let io_err = |e: std::io::Error| (1, format!("i/o error: {e}"));
    match result {
        Ok(table) => emit(&table, cli.command, &cfg).map_err(io_err),
        Err(CommandError::ValidationFailed { failed, total, table }) => {
            emit(&table, cli.command, &cfg).map_err(io_err)?;
            Err((3, format!("validation failed: {failed} of {total} checks")))
        }
        Err(e) => Err((2, e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("pncap: {message}");
            ExitCode::from(code)
        }
    }
}

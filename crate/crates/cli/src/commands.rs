//! Subcommand bodies. Each resolves its defaults into the config (so the
//! manifest records what actually ran) and returns a table.

use num_complex::Complex64;
use phasenoise::capacity::{
    phase_noise_number, CapacityConfig, ChannelSpec, Direction, EntropyMode, RateInterval, SnrSpec,
};
use phasenoise::circular::entropy_curve;
use phasenoise::models::{OscillatorTopology, PhaseNoiseModel};
use phasenoise::outage::{
    gap_vs_m, outage_cdf_analytic, outage_cdf_mc, outage_rate_analytic_full, rate_lb_noncoherent_mc,
    run_validation_suite, FadingEnsemble, GapMcConfig, OutageScenario, RateLbConfig, ValidationConfig,
};
use phasenoise::rng::{Domain, StreamFactory};
use phasenoise::{nats_to_bits, Error};

use crate::config::{ConfigError, GainSpec, RunConfig};
use crate::output::{Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Library(#[from] Error),
    #[error("validation failed: {failed} of {total} checks")]
    ValidationFailed { failed: usize, total: usize, table: Table },
}

type Outcome = Result<Table, CommandError>;

fn required<T: Clone>(value: &Option<T>, field: &str) -> Result<T, ConfigError> {
    value
        .clone()
        .ok_or_else(|| ConfigError::new(field, "required for this subcommand"))
}

fn model(cfg: &RunConfig) -> Result<PhaseNoiseModel, CommandError> {
    let descriptor = required(&cfg.model, "model")?;
    PhaseNoiseModel::try_from(descriptor).map_err(|e| ConfigError::new("model", e.to_string()).into())
}

fn snr(cfg: &RunConfig) -> Result<SnrSpec, CommandError> {
    let db = required(&cfg.snr_db, "snr_db")?;
    SnrSpec::from_db(db).map_err(|e| ConfigError::new("snr_db", e.to_string()).into())
}

fn capacity_config(cfg: &RunConfig) -> CapacityConfig {
    let mut c = CapacityConfig {
        entropy_mode: cfg.entropy_mode.unwrap_or_default(),
        ..CapacityConfig::default()
    };
    if let Some(seed) = cfg.seed {
        c.conditional.seed = seed;
    }
    if let Some(n) = cfg.n_samples {
        c.conditional.n_samples = n;
    }
    c
}

/// Gains from the config; `rayleigh` draws one realisation from `seed`.
fn gains(cfg: &RunConfig) -> Result<Vec<Complex64>, CommandError> {
    let h = match required(&cfg.h, "h")? {
        GainSpec::Explicit(list) => list.into_iter().map(|g| g.value()).collect::<Vec<_>>(),
        GainSpec::Named(name) if name.eq_ignore_ascii_case("rayleigh") => {
            let antennas = required(&cfg.antennas, "antennas")?;
            let ensemble = FadingEnsemble::new(antennas).map_err(|e| ConfigError::new("antennas", e.to_string()))?;
            let seed = required(&cfg.seed, "seed")?;
            ensemble.draw(&mut StreamFactory::new(seed).stream(Domain::Fading, 0))
        }
        GainSpec::Named(other) => {
            return Err(ConfigError::new("h", format!("unknown gain ensemble {other:?}; use a list or \"rayleigh\"")).into())
        }
    };
    if let Some(m) = cfg.antennas {
        if m != h.len() {
            return Err(ConfigError::new("antennas", format!("{m} does not match the {} gains in h", h.len())).into());
        }
    }
    Ok(h)
}

pub fn entropy_curve_cmd(cfg: &mut RunConfig) -> Outcome {
    let lo = *cfg.sigma_min_deg.get_or_insert(1.0);
    let hi = *cfg.sigma_max_deg.get_or_insert(180.0);
    let steps = *cfg.steps.get_or_insert(180);
    if !(lo > 0.0 && lo < hi) {
        return Err(ConfigError::new("sigma_min_deg", format!("need 0 < sigma_min_deg ({lo}) < sigma_max_deg ({hi})")).into());
    }
    let mut table = Table::new(&["sigma_deg", "h_wrapped_bits", "h_unwrapped_bits", "abs_diff_bits"]);
    for row in entropy_curve(lo, hi, steps)? {
        table.push(vec![
            row.sigma_deg.into(),
            row.h_wrapped_bits.into(),
            row.h_unwrapped_bits.into(),
            row.abs_diff_bits.into(),
        ]);
    }
    Ok(table)
}

pub fn pnn_cmd(cfg: &mut RunConfig) -> Outcome {
    let direction = required(&cfg.direction, "direction")?;
    let topology = required(&cfg.topology, "topology")?;
    let model = model(cfg)?;
    if matches!(cfg.h, Some(GainSpec::Named(_))) {
        cfg.seed.get_or_insert(1);
    }
    let h = gains(cfg)?;
    cfg.antennas.get_or_insert(h.len());
    let spec = ChannelSpec::new(direction, topology, h, model)?;
    let result = phase_noise_number(&spec, &capacity_config(cfg))?;
    let bits = |v: Option<f64>| Cell::from(v.map(nats_to_bits));
    let mut pairs = vec![
        ("prelog", Cell::from(result.prelog)),
        ("chi_exact_bits", bits(result.chi_exact)),
        ("chi_lower_bits", bits(Some(result.chi_lower))),
        ("chi_upper_bits", bits(result.chi_upper)),
        ("std_error_bits", bits(Some(result.std_error))),
    ];
    if cfg.snr_db.is_some() {
        let interval = RateInterval::from_result(&result, snr(cfg)?);
        pairs.push(("rate_lower_bits", bits(Some(interval.lower))));
        pairs.push(("rate_upper_bits", bits(interval.upper)));
    }
    pairs.push(("formula_tags", Cell::List(result.formula_tags)));
    Ok(Table::record(pairs))
}

pub fn outage_cmd(cfg: &mut RunConfig) -> Outcome {
    let scenario = OutageScenario {
        direction: required(&cfg.direction, "direction")?,
        topology: required(&cfg.topology, "topology")?,
        antennas: required(&cfg.antennas, "antennas")?,
        model: model(cfg)?,
    };
    let snr = snr(cfg)?;
    let seed = *cfg.seed.get_or_insert(1);
    let n = *cfg.n_samples.get_or_insert(100_000);
    let steps = *cfg.steps.get_or_insert(41);
    let capacity = CapacityConfig {
        entropy_mode: *cfg.entropy_mode.get_or_insert(EntropyMode::Exact),
        ..CapacityConfig::default()
    };
    if cfg.rate_min_bits.is_none() {
        cfg.rate_min_bits = Some(outage_rate_analytic_full(&scenario, snr, 1e-3, &capacity)?);
    }
    if cfg.rate_max_bits.is_none() {
        cfg.rate_max_bits = Some(outage_rate_analytic_full(&scenario, snr, 1.0 - 1e-3, &capacity)?);
    }
    let (lo, hi) = (cfg.rate_min_bits.unwrap_or_default(), cfg.rate_max_bits.unwrap_or_default());
    if !(lo < hi) || steps < 2 {
        return Err(ConfigError::new("rate_min_bits", format!("need rate_min_bits ({lo}) < rate_max_bits ({hi}) and steps >= 2")).into());
    }
    let grid: Vec<f64> = (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect();
    let curve = outage_cdf_mc(&scenario, snr, &grid, n, seed, &capacity)?;
    let mut table = Table::new(&["rate_bits", "prob_mc", "ci95", "prob_analytic"]);
    for (i, &r) in grid.iter().enumerate() {
        table.push(vec![
            r.into(),
            curve.probabilities[i].into(),
            curve.ci_halfwidth[i].into(),
            outage_cdf_analytic(&scenario, snr, r, &capacity)?.into(),
        ]);
    }
    Ok(table)
}

fn degree_label(deg: f64) -> String {
    let text = format!("{}", crate::output::round12(deg));
    text.replace('.', "p")
}

pub fn gap_cmd(cfg: &mut RunConfig) -> Outcome {
    let eps = *cfg.epsilon.get_or_insert(0.1);
    let counts = cfg
        .antenna_list
        .get_or_insert_with(|| vec![1, 2, 5, 10, 20, 50, 100])
        .clone();
    let sigmas = cfg.mc_sigmas_deg.clone().unwrap_or_default();
    let mc = if sigmas.is_empty() {
        None
    } else {
        let snr_db = *cfg.snr_db.get_or_insert(20.0);
        Some(GapMcConfig {
            snr: SnrSpec::from_db(snr_db)?,
            sigmas: sigmas.iter().map(|d| d.to_radians()).collect(),
            n_samples: *cfg.n_samples.get_or_insert(100_000),
            seed: *cfg.seed.get_or_insert(1),
        })
    };
    let capacity = CapacityConfig::default();
    let rows = gap_vs_m(eps, &counts, mc.as_ref(), &capacity)?;
    let mut columns = vec!["M".to_owned(), "delta_R_analytic_bits".to_owned()];
    for &d in &sigmas {
        let label = degree_label(d);
        columns.push(format!("delta_R_mc_bits_sigma{label}deg"));
        columns.push(format!("ci95_bits_sigma{label}deg"));
    }
    let mut table = Table::new(&columns.iter().map(String::as_str).collect::<Vec<_>>());
    for row in rows {
        let mut cells = vec![Cell::from(row.antennas), Cell::from(row.delta_r_analytic_bits)];
        for (_, gap, ci) in row.mc {
            cells.push(gap.into());
            cells.push(ci.into());
        }
        table.push(cells);
    }
    Ok(table)
}

pub fn rate_lb_cmd(cfg: &mut RunConfig) -> Outcome {
    if cfg.h.is_none() {
        cfg.h = Some(GainSpec::parse("1,1")?);
    }
    if matches!(cfg.h, Some(GainSpec::Named(_))) {
        cfg.seed.get_or_insert(1);
    }
    let h = gains(cfg)?;
    cfg.antennas.get_or_insert(h.len());
    let defaults = RateLbConfig::default();
    let lb = RateLbConfig {
        n_samples: *cfg.n_samples.get_or_insert(defaults.n_samples),
        seed: *cfg.seed.get_or_insert(defaults.seed),
    };
    let list = match (&cfg.snr_db_list, cfg.snr_db) {
        (Some(list), _) => list.clone(),
        (None, Some(db)) => vec![db],
        (None, None) => vec![*cfg.snr_db.get_or_insert(30.0)],
    };
    let columns = [
        "snr_db",
        "rate_lb_nats",
        "rate_lb_bits",
        "std_error_nats",
        "h_t_nats",
        "h_t_given_x_nats",
        "asymptote_nats",
        "n_samples",
    ];
    let mut table = Table::new(&columns);
    for &db in &list {
        let est = rate_lb_noncoherent_mc(&h, SnrSpec::from_db(db)?, &lb)?;
        table.push(vec![
            db.into(),
            est.value.into(),
            nats_to_bits(est.value).into(),
            est.std_error.into(),
            est.h_t.into(),
            est.h_t_given_x.into(),
            est.asymptote.into(),
            est.n_samples.into(),
        ]);
    }
    table.single = cfg.snr_db_list.is_none();
    Ok(table)
}

pub fn validate_cmd(cfg: &mut RunConfig) -> Outcome {
    let defaults = ValidationConfig::default();
    let vc = ValidationConfig {
        seed: *cfg.seed.get_or_insert(defaults.seed),
        ks_samples: *cfg.n_samples.get_or_insert(defaults.ks_samples),
        ..defaults
    };
    let checks = run_validation_suite(&vc)?;
    let mut table = Table::new(&["check", "statistic", "p_value", "passed"]);
    for c in &checks {
        table.push(vec![c.name.clone().into(), c.statistic.into(), c.p_value.into(), c.passed.into()]);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CommandError::ValidationFailed {
            failed,
            total: checks.len(),
            table,
        });
    }
    Ok(table)
}

/// Accepts `uplink`/`ul` and `downlink`/`dl`.
pub fn parse_direction(s: &str) -> Result<Direction, String> {
    match s.to_ascii_lowercase().as_str() {
        "uplink" | "ul" => Ok(Direction::Uplink),
        "downlink" | "dl" => Ok(Direction::Downlink),
        _ => Err(format!("expected uplink|downlink, got {s:?}")),
    }
}

/// Accepts `clo` and `slo`.
pub fn parse_topology(s: &str) -> Result<OscillatorTopology, String> {
    match s.to_ascii_lowercase().as_str() {
        "clo" => Ok(OscillatorTopology::Clo),
        "slo" => Ok(OscillatorTopology::Slo),
        _ => Err(format!("expected clo|slo, got {s:?}")),
    }
}

//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phasenoise::capacity::{
    phase_noise_number, pnn_dl_bounds, pnn_dl_clo, pnn_ul_clo, pnn_ul_slo, CapacityConfig, ChannelSpec, Direction,
    EntropyMode, SnrSpec,
};
use phasenoise::circular::{
    conditional_phase_entropy, entropy, entropy_curve, CircularDistribution, ConditionalEntropyConfig, EntropyMethod,
};
use phasenoise::models::{OscillatorTopology, PhaseNoiseModel};
use phasenoise::outage::{
    delta_r_analytic, delta_r_mc, outage_rate_mc, rate_lb_noncoherent_mc, run_validation_suite, OutageScenario,
    RateLbConfig, ValidationConfig,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn wiener(deg: f64) -> PhaseNoiseModel {
    PhaseNoiseModel::wiener(deg.to_radians()).unwrap()
}

fn dl(topology: OscillatorTopology, antennas: usize, model: PhaseNoiseModel) -> OutageScenario {
    OutageScenario {
        direction: Direction::Downlink,
        topology,
        antennas,
        model,
    }
}

fn within_budget(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let low = entropy_curve(2.0, 55.0, 107).unwrap();
    let high = entropy_curve(80.0, 180.0, 101).unwrap();
    let elapsed = start.elapsed();
    let max_low = low.iter().map(|r| r.abs_diff_bits).fold(0.0, f64::max);
    let max_high = high.iter().map(|r| r.abs_diff_bits).fold(0.0, f64::max);
    outcome(
        max_low <= 0.01 && max_high > 0.02 && within_budget(elapsed, 1.0),
        format!(
            "max |h_wrapped - h_gauss| on [2°,55°] = {max_low:.5} bit, max on [80°,180°] = {max_high:.4} bit, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let cfg = CapacityConfig::default();
    let snr = SnrSpec::from_db(20.0).unwrap();
    let n = 1_000_000;
    let clo6 = outage_rate_mc(&dl(OscillatorTopology::Clo, 20, wiener(6.0)), snr, 0.1, n, 42, &cfg).unwrap();
    let slo6 = outage_rate_mc(&dl(OscillatorTopology::Slo, 20, wiener(6.0)), snr, 0.1, n, 42, &cfg).unwrap();
    let slo234 = outage_rate_mc(&dl(OscillatorTopology::Slo, 20, wiener(2.34)), snr, 0.1, n, 42, &cfg).unwrap();
    let elapsed = start.elapsed();
    let gap = clo6.rate_bits - slo6.rate_bits;
    let matched = slo234.rate_bits - clo6.rate_bits;
    outcome(
        (gap - 1.36).abs() <= 0.03 && matched.abs() <= 0.02 && within_budget(elapsed, 30.0),
        format!(
            "R_clo(6°) - R_slo(6°) = {gap:.4} bit, R_slo(2.34°) - R_clo(6°) = {matched:+.4} bit, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let cfg = CapacityConfig::default();
    let snr = SnrSpec::from_db(20.0).unwrap();
    let d1 = delta_r_analytic(1, 0.1).unwrap();
    let d20 = delta_r_analytic(20, 0.1).unwrap();
    let increasing = (1..128).all(|m| delta_r_analytic(m + 1, 0.1).unwrap() > delta_r_analytic(m, 0.1).unwrap());
    let mut worst_mc: f64 = 0.0;
    let mut sigma_free = true;
    for m in [2usize, 5, 20] {
        let a = delta_r_mc(wiener(6.0), m, snr, 0.1, 400_000, 7, &cfg).unwrap();
        let b = delta_r_mc(wiener(2.0), m, snr, 0.1, 400_000, 7, &cfg).unwrap();
        worst_mc = worst_mc.max((a.rate_bits - delta_r_analytic(m, 0.1).unwrap()).abs());
        sigma_free &= (a.rate_bits - b.rate_bits).abs() <= a.ci_halfwidth.hypot(b.ci_halfwidth);
    }
    outcome(
        d1.abs() < 1e-12 && (d20 - 1.36).abs() < 0.01 && increasing && worst_mc <= 0.02 && sigma_free,
        format!(
            "ΔR(1) = {d1:.1e}, ΔR(20) = {d20:.4} bit, increasing on 1..128: {increasing}, \
             max |MC - analytic| (M=2,5,20) = {worst_mc:.4} bit, σ-independent: {sigma_free}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let ga = CapacityConfig {
        entropy_mode: EntropyMode::GaussianApprox,
        ..CapacityConfig::default()
    };
    let mut worst = f64::INFINITY;
    for m in [1usize, 2, 4, 16] {
        for sigma in [1.0, 2.34, 6.0, 20.0, 55.0] {
            let g = vec![1.0; m];
            let slo = ChannelSpec::with_gains(Direction::Uplink, OscillatorTopology::Slo, &g, wiener(sigma)).unwrap();
            let clo = ChannelSpec::with_gains(Direction::Uplink, OscillatorTopology::Clo, &g, wiener(sigma)).unwrap();
            let gain = pnn_ul_slo(&slo, &ga).unwrap().chi_lower - pnn_ul_clo(&clo, &ga).unwrap().chi_exact.unwrap();
            worst = worst.min(gain - 0.5 * (m as f64).ln());
        }
    }
    outcome(
        worst >= -1e-9,
        format!("min over M∈{{1,2,4,16}}, σ∈[1°,55°] of (χ_slo,lb - χ_clo) - ½ln M = {worst:.3e} nats"),
    )
}

fn random_model(rng: &mut ChaCha8Rng) -> PhaseNoiseModel {
    match rng.random_range(0..5) {
        0 => PhaseNoiseModel::Noncoherent,
        1 => wiener(rng.random_range(0.5..180.0)),
        2 => PhaseNoiseModel::partially_coherent(CircularDistribution::tikhonov(rng.random_range(0.2..30.0)).unwrap())
            .unwrap(),
        3 => PhaseNoiseModel::partially_coherent(
            CircularDistribution::wrapped_gaussian(rng.random_range(5.0f64..120.0).to_radians()).unwrap(),
        )
        .unwrap(),
        _ => PhaseNoiseModel::composite(
            rng.random_range(0.0f64..40.0).to_radians(),
            rng.random_range(0.5f64..40.0).to_radians(),
        )
        .unwrap(),
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = CapacityConfig {
        conditional: ConditionalEntropyConfig {
            n_samples: 400,
            quadrature_nodes: 1024,
            bootstrap_resamples: 50,
            seed: 99,
        },
        ..CapacityConfig::default()
    };
    let mut misordered = 0;
    for _ in 0..1000 {
        let m = rng.random_range(1..=8);
        let h: Vec<Complex64> = (0..m)
            .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
            .collect();
        let direction = if rng.random() { Direction::Uplink } else { Direction::Downlink };
        let topology = if rng.random() { OscillatorTopology::Slo } else { OscillatorTopology::Clo };
        let spec = ChannelSpec::new(direction, topology, h, random_model(&mut rng)).unwrap();
        let r = phase_noise_number(&spec, &cfg).unwrap();
        // Monte-Carlo bounds may cross by sampling error only
        if !r.is_ordered(1e-9 + 3.0 * r.std_error) {
            misordered += 1;
        }
    }

    let precise = CapacityConfig::default();
    let mut coincide = true;
    for residual in [
        CircularDistribution::tikhonov(2.0).unwrap(),
        CircularDistribution::tikhonov(15.0).unwrap(),
        CircularDistribution::wrapped_gaussian(0.8).unwrap(),
    ] {
        for m in [2usize, 4] {
            let spec = ChannelSpec::with_gains(
                Direction::Uplink,
                OscillatorTopology::Slo,
                &vec![1.0; m],
                PhaseNoiseModel::partially_coherent(residual).unwrap(),
            )
            .unwrap();
            let r = pnn_ul_slo(&spec, &precise).unwrap();
            coincide &= (r.chi_upper.unwrap() - r.chi_lower).abs() <= 3.0 * r.std_error;
        }
    }

    // common-process reduction, uplink: one observation of the common phase
    let mut ul_reduction = true;
    for residual in [CircularDistribution::tikhonov(6.0).unwrap(), CircularDistribution::wrapped_gaussian(0.5).unwrap()] {
        let est = conditional_phase_entropy(&[residual], &precise.conditional).unwrap();
        let h = entropy(&residual, EntropyMethod::Auto).unwrap().value;
        ul_reduction &= (est.value - h).abs() <= 3.0 * est.std_error + 1e-3;
    }
    for sigma in [2.0, 6.0, 30.0] {
        let gains = [0.5, 1.0, 1.5];
        let norm = gains.iter().map(|g| g * g).sum::<f64>().sqrt();
        let clo = ChannelSpec::with_gains(Direction::Uplink, OscillatorTopology::Clo, &gains, wiener(sigma)).unwrap();
        let single = ChannelSpec::with_gains(Direction::Uplink, OscillatorTopology::Slo, &[norm], wiener(sigma)).unwrap();
        let a = pnn_ul_clo(&clo, &precise).unwrap().chi_exact.unwrap();
        let b = pnn_ul_slo(&single, &precise).unwrap();
        ul_reduction &= (a - b.chi_lower).abs() < 1e-12 && (a - b.chi_upper.unwrap()).abs() < 1e-12;
    }

    // common-process reduction, downlink: the upper bound is the CLO value
    let mut dl_reduction = true;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let m = rng.random_range(1..=6);
        let gains: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..2.0)).collect();
        let model = random_model(&mut rng);
        let spec = ChannelSpec::with_gains(Direction::Downlink, OscillatorTopology::Clo, &gains, model).unwrap();
        let bounds = pnn_dl_bounds(&spec, &cfg).unwrap();
        let exact = pnn_dl_clo(&spec, &cfg).unwrap();
        dl_reduction &= bounds.chi_upper == exact.chi_exact;
    }

    outcome(
        misordered == 0 && coincide && ul_reduction && dl_reduction,
        format!(
            "misordered bounds: {misordered}/1000, memoryless coincidence: {coincide}, \
             uplink CLO reduction: {ul_reduction}, downlink CLO reduction: {dl_reduction}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let checks = run_validation_suite(&ValidationConfig::default()).unwrap();
    let relevant: Vec<_> = checks
        .iter()
        .filter(|c| c.name.starts_with("energy_noncentral_chi2") || c.name == "gamma_input_mean_power")
        .collect();
    let min_p = relevant.iter().filter_map(|c| c.p_value).fold(1.0, f64::min);
    let power_z = relevant
        .iter()
        .find(|c| c.name == "gamma_input_mean_power")
        .map(|c| c.statistic)
        .unwrap_or(f64::NAN);
    outcome(
        relevant.len() == 13 && relevant.iter().all(|c| c.passed),
        format!(
            "{} KS tests (M∈{{1,2,4,8}}, |x|∈{{0,1,10}}) min p = {min_p:.3}, E|x|² z-score = {power_z:+.2}",
            relevant.len() - 1
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let h = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
    let cfg = RateLbConfig::default();
    let at = |db: f64| rate_lb_noncoherent_mc(&h, SnrSpec::from_db(db).unwrap(), &cfg).unwrap();
    let r30 = at(30.0);
    let r40 = at(40.0);
    let elapsed = start.elapsed();
    let slope = r40.value - r30.value;
    let offset = r40.value - r40.asymptote;
    outcome(
        (slope - 0.5 * 10f64.ln()).abs() <= 0.1 && offset.abs() <= 0.15 && within_budget(elapsed, 60.0),
        format!(
            "slope 30→40 dB = {slope:.4} nats (½ln10 = {:.4}), estimate - asymptote at 40 dB = {offset:+.4} nats, {:.1} s",
            0.5 * 10f64.ln(),
            elapsed.as_secs_f64()
        ),
    )
}

fn fingerprint() -> String {
    let cfg = CapacityConfig {
        conditional: ConditionalEntropyConfig {
            n_samples: 5000,
            ..ConditionalEntropyConfig::default()
        },
        ..CapacityConfig::default()
    };
    let snr = SnrSpec::from_db(20.0).unwrap();
    let out = outage_rate_mc(&dl(OscillatorTopology::Slo, 8, wiener(6.0)), snr, 0.1, 50_000, 3, &cfg).unwrap();
    let pc = PhaseNoiseModel::partially_coherent(CircularDistribution::tikhonov(4.0).unwrap()).unwrap();
    let spec = ChannelSpec::with_gains(Direction::Uplink, OscillatorTopology::Slo, &[1.0, 0.5, 0.7], pc).unwrap();
    let chi = pnn_ul_slo(&spec, &cfg).unwrap();
    let lb = rate_lb_noncoherent_mc(
        &[Complex64::new(1.0, 0.0); 2],
        snr,
        &RateLbConfig {
            n_samples: 20_000,
            seed: 4,
        },
    )
    .unwrap();
    format!(
        "{:x} {:x} {:x} {:x} {:x} {:x}",
        out.rate_bits.to_bits(),
        out.ci_halfwidth.to_bits(),
        chi.chi_lower.to_bits(),
        chi.chi_upper.unwrap().to_bits(),
        chi.std_error.to_bits(),
        lb.value.to_bits()
    )
}

fn criterion_8() -> Outcome {
    let pool = |threads| rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let one = pool(1).install(fingerprint);
    let again = pool(1).install(fingerprint);
    let many = pool(4).install(fingerprint);
    outcome(
        one == again && one == many,
        format!("1-worker repeat identical: {}, 1 vs 4 workers identical: {}", one == again, one == many),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("wrapped vs unwrapped entropy curve", criterion_1),
        ("outage gap and matched variance at M=20", criterion_2),
        ("ΔR versus M", criterion_3),
        ("diversity gain ½ln M", criterion_4),
        ("bound consistency", criterion_5),
        ("distributional suite", criterion_6),
        ("prelog of the rate lower bound", criterion_7),
        ("determinism across workers", criterion_8),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failures += 1;
        }
        println!("criterion {} {}: {name}: {}", i + 1, if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion/criteria failed");
        ExitCode::FAILURE
    }
}

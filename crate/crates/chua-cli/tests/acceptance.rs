//! Acceptance gate: one test per release criterion, each printing a single
//! `acceptance <name>: PASS/FAIL` line (visible with `--nocapture`; the
//! detail is repeated in the panic message on failure).
//!
//! Every numeric bound here was frozen from an independent long-run survey
//! (`cargo run -p chua-core --example calibrate --release`) before being
//! pinned, and the frozen measured values are quoted next to each bound.
//! Do not loosen a bound to make a failure go away: rerun the survey,
//! understand the shift, and update both together.

use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chua_core::{
    bits_to_trace, chua_derivatives, convergence_ratio, digitize_channel, diode_current,
    equilibria, integrate, largest_lyapunov, mismatch_experiment, rc_lowpass, run_end_to_end,
    simulate_pair, sync_error, xor_stream, AnalogTrace, BitStream, ChuaState, CircuitParams,
    CouplingNode, DigitizerConfig, FilterConfig, MismatchTargets, PairState, SimConfig,
    SystemConfig, Trajectory, DEFAULT_SETTLE_THRESHOLD,
};

/// Print the verdict line and enforce it.
fn gate(name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {name}: {verdict} — {detail}");
    assert!(pass, "acceptance {name}: FAIL — {detail}");
}

fn stock_field(p: CircuitParams) -> impl Fn(f64, &[f64; 3]) -> [f64; 3] {
    move |_t, s| chua_derivatives(&ChuaState::from_array(*s), &p).to_array()
}

fn sim(duration: f64, transient_cut: f64) -> SimConfig {
    SimConfig {
        dt: 5e-7,
        duration,
        transient_cut,
        record_stride: 1,
    }
}

/// Count entries into each outer half-space (|v_a| beyond ±0.8 V), i.e.
/// scroll visits, ignoring dwell time inside.
fn half_space_visits(traj: &Trajectory<3>) -> (usize, usize) {
    let (mut pos, mut neg) = (0usize, 0usize);
    let mut region = 0i8;
    for s in &traj.samples {
        let r = if s[0] > 0.8 {
            1
        } else if s[0] < -0.8 {
            -1
        } else {
            0
        };
        if r == 1 && region != 1 {
            pos += 1;
        }
        if r == -1 && region != -1 {
            neg += 1;
        }
        if r != 0 {
            region = r;
        }
    }
    (pos, neg)
}

/// Criterion 1 — chaotic regime. A 100 ms stock run must orbit both outer
/// equilibria (≥ 10 entries per side; frozen measurement: 74/74), and the
/// largest Lyapunov exponent must be positive for five seeded initial
/// conditions (frozen: +2727.8 to +3202.8 per second). The IC box
/// (v_a ±0.4 V, v_b ±0.05 V, i_l ±5e-4 A) was basin-screened: every draw
/// stays on the attractor, whereas wider boxes contain escaping points.
#[test]
fn criterion_01_chaotic_regime() {
    let p = CircuitParams::stock();
    let traj = integrate(stock_field(p), [0.1, 0.0, 0.0], &sim(0.120, 0.020)).unwrap();
    let (pos, neg) = half_space_visits(&traj);

    let lyap_cfg = sim(0.060, 0.010);
    let mut lambdas = Vec::new();
    for seed in 1u64..=5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ic = [
            rng.random_range(-0.4..0.4),
            rng.random_range(-0.05..0.05),
            rng.random_range(-5e-4..5e-4),
        ];
        let lambda = largest_lyapunov(stock_field(p), ic, &lyap_cfg, 1e-4, 1e-8).unwrap();
        lambdas.push(lambda);
    }
    let all_positive = lambdas.iter().all(|&l| l > 0.0);

    gate(
        "chaotic-regime",
        pos >= 10 && neg >= 10 && all_positive,
        &format!(
            "half-space visits +{pos}/-{neg} (need ≥ 10 each); lyapunov per seed {:?} /s (need all > 0)",
            lambdas.iter().map(|l| l.round()).collect::<Vec<_>>()
        ),
    );
}

/// Criterion 2 — equilibria correctness. The closed-form outer equilibria
/// must zero the vector field (residual < 1e-9 of the field's typical
/// magnitude) and match an independent bisection root-solve of the
/// load-line equation -v/(r + r_0) = g(v) to 1e-9 relative.
#[test]
fn criterion_02_equilibria() {
    let p = CircuitParams::stock();
    let [p_minus, origin, p_plus] = equilibria(&p).unwrap();

    // Typical field magnitude on the attractor, for the relative residual.
    let typical = chua_derivatives(&ChuaState::new(0.1, 0.0, 0.0), &p);
    let scale = (typical.dv_a.powi(2) + typical.dv_b.powi(2) + typical.di_l.powi(2)).sqrt();
    let residual = |s: &ChuaState| {
        let d = chua_derivatives(s, &p);
        (d.dv_a.powi(2) + d.dv_b.powi(2) + d.di_l.powi(2)).sqrt() / scale
    };
    let worst = [&p_minus, &origin, &p_plus]
        .into_iter()
        .map(|s| residual(s))
        .fold(0.0f64, f64::max);

    // Independent oracle: bisection on h(v) = g(v) + v/(r + r_0) over the
    // mid segment, using only the diode current evaluator.
    let r_eff = p.r + p.r_0;
    let h = |v: f64| diode_current(v, &p.diode).unwrap() + v / r_eff;
    let (mut lo, mut hi) = (p.diode.b_p, p.diode.b_outer);
    assert!(
        h(lo) * h(hi) < 0.0,
        "bisection bracket must straddle the root"
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(lo) * h(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let v_bisect = 0.5 * (lo + hi);
    let rel_mismatch = (p_plus.v_a - v_bisect).abs() / v_bisect;

    gate(
        "equilibria",
        worst < 1e-9 && rel_mismatch < 1e-9,
        &format!(
            "worst relative residual {worst:.2e} (need < 1e-9); closed form {:.8} V vs bisection {v_bisect:.8} V, rel diff {rel_mismatch:.2e} (need < 1e-9)",
            p_plus.v_a
        ),
    );
}

/// Criterion 3 — integrator order. Halving the step over a short
/// pre-chaotic horizon must shrink the end-state error by a factor in
/// [8, 32] (theoretical 16 for a 4th-order method; frozen measurement at
/// dt = 1e-6: 17.40. Smaller steps are corrupted by corner crossings of
/// the piecewise-linear nonlinearity and measure lower, which is why this
/// configuration is pinned).
#[test]
fn criterion_03_integrator_order() {
    let p = CircuitParams::stock();
    let ratio = convergence_ratio(stock_field(p), [0.1, 0.0, 0.0], 1e-6, 5e-4).unwrap();
    gate(
        "integrator-order",
        (8.0..=32.0).contains(&ratio),
        &format!("error ratio err(dt)/err(dt/2) = {ratio:.2} at dt = 1e-6 s (need within [8, 32])"),
    );
}

/// Criterion 4 — synchronisation. With stock parameters and a 0.5 V initial
/// offset, the 100 Ω diffusive coupling must pull the receiver onto the
/// transmitter (normalized RMS < 1e-3 after a 5 ms transient; frozen:
/// 9.94e-11). Identical initial states must digitize to bitwise-equal
/// keystreams, and removing the coupling must leave the circuits unrelated
/// (normalized RMS > 0.5; frozen: 1.398).
#[test]
fn criterion_04_synchronisation() {
    let p = CircuitParams::stock();
    let offset_ic = PairState {
        tx: ChuaState::new(0.1, 0.0, 0.0),
        rx: ChuaState::new(0.6, 0.0, 0.0),
    };
    let cfg = sim(0.055, 0.0);
    let couple = chua_core::CouplingConfig {
        r_c: 100.0,
        node: CouplingNode::InductorNode,
    };

    let coupled = simulate_pair(&offset_ic, &p, &p, &couple, &cfg).unwrap();
    let m_coupled =
        sync_error(&coupled, couple.node, 5e-3, DEFAULT_SETTLE_THRESHOLD).unwrap();

    let manifold_ic = PairState {
        tx: offset_ic.tx,
        rx: offset_ic.tx,
    };
    let manifold = simulate_pair(&manifold_ic, &p, &p, &couple, &sim(0.055, 0.005)).unwrap();
    let dig = DigitizerConfig::default();
    let k_tx = digitize_channel(&manifold, &dig, 0).unwrap();
    let k_rx = digitize_channel(&manifold, &dig, 3).unwrap();
    let streams_equal = k_tx.bits == k_rx.bits;

    let uncoupled_cfg = chua_core::CouplingConfig {
        r_c: f64::INFINITY,
        node: CouplingNode::InductorNode,
    };
    let uncoupled = simulate_pair(&offset_ic, &p, &p, &uncoupled_cfg, &cfg).unwrap();
    let m_uncoupled =
        sync_error(&uncoupled, couple.node, 5e-3, DEFAULT_SETTLE_THRESHOLD).unwrap();

    gate(
        "synchronisation",
        m_coupled.normalized_rms < 1e-3 && streams_equal && m_uncoupled.normalized_rms > 0.5,
        &format!(
            "coupled nrms {:.2e} (need < 1e-3); manifold streams equal: {streams_equal} over {} bits; uncoupled nrms {:.3} (need > 0.5)",
            m_coupled.normalized_rms,
            k_tx.len(),
            m_uncoupled.normalized_rms
        ),
    );
}

/// Criterion 5 — end-to-end message recovery. Perfect-sync and
/// coupled-with-offset-ICs configurations must recover the 6 kHz square
/// wave exactly (frozen: BER 0 over 1008 bits); an uncoupled receiver must
/// decode noise (BER within [0.45, 0.55]; frozen: 0.515 over a 0.52 s run,
/// with an eight-IC survey spread of [0.479, 0.515]).
#[test]
fn criterion_05_end_to_end_recovery() {
    let mut perfect = SystemConfig::default();
    perfect.ic_rx = perfect.ic_tx;
    let r_perfect = run_end_to_end(&perfect).unwrap();

    let offset = SystemConfig::default();
    let r_offset = run_end_to_end(&offset).unwrap();

    let mut uncoupled = SystemConfig::default();
    uncoupled.coupling.r_c = f64::INFINITY;
    uncoupled.sim.duration = 0.520;
    let r_uncoupled = run_end_to_end(&uncoupled).unwrap();

    let pass = r_perfect.message_ber == 0.0
        && r_perfect.n_message_bits >= 1000
        && r_offset.message_ber <= 1e-3
        && (0.45..=0.55).contains(&r_uncoupled.message_ber);
    gate(
        "end-to-end-recovery",
        pass,
        &format!(
            "perfect-sync BER {} over {} bits (need exactly 0 over ≥ 1000); offset-IC BER {:.1e} (need ≤ 1e-3); uncoupled BER {:.3} over {} bits (need within [0.45, 0.55])",
            r_perfect.message_ber,
            r_perfect.n_message_bits,
            r_offset.message_ber,
            r_uncoupled.message_ber,
            r_uncoupled.n_message_bits
        ),
    );
}

/// Criterion 6 — cipher algebra. XOR with the keystream must be an exact
/// involution for 10⁴ seeded random (message, keystream) pairs, and
/// misaligned streams must be rejected, never silently resampled.
#[test]
fn criterion_06_cipher_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c1f);
    let mut checked = 0usize;
    for _ in 0..10_000 {
        let n = rng.random_range(1..=96);
        let t0 = rng.random_range(-1.0..1.0);
        let bit_dt = 10f64.powf(rng.random_range(-6.0..-2.0));
        let msg: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1)).collect();
        let key: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1)).collect();
        let m = BitStream::new(t0, bit_dt, msg.clone()).unwrap();
        let k = BitStream::new(t0, bit_dt, key).unwrap();
        let cipher = xor_stream(&m, &k).unwrap();
        let plain = xor_stream(&cipher, &k).unwrap();
        assert_eq!(plain.bits, msg, "involution must be exact");
        checked += 1;
    }

    let a = BitStream::new(0.0, 1e-4, vec![1, 0, 1, 0]).unwrap();
    let shifted = BitStream::new(5e-5, 1e-4, vec![1, 0, 1, 0]).unwrap();
    let stretched = BitStream::new(0.0, 2e-4, vec![1, 0, 1, 0]).unwrap();
    let short = BitStream::new(0.0, 1e-4, vec![1, 0]).unwrap();
    let rejected = xor_stream(&a, &shifted).is_err()
        && xor_stream(&a, &stretched).is_err()
        && xor_stream(&a, &short).is_err();

    gate(
        "cipher-algebra",
        checked == 10_000 && rejected,
        &format!("{checked} random pairs round-tripped exactly; misaligned epoch/spacing/length all rejected: {rejected}"),
    );
}

/// Criterion 7 — recovery-filter physics. The discrete RC low-pass (1 kΩ,
/// 7 nF) must reproduce the analog single-pole response: the unit step
/// reaches 1 - 1/e at t = RC within 1%, and a sine at the cutoff frequency
/// (1/(2πRC) ≈ 22.7 kHz) is attenuated to 1/√2 within 2%.
#[test]
fn criterion_07_filter_physics() {
    let f = FilterConfig::default();
    let tau = f.tau();

    // Unit step sampled fast enough that t = tau lands on the grid.
    let dt = tau / 1000.0;
    let step = AnalogTrace::from_fn(0.0, dt, 1501, |_| 1.0);
    let y = rc_lowpass(&step, &f, 0.0);
    let at_tau = y.samples[1000];
    let step_target = 1.0 - (-1.0f64).exp();
    let step_err = (at_tau - step_target).abs() / step_target;

    // Cutoff-frequency sine; amplitude from RMS over whole periods after
    // the start-up transient has died (> 5 time constants).
    let fc = f.cutoff();
    let period = 1.0 / fc;
    let n_total = 40.0 * period / dt;
    let sine = AnalogTrace::from_fn(0.0, dt, n_total as usize, |t| {
        (2.0 * std::f64::consts::PI * fc * t).sin()
    });
    let out = rc_lowpass(&sine, &f, 0.0);
    let tail_start = out.len() - (30.0 * period / dt) as usize;
    let tail = &out.samples[tail_start..];
    let rms = (tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64).sqrt();
    let amplitude = rms * std::f64::consts::SQRT_2;
    let gain_err = (amplitude - std::f64::consts::FRAC_1_SQRT_2).abs()
        / std::f64::consts::FRAC_1_SQRT_2;

    gate(
        "filter-physics",
        step_err < 0.01 && gain_err < 0.02,
        &format!(
            "step response at t = RC: {at_tau:.6} vs 1-1/e = {step_target:.6}, rel err {step_err:.2e} (need < 1%); cutoff-sine gain {amplitude:.4} vs 1/sqrt2 = {:.4}, rel err {gain_err:.2e} (need < 2%)",
            std::f64::consts::FRAC_1_SQRT_2
        ),
    );
}

/// Criterion 8 — keystream quality. The raw comparator stream over ≥ 1e6
/// samples must be balanced within [0.45, 0.55] (frozen: 0.4966), and the
/// decimated stream — 62.5 kHz comparator keeping every 32nd latch, the
/// fastest layout the sampling budget admits at that decimation — must
/// have |lag-1 correlation| < 0.2 (frozen: +0.0703 over 2049 bits).
#[test]
fn criterion_08_keystream_quality() {
    let p = CircuitParams::stock();

    let raw_traj = integrate(stock_field(p), [0.1, 0.0, 0.0], &sim(0.520, 0.020)).unwrap();
    let raw = digitize_channel(&raw_traj, &DigitizerConfig::default(), 0).unwrap();
    let raw_stats = chua_core::keystream_stats(&raw).unwrap();

    let dec_traj = integrate(stock_field(p), [0.1, 0.0, 0.0], &sim(1.0688, 0.020)).unwrap();
    let dec_cfg = DigitizerConfig {
        sample_rate: Some(62_500.0),
        decimation: 32,
        ..DigitizerConfig::default()
    };
    let dec = digitize_channel(&dec_traj, &dec_cfg, 0).unwrap();
    let dec_stats = chua_core::keystream_stats(&dec).unwrap();
    let corr = dec_stats.serial_corr.expect("stream is not degenerate");

    gate(
        "keystream-quality",
        raw.len() >= 1_000_000
            && (0.45..=0.55).contains(&raw_stats.balance)
            && corr.abs() < 0.2,
        &format!(
            "raw balance {:.4} over {} samples (need within [0.45, 0.55] over ≥ 1e6); decimated lag-1 correlation {corr:+.4} over {} bits at 512 µs spacing (need |corr| < 0.2)",
            raw_stats.balance,
            raw.len(),
            dec.len()
        ),
    );
}

/// Criterion 9 — component-tolerance envelope. A 5% receiver resistor
/// mismatch must degrade synchronisation by at least 10× the matched
/// residual (frozen: 1.21e-1 vs exactly 0), and a 10% mismatch must
/// corrupt the recovered message relative to the matched row (frozen BER:
/// 0.500 vs 0).
#[test]
fn criterion_09_tolerance_envelope() {
    let rows = mismatch_experiment(
        &[0.0, 0.05, 0.10],
        &SystemConfig::default(),
        MismatchTargets::default(),
    );
    let base = rows[0].outcome.as_ref().expect("matched row must run");
    let at5 = rows[1].outcome.as_ref().expect("5% row must run");
    let at10 = rows[2].outcome.as_ref().expect("10% row must run");

    let sync_degraded = at5.sync.normalized_rms >= 10.0 * base.sync.normalized_rms
        && at5.sync.normalized_rms > 0.0;
    let ber_degraded = at10.message_ber > base.message_ber;
    gate(
        "tolerance-envelope",
        sync_degraded && ber_degraded,
        &format!(
            "nrms matched {:.2e} vs 5% mismatch {:.2e} (need ≥ 10×); message BER matched {:.3} vs 10% mismatch {:.3} (need strictly greater)",
            base.sync.normalized_rms,
            at5.sync.normalized_rms,
            base.message_ber,
            at10.message_ber
        ),
    );
}

/// Criterion 10 — determinism of the CLI. Running a subcommand twice with
/// the same config and seed must reproduce every artifact byte for byte.
#[test]
fn criterion_10_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(
        &cfg_path,
        "sim.duration = 0.04\nsim.transient_cut = 0.02\nchannel.noise_sigma = 0.8\n",
    )
    .unwrap();

    let run = |out: &std::path::Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_chua-link"))
            .args(["encrypt", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(out)
            .args(["--seed", "42"])
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success(), "encrypt run failed");
    };
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run(&out_a);
    run(&out_b);

    let names = [
        "resolved.cfg",
        "message.csv",
        "encrypted.csv",
        "decrypted.csv",
        "report.json",
    ];
    let mut all_equal = true;
    let mut detail = Vec::new();
    for name in names {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        let same = a == b;
        all_equal &= same;
        detail.push(format!(
            "{name} {} ({} bytes)",
            if same { "identical" } else { "DIFFERS" },
            a.len()
        ));
    }
    gate(
        "cli-determinism",
        all_equal,
        &format!("seeded rerun artifact comparison: {}", detail.join(", ")),
    );
}

/// Companion check: the decoded message in the perfect-sync pipeline is
/// not merely error-free but bit-for-bit the transmitted pattern after
/// xor-encrypt-xor, closing the loop the individual criteria test in
/// parts. (Not numbered; fails loudly if the pipeline stages drift apart.)
#[test]
fn pipeline_stage_composition_is_lossless() {
    let mut cfg = SystemConfig::default();
    cfg.ic_rx = cfg.ic_tx;
    cfg.sim.duration = 0.0405;
    let report = run_end_to_end(&cfg).unwrap();
    assert_eq!(report.raw_ber, 0.0);
    assert_eq!(report.message_ber, 0.0);

    // Rebuild the decode input by hand from a clean square wave to confirm
    // bits_to_trace/rc_lowpass/threshold_decode agree end to end. The
    // filter emits its pre-update state, so with a cold start (y0 = low)
    // the very first sample reads the initial state and decodes low; every
    // later bit must come through exactly.
    let msg = chua_core::MessageParams::default();
    let (low, high) = msg.levels();
    let bits = BitStream::new(0.0, msg.period(), vec![1; 60]).unwrap();
    let trace = bits_to_trace(&bits, low, high);
    let filtered = rc_lowpass(&trace, &FilterConfig::default(), low);
    let decoded = chua_core::threshold_decode(&filtered, &msg).unwrap();
    assert!(decoded.len() >= 59);
    assert_eq!(decoded.bits[0], 0, "cold-start filter state decodes low");
    assert!(decoded.bits[1..].iter().all(|&b| b == 1));
}

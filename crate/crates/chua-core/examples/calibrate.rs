//! Numerical survey of the stock operating point.
//!
//! Prints the measured quantities that the test suite asserts as frozen
//! bounds: double-scroll statistics, attractor-basin membership of
//! candidate initial conditions, Lyapunov exponents, synchronisation
//! residuals under IC offsets and parameter mismatch, keystream balance
//! and lag-1 correlation at several decimations, and integrator
//! convergence ratios. Run with `cargo run -p chua-core --example
//! calibrate` and compare against the committed expectations before
//! touching tolerances.
//!
//! Context for the basin screen: with the stock 3-segment diode the
//! double-scroll attractor coexists with solutions that spiral out to
//! infinity (the far-field linear region is an unstable focus). Initial
//! conditions used by tests must stay inside the attractor basin, and the
//! 5-segment model exists precisely to fold such escapes back.

use chua_core::solver::{convergence_ratio, integrate, largest_lyapunov, SimConfig};
use chua_core::sync::{simulate_pair, sync_error, CouplingConfig, CouplingNode, PairState};
use chua_core::{
    chua_derivatives, digitize, equilibria, keystream_stats, mismatch_experiment,
    run_end_to_end, ChuaState, CircuitParams, DigitizerConfig, MismatchTargets, SystemConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn field(p: CircuitParams) -> impl Fn(f64, &[f64; 3]) -> [f64; 3] {
    move |_t, s| chua_derivatives(&ChuaState::from_array(*s), &p).to_array()
}

fn main() {
    let p = CircuitParams::stock();

    println!("== diode / equilibria ==");
    println!(
        "g_a={:.10e} g_b={:.10e} b_p={:.10} b_outer={:.10} g_outer={:.10e}",
        p.diode.g_a, p.diode.g_b, p.diode.b_p, p.diode.b_outer, p.diode.g_outer
    );
    let [pm, _, pp] = equilibria(&p).unwrap();
    println!(
        "P+ = ({:.8}, {:.8}, {:.8e})   P- = ({:.8}, {:.8}, {:.8e})",
        pp.v_a, pp.v_b, pp.i_l, pm.v_a, pm.v_b, pm.i_l
    );

    println!("\n== double scroll, 100 ms after 20 ms transient ==");
    let cfg = SimConfig {
        dt: 5e-7,
        duration: 0.120,
        transient_cut: 0.020,
        record_stride: 1,
    };
    let traj = integrate(field(p), [0.1, 0.0, 0.0], &cfg).unwrap();
    let (mut lo, mut hi) = ([f64::MAX; 3], [f64::MIN; 3]);
    for s in &traj.samples {
        for i in 0..3 {
            lo[i] = lo[i].min(s[i]);
            hi[i] = hi[i].max(s[i]);
        }
    }
    println!(
        "va in [{:.4}, {:.4}]  vb in [{:.4}, {:.4}]  il in [{:.5e}, {:.5e}]",
        lo[0], hi[0], lo[1], hi[1], lo[2], hi[2]
    );
    // Count distinct excursions into each half-space beyond ±0.8 V.
    let (mut pos_visits, mut neg_visits) = (0u32, 0u32);
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
            pos_visits += 1;
        }
        if r == -1 && region != -1 {
            neg_visits += 1;
        }
        if r != 0 {
            region = r;
        }
    }
    println!("half-space visits: +{pos_visits} / -{neg_visits}");

    println!("\n== basin screen + Lyapunov for candidate ICs ==");
    let candidates: [[f64; 3]; 12] = [
        [0.1, 0.0, 0.0],
        [-0.1, 0.0, 0.0],
        [0.6, 0.0, 0.0],
        [0.5, -0.1, 0.0],
        [1.0, 0.1, 0.0],
        [1.6, 0.0, -1e-3],
        [-1.6, 0.0, 1e-3],
        [2.0, 0.2, -1.5e-3],
        [-0.8, -0.05, 5e-4],
        [-0.3, 0.05, 1e-3],
        [0.3, -0.05, -1e-3],
        [0.2, 0.1, 5e-4],
    ];
    let screen = SimConfig {
        dt: 5e-7,
        duration: 0.3,
        transient_cut: 0.3,
        record_stride: 1,
    };
    let lcfg = SimConfig {
        dt: 5e-7,
        duration: 0.06,
        transient_cut: 0.01,
        record_stride: 1,
    };
    for ic in candidates {
        let bounded = match integrate(field(p), ic, &screen) {
            Ok(t) => {
                let s = t.samples[0];
                if s[0].abs() < 10.0 {
                    format!("bounded   (end va {:+.3})", s[0])
                } else {
                    format!("ESCAPED   (end va {:+.3e})", s[0])
                }
            }
            Err(e) => format!("DIVERGED  ({e})"),
        };
        let lam = match largest_lyapunov(field(p), ic, &lcfg, 1e-4, 1e-8) {
            Ok(l) => format!("{l:+.1} /s"),
            Err(e) => format!("err: {e}"),
        };
        println!("  {ic:?}: {bounded}  lambda {lam}");
    }

    println!("\n== Lyapunov stationarity ==");
    let mk = |duration: f64| SimConfig {
        dt: 5e-7,
        duration,
        transient_cut: 0.02,
        record_stride: 1,
    };
    match (
        largest_lyapunov(field(p), [0.1, 0.0, 0.0], &mk(0.2), 1e-4, 1e-8),
        largest_lyapunov(field(p), [0.1, 0.0, 0.0], &mk(0.4), 1e-4, 1e-8),
    ) {
        (Ok(a), Ok(b)) => println!(
            "0.2 s -> {a:.1}, 0.4 s -> {b:.1}  (rel diff {:.3})",
            (a - b).abs() / a.abs()
        ),
        other => println!("error: {other:?}"),
    }

    println!("\n== non-chaotic candidates for the gate-failure test ==");
    for r in [1700.0, 1800.0, 1900.0, 2000.0, 2200.0] {
        let mut pr = p;
        pr.r = r;
        match largest_lyapunov(field(pr), [0.1, 0.0, 0.0], &lcfg, 1e-4, 1e-8) {
            Ok(l) => println!("  r = {r} -> lambda {l:+.1} /s"),
            Err(e) => println!("  r = {r} -> error {e}"),
        }
    }

    println!("\n== synchronisation (ICs offset 0.5 V on v_a) ==");
    let ic = PairState::new(ChuaState::new(0.1, 0.0, 0.0), ChuaState::new(0.6, 0.0, 0.0));
    let scfg = SimConfig {
        dt: 5e-7,
        duration: 0.055,
        transient_cut: 0.0,
        record_stride: 1,
    };
    for (label, r_c, mism) in [
        ("coupled 100R         ", 100.0, 0.0),
        ("uncoupled            ", f64::INFINITY, 0.0),
        ("coupled, 1% mismatch ", 100.0, 0.01),
        ("coupled, 5% mismatch ", 100.0, 0.05),
        ("coupled, 10% mismatch", 100.0, 0.10),
    ] {
        let mut p_rx = p;
        p_rx.r *= 1.0 + mism;
        let c = CouplingConfig {
            r_c,
            node: CouplingNode::InductorNode,
        };
        match simulate_pair(&ic, &p, &p_rx, &c, &scfg) {
            Ok(traj) => match sync_error(&traj, CouplingNode::InductorNode, 5e-3, 0.01) {
                Ok(m) => println!(
                    "  {label}: nrms {:.4e}  max {:.4e} V  settle {:.4e} s",
                    m.normalized_rms, m.max_error, m.settle_time
                ),
                Err(e) => println!("  {label}: metric error {e}"),
            },
            Err(e) => println!("  {label}: sim error {e}"),
        }
    }

    println!("\n== keystream statistics (sign of v_a, post-transient) ==");
    let kcfg = SimConfig {
        dt: 5e-7,
        duration: 1.020,
        transient_cut: 0.020,
        record_stride: 1,
    };
    match integrate(field(p), [0.1, 0.0, 0.0], &kcfg) {
        Err(e) => println!("  long run failed: {e}"),
        Ok(traj) => {
            let bits: Vec<u8> = traj.samples.iter().map(|s| u8::from(s[0] > 0.0)).collect();
            let n = bits.len();
            let balance = bits.iter().map(|&b| b as f64).sum::<f64>() / n as f64;
            println!("  grid samples: {n}, balance {balance:.4}");
            for dec in [1usize, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048] {
                let d: Vec<f64> = bits.iter().step_by(dec).map(|&b| b as f64).collect();
                let m = d.iter().sum::<f64>() / d.len() as f64;
                let var = d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / d.len() as f64;
                let cov = d.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>()
                    / (d.len() - 1) as f64;
                println!(
                    "  decimation {dec:>3} (bit_dt {:>7.1} us, n={:>7}): lag-1 corr {:+.4}",
                    dec as f64 * 0.5,
                    d.len(),
                    cov / var
                );
            }
        }
    }

    println!("\n== keystream disagreement tx vs rx (raw BER proxy, 168 ms window) ==");
    let pcfg = SimConfig {
        dt: 5e-7,
        duration: 0.188,
        transient_cut: 0.020,
        record_stride: 1,
    };
    for (label, r_c, mism) in [
        ("coupled, matched     ", 100.0, 0.0),
        ("coupled, 5% mismatch ", 100.0, 0.05),
        ("coupled, 10% mismatch", 100.0, 0.10),
        ("uncoupled            ", f64::INFINITY, 0.0),
    ] {
        let mut p_rx = p;
        p_rx.r *= 1.0 + mism;
        let c = CouplingConfig {
            r_c,
            node: CouplingNode::InductorNode,
        };
        match simulate_pair(&ic, &p, &p_rx, &c, &pcfg) {
            Ok(traj) => {
                let total = traj.len() as f64;
                let mismatched = traj
                    .samples
                    .iter()
                    .filter(|s| (s[0] > 0.0) != (s[3] > 0.0))
                    .count() as f64;
                println!(
                    "  {label}: keystream disagreement {:.4e}",
                    mismatched / total
                );
            }
            Err(e) => println!("  {label}: sim error {e}"),
        }
    }

    println!("\n== integrator convergence ==");
    let r_lin = convergence_ratio(|_t, s: &[f64; 1]| [-s[0]], [1.0], 0.02, 0.2).unwrap();
    let r_chua = convergence_ratio(field(p), [0.1, 0.0, 0.0], 1e-6, 5e-4).unwrap();
    let r_chua2 = convergence_ratio(field(p), [0.1, 0.0, 0.0], 5e-7, 5e-4).unwrap();
    println!("  linear {r_lin:.2}   chua dt=1e-6 {r_chua:.2}   chua dt=5e-7 {r_chua2:.2}");

    println!("\n== end-to-end pipeline, default config (coupled, ICs offset 0.5 V) ==");
    let base = SystemConfig::default();
    match run_end_to_end(&base) {
        Ok(rep) => println!(
            "  nrms {:.3e}  settle {:.2e} s  raw_ber {:.3e}  message_ber {:.3e}  bits {}",
            rep.sync.normalized_rms,
            rep.sync.settle_time,
            rep.raw_ber,
            rep.message_ber,
            rep.n_message_bits
        ),
        Err(e) => println!("  error: {e}"),
    }
    let mut perfect = base.clone();
    perfect.ic_rx = perfect.ic_tx;
    match run_end_to_end(&perfect) {
        Ok(rep) => println!(
            "  perfect-sync: raw_ber {:e}  message_ber {:e}  bits {}",
            rep.raw_ber, rep.message_ber, rep.n_message_bits
        ),
        Err(e) => println!("  perfect-sync error: {e}"),
    }

    println!("\n== uncoupled message BER spread (band check for the recovery gate) ==");
    for duration in [0.188, 0.520] {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut vals = Vec::new();
        for rx_va in [0.6, -0.4, 0.3, -0.2, 0.45, 0.15, -0.55, 0.25] {
            let mut cfg = base.clone();
            cfg.coupling.r_c = f64::INFINITY;
            cfg.sim.duration = duration;
            cfg.ic_rx = ChuaState::new(rx_va, 0.0, 0.0);
            match run_end_to_end(&cfg) {
                Ok(rep) => {
                    lo = lo.min(rep.message_ber);
                    hi = hi.max(rep.message_ber);
                    vals.push(format!("{:.3}", rep.message_ber));
                }
                Err(e) => vals.push(format!("err({e})")),
            }
        }
        println!(
            "  duration {duration} s: [{}]  min {lo:.3} max {hi:.3}",
            vals.join(", ")
        );
    }

    println!("\n== decimated keystream (62.5 kHz comparator, keep every 32nd bit) ==");
    let dcfg = SimConfig {
        dt: 5e-7,
        duration: 1.0688,
        transient_cut: 0.020,
        record_stride: 1,
    };
    match integrate(field(p), [0.1, 0.0, 0.0], &dcfg) {
        Err(e) => println!("  long run failed: {e}"),
        Ok(traj) => {
            let dig = DigitizerConfig {
                sample_rate: Some(62_500.0),
                decimation: 32,
                ..DigitizerConfig::default()
            };
            match digitize(&traj, &dig).and_then(|ks| {
                let stats = keystream_stats(&ks)?;
                Ok((ks, stats))
            }) {
                Ok((ks, st)) => println!(
                    "  bit_dt {:.1} us, n {}: balance {:.4}  lag-1 corr {:+.4}  runs z {:+.2}",
                    ks.bit_dt * 1e6,
                    st.length,
                    st.balance,
                    st.serial_corr.unwrap_or(f64::NAN),
                    st.runs_z.unwrap_or(f64::NAN),
                ),
                Err(e) => println!("  digitize failed: {e}"),
            }
        }
    }

    println!("\n== Lyapunov for seeded ICs (box va [-0.4,0.4], vb [-0.05,0.05], il [-5e-4,5e-4]) ==");
    for seed in 1u64..=5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ic = [
            rng.random_range(-0.4..0.4),
            rng.random_range(-0.05..0.05),
            rng.random_range(-5e-4..5e-4),
        ];
        match largest_lyapunov(field(p), ic, &lcfg, 1e-4, 1e-8) {
            Ok(l) => println!(
                "  seed {seed}: ic [{:+.3}, {:+.3}, {:+.2e}] -> lambda {l:+.1} /s",
                ic[0], ic[1], ic[2]
            ),
            Err(e) => println!(
                "  seed {seed}: ic [{:+.3}, {:+.3}, {:+.2e}] -> error {e}",
                ic[0], ic[1], ic[2]
            ),
        }
    }

    println!("\n== mismatch experiment at default config ==");
    for row in mismatch_experiment(&[0.0, 0.05, 0.10], &base, MismatchTargets::default()) {
        match row.outcome {
            Ok(o) => println!(
                "  mismatch {:>5.2}: nrms {:.3e}  raw_ber {:.3e}  message_ber {:.3e}",
                row.mismatch, o.sync.normalized_rms, o.raw_ber, o.message_ber
            ),
            Err(e) => println!("  mismatch {:>5.2}: error {e}", row.mismatch),
        }
    }
}

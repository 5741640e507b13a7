//! End-to-end orchestration: synchronised pair → dual keystreams →
//! XOR encrypt → analog channel → re-threshold → XOR decrypt → RC
//! filter → threshold decode → metrics.
//!
//! The ciphertext travels as two-level analog samples using the message
//! generator's low/high levels and is re-thresholded at the receiver, so
//! channel noise and the recovery filter act on physical voltages rather
//! than an abstract bit pipe. The synchronisation line itself is
//! noise-free: impairing it is a separate experiment from impairing the
//! data channel.
//!
//! Everything downstream of the circuit simulation runs on the keystream
//! grid. With the default per-step digitiser that grid equals the
//! integration grid, mirroring a continuously running hardware XOR gate;
//! the message changes level only at generator-period boundaries, and
//! message bits are judged only at the decoder's duty-window midpoints.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::crypto::{
    digitize_channel, keystream_stats, xor_stream, BitStream, DigitizerConfig, KeystreamStats,
};
use crate::dynamics::{validate_params, ChuaState, CircuitParams};
use crate::error::{Error, Result};
use crate::signal::{
    bit_error_rate, bits_to_trace, rc_lowpass, square_wave, threshold_decode, AnalogTrace,
    FilterConfig, MessageParams,
};
use crate::solver::{SimConfig, Trajectory};
use crate::sync::{
    simulate_pair, sync_error, CouplingConfig, PairState, SyncMetrics, DEFAULT_SETTLE_THRESHOLD,
};

/// Full description of one transmit/receive experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    pub tx_params: CircuitParams,
    pub rx_params: CircuitParams,
    pub coupling: CouplingConfig,
    /// Shared verbatim by both ends — a private keystream needs nothing
    /// more than both comparators seeing the same configuration.
    pub digitizer: DigitizerConfig,
    pub message: MessageParams,
    pub filter: FilterConfig,
    pub sim: SimConfig,
    /// Standard deviation of additive Gaussian noise on the analog
    /// ciphertext channel (V); 0 disables the noise source entirely.
    pub channel_noise_sigma: f64,
    /// Seed for every stochastic element (currently the channel noise).
    pub rng_seed: u64,
    /// Transmitter start state.
    pub ic_tx: ChuaState,
    /// Receiver start state; differs from `ic_tx` by default, since the
    /// scheme's whole point is that coupling erases the difference.
    pub ic_rx: ChuaState,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let stock = CircuitParams::stock();
        SystemConfig {
            tx_params: stock,
            rx_params: stock,
            coupling: CouplingConfig::default(),
            digitizer: DigitizerConfig::default(),
            message: MessageParams::default(),
            filter: FilterConfig::default(),
            sim: SimConfig {
                dt: 5e-7,
                // 20 ms to lock the pair, then 168 ms of message window:
                // 1008 bits at the default 6 kHz.
                duration: 0.188,
                transient_cut: 0.020,
                record_stride: 1,
            },
            channel_noise_sigma: 0.0,
            rng_seed: 1,
            ic_tx: ChuaState {
                v_a: 0.1,
                v_b: 0.0,
                i_l: 0.0,
            },
            ic_rx: ChuaState {
                v_a: 0.6,
                v_b: 0.0,
                i_l: 0.0,
            },
        }
    }
}

/// Re-tag an invalid-parameter error with its config-section prefix.
fn prefix_field(err: Error, prefix: &str) -> Error {
    match err {
        Error::InvalidParam { field, reason } => Error::InvalidParam {
            field: format!("{prefix}.{field}"),
            reason,
        },
        other => other,
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        validate_params(&self.tx_params).into_result("circuit.")?;
        validate_params(&self.rx_params).into_result("rx.")?;
        self.coupling
            .validate()
            .map_err(|e| prefix_field(e, "coupling"))?;
        self.sim.validate().map_err(|e| prefix_field(e, "sim"))?;
        self.digitizer.validate(self.sim.dt)?; // fields already dotted
        self.message
            .validate()
            .map_err(|e| prefix_field(e, "message"))?;
        self.filter
            .validate()
            .map_err(|e| prefix_field(e, "filter"))?;
        if !self.channel_noise_sigma.is_finite() || self.channel_noise_sigma < 0.0 {
            return Err(Error::InvalidParam {
                field: "channel.noise_sigma".into(),
                reason: format!(
                    "must be non-negative and finite, got {}",
                    self.channel_noise_sigma
                ),
            });
        }
        for (name, state) in [("ic.tx", &self.ic_tx), ("ic.rx", &self.ic_rx)] {
            for (comp, v) in [
                ("v_a", state.v_a),
                ("v_b", state.v_b),
                ("i_l", state.i_l),
            ] {
                if !v.is_finite() {
                    return Err(Error::InvalidParam {
                        field: format!("{name}.{comp}"),
                        reason: "initial state must be finite".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Outcome metrics of one end-to-end run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndToEndReport {
    /// Synchronisation quality over the message window.
    pub sync: SyncMetrics,
    /// Transmitter keystream statistics.
    pub keystream: KeystreamStats,
    /// Pre-filter disagreement between sent and recovered samples, on the
    /// keystream grid.
    pub raw_ber: f64,
    /// Post-filter error rate over decoded message bits.
    pub message_ber: f64,
    pub n_message_bits: usize,
    /// Paths of exported trace files; empty until an exporter fills it.
    pub traces: Vec<String>,
}

/// The analog records behind an end-to-end run, for export and plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineTraces {
    /// Clean message waveform on the keystream grid.
    pub message: AnalogTrace,
    /// Ciphertext as transmitted, after channel noise.
    pub encrypted: AnalogTrace,
    /// Receiver output after the RC recovery filter.
    pub decrypted: AnalogTrace,
    /// Joint transmitter/receiver trajectory (post-transient).
    pub pair: Trajectory<6>,
}

/// Add white Gaussian noise to a trace. `sigma = 0` returns the input
/// verbatim; otherwise samples are drawn from a generator seeded with
/// `seed`, so equal seeds give equal outputs.
pub fn apply_awgn(trace: &AnalogTrace, sigma: f64, seed: u64) -> Result<AnalogTrace> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidParam {
            field: "channel.noise_sigma".into(),
            reason: format!("must be non-negative and finite, got {sigma}"),
        });
    }
    if sigma == 0.0 {
        return Ok(trace.clone());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::Numerical(format!("noise distribution: {e}")))?;
    Ok(AnalogTrace {
        t0: trace.t0,
        sample_dt: trace.sample_dt,
        samples: trace
            .samples
            .iter()
            .map(|&x| x + noise.sample(&mut rng))
            .collect(),
    })
}

/// Run the full chain and keep the analog traces for export.
pub fn run_end_to_end_with_traces(
    cfg: &SystemConfig,
) -> Result<(EndToEndReport, PipelineTraces)> {
    cfg.validate()?;

    let s0 = PairState {
        tx: cfg.ic_tx,
        rx: cfg.ic_rx,
    };
    let pair = simulate_pair(&s0, &cfg.tx_params, &cfg.rx_params, &cfg.coupling, &cfg.sim)
        .map_err(|e| e.in_stage("simulate_pair"))?;

    let sync = sync_error(&pair, cfg.coupling.node, pair.t0, DEFAULT_SETTLE_THRESHOLD)
        .map_err(|e| e.in_stage("sync_metrics"))?;

    let k_tx = digitize_channel(&pair, &cfg.digitizer, 0)
        .map_err(|e| e.in_stage("digitize_tx"))?;
    let k_rx = digitize_channel(&pair, &cfg.digitizer, 3)
        .map_err(|e| e.in_stage("digitize_rx"))?;

    // The keystream grid must resolve the message's duty windows, or the
    // decoder's midpoint samples have nothing to read.
    let narrowest = cfg.message.duty.min(1.0 - cfg.message.duty) * cfg.message.period();
    if k_tx.bit_dt > narrowest / 2.0 {
        return Err(Error::Config(format!(
            "keystream spacing {:.3e} s is too coarse for the {:.3e} s duty \
             window; lower digitizer.decimation or raise digitizer.sample_rate",
            k_tx.bit_dt, narrowest
        )));
    }
    let keystream = keystream_stats(&k_tx).map_err(|e| e.in_stage("keystream_stats"))?;

    // Message generator runs against the start of the recorded window,
    // sampled straight onto the keystream grid.
    let (low, high) = cfg.message.levels();
    let m_bits = BitStream::new(
        k_tx.t0,
        k_tx.bit_dt,
        (0..k_tx.len())
            .map(|i| {
                let t_rel = i as f64 * k_tx.bit_dt;
                u8::from(square_wave(&cfg.message, t_rel) > cfg.message.offset)
            })
            .collect(),
    )
    .map_err(|e| e.in_stage("message_source"))?;
    let message_trace = bits_to_trace(&m_bits, low, high);

    // Encrypt, push through the analog channel, re-threshold, decrypt.
    let cipher_bits = xor_stream(&m_bits, &k_tx).map_err(|e| e.in_stage("encrypt_xor"))?;
    let sent_trace = apply_awgn(
        &bits_to_trace(&cipher_bits, low, high),
        cfg.channel_noise_sigma,
        cfg.rng_seed,
    )
    .map_err(|e| e.in_stage("channel"))?;
    let received_bits = BitStream::new(
        sent_trace.t0,
        sent_trace.sample_dt,
        sent_trace
            .samples
            .iter()
            .map(|&v| u8::from(v > cfg.message.offset))
            .collect(),
    )
    .map_err(|e| e.in_stage("receiver_threshold"))?;
    let recovered_bits =
        xor_stream(&received_bits, &k_rx).map_err(|e| e.in_stage("decrypt_xor"))?;

    let raw_ber =
        bit_error_rate(&m_bits, &recovered_bits).map_err(|e| e.in_stage("raw_ber"))?;

    // Analog recovery: level-map, low-pass, decode one bit per period.
    let recovered_trace = bits_to_trace(&recovered_bits, low, high);
    let y0 = recovered_trace.samples.first().copied().unwrap_or(low);
    let decrypted = rc_lowpass(&recovered_trace, &cfg.filter, y0);
    let decoded =
        threshold_decode(&decrypted, &cfg.message).map_err(|e| e.in_stage("decode"))?;
    let sent_bits =
        threshold_decode(&message_trace, &cfg.message).map_err(|e| e.in_stage("decode"))?;
    let message_ber =
        bit_error_rate(&sent_bits, &decoded).map_err(|e| e.in_stage("message_ber"))?;

    let report = EndToEndReport {
        sync,
        keystream,
        raw_ber,
        message_ber,
        n_message_bits: sent_bits.len(),
        traces: Vec::new(),
    };
    let traces = PipelineTraces {
        message: message_trace,
        encrypted: sent_trace,
        decrypted,
        pair,
    };
    Ok((report, traces))
}

/// Run the full chain, keeping only the metrics.
pub fn run_end_to_end(cfg: &SystemConfig) -> Result<EndToEndReport> {
    run_end_to_end_with_traces(cfg).map(|(report, _)| report)
}

/// Which receiver components a mismatch factor multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MismatchTargets {
    pub r: bool,
    pub c_a: bool,
    pub c_b: bool,
    pub l: bool,
}

impl Default for MismatchTargets {
    fn default() -> Self {
        MismatchTargets {
            r: true,
            c_a: false,
            c_b: false,
            l: false,
        }
    }
}

/// Metrics of one mismatch-experiment row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MismatchOutcome {
    pub sync: SyncMetrics,
    pub raw_ber: f64,
    pub message_ber: f64,
}

/// One row of a component-tolerance sweep; failures are captured per row.
#[derive(Debug)]
pub struct MismatchRow {
    /// Relative perturbation applied to the receiver (0.05 = +5%).
    pub mismatch: f64,
    pub outcome: Result<MismatchOutcome>,
}

/// Perturb the receiver's components by each relative factor and run the
/// full pipeline. Rows are reported in input order; a failing row records
/// its error without aborting the rest.
pub fn mismatch_experiment(
    rel_mismatch_list: &[f64],
    cfg: &SystemConfig,
    targets: MismatchTargets,
) -> Vec<MismatchRow> {
    rel_mismatch_list
        .iter()
        .map(|&m| {
            let mut row_cfg = cfg.clone();
            let rx = &mut row_cfg.rx_params;
            if targets.r {
                rx.r *= 1.0 + m;
            }
            if targets.c_a {
                rx.c_a *= 1.0 + m;
            }
            if targets.c_b {
                rx.c_b *= 1.0 + m;
            }
            if targets.l {
                rx.l *= 1.0 + m;
            }
            let outcome = run_end_to_end(&row_cfg).map(|r| MismatchOutcome {
                sync: r.sync,
                raw_ber: r.raw_ber,
                message_ber: r.message_ber,
            });
            MismatchRow {
                mismatch: m,
                outcome,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Short-window variant of the default config for unit-test speed:
    /// 20 ms lock-in plus a 123-bit message window.
    fn quick_cfg() -> SystemConfig {
        SystemConfig {
            sim: SimConfig {
                dt: 5e-7,
                duration: 0.0405,
                transient_cut: 0.020,
                record_stride: 1,
            },
            ..SystemConfig::default()
        }
    }

    fn perfect_sync_cfg() -> SystemConfig {
        let mut cfg = quick_cfg();
        cfg.ic_rx = cfg.ic_tx;
        cfg
    }

    #[test]
    fn perfect_sync_recovers_exactly() {
        let report = run_end_to_end(&perfect_sync_cfg()).unwrap();
        assert_eq!(report.raw_ber, 0.0);
        assert_eq!(report.message_ber, 0.0);
        assert_eq!(report.sync.rms_error, 0.0);
        assert!(report.n_message_bits >= 100);
    }

    #[test]
    fn mismatched_ics_recover_after_lock_in() {
        let report = run_end_to_end(&quick_cfg()).unwrap();
        assert!(
            report.sync.normalized_rms < 1e-3,
            "normalized_rms = {}",
            report.sync.normalized_rms
        );
        assert!(
            report.message_ber <= 1e-3,
            "message_ber = {}",
            report.message_ber
        );
        assert!(report.n_message_bits >= 100);
    }

    #[test]
    fn uncoupled_receiver_reads_noise() {
        let mut cfg = quick_cfg();
        cfg.coupling = CouplingConfig::uncoupled();
        cfg.sim.duration = 0.050;
        let report = run_end_to_end(&cfg).unwrap();
        assert!(
            report.message_ber > 0.2 && report.message_ber < 0.8,
            "message_ber = {}",
            report.message_ber
        );
        assert!(report.raw_ber > 0.2, "raw_ber = {}", report.raw_ber);
    }

    #[test]
    fn channel_noise_flips_raw_bits_but_filter_absorbs_most() {
        let mut cfg = perfect_sync_cfg();
        cfg.channel_noise_sigma = 2.0;
        let report = run_end_to_end(&cfg).unwrap();
        // Per-sample flip probability is Φ(−1.25/2) ≈ 0.27.
        assert!(
            report.raw_ber > 0.1 && report.raw_ber < 0.45,
            "raw_ber = {}",
            report.raw_ber
        );
        assert!(report.message_ber < report.raw_ber);
    }

    #[test]
    fn identical_configs_give_identical_reports() {
        let mut cfg = quick_cfg();
        cfg.channel_noise_sigma = 0.5;
        let a = run_end_to_end(&cfg).unwrap();
        let b = run_end_to_end(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn report_matches_manual_stage_composition() {
        let cfg = quick_cfg();
        let report = run_end_to_end(&cfg).unwrap();

        let s0 = PairState {
            tx: cfg.ic_tx,
            rx: cfg.ic_rx,
        };
        let pair =
            simulate_pair(&s0, &cfg.tx_params, &cfg.rx_params, &cfg.coupling, &cfg.sim).unwrap();
        let k_tx = digitize_channel(&pair, &cfg.digitizer, 0).unwrap();
        let k_rx = digitize_channel(&pair, &cfg.digitizer, 3).unwrap();
        let (low, high) = cfg.message.levels();
        let m_bits = BitStream::new(
            k_tx.t0,
            k_tx.bit_dt,
            (0..k_tx.len())
                .map(|i| {
                    u8::from(
                        square_wave(&cfg.message, i as f64 * k_tx.bit_dt) > cfg.message.offset,
                    )
                })
                .collect(),
        )
        .unwrap();
        let cipher = xor_stream(&m_bits, &k_tx).unwrap();
        let recovered = xor_stream(&cipher, &k_rx).unwrap();
        assert_eq!(report.raw_ber, bit_error_rate(&m_bits, &recovered).unwrap());

        let rec_trace = bits_to_trace(&recovered, low, high);
        let filtered = rc_lowpass(&rec_trace, &cfg.filter, rec_trace.samples[0]);
        let decoded = threshold_decode(&filtered, &cfg.message).unwrap();
        let sent = threshold_decode(&bits_to_trace(&m_bits, low, high), &cfg.message).unwrap();
        assert_eq!(
            report.message_ber,
            bit_error_rate(&sent, &decoded).unwrap()
        );
        assert_eq!(report.n_message_bits, sent.len());
    }

    #[test]
    fn ciphertext_stays_balanced() {
        let mut cfg = quick_cfg();
        cfg.sim.duration = 0.0705; // ≥ 1e5 keystream-grid samples
        let (_, traces) = run_end_to_end_with_traces(&cfg).unwrap();
        let n = traces.encrypted.len();
        assert!(n >= 100_000);
        let ones = traces
            .encrypted
            .samples
            .iter()
            .filter(|&&v| v > cfg.message.offset)
            .count();
        let balance = ones as f64 / n as f64;
        assert!(
            balance > 0.4 && balance < 0.6,
            "ciphertext balance = {balance}"
        );
    }

    #[test]
    fn awgn_is_identity_at_zero_sigma() {
        let trace = AnalogTrace::from_fn(0.0, 1e-6, 256, |t| (1e5 * t).sin());
        let out = apply_awgn(&trace, 0.0, 42).unwrap();
        assert_eq!(out, trace);
    }

    #[test]
    fn awgn_sample_std_matches_sigma() {
        let trace = AnalogTrace {
            t0: 0.0,
            sample_dt: 1e-6,
            samples: vec![0.0; 1_000_000],
        };
        let out = apply_awgn(&trace, 1.0, 7).unwrap();
        let n = out.len() as f64;
        let mean = out.samples.iter().sum::<f64>() / n;
        let var = out.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        assert!((0.99..=1.01).contains(&std), "std = {std}");
    }

    #[test]
    fn awgn_is_seed_deterministic() {
        let trace = AnalogTrace::from_fn(0.0, 1e-6, 512, |_| 1.0);
        let a = apply_awgn(&trace, 0.3, 99).unwrap();
        let b = apply_awgn(&trace, 0.3, 99).unwrap();
        let c = apply_awgn(&trace, 0.3, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn awgn_rejects_negative_sigma() {
        let trace = AnalogTrace::from_fn(0.0, 1e-6, 8, |_| 0.0);
        assert!(apply_awgn(&trace, -0.1, 0).is_err());
    }

    #[test]
    fn mismatch_rows_keep_order_and_severity() {
        let cfg = quick_cfg();
        let rows = mismatch_experiment(&[0.0, 0.05, 0.10], &cfg, MismatchTargets::default());
        assert_eq!(rows.len(), 3);
        let base = rows[0].outcome.as_ref().unwrap();
        let five = rows[1].outcome.as_ref().unwrap();
        let ten = rows[2].outcome.as_ref().unwrap();

        // Unperturbed row reproduces the baseline run exactly.
        let baseline = run_end_to_end(&cfg).unwrap();
        assert_eq!(base.sync, baseline.sync);
        assert_eq!(base.message_ber, baseline.message_ber);

        assert!(
            five.sync.normalized_rms >= 10.0 * base.sync.normalized_rms,
            "5% mismatch nrms {} vs baseline {}",
            five.sync.normalized_rms,
            base.sync.normalized_rms
        );
        assert!(
            ten.message_ber > base.message_ber,
            "10% ber {} vs baseline {}",
            ten.message_ber,
            base.message_ber
        );
    }

    #[test]
    fn mismatch_captures_row_errors_without_aborting() {
        let mut cfg = quick_cfg();
        cfg.rx_params.r = f64::NAN; // every perturbation of NaN stays invalid
        let rows = mismatch_experiment(&[0.0, 0.05], &cfg, MismatchTargets::default());
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.outcome.is_err()));
    }

    #[test]
    fn validation_names_the_offending_section() {
        let mut cfg = quick_cfg();
        cfg.coupling.r_c = 0.0;
        match cfg.validate() {
            Err(Error::InvalidParam { field, .. }) => assert_eq!(field, "coupling.r_c"),
            other => panic!("expected invalid-param, got {other:?}"),
        }

        let mut cfg = quick_cfg();
        cfg.message.duty = 0.0;
        match cfg.validate() {
            Err(Error::InvalidParam { field, .. }) => assert_eq!(field, "message.duty"),
            other => panic!("expected invalid-param, got {other:?}"),
        }

        let mut cfg = quick_cfg();
        cfg.tx_params.c_a = -1e-9;
        match cfg.validate() {
            Err(Error::InvalidParam { field, .. }) => assert_eq!(field, "circuit.c_a"),
            other => panic!("expected invalid-param, got {other:?}"),
        }

        let mut cfg = quick_cfg();
        cfg.ic_rx.v_b = f64::INFINITY;
        match cfg.validate() {
            Err(Error::InvalidParam { field, .. }) => assert_eq!(field, "ic.rx.v_b"),
            other => panic!("expected invalid-param, got {other:?}"),
        }
    }

    #[test]
    fn coarse_keystream_cannot_carry_the_message() {
        let mut cfg = quick_cfg();
        // 512 µs bit spacing against a 166.7 µs message period.
        cfg.digitizer.sample_rate = Some(62_500.0);
        cfg.digitizer.decimation = 32;
        match run_end_to_end(&cfg) {
            Err(Error::Config(msg)) => assert!(msg.contains("too coarse")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn traces_share_the_keystream_grid() {
        let (report, traces) = run_end_to_end_with_traces(&perfect_sync_cfg()).unwrap();
        assert_eq!(traces.message.t0, traces.encrypted.t0);
        assert_eq!(traces.message.sample_dt, traces.decrypted.sample_dt);
        assert_eq!(traces.message.len(), traces.encrypted.len());
        assert_eq!(traces.message.len(), traces.decrypted.len());
        assert_eq!(traces.pair.t0, traces.message.t0);
        assert!(report.traces.is_empty());
    }
}

//! Simulation and analysis toolkit for a chaos-based symmetric stream
//! cipher built from two synchronised Chua circuits.
//!
//! The transmitter circuit runs in a double-scroll chaotic regime; a
//! resistive bidirectional line keeps an identically built receiver in
//! lock-step. Both ends threshold the same chaotic node voltage into a
//! shared keystream, the transmitter XORs a square-wave message onto it,
//! and the receiver XORs again and low-pass filters to recover the
//! message.
//!
//! Module map:
//! - [`dynamics`] — single-circuit physics: PWL diode, state equations,
//!   equilibria, parameter derivation from the component values.
//! - [`solver`] — fixed-step RK4, trajectories, convergence and Lyapunov
//!   diagnostics.
//! - [`sync`] — the coupled pair and synchronisation metrics.
//! - [`crypto`] — comparator digitisation, XOR stream cipher, keystream
//!   statistics.
//! - [`signal`] — message generator, RC recovery filter, threshold
//!   decoder, bit-error accounting.
//! - [`pipeline`] — the end-to-end encrypt/transmit/decrypt chain and
//!   tolerance experiments.
//! - [`config`] — dotted-key experiment files and their resolution.
//! - [`export`] — deterministic CSV/JSON artifact writers.

pub mod config;
pub mod crypto;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod pipeline;
pub mod signal;
pub mod solver;
pub mod sync;

pub use config::{load_config, parse_config, ConfigDoc};
pub use crypto::{
    digitize, digitize_channel, keystream_stats, xor_stream, BitSource, BitStream,
    DigitizerConfig, KeystreamStats,
};
pub use dynamics::{
    chua_derivatives, derive_diode_params, diode_current, equilibria, validate_params, ChuaState,
    CircuitParams, DiodeParams, NicResistors, StateDerivative,
};
pub use error::{Error, Result};
pub use export::{
    export_bits_csv, export_coupling_sweep_csv, export_mismatch_csv, export_pair_csv,
    export_trace_csv, export_trajectory_csv, write_json,
};
pub use pipeline::{
    apply_awgn, mismatch_experiment, run_end_to_end, run_end_to_end_with_traces, EndToEndReport,
    MismatchOutcome, MismatchRow, MismatchTargets, PipelineTraces, SystemConfig,
};
pub use signal::{
    bit_error_rate, bits_to_trace, payload_wave, rc_lowpass, square_wave, threshold_decode,
    AnalogTrace, FilterConfig, MessageParams,
};
pub use solver::{convergence_ratio, integrate, largest_lyapunov, rk4_step, SimConfig, Trajectory};
pub use sync::{
    coupled_derivatives, coupling_sweep, simulate_pair, sync_error, CouplingConfig, CouplingNode,
    PairDerivative, PairState, SyncMetrics, DEFAULT_SETTLE_THRESHOLD,
};

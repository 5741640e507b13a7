//! Shared fixtures for the benchmark suite: standard operating points and
//! pre-integrated trajectories so each benchmark measures exactly one stage.

use chua_core::{
    integrate, ChuaState, CircuitParams, PairState, SimConfig, SystemConfig, Trajectory,
};

/// Millisecond-scale integration window: long enough to exercise the real
/// access patterns, short enough to iterate in a benchmark loop.
pub fn short_sim() -> SimConfig {
    SimConfig {
        dt: 5e-7,
        duration: 1e-3,
        transient_cut: 0.0,
        record_stride: 1,
    }
}

/// Standard chaotic operating point.
pub fn stock_params() -> CircuitParams {
    CircuitParams::stock()
}

/// The default transmitter start state.
pub fn tx_ic() -> ChuaState {
    SystemConfig::default().ic_tx
}

/// Transmitter/receiver start states with the default offset.
pub fn pair_ic() -> PairState {
    let sys = SystemConfig::default();
    PairState {
        tx: sys.ic_tx,
        rx: sys.ic_rx,
    }
}

/// A recorded single-circuit trajectory for digitizer benchmarks.
pub fn recorded_trajectory() -> Trajectory<3> {
    let p = stock_params();
    let field = move |_t: f64, s: &[f64; 3]| {
        chua_core::chua_derivatives(&ChuaState::from_array(*s), &p).to_array()
    };
    integrate(field, tx_ic().to_array(), &short_sim()).expect("stock run is bounded")
}

/// An end-to-end configuration trimmed for benchmarking: one sync
/// transient plus a decodable message window.
pub fn quick_system() -> SystemConfig {
    let mut sys = SystemConfig::default();
    sys.sim.duration = 0.03;
    sys.sim.transient_cut = 0.01;
    sys
}

//! Bidirectionally coupled transmitter/receiver pair and synchronisation
//! metrics.
//!
//! The two circuits are tied together by a single resistor `r_c` between
//! like capacitor nodes — the minimal physical realization of a
//! bidirectional synchronisation line. The coupling current
//! `(v_other − v_self)/r_c` enters each node's charge balance, so the
//! contribution is antisymmetric by construction: whatever current leaves
//! one circuit enters the other.
//!
//! Joint state layout everywhere in this module:
//! `[v_a_tx, v_b_tx, i_l_tx, v_a_rx, v_b_rx, i_l_rx]`.

use crate::dynamics::{
    chua_derivatives, validate_params, ChuaState, CircuitParams, StateDerivative,
};
use crate::error::{Error, Result};
use crate::solver::{integrate, SimConfig, Trajectory};

/// Which capacitor node the coupling resistor (and the sync metrics)
/// attaches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingNode {
    /// `v_a`, the capacitor in parallel with the Chua diode.
    DiodeNode,
    /// `v_b`, the capacitor in parallel with the inductor (the node whose
    /// voltages the sync phase portrait plots).
    #[default]
    InductorNode,
}

impl CouplingNode {
    /// Index of the node voltage within a single circuit's state triple.
    pub fn state_index(self) -> usize {
        match self {
            CouplingNode::DiodeNode => 0,
            CouplingNode::InductorNode => 1,
        }
    }
}

/// Synchronisation line: coupling resistance and attachment node.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CouplingConfig {
    /// Coupling resistance (Ω). `f64::INFINITY` means no line at all.
    pub r_c: f64,
    pub node: CouplingNode,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig {
            r_c: 100.0,
            node: CouplingNode::InductorNode,
        }
    }
}

impl CouplingConfig {
    pub fn uncoupled() -> Self {
        CouplingConfig {
            r_c: f64::INFINITY,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_c.is_nan() || self.r_c <= 0.0 {
            return Err(Error::InvalidParam {
                field: "r_c".into(),
                reason: format!(
                    "coupling resistance must be positive (or infinite for uncoupled), got {}",
                    self.r_c
                ),
            });
        }
        Ok(())
    }
}

/// Joint transmitter + receiver state.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct PairState {
    pub tx: ChuaState,
    pub rx: ChuaState,
}

impl PairState {
    pub fn new(tx: ChuaState, rx: ChuaState) -> Self {
        Self { tx, rx }
    }

    pub fn to_array(self) -> [f64; 6] {
        let t = self.tx.to_array();
        let r = self.rx.to_array();
        [t[0], t[1], t[2], r[0], r[1], r[2]]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        PairState {
            tx: ChuaState::new(a[0], a[1], a[2]),
            rx: ChuaState::new(a[3], a[4], a[5]),
        }
    }
}

/// Time derivative of a [`PairState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDerivative {
    pub tx: StateDerivative,
    pub rx: StateDerivative,
}

impl PairDerivative {
    pub fn to_array(self) -> [f64; 6] {
        let t = self.tx.to_array();
        let r = self.rx.to_array();
        [t[0], t[1], t[2], r[0], r[1], r[2]]
    }
}

/// Derivatives of the coupled pair.
///
/// Each circuit first evolves under its own parameters; the coupling
/// current `i_c = (v_rx − v_tx)/r_c` (positive into the transmitter node)
/// is then added to both node equations with opposite signs. When the
/// coupling current is exactly zero — identical node voltages or an
/// infinite `r_c` — the addition is skipped entirely so that the coupled
/// arithmetic is bit-for-bit the uncoupled arithmetic; this is what makes
/// the synchronisation manifold exactly invariant in floating point.
pub fn coupled_derivatives(
    ps: &PairState,
    p_tx: &CircuitParams,
    p_rx: &CircuitParams,
    c: &CouplingConfig,
) -> PairDerivative {
    let mut d_tx = chua_derivatives(&ps.tx, p_tx);
    let mut d_rx = chua_derivatives(&ps.rx, p_rx);

    let (v_tx, v_rx) = match c.node {
        CouplingNode::DiodeNode => (ps.tx.v_a, ps.rx.v_a),
        CouplingNode::InductorNode => (ps.tx.v_b, ps.rx.v_b),
    };
    let i_c = (v_rx - v_tx) / c.r_c;
    if i_c != 0.0 {
        match c.node {
            CouplingNode::DiodeNode => {
                d_tx.dv_a += i_c / p_tx.c_a;
                d_rx.dv_a -= i_c / p_rx.c_a;
            }
            CouplingNode::InductorNode => {
                d_tx.dv_b += i_c / p_tx.c_b;
                d_rx.dv_b -= i_c / p_rx.c_b;
            }
        }
    }
    PairDerivative { tx: d_tx, rx: d_rx }
}

/// Vector-field closure over the 6-dimensional joint state, for use with
/// the solver routines.
pub fn pair_vector_field<'a>(
    p_tx: &'a CircuitParams,
    p_rx: &'a CircuitParams,
    c: &'a CouplingConfig,
) -> impl Fn(f64, &[f64; 6]) -> [f64; 6] + Copy + 'a {
    move |_t, s| coupled_derivatives(&PairState::from_array(*s), p_tx, p_rx, c).to_array()
}

/// Integrate the coupled pair.
pub fn simulate_pair(
    s0: &PairState,
    p_tx: &CircuitParams,
    p_rx: &CircuitParams,
    c: &CouplingConfig,
    cfg: &SimConfig,
) -> Result<Trajectory<6>> {
    validate_params(p_tx).into_result("tx circuit ")?;
    validate_params(p_rx).into_result("rx circuit ")?;
    c.validate()?;
    integrate(pair_vector_field(p_tx, p_rx, c), s0.to_array(), cfg)
}

/// Default settle threshold: instantaneous |error| below 1% of the
/// transmitter node's RMS counts as synchronised.
pub const DEFAULT_SETTLE_THRESHOLD: f64 = 0.01;

/// Synchronisation quality over a trajectory window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SyncMetrics {
    /// RMS of `tx − rx` on the observed node (V).
    pub rms_error: f64,
    /// Peak |tx − rx| (V).
    pub max_error: f64,
    /// `rms_error` divided by the RMS of the transmitter node voltage.
    pub normalized_rms: f64,
    /// First time from which the normalized instantaneous error stays
    /// below the threshold for the rest of the window (s); infinite if it
    /// never does.
    pub settle_time: f64,
}

/// Measure sync quality on the coupled node over samples at `t ≥
/// transient_cut` (trajectory time). `threshold` is the dimensionless
/// settle criterion; see [`DEFAULT_SETTLE_THRESHOLD`].
pub fn sync_error(
    traj: &Trajectory<6>,
    node: CouplingNode,
    transient_cut: f64,
    threshold: f64,
) -> Result<SyncMetrics> {
    let idx = node.state_index();
    // Tolerate representation noise when the cut lands on a grid point.
    let start = traj
        .iter_timed()
        .position(|(t, _)| t >= transient_cut - 1e-12)
        .ok_or_else(|| {
            Error::Alignment(format!(
                "sync window is empty: transient_cut {transient_cut} s is past the last sample t = {:.6e} s",
                traj.time(traj.len().saturating_sub(1))
            ))
        })?;
    let window = &traj.samples[start..];

    let mut sum_err2 = 0.0;
    let mut sum_tx2 = 0.0;
    let mut max_error: f64 = 0.0;
    for s in window {
        let e = s[idx] - s[idx + 3];
        sum_err2 += e * e;
        sum_tx2 += s[idx] * s[idx];
        max_error = max_error.max(e.abs());
    }
    let n = window.len() as f64;
    let rms_error = (sum_err2 / n).sqrt();
    let rms_tx = (sum_tx2 / n).sqrt();
    if rms_tx == 0.0 {
        return Err(Error::Numerical(
            "transmitter node voltage is identically zero over the window; normalized metrics undefined"
                .into(),
        ));
    }

    // Walk backwards to the last sample violating the settle criterion.
    let mut settle_idx = Some(start);
    for (k, s) in window.iter().enumerate().rev() {
        let e = (s[idx] - s[idx + 3]).abs() / rms_tx;
        if e >= threshold {
            settle_idx = if k + 1 < window.len() {
                Some(start + k + 1)
            } else {
                None
            };
            break;
        }
    }
    let settle_time = settle_idx.map_or(f64::INFINITY, |i| traj.time(i));

    Ok(SyncMetrics {
        rms_error,
        max_error,
        normalized_rms: rms_error / rms_tx,
        settle_time,
    })
}

/// One result row of [`coupling_sweep`].
#[derive(Debug)]
pub struct SweepRow {
    pub r_c: f64,
    /// Relative mismatch applied to the receiver's `r`.
    pub mismatch: f64,
    /// Metrics, or the per-row simulation error; a failing row does not
    /// abort the rest of the sweep.
    pub metrics: Result<SyncMetrics>,
}

/// Run the pair across a list of coupling resistances with a fixed
/// relative mismatch on the receiver's variable resistor. Rows come back
/// in input order. Metrics are taken over the post-`transient_cut` window
/// at the default settle threshold.
pub fn coupling_sweep(
    r_c_values: &[f64],
    mismatch: f64,
    s0: &PairState,
    p: &CircuitParams,
    node: CouplingNode,
    cfg: &SimConfig,
) -> Result<Vec<SweepRow>> {
    if r_c_values.is_empty() {
        return Err(Error::InvalidParam {
            field: "r_c_values".into(),
            reason: "sweep needs at least one coupling resistance".into(),
        });
    }
    if !mismatch.is_finite() {
        return Err(Error::InvalidParam {
            field: "mismatch".into(),
            reason: format!("must be finite, got {mismatch}"),
        });
    }
    let mut p_rx = *p;
    p_rx.r *= 1.0 + mismatch;

    let mut rows = Vec::with_capacity(r_c_values.len());
    for &r_c in r_c_values {
        let coupling = CouplingConfig { r_c, node };
        let metrics = simulate_pair(s0, p, &p_rx, &coupling, cfg).and_then(|traj| {
            sync_error(&traj, node, cfg.transient_cut, DEFAULT_SETTLE_THRESHOLD)
        });
        rows.push(SweepRow {
            r_c,
            mismatch,
            metrics,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn offset_ic() -> PairState {
        PairState::new(
            ChuaState::new(0.1, 0.0, 0.0),
            ChuaState::new(0.6, 0.0, 0.0),
        )
    }

    #[test]
    fn identical_states_have_zero_coupling() {
        let p = CircuitParams::stock();
        let c = CouplingConfig::default();
        let s = ChuaState::new(0.7, -0.2, 1e-3);
        let pair = PairState::new(s, s);
        let d = coupled_derivatives(&pair, &p, &p, &c);
        let free = chua_derivatives(&s, &p);
        assert_eq!(d.tx, free);
        assert_eq!(d.rx, free);
    }

    #[test]
    fn infinite_resistance_is_block_diagonal() {
        let p = CircuitParams::stock();
        let c = CouplingConfig::uncoupled();
        let pair = PairState::new(
            ChuaState::new(0.7, -0.2, 1e-3),
            ChuaState::new(-1.4, 0.3, -2e-3),
        );
        let d = coupled_derivatives(&pair, &p, &p, &c);
        assert_eq!(d.tx, chua_derivatives(&pair.tx, &p));
        assert_eq!(d.rx, chua_derivatives(&pair.rx, &p));
    }

    #[test]
    fn coupling_term_hand_value() {
        // Δv = 1 V across 100 Ω into 100 nF: ±1e5 V/s on dv_b.
        let p = CircuitParams::stock();
        let c = CouplingConfig::default();
        let pair = PairState::new(
            ChuaState::new(0.3, 1.0, 0.0),
            ChuaState::new(0.3, 0.0, 0.0),
        );
        let d = coupled_derivatives(&pair, &p, &p, &c);
        let free_tx = chua_derivatives(&pair.tx, &p);
        let free_rx = chua_derivatives(&pair.rx, &p);
        assert_relative_eq!(d.tx.dv_b - free_tx.dv_b, -1e5, max_relative = 1e-9);
        assert_relative_eq!(d.rx.dv_b - free_rx.dv_b, 1e5, max_relative = 1e-9);
        // Untouched components are bitwise identical.
        assert_eq!(d.tx.dv_a, free_tx.dv_a);
        assert_eq!(d.rx.di_l, free_rx.di_l);
    }

    #[test]
    fn coupling_current_is_conserved() {
        let p = CircuitParams::stock();
        let mut p_rx = p;
        p_rx.c_b = 47e-9; // asymmetric capacitances: currents still balance
        let c = CouplingConfig::default();
        let pair = PairState::new(
            ChuaState::new(0.7, -0.2, 1e-3),
            ChuaState::new(-1.4, 0.3, -2e-3),
        );
        let d = coupled_derivatives(&pair, &p, &p_rx, &c);
        let i_tx = (d.tx.dv_b - chua_derivatives(&pair.tx, &p).dv_b) * p.c_b;
        let i_rx = (d.rx.dv_b - chua_derivatives(&pair.rx, &p_rx).dv_b) * p_rx.c_b;
        assert_relative_eq!(i_tx, -i_rx, max_relative = 1e-9);
    }

    #[test]
    fn manifold_is_bitwise_invariant() {
        let p = CircuitParams::stock();
        let s = ChuaState::new(0.1, 0.0, 0.0);
        let cfg = SimConfig {
            duration: 5e-3,
            ..SimConfig::default()
        };
        let traj = simulate_pair(
            &PairState::new(s, s),
            &p,
            &p,
            &CouplingConfig::default(),
            &cfg,
        )
        .unwrap();
        for (t, smp) in traj.iter_timed() {
            assert_eq!(smp[0], smp[3], "v_a split at t={t}");
            assert_eq!(smp[1], smp[4], "v_b split at t={t}");
            assert_eq!(smp[2], smp[5], "i_l split at t={t}");
        }
    }

    #[test]
    fn uncoupled_pair_matches_independent_runs_bitwise() {
        let p = CircuitParams::stock();
        let ic = offset_ic();
        let cfg = SimConfig {
            duration: 5e-3,
            ..SimConfig::default()
        };
        let pair = simulate_pair(&ic, &p, &p, &CouplingConfig::uncoupled(), &cfg).unwrap();
        let field = |_t: f64, s: &[f64; 3]| {
            chua_derivatives(&ChuaState::from_array(*s), &p).to_array()
        };
        let solo_tx = integrate(field, ic.tx.to_array(), &cfg).unwrap();
        let solo_rx = integrate(field, ic.rx.to_array(), &cfg).unwrap();
        for i in 0..pair.len() {
            assert_eq!(pair.samples[i][..3], solo_tx.samples[i]);
            assert_eq!(pair.samples[i][3..], solo_rx.samples[i]);
        }
    }

    #[test]
    fn mismatched_ics_synchronise_through_the_line() {
        let p = CircuitParams::stock();
        let cfg = SimConfig {
            duration: 0.055,
            ..SimConfig::default()
        };
        let traj =
            simulate_pair(&offset_ic(), &p, &p, &CouplingConfig::default(), &cfg).unwrap();
        let m = sync_error(&traj, CouplingNode::InductorNode, 5e-3, DEFAULT_SETTLE_THRESHOLD)
            .unwrap();
        assert!(
            m.normalized_rms < 1e-3,
            "normalized rms {:.3e} not below 1e-3",
            m.normalized_rms
        );
        assert!(m.settle_time <= 5e-3, "settle time {:.3e}", m.settle_time);
    }

    #[test]
    fn uncoupled_pair_stays_decorrelated() {
        let p = CircuitParams::stock();
        let cfg = SimConfig {
            duration: 0.055,
            ..SimConfig::default()
        };
        let traj =
            simulate_pair(&offset_ic(), &p, &p, &CouplingConfig::uncoupled(), &cfg).unwrap();
        let m = sync_error(&traj, CouplingNode::InductorNode, 5e-3, DEFAULT_SETTLE_THRESHOLD)
            .unwrap();
        assert!(
            m.normalized_rms > 0.5,
            "decorrelated chaos should miss badly, got {:.3e}",
            m.normalized_rms
        );
    }

    #[test]
    fn sync_error_identical_streams() {
        let p = CircuitParams::stock();
        let s = ChuaState::new(0.1, 0.0, 0.0);
        let cfg = SimConfig {
            duration: 0.01,
            ..SimConfig::default()
        };
        let traj = simulate_pair(
            &PairState::new(s, s),
            &p,
            &p,
            &CouplingConfig::default(),
            &cfg,
        )
        .unwrap();
        let m = sync_error(&traj, CouplingNode::InductorNode, 2e-3, DEFAULT_SETTLE_THRESHOLD)
            .unwrap();
        assert_eq!(m.rms_error, 0.0);
        assert_eq!(m.max_error, 0.0);
        assert_eq!(m.normalized_rms, 0.0);
        assert_relative_eq!(m.settle_time, 2e-3, max_relative = 1e-9);
    }

    #[test]
    fn sync_error_constant_offset_definition() {
        // Synthetic window: tx alternates ±1 V (RMS exactly 1), rx trails
        // by a constant 0.1 V.
        let samples: Vec<[f64; 6]> = (0..1000)
            .map(|i| {
                let v = if i % 2 == 0 { 1.0 } else { -1.0 };
                [0.0, v, 0.0, 0.0, v - 0.1, 0.0]
            })
            .collect();
        let traj = Trajectory {
            t0: 0.0,
            sample_dt: 1e-6,
            samples,
        };
        let m = sync_error(&traj, CouplingNode::InductorNode, 0.0, DEFAULT_SETTLE_THRESHOLD)
            .unwrap();
        assert_relative_eq!(m.rms_error, 0.1, max_relative = 1e-12);
        assert_relative_eq!(m.normalized_rms, 0.1, max_relative = 1e-12);
        assert_relative_eq!(m.max_error, 0.1, max_relative = 1e-12);
        assert!(m.settle_time.is_infinite());
    }

    #[test]
    fn sync_error_empty_window_is_rejected() {
        let traj = Trajectory {
            t0: 0.0,
            sample_dt: 1e-6,
            samples: vec![[0.0; 6]; 10],
        };
        let err = sync_error(&traj, CouplingNode::InductorNode, 1.0, 0.01).unwrap_err();
        assert!(matches!(err, Error::Alignment(_)), "got {err:?}");
    }

    #[test]
    fn sweep_identical_everything_is_exactly_zero() {
        let p = CircuitParams::stock();
        let s = ChuaState::new(0.1, 0.0, 0.0);
        let cfg = SimConfig {
            duration: 0.01,
            transient_cut: 2e-3,
            ..SimConfig::default()
        };
        let rows = coupling_sweep(
            &[50.0, 100.0, 1000.0],
            0.0,
            &PairState::new(s, s),
            &p,
            CouplingNode::InductorNode,
            &cfg,
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        for row in rows {
            assert_eq!(row.metrics.unwrap().rms_error, 0.0, "r_c = {}", row.r_c);
        }
    }

    #[test]
    fn sweep_endpoint_ordering_and_mismatch_penalty() {
        let p = CircuitParams::stock();
        let cfg = SimConfig {
            duration: 0.055,
            transient_cut: 5e-3,
            ..SimConfig::default()
        };
        let rows = coupling_sweep(
            &[100.0, f64::INFINITY],
            0.0,
            &offset_ic(),
            &p,
            CouplingNode::InductorNode,
            &cfg,
        )
        .unwrap();
        let coupled = rows[0].metrics.as_ref().unwrap().rms_error;
        let uncoupled = rows[1].metrics.as_ref().unwrap().rms_error;
        assert!(
            coupled < uncoupled / 10.0,
            "coupled rms {coupled:.3e} not an order of magnitude under uncoupled {uncoupled:.3e}"
        );

        let matched = coupling_sweep(
            &[100.0],
            0.0,
            &offset_ic(),
            &p,
            CouplingNode::InductorNode,
            &cfg,
        )
        .unwrap()[0]
            .metrics
            .as_ref()
            .unwrap()
            .normalized_rms;
        let mismatched = coupling_sweep(
            &[100.0],
            0.05,
            &offset_ic(),
            &p,
            CouplingNode::InductorNode,
            &cfg,
        )
        .unwrap()[0]
            .metrics
            .as_ref()
            .unwrap()
            .normalized_rms;
        assert!(
            mismatched >= 10.0 * matched,
            "5% mismatch ({mismatched:.3e}) not ≥ 10× matched case ({matched:.3e})"
        );
    }

    #[test]
    fn sweep_rejects_empty_input() {
        let p = CircuitParams::stock();
        let err = coupling_sweep(
            &[],
            0.0,
            &offset_ic(),
            &p,
            CouplingNode::InductorNode,
            &SimConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParam { .. }));
    }
}

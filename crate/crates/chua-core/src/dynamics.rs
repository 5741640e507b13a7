//! Physical Chua circuit model.
//!
//! The nonlinear element is the classic two-stage op-amp realization of the
//! Chua diode: two negative impedance converters (NICs) in parallel, each
//! built from one op-amp and a resistor triple. Within the op-amp's linear
//! range a stage presents a negative conductance at its port; once the
//! output rail saturates the port conductance turns positive. Summing the
//! two stages yields the familiar odd-symmetric piecewise-linear
//! characteristic with inner slope `g_a`, mid slope `g_b` and breakpoint
//! `b_p`.
//!
//! State variables: `v_a` across the diode-side capacitor, `v_b` across the
//! inductor-side capacitor, `i_l` through the inductor.

use crate::error::{Error, Result};

/// Resistor triple of one op-amp NIC stage.
///
/// `r_port` connects the op-amp output to the diode port, `r_f` is the
/// feedback resistor to the inverting input, `r_g` ties the inverting input
/// to ground.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NicResistors {
    pub r_port: f64,
    pub r_f: f64,
    pub r_g: f64,
}

impl NicResistors {
    pub fn new(r_port: f64, r_f: f64, r_g: f64) -> Self {
        Self { r_port, r_f, r_g }
    }

    /// Port conductance while the op-amp is in its linear range.
    pub fn linear_slope(&self) -> f64 {
        -(self.r_f / self.r_g) / self.r_port
    }

    /// Port conductance once the op-amp output has saturated.
    pub fn saturated_slope(&self) -> f64 {
        1.0 / self.r_port
    }

    /// Port voltage at which the op-amp output reaches `e_sat`.
    pub fn breakpoint(&self, e_sat: f64) -> f64 {
        e_sat / (1.0 + self.r_f / self.r_g)
    }

    fn validate(&self, which: &str) -> Result<()> {
        for (name, v) in [
            ("r_port", self.r_port),
            ("r_f", self.r_f),
            ("r_g", self.r_g),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam {
                    field: format!("{which}.{name}"),
                    reason: format!("must be strictly positive and finite, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Chua-diode piecewise-linear parameters.
///
/// Three-segment by default; setting `five_segment` enables the outer
/// positive-slope segments past `b_outer`, which is where the second op-amp
/// stage saturates. Invariants: `g_a < g_b < 0 < g_outer`,
/// `0 < b_p < b_outer`, `e_sat > 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DiodeParams {
    /// Inner slope, |v| < b_p (S).
    pub g_a: f64,
    /// Mid slope, b_p < |v| < b_outer (S).
    pub g_b: f64,
    /// Inner breakpoint (V).
    pub b_p: f64,
    /// Outer breakpoint (V).
    pub b_outer: f64,
    /// Outer slope, |v| > b_outer (S).
    pub g_outer: f64,
    /// Op-amp output saturation voltage (V).
    pub e_sat: f64,
    /// Apply the outer segments (guards against unbounded escape in
    /// mismatch sweeps; the default attractor stays inside ±b_outer).
    pub five_segment: bool,
}

/// One circuit's physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CircuitParams {
    /// Diode-node capacitance (F).
    pub c_a: f64,
    /// Inductor-node capacitance (F).
    pub c_b: f64,
    /// Inductance (H).
    pub l: f64,
    /// Variable series resistor between the two capacitor nodes (Ω).
    pub r: f64,
    /// Inductor series resistance (Ω).
    pub r_0: f64,
    pub diode: DiodeParams,
}

/// Circuit state: two capacitor voltages and the inductor current.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct ChuaState {
    pub v_a: f64,
    pub v_b: f64,
    pub i_l: f64,
}

impl ChuaState {
    pub fn new(v_a: f64, v_b: f64, i_l: f64) -> Self {
        Self { v_a, v_b, i_l }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.v_a, self.v_b, self.i_l]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self {
            v_a: a[0],
            v_b: a[1],
            i_l: a[2],
        }
    }
}

/// Time derivative of a [`ChuaState`] (V/s, V/s, A/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub dv_a: f64,
    pub dv_b: f64,
    pub di_l: f64,
}

impl StateDerivative {
    pub fn to_array(self) -> [f64; 3] {
        [self.dv_a, self.dv_b, self.di_l]
    }
}

/// Op-amp saturation level used by the stock parameter set: 9 V battery
/// rails minus TL08x output headroom.
pub const DEFAULT_E_SAT: f64 = 8.3;

/// First NIC stage of the stock diode (saturates last).
pub fn stock_nic_a() -> NicResistors {
    NicResistors::new(220.0, 220.0, 2_200.0)
}

/// Second NIC stage of the stock diode (saturates first, sets `b_p`).
pub fn stock_nic_b() -> NicResistors {
    NicResistors::new(22_000.0, 22_000.0, 3_300.0)
}

impl DiodeParams {
    /// The stock two-NIC diode: resistor set {220 Ω, 2.2 kΩ, 22 kΩ, 3.3 kΩ}
    /// at ±8.3 V saturation.
    pub fn stock() -> Self {
        derive_diode_params(&stock_nic_a(), &stock_nic_b(), DEFAULT_E_SAT)
            .expect("stock resistor set is a valid PWL realization")
    }
}

impl CircuitParams {
    /// Stock bill of materials: C = 10 nF / 100 nF, L = 18 mH, Rv = 1555 Ω,
    /// ideal inductor, stock diode.
    pub fn stock() -> Self {
        CircuitParams {
            c_a: 10e-9,
            c_b: 100e-9,
            l: 18e-3,
            r: 1_555.0,
            r_0: 0.0,
            diode: DiodeParams::stock(),
        }
    }
}

/// Sum the two NIC port characteristics into one PWL diode.
///
/// Each stage contributes `linear_slope()` up to its own breakpoint and
/// `saturated_slope()` beyond it. The stage with the smaller breakpoint
/// saturates first and fixes `b_p`; the other fixes `b_outer`.
pub fn derive_diode_params(
    nic_a: &NicResistors,
    nic_b: &NicResistors,
    e_sat: f64,
) -> Result<DiodeParams> {
    nic_a.validate("nic_a")?;
    nic_b.validate("nic_b")?;
    if !(e_sat.is_finite() && e_sat > 0.0) {
        return Err(Error::InvalidParam {
            field: "e_sat".into(),
            reason: format!("must be strictly positive and finite, got {e_sat}"),
        });
    }

    let break_a = nic_a.breakpoint(e_sat);
    let break_b = nic_b.breakpoint(e_sat);
    if (break_a - break_b).abs() <= 1e-9 * break_a.max(break_b) {
        return Err(Error::DegeneratePwl(format!(
            "both NIC stages saturate at {break_a:.6} V; inner and outer breakpoints coincide"
        )));
    }

    let (first, second) = if break_a < break_b {
        (nic_a, nic_b)
    } else {
        (nic_b, nic_a)
    };

    let g_a = nic_a.linear_slope() + nic_b.linear_slope();
    let g_b = g_a - first.linear_slope() + first.saturated_slope();
    let g_outer = g_b - second.linear_slope() + second.saturated_slope();

    let d = DiodeParams {
        g_a,
        g_b,
        b_p: first.breakpoint(e_sat),
        b_outer: second.breakpoint(e_sat),
        g_outer,
        e_sat,
        five_segment: false,
    };
    validate_diode(&d).map_err(|violations| Error::InvalidParam {
        field: "diode".into(),
        reason: violations.join("; "),
    })?;
    Ok(d)
}

fn validate_diode(d: &DiodeParams) -> std::result::Result<(), Vec<String>> {
    let mut v = Vec::new();
    for (name, x) in [
        ("g_a", d.g_a),
        ("g_b", d.g_b),
        ("b_p", d.b_p),
        ("b_outer", d.b_outer),
        ("g_outer", d.g_outer),
        ("e_sat", d.e_sat),
    ] {
        if !x.is_finite() {
            v.push(format!("diode.{name} is not finite"));
        }
    }
    if d.g_a >= d.g_b {
        v.push("diode slope ordering violated: require g_a < g_b".into());
    }
    if d.g_b >= 0.0 {
        v.push("diode mid slope g_b must be negative".into());
    }
    if d.g_outer <= 0.0 {
        v.push("diode outer slope g_outer must be positive".into());
    }
    if d.b_p <= 0.0 {
        v.push("diode breakpoint b_p must be positive".into());
    }
    if d.b_p >= d.b_outer {
        v.push("diode breakpoints out of order: require b_p < b_outer".into());
    }
    if d.e_sat <= 0.0 {
        v.push("diode e_sat must be positive".into());
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// Raw PWL evaluation; propagates non-finite inputs instead of checking them.
#[inline]
pub(crate) fn pwl_current(v: f64, d: &DiodeParams) -> f64 {
    let inner = 0.5 * (d.g_a - d.g_b) * ((v + d.b_p).abs() - (v - d.b_p).abs());
    if d.five_segment {
        d.g_outer * v
            + inner
            + 0.5 * (d.g_b - d.g_outer) * ((v + d.b_outer).abs() - (v - d.b_outer).abs())
    } else {
        d.g_b * v + inner
    }
}

/// Diode current at port voltage `v`. Odd and continuous in `v`.
pub fn diode_current(v: f64, d: &DiodeParams) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite("diode port voltage"));
    }
    Ok(pwl_current(v, d))
}

/// State derivatives of one circuit:
///
/// ```text
/// c_a dv_a/dt = (v_b - v_a)/r - g(v_a)
/// c_b dv_b/dt = (v_a - v_b)/r + i_l
/// l   di_l/dt = -v_b - r_0 i_l
/// ```
#[inline]
pub fn chua_derivatives(s: &ChuaState, p: &CircuitParams) -> StateDerivative {
    let g = pwl_current(s.v_a, &p.diode);
    StateDerivative {
        dv_a: ((s.v_b - s.v_a) / p.r - g) / p.c_a,
        dv_b: ((s.v_a - s.v_b) / p.r + s.i_l) / p.c_b,
        di_l: (-s.v_b - p.r_0 * s.i_l) / p.l,
    }
}

/// The three equilibria `[P-, origin, P+]`.
///
/// Setting the derivatives to zero reduces to the load-line equation
/// `-v/(r + r_0) = g(v)`; the outer pair sits in the mid segment, so
/// `v* = (g_b - g_a) b_p / (g_b + 1/(r + r_0))`. Requires `v* > b_p`,
/// otherwise the circuit is not in the double-scroll configuration.
pub fn equilibria(p: &CircuitParams) -> Result<[ChuaState; 3]> {
    let r_eff = p.r + p.r_0;
    let denom = p.diode.g_b + 1.0 / r_eff;
    if denom == 0.0 {
        return Err(Error::Regime(
            "load line is parallel to the mid diode segment (g_b + 1/(r + r_0) = 0)".into(),
        ));
    }
    let v_star = (p.diode.g_b - p.diode.g_a) * p.diode.b_p / denom;
    if !v_star.is_finite() || v_star <= p.diode.b_p {
        return Err(Error::Regime(format!(
            "no outer equilibria: v* = {v_star:.6} V does not exceed b_p = {:.6} V",
            p.diode.b_p
        )));
    }
    if p.diode.five_segment && v_star >= p.diode.b_outer {
        return Err(Error::Regime(format!(
            "outer equilibrium v* = {v_star:.6} V lies beyond b_outer = {:.6} V",
            p.diode.b_outer
        )));
    }
    let eq = |sign: f64| ChuaState {
        v_a: sign * v_star,
        v_b: sign * v_star * p.r_0 / r_eff,
        i_l: -sign * v_star / r_eff,
    };
    Ok([eq(-1.0), ChuaState::default(), eq(1.0)])
}

/// Parameter check that collects every violation instead of stopping at the
/// first. `field` values are bare names (`c_a`, `diode.g_a`, ...).
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub field: String,
    pub reason: String,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self, key_prefix: &str) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidParam {
                field: format!("{key_prefix}{}", v.field),
                reason: v.reason.clone(),
            }),
        }
    }
}

pub fn validate_params(p: &CircuitParams) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut push = |field: &str, reason: String| {
        report.violations.push(Violation {
            field: field.to_string(),
            reason,
        });
    };
    for (name, v) in [("c_a", p.c_a), ("c_b", p.c_b), ("l", p.l), ("r", p.r)] {
        if !(v.is_finite() && v > 0.0) {
            push(name, format!("must be strictly positive and finite, got {v}"));
        }
    }
    if !(p.r_0.is_finite() && p.r_0 >= 0.0) {
        push("r_0", format!("must be non-negative and finite, got {}", p.r_0));
    }
    if let Err(violations) = validate_diode(&p.diode) {
        for reason in violations {
            let field = reason
                .split_whitespace()
                .next()
                .unwrap_or("diode")
                .to_string();
            report.violations.push(Violation { field, reason });
        }
    }
    report
}

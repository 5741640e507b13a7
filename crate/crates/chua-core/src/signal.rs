//! Message generation, RC low-pass recovery filtering, threshold decoding,
//! and bit-error accounting.
//!
//! The message source mirrors a bench wave generator: a square wave set by
//! frequency, peak-to-peak amplitude, DC offset, phase, and duty cycle. An
//! arbitrary-payload mode drives the high/low level per period from a user
//! bit sequence instead of the fixed duty pattern.
//!
//! The recovery filter is the exact-exponential discretisation of a
//! first-order RC stage: unconditionally stable, DC gain exactly 1, and
//! exact for piecewise-constant inputs — which the XOR output is. The
//! decoder samples each period at the midpoint of the duty window,
//! maximally far from the edges where brief sync glitches concentrate.

use serde::Serialize;

use crate::crypto::BitStream;
use crate::error::{Error, Result};

/// Wave-generator settings for the message source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MessageParams {
    /// Repetition rate (Hz).
    pub frequency: f64,
    /// Peak-to-peak amplitude (V).
    pub amplitude_pp: f64,
    /// DC offset (V); also the decode threshold.
    pub offset: f64,
    /// Phase shift (degrees).
    pub phase: f64,
    /// Fraction of each period spent at the high level.
    pub duty: f64,
}

impl Default for MessageParams {
    fn default() -> Self {
        MessageParams {
            frequency: 6000.0,
            amplitude_pp: 2.5,
            offset: 1.25,
            phase: 0.0,
            duty: 0.5,
        }
    }
}

impl MessageParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| {
            Err(Error::InvalidParam {
                field: field.into(),
                reason,
            })
        };
        if !self.frequency.is_finite() || self.frequency <= 0.0 {
            return bad(
                "frequency",
                format!("must be positive and finite, got {}", self.frequency),
            );
        }
        if !self.amplitude_pp.is_finite() || self.amplitude_pp < 0.0 {
            return bad(
                "amplitude_pp",
                format!("must be non-negative and finite, got {}", self.amplitude_pp),
            );
        }
        if !self.offset.is_finite() {
            return bad("offset", "must be finite".into());
        }
        if !self.phase.is_finite() {
            return bad("phase", "must be finite".into());
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return bad(
                "duty",
                format!("must lie strictly between 0 and 1, got {}", self.duty),
            );
        }
        Ok(())
    }

    /// Period length (s).
    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    /// `(low, high)` output levels: offset ∓ half the peak-to-peak swing.
    pub fn levels(&self) -> (f64, f64) {
        let half = self.amplitude_pp / 2.0;
        (self.offset - half, self.offset + half)
    }

    /// Position within the period, in [0, 1): 0 is the start of the duty
    /// (high) window.
    fn cycle_position(&self, t: f64) -> f64 {
        (t * self.frequency + self.phase / 360.0).rem_euclid(1.0)
    }
}

/// Square-wave generator output at time `t`: high for the first `duty`
/// fraction of each period after the phase shift, low for the rest.
pub fn square_wave(mp: &MessageParams, t: f64) -> f64 {
    let (low, high) = mp.levels();
    if mp.cycle_position(t) < mp.duty {
        high
    } else {
        low
    }
}

/// Payload-driven generator: bit `k` of `payload` sets the output level
/// for the whole of period `k` (high for 1, low for 0). Times before
/// period 0 or past the end of the payload give the low level.
pub fn payload_wave(mp: &MessageParams, payload: &[u8], t: f64) -> f64 {
    let (low, high) = mp.levels();
    let k = (t * mp.frequency + mp.phase / 360.0).floor();
    if k < 0.0 || k >= payload.len() as f64 {
        return low;
    }
    if payload[k as usize] == 1 {
        high
    } else {
        low
    }
}

/// Uniformly sampled analog voltage record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalogTrace {
    /// Time of the first sample (s).
    pub t0: f64,
    /// Spacing between consecutive samples (s).
    pub sample_dt: f64,
    pub samples: Vec<f64>,
}

impl AnalogTrace {
    /// Sample a function of time on a uniform grid.
    pub fn from_fn(t0: f64, sample_dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        AnalogTrace {
            t0,
            sample_dt,
            samples: (0..n).map(|i| f(t0 + i as f64 * sample_dt)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of sample `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.sample_dt
    }

    /// Total time spanned, first sample to last.
    pub fn span(&self) -> f64 {
        match self.len() {
            0 => 0.0,
            n => (n - 1) as f64 * self.sample_dt,
        }
    }
}

/// Map a bitstream to a two-level analog trace on the same grid.
pub fn bits_to_trace(bits: &BitStream, low: f64, high: f64) -> AnalogTrace {
    AnalogTrace {
        t0: bits.t0,
        sample_dt: bits.bit_dt,
        samples: bits
            .bits
            .iter()
            .map(|&b| if b == 1 { high } else { low })
            .collect(),
    }
}

/// First-order RC recovery filter values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterConfig {
    /// Series resistance (Ω).
    pub r_fil: f64,
    /// Shunt capacitance (F).
    pub c_fil: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            r_fil: 1.0e3,
            c_fil: 7.0e-9,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("r_fil", self.r_fil), ("c_fil", self.c_fil)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParam {
                    field: field.into(),
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Time constant RC (s).
    pub fn tau(&self) -> f64 {
        self.r_fil * self.c_fil
    }

    /// Cutoff frequency 1/(2πRC) (Hz).
    pub fn cutoff(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.tau())
    }

    /// True when a sampling interval resolves the filter dynamics
    /// (at least 5 samples per time constant).
    pub fn is_well_sampled(&self, sample_dt: f64) -> bool {
        sample_dt <= self.tau() / 5.0
    }
}

/// Run the exact-exponential discrete RC filter over a trace, starting
/// from the caller-owned state `y0`. Output sample `i` is the filter
/// state *before* absorbing input sample `i`, so `out[0] == y0` and the
/// step response matches the analytic exponential on the grid exactly.
pub fn rc_lowpass(trace: &AnalogTrace, f: &FilterConfig, y0: f64) -> AnalogTrace {
    let alpha = 1.0 - (-trace.sample_dt / f.tau()).exp();
    let mut y = y0;
    let samples = trace
        .samples
        .iter()
        .map(|&x| {
            let out = y;
            y += (x - y) * alpha;
            out
        })
        .collect();
    AnalogTrace {
        t0: trace.t0,
        sample_dt: trace.sample_dt,
        samples,
    }
}

/// Decode one bit per message period from an analog trace: sample the
/// midpoint of each period's duty window (period epoch = `trace.t0`) and
/// compare against the generator offset — strictly above reads 1, ties
/// and below read 0. Only periods that lie entirely inside the trace are
/// decoded.
pub fn threshold_decode(trace: &AnalogTrace, mp: &MessageParams) -> Result<BitStream> {
    mp.validate()?;
    let period = mp.period();
    if trace.span() < period * (1.0 - 1e-9) {
        return Err(Error::Alignment(format!(
            "trace spans {:.3e} s, shorter than one {:.3e} s message period",
            trace.span(),
            period
        )));
    }
    let n_bits = (trace.span() / period + 1e-9).floor() as usize;
    let mut bits = Vec::with_capacity(n_bits);
    for k in 0..n_bits {
        let t_mid = (k as f64 + mp.duty / 2.0) * period;
        let idx = (t_mid / trace.sample_dt).round() as usize;
        let v = trace.samples[idx.min(trace.len() - 1)];
        bits.push(u8::from(v > mp.offset));
    }
    BitStream::new(trace.t0, period, bits)
}

/// Fraction of positions where two equal-length aligned streams differ.
pub fn bit_error_rate(sent: &BitStream, received: &BitStream) -> Result<f64> {
    if sent.len() != received.len() {
        return Err(Error::Alignment(format!(
            "stream lengths differ: {} vs {} bits",
            sent.len(),
            received.len()
        )));
    }
    if sent.is_empty() {
        return Err(Error::Alignment("cannot compare empty streams".into()));
    }
    let errors = sent
        .bits
        .iter()
        .zip(&received.bits)
        .filter(|(a, b)| a != b)
        .count();
    Ok(errors as f64 / sent.len() as f64)
}

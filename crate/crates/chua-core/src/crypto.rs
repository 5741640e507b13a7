//! Comparator digitisation of chaotic voltages into keystreams, XOR stream
//! encryption/decryption, and keystream quality statistics.
//!
//! The digitiser is a single comparator against a fixed threshold, sampled
//! on the integration grid. Two rate knobs exist and compose:
//!
//! * `sample_rate` — how often the comparator output is latched. It must
//!   land on the trajectory grid exactly (an integer number of trajectory
//!   samples per comparator sample); anything else is an alignment error,
//!   never a silent resample.
//! * `decimation` — keep every n-th latched comparator output.
//!
//! The emitted bit spacing is therefore `decimation / sample_rate`.
//! Decimation is the only whitening knob: consecutive per-step comparator
//! outputs are strongly correlated (the voltage moves a tiny fraction of
//! its swing per integration step), and spacing bits further apart is what
//! buys the lag-1 correlation down. No debiasing is applied — the stats
//! report the raw quality.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::Trajectory;

/// Which state component the comparator taps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum BitSource {
    /// Diode-node capacitor voltage (largest swing, scroll-sign structure).
    #[default]
    Va,
    /// Inductor-node capacitor voltage.
    Vb,
}

impl BitSource {
    /// Index of the tapped component within one circuit's state vector.
    pub fn state_index(self) -> usize {
        match self {
            BitSource::Va => 0,
            BitSource::Vb => 1,
        }
    }
}

/// Comparator and sampling configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DigitizerConfig {
    /// Comparator threshold (V). Strict `>` makes a 1; ties give 0.
    pub threshold: f64,
    /// Tapped state component.
    pub source: BitSource,
    /// Comparator latch rate (Hz). `None` latches every trajectory sample.
    pub sample_rate: Option<f64>,
    /// Keep every n-th latched output.
    pub decimation: usize,
}

impl Default for DigitizerConfig {
    fn default() -> Self {
        DigitizerConfig {
            threshold: 0.0,
            source: BitSource::Va,
            sample_rate: None,
            decimation: 1,
        }
    }
}

impl DigitizerConfig {
    /// Check internal consistency against an integration step `dt`:
    /// the comparator cannot latch more often than the grid provides
    /// samples, i.e. `sample_rate · decimation ≤ 1/dt`.
    pub fn validate(&self, dt: f64) -> Result<()> {
        if !self.threshold.is_finite() {
            return Err(Error::InvalidParam {
                field: "digitizer.threshold".into(),
                reason: "must be finite".into(),
            });
        }
        if self.decimation == 0 {
            return Err(Error::InvalidParam {
                field: "digitizer.decimation".into(),
                reason: "must be at least 1".into(),
            });
        }
        if let Some(rate) = self.sample_rate {
            if !rate.is_finite() || rate <= 0.0 {
                return Err(Error::InvalidParam {
                    field: "digitizer.sample_rate".into(),
                    reason: format!("must be positive and finite, got {rate}"),
                });
            }
            let budget = 1.0 / dt;
            if rate * self.decimation as f64 > budget * (1.0 + 1e-9) {
                return Err(Error::InvalidParam {
                    field: "digitizer.sample_rate".into(),
                    reason: format!(
                        "sample_rate ({rate} Hz) x decimation ({}) exceeds the \
                         grid rate 1/dt = {budget} Hz",
                        self.decimation
                    ),
                });
            }
        }
        Ok(())
    }

    /// Trajectory samples between kept bits, or an alignment error if the
    /// comparator rate does not land on the grid.
    fn grid_step(&self, sample_dt: f64) -> Result<usize> {
        let stride = match self.sample_rate {
            None => 1.0,
            Some(rate) => {
                let ratio = 1.0 / (rate * sample_dt);
                let rounded = ratio.round();
                if rounded < 1.0 {
                    return Err(Error::Alignment(format!(
                        "comparator sample rate {rate} Hz exceeds the trajectory \
                         rate {} Hz",
                        1.0 / sample_dt
                    )));
                }
                if (ratio - rounded).abs() > 1e-6 * rounded {
                    return Err(Error::Alignment(format!(
                        "comparator period 1/{rate} s is not an integer multiple \
                         of the trajectory spacing {sample_dt} s"
                    )));
                }
                rounded
            }
        };
        Ok(stride as usize * self.decimation)
    }
}

/// Uniformly spaced binary sequence (keystream, message bits, ciphertext).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitStream {
    /// Time of the first bit (s).
    pub t0: f64,
    /// Spacing between consecutive bits (s).
    pub bit_dt: f64,
    /// Bit values, each 0 or 1.
    pub bits: Vec<u8>,
}

impl BitStream {
    pub fn new(t0: f64, bit_dt: f64, bits: Vec<u8>) -> Result<Self> {
        if !bit_dt.is_finite() || bit_dt <= 0.0 {
            return Err(Error::InvalidParam {
                field: "bit_dt".into(),
                reason: format!("must be positive and finite, got {bit_dt}"),
            });
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParam {
                field: "bits".into(),
                reason: format!("values must be 0 or 1, got {b}"),
            });
        }
        Ok(BitStream { t0, bit_dt, bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Time of bit `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.bit_dt
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// Digitise one circuit's trajectory (state layout `[v_a, v_b, i_l]`).
pub fn digitize<const N: usize>(
    traj: &Trajectory<N>,
    cfg: &DigitizerConfig,
) -> Result<BitStream> {
    digitize_channel(traj, cfg, 0)
}

/// Digitise one end of a joint trajectory: the tapped component lives at
/// `state_offset + source.state_index()`. A transmitter/receiver pair run
/// uses offsets 0 and 3.
pub fn digitize_channel<const N: usize>(
    traj: &Trajectory<N>,
    cfg: &DigitizerConfig,
    state_offset: usize,
) -> Result<BitStream> {
    cfg.validate(traj.sample_dt)?;
    let idx = state_offset + cfg.source.state_index();
    if idx >= N {
        return Err(Error::InvalidParam {
            field: "digitizer.source".into(),
            reason: format!(
                "component index {idx} out of range for a {N}-component trajectory"
            ),
        });
    }
    let step = cfg.grid_step(traj.sample_dt)?;
    let mut bits = Vec::with_capacity(traj.len() / step + 1);
    for s in traj.samples.iter().step_by(step) {
        let v = s[idx];
        if !v.is_finite() {
            return Err(Error::NonFinite("digitizer input"));
        }
        bits.push(u8::from(v > cfg.threshold));
    }
    Ok(BitStream {
        t0: traj.t0,
        bit_dt: step as f64 * traj.sample_dt,
        bits,
    })
}

/// Element-wise XOR of two aligned equal-length streams. Output timing
/// equals input timing. Any mismatch in spacing, epoch, or length is an
/// error — streams are never silently resampled or truncated.
pub fn xor_stream(data: &BitStream, key: &BitStream) -> Result<BitStream> {
    if (data.bit_dt - key.bit_dt).abs() > 1e-12 * data.bit_dt.max(key.bit_dt) {
        return Err(Error::Alignment(format!(
            "bit spacing differs: {} s vs {} s",
            data.bit_dt, key.bit_dt
        )));
    }
    if (data.t0 - key.t0).abs() > 1e-9 * data.bit_dt {
        return Err(Error::Alignment(format!(
            "stream epochs differ: t0 = {} s vs {} s",
            data.t0, key.t0
        )));
    }
    if data.len() != key.len() {
        return Err(Error::Alignment(format!(
            "stream lengths differ: {} vs {} bits",
            data.len(),
            key.len()
        )));
    }
    let bits = data
        .bits
        .iter()
        .zip(&key.bits)
        .map(|(&d, &k)| (d ^ k) & 1)
        .collect();
    Ok(BitStream {
        t0: data.t0,
        bit_dt: data.bit_dt,
        bits,
    })
}

/// Summary statistics of a bitstream's randomness quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeystreamStats {
    /// Fraction of ones.
    pub balance: f64,
    /// Wald–Wolfowitz runs-test z-score; `None` when degenerate.
    pub runs_z: Option<f64>,
    /// Pearson correlation between the stream and its one-bit shift;
    /// `None` when degenerate.
    pub serial_corr: Option<f64>,
    /// Number of bits examined.
    pub length: usize,
    /// True when every bit is equal, which leaves the runs test and the
    /// serial correlation undefined.
    pub degenerate: bool,
}

/// Compute balance, runs-test z-score, and lag-1 serial correlation.
/// Requires at least 100 bits for the normal approximation to hold.
pub fn keystream_stats(bits: &BitStream) -> Result<KeystreamStats> {
    let n = bits.len();
    if n < 100 {
        return Err(Error::InvalidParam {
            field: "bits".into(),
            reason: format!("need at least 100 bits for stable statistics, got {n}"),
        });
    }
    let n1 = bits.ones();
    let n0 = n - n1;
    let balance = n1 as f64 / n as f64;

    if n1 == 0 || n0 == 0 {
        return Ok(KeystreamStats {
            balance,
            runs_z: None,
            serial_corr: None,
            length: n,
            degenerate: true,
        });
    }

    // Wald–Wolfowitz: with n1 ones and n0 zeros the run count has mean
    // 2·n1·n0/n + 1 and variance 2·n1·n0·(2·n1·n0 − n) / (n²·(n−1)).
    let runs = 1 + bits
        .bits
        .windows(2)
        .filter(|w| w[0] != w[1])
        .count();
    let (n1f, n0f, nf) = (n1 as f64, n0 as f64, n as f64);
    let mean = 2.0 * n1f * n0f / nf + 1.0;
    let var = 2.0 * n1f * n0f * (2.0 * n1f * n0f - nf) / (nf * nf * (nf - 1.0));
    let runs_z = if var > 0.0 {
        Some((runs as f64 - mean) / var.sqrt())
    } else {
        None
    };

    // Pearson correlation between x[..n-1] and x[1..], each centred on its
    // own mean; the usual lag-1 serial coefficient for a 0/1 sequence.
    let a = &bits.bits[..n - 1];
    let b = &bits.bits[1..];
    let m = (n - 1) as f64;
    let mean_a = a.iter().map(|&x| x as f64).sum::<f64>() / m;
    let mean_b = b.iter().map(|&x| x as f64).sum::<f64>() / m;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let da = x as f64 - mean_a;
        let db = y as f64 - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    let serial_corr = if var_a > 0.0 && var_b > 0.0 {
        Some(cov / (var_a.sqrt() * var_b.sqrt()))
    } else {
        None
    };

    Ok(KeystreamStats {
        balance,
        runs_z,
        serial_corr,
        length: n,
        degenerate: false,
    })
}

//! CSV and JSON artifact writers.
//!
//! Every writer produces byte-identical output for identical inputs:
//! floats are printed with 9 significant digits (`{:.8e}`), rows follow
//! input order, and line endings are `\n`. Schemas:
//!
//! * single-circuit trajectory — `t,va,vb,il`
//! * pair trajectory — `t,va_tx,vb_tx,il_tx,va_rx,vb_rx,il_rx`
//! * analog trace — `t,v`
//! * bitstream — `t,bit`
//! * coupling sweep — `r_c,mismatch,rms_error,max_error,normalized_rms,settle_time,error`
//! * mismatch table — `mismatch,rms_error,max_error,normalized_rms,settle_time,raw_ber,message_ber,error`
//!
//! JSON reports are pretty-printed `serde_json`; non-finite numbers (an
//! unsettled sync time, a degenerate statistic) come out as `null`.

use std::io::Write;
use std::path::Path;

use crate::crypto::BitStream;
use crate::error::{Error, Result};
use crate::pipeline::MismatchRow;
use crate::signal::AnalogTrace;
use crate::solver::Trajectory;
use crate::sync::SweepRow;

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(bytes).map_err(io_err)?;
    Ok(())
}

/// One float, 9 significant digits.
fn cell(v: f64) -> String {
    format!("{v:.8e}")
}

/// Single-circuit trajectory as `t,va,vb,il`.
pub fn export_trajectory_csv(traj: &Trajectory<3>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(48 * (traj.len() + 1));
    out.push_str("t,va,vb,il\n");
    for (t, s) in traj.iter_timed() {
        out.push_str(&cell(t));
        for v in s {
            out.push(',');
            out.push_str(&cell(*v));
        }
        out.push('\n');
    }
    write_file(path.as_ref(), out.as_bytes())
}

/// Joint pair trajectory as `t,va_tx,vb_tx,il_tx,va_rx,vb_rx,il_rx`.
pub fn export_pair_csv(traj: &Trajectory<6>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(96 * (traj.len() + 1));
    out.push_str("t,va_tx,vb_tx,il_tx,va_rx,vb_rx,il_rx\n");
    for (t, s) in traj.iter_timed() {
        out.push_str(&cell(t));
        for v in s {
            out.push(',');
            out.push_str(&cell(*v));
        }
        out.push('\n');
    }
    write_file(path.as_ref(), out.as_bytes())
}

/// Analog trace as `t,v`.
pub fn export_trace_csv(trace: &AnalogTrace, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(32 * (trace.len() + 1));
    out.push_str("t,v\n");
    for (i, &v) in trace.samples.iter().enumerate() {
        out.push_str(&cell(trace.time(i)));
        out.push(',');
        out.push_str(&cell(v));
        out.push('\n');
    }
    write_file(path.as_ref(), out.as_bytes())
}

/// Bitstream as `t,bit`.
pub fn export_bits_csv(bits: &BitStream, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(24 * (bits.len() + 1));
    out.push_str("t,bit\n");
    for (i, &b) in bits.bits.iter().enumerate() {
        out.push_str(&cell(bits.time(i)));
        out.push(',');
        out.push_str(&b.to_string());
        out.push('\n');
    }
    write_file(path.as_ref(), out.as_bytes())
}

/// Escape a free-text cell for CSV.
fn quote(text: &str) -> String {
    format!("\"{}\"", text.replace('"', "\"\""))
}

/// Coupling-resistance sweep table. Failed rows keep their inputs and
/// carry the error text in the last column.
pub fn export_coupling_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    out.push_str("r_c,mismatch,rms_error,max_error,normalized_rms,settle_time,error\n");
    for row in rows {
        out.push_str(&cell(row.r_c));
        out.push(',');
        out.push_str(&cell(row.mismatch));
        match &row.metrics {
            Ok(m) => {
                for v in [m.rms_error, m.max_error, m.normalized_rms, m.settle_time] {
                    out.push(',');
                    out.push_str(&cell(v));
                }
                out.push_str(",\n");
            }
            Err(e) => {
                out.push_str(",,,,,");
                out.push_str(&quote(&e.to_string()));
                out.push('\n');
            }
        }
    }
    write_file(path.as_ref(), out.as_bytes())
}

/// Component-tolerance experiment table, one row per mismatch factor.
pub fn export_mismatch_csv(rows: &[MismatchRow], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    out.push_str(
        "mismatch,rms_error,max_error,normalized_rms,settle_time,raw_ber,message_ber,error\n",
    );
    for row in rows {
        out.push_str(&cell(row.mismatch));
        match &row.outcome {
            Ok(o) => {
                for v in [
                    o.sync.rms_error,
                    o.sync.max_error,
                    o.sync.normalized_rms,
                    o.sync.settle_time,
                    o.raw_ber,
                    o.message_ber,
                ] {
                    out.push(',');
                    out.push_str(&cell(v));
                }
                out.push_str(",\n");
            }
            Err(e) => {
                out.push_str(",,,,,,,");
                out.push_str(&quote(&e.to_string()));
                out.push('\n');
            }
        }
    }
    write_file(path.as_ref(), out.as_bytes())
}

/// Pretty-printed JSON report with a trailing newline.
pub fn write_json(value: &impl serde::Serialize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("json serialization: {e}")))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

//! Flat dotted-key experiment configuration: parsing, resolution to a
//! [`SystemConfig`], and canonical formatting.
//!
//! The format is line-oriented `section.key = value` text. `#` starts a
//! comment, blank lines are ignored, every key is optional (unset keys
//! take the stock defaults), unknown and duplicate keys are hard errors —
//! a typo never silently becomes a default.
//!
//! Keys hold the *primitive* quantities: diode behaviour is configured
//! through the NIC resistor triples and the op-amp saturation voltage,
//! and the receiver through a relative mismatch on its variable resistor.
//! Resolution re-derives everything downstream, so formatting a parsed
//! document and parsing it again yields an identical configuration.
//!
//! | key | value | default |
//! |-----|-------|---------|
//! | `circuit.c_a`, `circuit.c_b` | capacitance (F) | `1e-8`, `1e-7` |
//! | `circuit.l` | inductance (H) | `0.018` |
//! | `circuit.r` | coupling resistor (Ω) | `1555.0` |
//! | `circuit.r_0` | inductor series resistance (Ω) | `0.0` |
//! | `circuit.e_sat` | op-amp saturation (V) | `8.3` |
//! | `circuit.five_segment` | `true`/`false` | `false` |
//! | `circuit.nic_a.r_port/r_f/r_g` | resistance (Ω) | `220/220/2200` |
//! | `circuit.nic_b.r_port/r_f/r_g` | resistance (Ω) | `22000/22000/3300` |
//! | `rx.r_mismatch` | relative factor on the receiver's r | `0.0` |
//! | `coupling.r_c` | resistance (Ω), `inf` = uncoupled | `100.0` |
//! | `coupling.node` | `diode` or `inductor` | `inductor` |
//! | `digitizer.threshold` | voltage (V) | `0.0` |
//! | `digitizer.source` | `v_a` or `v_b` | `v_a` |
//! | `digitizer.sample_rate` | Hz, or `grid` for per-step | `grid` |
//! | `digitizer.decimation` | positive integer | `1` |
//! | `message.frequency` | Hz | `6000.0` |
//! | `message.amplitude_pp` | V | `2.5` |
//! | `message.offset` | V | `1.25` |
//! | `message.phase` | degrees | `0.0` |
//! | `message.duty` | fraction in (0,1) | `0.5` |
//! | `filter.r_fil` | Ω | `1000.0` |
//! | `filter.c_fil` | F | `7e-9` |
//! | `sim.dt` | step (s) | `5e-7` |
//! | `sim.duration` | total simulated time (s) | `0.188` |
//! | `sim.transient_cut` | discarded lead-in (s) | `0.02` |
//! | `sim.record_stride` | keep every n-th step | `1` |
//! | `channel.noise_sigma` | V | `0.0` |
//! | `rng.seed` | unsigned integer | `1` |
//! | `ic.tx.v_a/v_b/i_l` | start state | `0.1/0.0/0.0` |
//! | `ic.rx.v_a/v_b/i_l` | start state | `0.6/0.0/0.0` |

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::crypto::{BitSource, DigitizerConfig};
use crate::dynamics::{
    derive_diode_params, stock_nic_a, stock_nic_b, ChuaState, CircuitParams, NicResistors,
    DEFAULT_E_SAT,
};
use crate::error::{Error, Result};
use crate::pipeline::SystemConfig;
use crate::signal::{FilterConfig, MessageParams};
use crate::solver::SimConfig;
use crate::sync::{CouplingConfig, CouplingNode};

/// Parsed configuration document: the primitive quantities before
/// derivation. Field layout mirrors the key table in the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDoc {
    pub nic_a: NicResistors,
    pub nic_b: NicResistors,
    pub e_sat: f64,
    pub five_segment: bool,
    pub c_a: f64,
    pub c_b: f64,
    pub l: f64,
    pub r: f64,
    pub r_0: f64,
    pub rx_r_mismatch: f64,
    pub coupling: CouplingConfig,
    pub digitizer: DigitizerConfig,
    pub message: MessageParams,
    pub filter: FilterConfig,
    pub sim: SimConfig,
    pub channel_noise_sigma: f64,
    pub rng_seed: u64,
    pub ic_tx: ChuaState,
    pub ic_rx: ChuaState,
}

impl Default for ConfigDoc {
    fn default() -> Self {
        let sys = SystemConfig::default();
        ConfigDoc {
            nic_a: stock_nic_a(),
            nic_b: stock_nic_b(),
            e_sat: DEFAULT_E_SAT,
            five_segment: false,
            c_a: sys.tx_params.c_a,
            c_b: sys.tx_params.c_b,
            l: sys.tx_params.l,
            r: sys.tx_params.r,
            r_0: sys.tx_params.r_0,
            rx_r_mismatch: 0.0,
            coupling: sys.coupling,
            digitizer: sys.digitizer,
            message: sys.message,
            filter: sys.filter,
            sim: sys.sim,
            channel_noise_sigma: sys.channel_noise_sigma,
            rng_seed: sys.rng_seed,
            ic_tx: sys.ic_tx,
            ic_rx: sys.ic_rx,
        }
    }
}

impl ConfigDoc {
    /// Derive the full validated system configuration.
    pub fn resolve(&self) -> Result<SystemConfig> {
        let diode = derive_diode_params(&self.nic_a, &self.nic_b, self.e_sat)
            .map_err(|e| prefix_invalid(e, "circuit."))?;
        let diode = crate::dynamics::DiodeParams {
            five_segment: self.five_segment,
            ..diode
        };
        let tx_params = CircuitParams {
            c_a: self.c_a,
            c_b: self.c_b,
            l: self.l,
            r: self.r,
            r_0: self.r_0,
            diode,
        };
        if !self.rx_r_mismatch.is_finite() || self.rx_r_mismatch <= -1.0 {
            return Err(Error::InvalidParam {
                field: "rx.r_mismatch".into(),
                reason: format!(
                    "must be a finite factor above -1, got {}",
                    self.rx_r_mismatch
                ),
            });
        }
        let mut rx_params = tx_params;
        rx_params.r *= 1.0 + self.rx_r_mismatch;

        let sys = SystemConfig {
            tx_params,
            rx_params,
            coupling: self.coupling,
            digitizer: self.digitizer,
            message: self.message,
            filter: self.filter,
            sim: self.sim,
            channel_noise_sigma: self.channel_noise_sigma,
            rng_seed: self.rng_seed,
            ic_tx: self.ic_tx,
            ic_rx: self.ic_rx,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Canonical text form: every key, fixed order, values that parse back
    /// to an identical document.
    pub fn format(&self) -> String {
        let mut s = String::with_capacity(1024);
        let _ = writeln!(s, "# resolved experiment configuration");
        let _ = writeln!(s);
        let _ = writeln!(s, "circuit.c_a = {:?}", self.c_a);
        let _ = writeln!(s, "circuit.c_b = {:?}", self.c_b);
        let _ = writeln!(s, "circuit.l = {:?}", self.l);
        let _ = writeln!(s, "circuit.r = {:?}", self.r);
        let _ = writeln!(s, "circuit.r_0 = {:?}", self.r_0);
        let _ = writeln!(s, "circuit.e_sat = {:?}", self.e_sat);
        let _ = writeln!(s, "circuit.five_segment = {}", self.five_segment);
        for (name, nic) in [("nic_a", &self.nic_a), ("nic_b", &self.nic_b)] {
            let _ = writeln!(s, "circuit.{name}.r_port = {:?}", nic.r_port);
            let _ = writeln!(s, "circuit.{name}.r_f = {:?}", nic.r_f);
            let _ = writeln!(s, "circuit.{name}.r_g = {:?}", nic.r_g);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "rx.r_mismatch = {:?}", self.rx_r_mismatch);
        let _ = writeln!(s, "coupling.r_c = {:?}", self.coupling.r_c);
        let _ = writeln!(
            s,
            "coupling.node = {}",
            match self.coupling.node {
                CouplingNode::DiodeNode => "diode",
                CouplingNode::InductorNode => "inductor",
            }
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "digitizer.threshold = {:?}", self.digitizer.threshold);
        let _ = writeln!(
            s,
            "digitizer.source = {}",
            match self.digitizer.source {
                BitSource::Va => "v_a",
                BitSource::Vb => "v_b",
            }
        );
        match self.digitizer.sample_rate {
            None => {
                let _ = writeln!(s, "digitizer.sample_rate = grid");
            }
            Some(rate) => {
                let _ = writeln!(s, "digitizer.sample_rate = {rate:?}");
            }
        }
        let _ = writeln!(s, "digitizer.decimation = {}", self.digitizer.decimation);
        let _ = writeln!(s);
        let _ = writeln!(s, "message.frequency = {:?}", self.message.frequency);
        let _ = writeln!(s, "message.amplitude_pp = {:?}", self.message.amplitude_pp);
        let _ = writeln!(s, "message.offset = {:?}", self.message.offset);
        let _ = writeln!(s, "message.phase = {:?}", self.message.phase);
        let _ = writeln!(s, "message.duty = {:?}", self.message.duty);
        let _ = writeln!(s, "filter.r_fil = {:?}", self.filter.r_fil);
        let _ = writeln!(s, "filter.c_fil = {:?}", self.filter.c_fil);
        let _ = writeln!(s);
        let _ = writeln!(s, "sim.dt = {:?}", self.sim.dt);
        let _ = writeln!(s, "sim.duration = {:?}", self.sim.duration);
        let _ = writeln!(s, "sim.transient_cut = {:?}", self.sim.transient_cut);
        let _ = writeln!(s, "sim.record_stride = {}", self.sim.record_stride);
        let _ = writeln!(s, "channel.noise_sigma = {:?}", self.channel_noise_sigma);
        let _ = writeln!(s, "rng.seed = {}", self.rng_seed);
        let _ = writeln!(s);
        for (name, ic) in [("tx", &self.ic_tx), ("rx", &self.ic_rx)] {
            let _ = writeln!(s, "ic.{name}.v_a = {:?}", ic.v_a);
            let _ = writeln!(s, "ic.{name}.v_b = {:?}", ic.v_b);
            let _ = writeln!(s, "ic.{name}.i_l = {:?}", ic.i_l);
        }
        s
    }
}

fn prefix_invalid(err: Error, prefix: &str) -> Error {
    match err {
        Error::InvalidParam { field, reason } => Error::InvalidParam {
            field: format!("{prefix}{field}"),
            reason,
        },
        other => other,
    }
}

fn parse_f64(key: &str, value: &str, line: usize) -> Result<f64> {
    value.parse::<f64>().map_err(|_| {
        Error::Config(format!(
            "line {line}: invalid number for `{key}`: `{value}`"
        ))
    })
}

fn parse_u64(key: &str, value: &str, line: usize) -> Result<u64> {
    value.parse::<u64>().map_err(|_| {
        Error::Config(format!(
            "line {line}: invalid unsigned integer for `{key}`: `{value}`"
        ))
    })
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!(
            "line {line}: expected `true` or `false` for `{key}`, got `{value}`"
        ))),
    }
}

/// Parse configuration text. Unset keys keep their defaults; unknown or
/// repeated keys are errors.
pub fn parse_config(text: &str) -> Result<ConfigDoc> {
    let mut doc = ConfigDoc::default();
    let mut seen: HashSet<String> = HashSet::new();

    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {line_no}: expected `key = value`, got `{line}`"
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(Error::Config(format!(
                "line {line_no}: empty value for `{key}`"
            )));
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Config(format!(
                "line {line_no}: duplicate key `{key}`"
            )));
        }

        let num = |doc_field: &mut f64| -> Result<()> {
            *doc_field = parse_f64(key, value, line_no)?;
            Ok(())
        };
        match key {
            "circuit.c_a" => num(&mut doc.c_a)?,
            "circuit.c_b" => num(&mut doc.c_b)?,
            "circuit.l" => num(&mut doc.l)?,
            "circuit.r" => num(&mut doc.r)?,
            "circuit.r_0" => num(&mut doc.r_0)?,
            "circuit.e_sat" => num(&mut doc.e_sat)?,
            "circuit.five_segment" => doc.five_segment = parse_bool(key, value, line_no)?,
            "circuit.nic_a.r_port" => num(&mut doc.nic_a.r_port)?,
            "circuit.nic_a.r_f" => num(&mut doc.nic_a.r_f)?,
            "circuit.nic_a.r_g" => num(&mut doc.nic_a.r_g)?,
            "circuit.nic_b.r_port" => num(&mut doc.nic_b.r_port)?,
            "circuit.nic_b.r_f" => num(&mut doc.nic_b.r_f)?,
            "circuit.nic_b.r_g" => num(&mut doc.nic_b.r_g)?,
            "rx.r_mismatch" => num(&mut doc.rx_r_mismatch)?,
            "coupling.r_c" => num(&mut doc.coupling.r_c)?,
            "coupling.node" => {
                doc.coupling.node = match value {
                    "diode" => CouplingNode::DiodeNode,
                    "inductor" => CouplingNode::InductorNode,
                    _ => {
                        return Err(Error::Config(format!(
                            "line {line_no}: expected `diode` or `inductor` for \
                             `coupling.node`, got `{value}`"
                        )))
                    }
                }
            }
            "digitizer.threshold" => num(&mut doc.digitizer.threshold)?,
            "digitizer.source" => {
                doc.digitizer.source = match value {
                    "v_a" => BitSource::Va,
                    "v_b" => BitSource::Vb,
                    _ => {
                        return Err(Error::Config(format!(
                            "line {line_no}: expected `v_a` or `v_b` for \
                             `digitizer.source`, got `{value}`"
                        )))
                    }
                }
            }
            "digitizer.sample_rate" => {
                doc.digitizer.sample_rate = if value == "grid" {
                    None
                } else {
                    Some(parse_f64(key, value, line_no)?)
                }
            }
            "digitizer.decimation" => {
                doc.digitizer.decimation = parse_u64(key, value, line_no)? as usize
            }
            "message.frequency" => num(&mut doc.message.frequency)?,
            "message.amplitude_pp" => num(&mut doc.message.amplitude_pp)?,
            "message.offset" => num(&mut doc.message.offset)?,
            "message.phase" => num(&mut doc.message.phase)?,
            "message.duty" => num(&mut doc.message.duty)?,
            "filter.r_fil" => num(&mut doc.filter.r_fil)?,
            "filter.c_fil" => num(&mut doc.filter.c_fil)?,
            "sim.dt" => num(&mut doc.sim.dt)?,
            "sim.duration" => num(&mut doc.sim.duration)?,
            "sim.transient_cut" => num(&mut doc.sim.transient_cut)?,
            "sim.record_stride" => {
                doc.sim.record_stride = parse_u64(key, value, line_no)? as usize
            }
            "channel.noise_sigma" => num(&mut doc.channel_noise_sigma)?,
            "rng.seed" => doc.rng_seed = parse_u64(key, value, line_no)?,
            "ic.tx.v_a" => num(&mut doc.ic_tx.v_a)?,
            "ic.tx.v_b" => num(&mut doc.ic_tx.v_b)?,
            "ic.tx.i_l" => num(&mut doc.ic_tx.i_l)?,
            "ic.rx.v_a" => num(&mut doc.ic_rx.v_a)?,
            "ic.rx.v_b" => num(&mut doc.ic_rx.v_b)?,
            "ic.rx.i_l" => num(&mut doc.ic_rx.i_l)?,
            _ => {
                return Err(Error::Config(format!(
                    "line {line_no}: unknown key `{key}`"
                )))
            }
        }
    }
    Ok(doc)
}

/// Read, parse, and resolve a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<(ConfigDoc, SystemConfig)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let doc = parse_config(&text)?;
    let sys = doc.resolve()?;
    Ok((doc, sys))
}

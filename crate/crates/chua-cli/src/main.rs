//! `chua-link`: command-line experiment runner for the chaotic-link
//! cryptosystem simulator.
//!
//! Every subcommand loads a dotted-key config file, applies the optional
//! `--seed` / `--duration` overrides, echoes the fully-resolved config to
//! `<out>/resolved.cfg`, writes its data artifacts into `<out>/`, and prints
//! a JSON run manifest to stdout. Artifacts on disk contain no timing or
//! host-specific data, so a rerun with the same config and seed reproduces
//! them byte for byte; the manifest (which carries the wall time) goes to
//! stdout only.
//!
//! Subcommands:
//! - `attractor`: single-circuit run; phase-portrait CSV plus a Lyapunov
//!   estimate JSON. Exits 3 when the largest Lyapunov exponent is not
//!   positive (the run is not chaotic, so it must not be used as a key
//!   source).
//! - `sync`: coupled transmitter/receiver run; joint-trajectory CSV plus
//!   synchronisation metrics JSON.
//! - `encrypt`: full pipeline; message/encrypted/decrypted trace CSVs plus
//!   an end-to-end report JSON.
//! - `sweep`: row-wise experiments over coupling resistance or receiver
//!   component mismatch; one CSV table. Row failures are captured per row
//!   and listed in the manifest instead of aborting the sweep.
//!
//! Exit codes: 0 success; 1 usage, config, or I/O error; 2 numerical
//! failure (divergence, non-finite state, misaligned streams); 3 failed
//! run gate (non-chaotic attractor).

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use chua_core::{
    chua_derivatives, export_coupling_sweep_csv, export_mismatch_csv, export_pair_csv,
    export_trace_csv, export_trajectory_csv, integrate, largest_lyapunov, load_config,
    mismatch_experiment, run_end_to_end_with_traces, simulate_pair, sync_error, write_json,
    ChuaState, ConfigDoc, Error, MismatchTargets, PairState, SystemConfig,
    DEFAULT_SETTLE_THRESHOLD,
};

/// Perturbation renormalisation interval for the chaos certificate (s).
const LYAPUNOV_RENORM_INTERVAL: f64 = 1e-4;
/// Initial perturbation norm for the chaos certificate.
const LYAPUNOV_D0: f64 = 1e-8;

#[derive(Parser)]
#[command(
    name = "chua-link",
    version,
    about = "Chaotic-synchronisation encryption experiments",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the transmitter alone and certify chaos (phase portrait + Lyapunov exponent).
    Attractor(RunArgs),
    /// Run the coupled pair and measure synchronisation quality.
    Sync(RunArgs),
    /// Run the full encrypt/decrypt pipeline and export its traces.
    Encrypt(RunArgs),
    /// Sweep coupling resistance or receiver mismatch, one result row per value.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file (dotted `key = value` lines; empty file = all defaults).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Override the config's `rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's `sim.duration`, in seconds (must be > 0).
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Which knob the swept values drive.
    #[arg(long, value_enum)]
    kind: SweepKind,
    /// Comma-separated values: ohms for `coupling` (`inf` = uncoupled),
    /// relative fractions for `mismatch` (0.05 = +5%).
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    /// Sweep the coupling resistance r_c.
    Coupling,
    /// Sweep receiver component mismatch through the full pipeline.
    Mismatch,
}

/// Everything a run leaves behind, printed to stdout as JSON.
#[derive(Debug, serde::Serialize)]
struct RunManifest {
    /// `sha256:<hex>` digest of the resolved config echo, which uniquely
    /// identifies the experiment (seed and duration overrides included).
    config_digest: String,
    /// Files written, in emission order.
    artifact_paths: Vec<String>,
    /// Tool version string.
    versions: String,
    /// Wall-clock runtime in seconds (stdout only; never in artifacts).
    wall_time: f64,
    /// Sweep rows that failed, as `label: error` strings; empty otherwise.
    failed_rows: Vec<String>,
}

/// Chaos certificate written by `attractor`.
#[derive(Debug, serde::Serialize)]
struct LyapunovReport {
    /// Largest Lyapunov exponent estimate (1/s); positive certifies chaos.
    lambda: f64,
    renorm_interval: f64,
    d0: f64,
    duration: f64,
    transient_cut: f64,
    ic: ChuaState,
}

/// A failure that terminates the process, with its exit code.
#[derive(Debug)]
enum Failure {
    /// Invalid invocation (bad flag values, not parse errors — clap owns those).
    Usage(String),
    /// Any error out of the core library.
    Core(Error),
    /// Run completed but failed its gate (e.g. non-chaotic attractor).
    Gate(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(e) => core_exit_code(e),
            Failure::Gate(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => format!("usage error: {m}"),
            Failure::Core(e) => format!("error: {e}"),
            Failure::Gate(m) => format!("gate failure: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Exit-code mapping for library errors: configuration and environment
/// problems are 1, numerical failures are 2. Stage wrappers defer to their
/// underlying cause.
fn core_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidParam { .. }
        | Error::Io { .. }
        | Error::Regime(_)
        | Error::DegeneratePwl(_) => 1,
        Error::NonFinite(_)
        | Error::Divergence { .. }
        | Error::Numerical(_)
        | Error::Alignment(_) => 2,
        Error::Stage { source, .. } => core_exit_code(source),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version arrive here; they are not failures.
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            std::process::exit(if is_help { 0 } else { 1 });
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(failure) => {
            eprintln!("{}", failure.message());
            std::process::exit(failure.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let started = Instant::now();
    let (args, sweep) = match &cli.command {
        Command::Attractor(a) | Command::Sync(a) | Command::Encrypt(a) => (a, None),
        Command::Sweep(s) => (&s.run, Some(s)),
    };

    let (doc, sys) = load_and_override(args)?;
    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;

    // The resolved echo is both an artifact and the digest input: a rerun
    // of this file reproduces the run exactly.
    let resolved = doc.format();
    let resolved_path = args.out.join("resolved.cfg");
    std::fs::write(&resolved_path, resolved.as_bytes()).map_err(|source| Error::Io {
        path: resolved_path.clone(),
        source,
    })?;
    let digest_bytes = Sha256::digest(resolved.as_bytes());
    let digest = format!(
        "sha256:{}",
        digest_bytes
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>()
    );

    let mut artifacts = vec![resolved_path];
    let mut failed_rows = Vec::new();
    let gate: Option<String> = match &cli.command {
        Command::Attractor(_) => cmd_attractor(&sys, &args.out, &mut artifacts)?,
        Command::Sync(_) => {
            cmd_sync(&sys, &args.out, &mut artifacts)?;
            None
        }
        Command::Encrypt(_) => {
            cmd_encrypt(&sys, &args.out, &mut artifacts)?;
            None
        }
        Command::Sweep(_) => {
            let s = sweep.expect("sweep args present for sweep command");
            cmd_sweep(&doc, &sys, s, &args.out, &mut artifacts, &mut failed_rows)?;
            None
        }
    };

    let manifest = RunManifest {
        config_digest: digest,
        artifact_paths: artifacts
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        versions: format!("chua-link {}", env!("CARGO_PKG_VERSION")),
        wall_time: started.elapsed().as_secs_f64(),
        failed_rows,
    };
    let rendered = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Failure::Core(Error::Numerical(format!("manifest serialization: {e}"))))?;
    println!("{rendered}");

    match gate {
        Some(reason) => Err(Failure::Gate(reason)),
        None => Ok(()),
    }
}

/// Load the config file and fold in the CLI overrides, re-validating the
/// resolved system afterwards.
fn load_and_override(args: &RunArgs) -> Result<(ConfigDoc, SystemConfig), Failure> {
    let (mut doc, _) = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        doc.rng_seed = seed;
    }
    if let Some(duration) = args.duration {
        if !duration.is_finite() || duration <= 0.0 {
            return Err(Failure::Usage(format!(
                "--duration must be a positive number of seconds, got {duration}"
            )));
        }
        doc.sim.duration = duration;
    }
    let sys = doc.resolve()?;
    Ok((doc, sys))
}

/// Single-circuit run: portrait CSV plus chaos certificate. Returns the
/// gate-failure reason when the Lyapunov exponent is not positive.
fn cmd_attractor(
    sys: &SystemConfig,
    out: &Path,
    artifacts: &mut Vec<PathBuf>,
) -> Result<Option<String>, Failure> {
    let p = sys.tx_params;
    let field = move |_t: f64, s: &[f64; 3]| chua_derivatives(&ChuaState::from_array(*s), &p).to_array();

    let traj = integrate(field, sys.ic_tx.to_array(), &sys.sim)?;
    let portrait = out.join("portrait.csv");
    export_trajectory_csv(&traj, &portrait)?;
    artifacts.push(portrait);

    let lambda = largest_lyapunov(
        field,
        sys.ic_tx.to_array(),
        &sys.sim,
        LYAPUNOV_RENORM_INTERVAL,
        LYAPUNOV_D0,
    )?;
    let report = LyapunovReport {
        lambda,
        renorm_interval: LYAPUNOV_RENORM_INTERVAL,
        d0: LYAPUNOV_D0,
        duration: sys.sim.duration,
        transient_cut: sys.sim.transient_cut,
        ic: sys.ic_tx,
    };
    let lyap_path = out.join("lyapunov.json");
    write_json(&report, &lyap_path)?;
    artifacts.push(lyap_path);

    Ok((lambda <= 0.0).then(|| {
        format!("largest Lyapunov exponent {lambda:.1} /s is not positive; the run is not chaotic")
    }))
}

/// Coupled run: joint trajectory CSV plus synchronisation metrics.
fn cmd_sync(sys: &SystemConfig, out: &Path, artifacts: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let s0 = PairState {
        tx: sys.ic_tx,
        rx: sys.ic_rx,
    };
    let pair = simulate_pair(&s0, &sys.tx_params, &sys.rx_params, &sys.coupling, &sys.sim)?;
    let portrait = out.join("portrait.csv");
    export_pair_csv(&pair, &portrait)?;
    artifacts.push(portrait);

    // The trajectory already starts after the transient cut, so measure
    // from its first sample.
    let metrics = sync_error(&pair, sys.coupling.node, pair.t0, DEFAULT_SETTLE_THRESHOLD)?;
    let metrics_path = out.join("sync_metrics.json");
    write_json(&metrics, &metrics_path)?;
    artifacts.push(metrics_path);
    Ok(())
}

/// Full pipeline: three trace CSVs plus the end-to-end report.
fn cmd_encrypt(sys: &SystemConfig, out: &Path, artifacts: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let (mut report, traces) = run_end_to_end_with_traces(sys)?;

    // The report embeds bare file names, not paths, so the JSON bytes do
    // not depend on where the artifacts land.
    for (name, trace) in [
        ("message.csv", &traces.message),
        ("encrypted.csv", &traces.encrypted),
        ("decrypted.csv", &traces.decrypted),
    ] {
        let path = out.join(name);
        export_trace_csv(trace, &path)?;
        artifacts.push(path);
        report.traces.push(name.to_string());
    }

    let report_path = out.join("report.json");
    write_json(&report, &report_path)?;
    artifacts.push(report_path);
    Ok(())
}

/// Row-wise sweep; failures are captured per row, never aborting the sweep.
fn cmd_sweep(
    doc: &ConfigDoc,
    sys: &SystemConfig,
    sweep: &SweepArgs,
    out: &Path,
    artifacts: &mut Vec<PathBuf>,
    failed_rows: &mut Vec<String>,
) -> Result<(), Failure> {
    let values = parse_sweep_values(&sweep.values)?;
    let csv_path = out.join("sweep.csv");
    match sweep.kind {
        SweepKind::Coupling => {
            let s0 = PairState {
                tx: sys.ic_tx,
                rx: sys.ic_rx,
            };
            let rows = chua_core::coupling_sweep(
                &values,
                doc.rx_r_mismatch,
                &s0,
                &sys.tx_params,
                sys.coupling.node,
                &sys.sim,
            )?;
            for row in &rows {
                if let Err(e) = &row.metrics {
                    failed_rows.push(format!("r_c={}: {e}", row.r_c));
                }
            }
            export_coupling_sweep_csv(&rows, &csv_path)?;
        }
        SweepKind::Mismatch => {
            let rows = mismatch_experiment(&values, sys, MismatchTargets::default());
            for row in &rows {
                if let Err(e) = &row.outcome {
                    failed_rows.push(format!("mismatch={}: {e}", row.mismatch));
                }
            }
            export_mismatch_csv(&rows, &csv_path)?;
        }
    }
    artifacts.push(csv_path);
    Ok(())
}

/// Parse `--values` entries; `inf` denotes an uncoupled (infinite) resistance.
fn parse_sweep_values(raw: &[String]) -> Result<Vec<f64>, Failure> {
    raw.iter()
        .map(|v| {
            let t = v.trim();
            if t.eq_ignore_ascii_case("inf") {
                return Ok(f64::INFINITY);
            }
            t.parse::<f64>().map_err(|_| {
                Failure::Usage(format!("--values entry {t:?} is not a number or \"inf\""))
            })
        })
        .collect()
}

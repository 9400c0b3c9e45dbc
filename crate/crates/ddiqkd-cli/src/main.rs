//! `ddiqkd`: simulate the protocol, scan Bob's phase, reproduce the
//! correlation tables, compare rate models, and run the Fock-space security
//! audit. Results go to JSON and plot-ready CSV files.

mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ddiqkd_core::analysis::{correlation_table, phase_grid, phase_scan, rate_curves};
use ddiqkd_core::bell::BellState;
use ddiqkd_core::fock::fixed_state_audit;
use ddiqkd_core::protocol::{mutual_information_bits, run_session};
use ddiqkd_core::quantum::Bb84State;
use ddiqkd_core::QkdError;
use serde::Serialize;

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    ConfigParse(String),
    Validation(String),
    Io(String),
}

impl CliError {
    fn validation(field: &str, message: &str) -> Self {
        CliError::Validation(format!("invalid parameter `{field}`: {message}"))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::ConfigParse(_) => 3,
            CliError::Validation(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::ConfigParse(m) => write!(f, "config error: {m}"),
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<QkdError> for CliError {
    fn from(e: QkdError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "ddiqkd", version, about = "ddiQKD simulator and analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for result files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Round-count override.
    #[arg(long)]
    rounds: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo protocol session and write stats.json.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Scan Bob's phase for a fixed Alice state; writes phase_scan_<state>.csv.
    PhaseScan {
        #[command(flatten)]
        common: CommonArgs,
        /// Alice state: plus, minus, plus_i or minus_i.
        #[arg(long)]
        state: Option<String>,
        /// Number of phase grid points.
        #[arg(long)]
        points: Option<usize>,
        /// Detection gates per grid point (0 = analytic).
        #[arg(long)]
        n_per_point: Option<u64>,
    },
    /// Correlation tables, one CSV per Bell outcome: table_<bell>.csv.
    Table {
        #[command(flatten)]
        common: CommonArgs,
        /// Analytic noiseless tables regardless of configured noise.
        #[arg(long)]
        ideal: bool,
        /// Monte-Carlo samples per (alice, bob) cell (0 = analytic).
        #[arg(long)]
        n_per_cell: Option<u64>,
    },
    /// Asymptotic rate comparison over a loss grid; writes rates.csv.
    Rates {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        loss_max_db: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        eta_det: Option<f64>,
    },
    /// Fock-sector security audit; writes fock_audit.json.
    FockAudit {
        #[command(flatten)]
        common: CommonArgs,
        /// Photon-number sectors to audit, e.g. --sectors 1,2,3,4.
        #[arg(long, value_delimiter = ',')]
        sectors: Option<Vec<usize>>,
        #[arg(long)]
        family_size: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    if let Some(rounds) = common.rounds {
        cfg.run.rounds = rounds;
    }
    Ok(cfg)
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct SimulateOutput {
    seed: u64,
    source: ddiqkd_core::noise::SourceParams,
    channel: ddiqkd_core::noise::ChannelParams,
    detector: ddiqkd_core::noise::DetectorParams,
    adversary_kind: String,
    stats: ddiqkd_core::protocol::SessionStats,
    mutual_information_bits: f64,
}

fn cmd_simulate(common: &CommonArgs) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let source = cfg.source.to_params()?;
    let channel = cfg.channel.to_params()?;
    let detector = cfg.detector.to_params()?;
    let adversary = cfg.adversary.to_model()?;
    let (stats, _) = run_session(
        cfg.run.rounds,
        &source,
        &channel,
        &detector,
        &adversary,
        cfg.run.seed,
        false,
    )?;
    ensure_out_dir(&common.out)?;
    let mi = mutual_information_bits(&stats.joint_counts);
    let output = SimulateOutput {
        seed: cfg.run.seed,
        source,
        channel,
        detector,
        adversary_kind: cfg.adversary.kind.clone(),
        stats,
        mutual_information_bits: mi,
    };
    let path = common.out.join("stats.json");
    write_json(&path, &output)?;
    println!(
        "simulate: {} rounds, QBER {:.4}, secret fraction {:.4} -> {}",
        output.stats.n_rounds,
        output.stats.qber_total,
        output.stats.secret_fraction,
        path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PhaseScanMeta {
    alice_state: String,
    n_per_point: u64,
    normalization: &'static str,
    /// One fit per Bell outcome, in BellState order.
    fits: Vec<ddiqkd_core::analysis::SinusoidFit>,
}

fn cmd_phase_scan(
    common: &CommonArgs,
    state: Option<&str>,
    points: Option<usize>,
    n_per_point: Option<u64>,
) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let label = state.unwrap_or(&cfg.phase_scan.state).to_string();
    let alice = config::parse_bb84(&label)?;
    let n_points = points.unwrap_or(cfg.phase_scan.points);
    let n = n_per_point.unwrap_or(cfg.phase_scan.n_per_point);
    let channel = cfg.channel.to_params()?;
    let detector = cfg.detector.to_params()?;
    let result = phase_scan(alice, &phase_grid(n_points), n, &channel, &detector, cfg.run.seed)?;

    ensure_out_dir(&common.out)?;
    let csv_path = common.out.join(format!("phase_scan_{label}.csv"));
    let mut writer = csv::Writer::from_path(&csv_path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", csv_path.display())))?;
    writer
        .write_record(["phi", "phi_plus", "phi_minus", "psi_plus", "psi_minus"])
        .and_then(|_| {
            for p in &result.points {
                writer.write_record([
                    p.phi.to_string(),
                    p.probs[0].to_string(),
                    p.probs[1].to_string(),
                    p.probs[2].to_string(),
                    p.probs[3].to_string(),
                ])?;
            }
            writer.flush().map_err(csv::Error::from)
        })
        .map_err(|e| CliError::Io(format!("csv write failed: {e}")))?;

    let meta = PhaseScanMeta {
        alice_state: label.clone(),
        n_per_point: n,
        normalization: "per phase point over the four Bell outcomes \
                        (alternative per-curve normalization not applied)",
        fits: result.fits,
    };
    write_json(&common.out.join(format!("phase_scan_{label}.json")), &meta)?;
    let vis: Vec<String> = meta
        .fits
        .iter()
        .map(|f| match f.visibility {
            Some(v) => format!("{v:.4}"),
            None => "undefined".into(),
        })
        .collect();
    println!(
        "phase-scan {label}: {} points, visibilities [{}] -> {}",
        n_points,
        vis.join(", "),
        csv_path.display()
    );
    Ok(())
}

fn cmd_table(common: &CommonArgs, ideal: bool, n_per_cell: Option<u64>) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let channel = if ideal {
        ddiqkd_core::noise::ChannelParams::ideal()
    } else {
        cfg.channel.to_params()?
    };
    let detector = if ideal {
        ddiqkd_core::noise::DetectorParams::ideal()
    } else {
        cfg.detector.to_params()?
    };
    let n = n_per_cell.unwrap_or(cfg.table.n_per_cell);
    let table = correlation_table(n, &channel, &detector, cfg.run.seed)?;

    ensure_out_dir(&common.out)?;
    let state_labels = Bb84State::ALL.map(|s| s.label());
    for (k, bell) in BellState::ALL.iter().enumerate() {
        let path = common.out.join(format!("table_{}.csv", bell.label()));
        let mut writer = csv::Writer::from_path(&path)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        let mut header = vec!["alice".to_string()];
        header.extend(state_labels.iter().map(|s| s.to_string()));
        writer
            .write_record(&header)
            .and_then(|_| {
                for (ai, alice_label) in state_labels.iter().enumerate() {
                    let mut row = vec![alice_label.to_string()];
                    row.extend((0..4).map(|bi| table.tables[k][ai][bi].to_string()));
                    writer.write_record(&row)?;
                }
                writer.flush().map_err(csv::Error::from)
            })
            .map_err(|e| CliError::Io(format!("csv write failed: {e}")))?;
    }

    #[derive(Serialize)]
    struct TableMeta {
        n_per_cell: u64,
        normalization: String,
        files: Vec<String>,
    }
    write_json(
        &common.out.join("table_metadata.json"),
        &TableMeta {
            n_per_cell: table.n_per_cell,
            normalization: table.normalization.to_string(),
            files: BellState::ALL
                .iter()
                .map(|b| format!("table_{}.csv", b.label()))
                .collect(),
        },
    )?;
    println!(
        "table: n_per_cell {} -> table_<bell>.csv in {}",
        n,
        common.out.display()
    );
    Ok(())
}

fn cmd_rates(
    common: &CommonArgs,
    loss_max_db: Option<f64>,
    mu: Option<f64>,
    eta_det: Option<f64>,
) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let r = &cfg.rates;
    let loss_max = loss_max_db.unwrap_or(r.loss_max_db);
    if loss_max < 0.0 {
        return Err(CliError::validation("rates.loss_max_db", "must be >= 0"));
    }
    if r.points < 2 {
        return Err(CliError::validation("rates.points", "must be >= 2"));
    }
    let grid: Vec<f64> = (0..r.points)
        .map(|i| loss_max * i as f64 / (r.points - 1) as f64)
        .collect();
    let curve = rate_curves(
        mu.unwrap_or(r.mu),
        eta_det.unwrap_or(r.eta_det),
        &grid,
        r.clock_hz,
        r.qber,
    )?;

    ensure_out_dir(&common.out)?;
    let path = common.out.join("rates.csv");
    let mut writer = csv::Writer::from_path(&path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    writer
        .write_record(["loss_db", "transmittance", "rate_ddi", "rate_mdi"])
        .and_then(|_| {
            for p in &curve {
                writer.write_record([
                    p.loss_db.to_string(),
                    p.transmittance.to_string(),
                    p.rate_ddi.to_string(),
                    p.rate_mdi.to_string(),
                ])?;
            }
            writer.flush().map_err(csv::Error::from)
        })
        .map_err(|e| CliError::Io(format!("csv write failed: {e}")))?;
    println!(
        "rates: {} points up to {loss_max} dB (toy asymptotic models) -> {}",
        curve.len(),
        path.display()
    );
    Ok(())
}

fn cmd_fock_audit(
    common: &CommonArgs,
    sectors: Option<Vec<usize>>,
    family_size: Option<usize>,
    n_max: Option<usize>,
) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let sectors = sectors.unwrap_or_else(|| cfg.fock.sectors.clone());
    if sectors.is_empty() {
        return Err(CliError::validation("fock.sectors", "must not be empty"));
    }
    let family = family_size.unwrap_or(cfg.fock.family_size);
    if family < 2 {
        return Err(CliError::validation("fock.family_size", "must be >= 2"));
    }
    let report = fixed_state_audit(&sectors, family, n_max.unwrap_or(cfg.fock.n_max), cfg.run.seed)?;
    ensure_out_dir(&common.out)?;
    let path = common.out.join("fock_audit.json");
    write_json(&path, &report)?;
    for s in &report.sectors {
        println!(
            "fock-audit N={}: max trace distance {:.3e}, surviving deltas {:?}, \
             P(double click) {:.4}",
            s.sector, s.max_trace_distance, s.surviving_deltas, s.double_click_probability
        );
    }
    println!("fock-audit -> {}", path.display());
    Ok(())
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate { common } => cmd_simulate(common),
        Command::PhaseScan { common, state, points, n_per_point } => {
            cmd_phase_scan(common, state.as_deref(), *points, *n_per_point)
        }
        Command::Table { common, ideal, n_per_cell } => cmd_table(common, *ideal, *n_per_cell),
        Command::Rates { common, loss_max_db, mu, eta_det } => {
            cmd_rates(common, *loss_max_db, *mu, *eta_det)
        }
        Command::FockAudit { common, sectors, family_size, n_max } => {
            cmd_fock_audit(common, sectors.clone(), *family_size, *n_max)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

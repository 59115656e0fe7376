//! Command-line driver: simulate filament runs, analyze trajectories,
//! sweep the field grid, and fit the intensity peak.
//!
//! Exit codes: 0 success, 2 configuration error, 3 fit failure, 4 partial
//! sweep failure, 1 anything else.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use magassay::config::{parse_config, AssayConfig};
use magassay::correlation::cross_correlation;
use magassay::csvio;
use magassay::estimation::{fit_peak, report, PeakFit, SummaryReport, SweepRecord};
use magassay::magnetics::{MonomerGeometry, MONOMER_DIAMETER_M};
use magassay::simulator::{run_assay, sweep, SimError, SweepPlan};
use magassay::tracking::{decompose, smooth};
use magassay::units::FrameClock;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "magassay", version, about = "Virtual magnetic in-vitro motility assay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one assay run and write trajectory.csv
    Simulate(CommonArgs),
    /// Decompose a trajectory CSV and write displacement + correlation tables
    Analyze(CommonArgs),
    /// Fit the intensity peak of a sweep CSV and chain it to dipole estimates
    Fit(CommonArgs),
    /// Run the (B, theta, replica) grid and write sweep.csv
    Sweep(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (`key = value` lines); defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
    /// Input CSV: trajectory for `analyze`, sweep table for `fit`
    #[arg(long)]
    input: Option<PathBuf>,
}

enum CliError {
    /// Bad configuration or manifest: exit 2.
    Config(String),
    /// Peak fit failed: exit 3.
    Fit(String),
    /// Some sweep cells failed: exit 4.
    PartialSweep(usize),
    /// Everything else: exit 1.
    Other(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Fit(_) => 3,
            CliError::PartialSweep(_) => 4,
            CliError::Other(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) => format!("configuration error: {m}"),
            CliError::Fit(m) => format!("fit failure: {m}"),
            CliError::PartialSweep(n) => format!("{n} sweep cell(s) failed; see diagnostics above"),
            CliError::Other(e) => format!("{e:#}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Sweep(args) => cmd_sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<AssayConfig, CliError> {
    let mut cfg = match &args.config {
        None => AssayConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
    };
    if let Some(seed) = args.seed {
        cfg.sim.seed = seed;
    }
    Ok(cfg)
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
        .map_err(CliError::Other)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::Other)?;
    Ok(path)
}

fn require_input(args: &CommonArgs, what: &str) -> Result<PathBuf, CliError> {
    let path = args
        .input
        .clone()
        .ok_or_else(|| CliError::Config(format!("--input {what} is required for this command")))?;
    if !path.exists() {
        return Err(CliError::Config(format!("input {} does not exist", path.display())));
    }
    Ok(path)
}

fn map_sim_error(e: SimError) -> CliError {
    match e {
        SimError::InvalidConfig { .. } => CliError::Config(e.to_string()),
        SimError::NumericalBlowup { .. } => CliError::Other(anyhow::anyhow!(e.to_string())),
    }
}

fn cmd_simulate(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let tracks = run_assay(&cfg.sim).map_err(map_sim_error)?;
    let csv = csvio::trajectory_to_csv(&tracks, &FrameClock::default());
    let path = write_output(&args.out, "trajectory.csv", &csv)?;
    println!(
        "wrote {} ({} markers x {} frames, B = {} mT, seed {})",
        path.display(),
        tracks.len(),
        cfg.sim.frames,
        cfg.sim.b_mt,
        cfg.sim.seed
    );
    Ok(())
}

fn cmd_analyze(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let input = require_input(args, "trajectory CSV")?;
    let text = std::fs::read_to_string(&input)
        .with_context(|| format!("cannot read {}", input.display()))
        .map_err(CliError::Other)?;
    let tracks = csvio::trajectory_from_csv(&text)
        .map_err(|e| CliError::Other(anyhow::anyhow!("{}: {e}", input.display())))?;
    if tracks.len() < 2 {
        return Err(CliError::Other(anyhow::anyhow!(
            "analysis needs at least two markers, found {}",
            tracks.len()
        )));
    }

    let clock = FrameClock::default();
    let window = cfg.analysis.window_frames;
    let mut series = Vec::with_capacity(tracks.len());
    for track in &tracks {
        let smoothed = smooth(track, window)
            .map_err(|e| CliError::Other(anyhow::anyhow!("{}: {e}", track.marker_id)))?;
        series.push(
            decompose(track, &smoothed)
                .map_err(|e| CliError::Other(anyhow::anyhow!("{}: {e}", track.marker_id)))?,
        );
    }
    let disp_path = write_output(&args.out, "displacements.csv", &csvio::displacements_to_csv(&series))?;

    let mut functions = Vec::new();
    for i in 0..series.len() {
        for j in (i + 1)..series.len() {
            functions.push(
                cross_correlation(
                    &series[i],
                    &series[j],
                    cfg.analysis.max_lag_frames,
                    cfg.analysis.corr_window_frames,
                    &clock,
                )
                .map_err(|e| {
                    CliError::Other(anyhow::anyhow!(
                        "{}-{}: {e}",
                        series[i].marker_id,
                        series[j].marker_id
                    ))
                })?,
            );
        }
    }
    let rows = csvio::correlation_rows(&functions);
    let corr_path = write_output(&args.out, "correlation.csv", &csvio::correlation_rows_to_csv(&rows))?;

    println!(
        "wrote {} ({} markers) and {} ({} pairs)",
        disp_path.display(),
        series.len(),
        corr_path.display(),
        functions.len()
    );
    Ok(())
}

/// Pick the records to fit: the field-angle group with the most distinct
/// flux values (ties go to the larger angle, where the coupling is
/// strongest).
fn fit_group(records: &[SweepRecord]) -> Vec<SweepRecord> {
    let mut thetas: Vec<f64> = records.iter().map(|r| r.theta_deg).collect();
    thetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thetas.dedup();
    let mut best: (usize, f64, Vec<SweepRecord>) = (0, f64::NEG_INFINITY, Vec::new());
    for theta in thetas {
        let group: Vec<SweepRecord> = records
            .iter()
            .filter(|r| r.theta_deg == theta)
            .copied()
            .collect();
        let mut bs: Vec<f64> = group.iter().map(|r| r.b_mt).collect();
        bs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bs.dedup();
        if bs.len() > best.0 || (bs.len() == best.0 && theta > best.1) {
            best = (bs.len(), theta, group);
        }
    }
    best.2
}

fn fit_report_text(fit: &PeakFit, summary: &SummaryReport, n_points: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "peak flux density B*   : {:.3} mT", summary.b_star_mt);
    let _ = writeln!(out, "dipole density M       : {:.4e} A/m", summary.m_a_per_m);
    let _ = writeln!(
        out,
        "moment per monomer     : {:.4e} A m^2  ({:.1} Bohr magnetons)",
        summary.moment_a_m2, summary.moment_bohr
    );
    let _ = writeln!(out, "dipole-dipole energy   : {:.4e} J", summary.interaction_j);
    let _ = writeln!(
        out,
        "parabola I = a + b B + c B^2: a = {:.4e}, b = {:.4e}, c = {:.4e}",
        fit.alpha, fit.beta, fit.gamma
    );
    let _ = writeln!(
        out,
        "weighted RMS residual  : {:.4} nm^2 over {n_points} points",
        fit.residual_nm2
    );
    out
}

fn cmd_fit(args: &CommonArgs) -> Result<(), CliError> {
    let _cfg = load_config(args)?;
    let input = require_input(args, "sweep CSV")?;
    let text = std::fs::read_to_string(&input)
        .with_context(|| format!("cannot read {}", input.display()))
        .map_err(CliError::Other)?;
    let records = csvio::sweep_from_csv(&text)
        .map_err(|e| CliError::Other(anyhow::anyhow!("{}: {e}", input.display())))?;

    let group = fit_group(&records);
    let fit = fit_peak(&group).map_err(|e| CliError::Fit(e.to_string()))?;
    let geometry = MonomerGeometry::sphere(MONOMER_DIAMETER_M).expect("constant diameter");
    let summary = report(&fit, geometry);

    write_output(&args.out, "fit_report.csv", &csvio::fit_report_to_csv(&summary))?;
    let text_report = fit_report_text(&fit, &summary, group.len());
    let path = write_output(&args.out, "fit_report.txt", &text_report)?;
    print!("{text_report}");
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_sweep(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let plan = SweepPlan {
        b_list_mt: cfg.sweep.b_list_mt.clone(),
        theta_list_deg: cfg.sweep.theta_list_deg.clone(),
        replicas: cfg.sweep.replicas,
        smooth_window: cfg.analysis.window_frames,
        corr_window: cfg.analysis.corr_window_frames,
    };
    let outcome = sweep(&cfg.sim, &plan).map_err(map_sim_error)?;
    for failure in &outcome.failures {
        eprintln!(
            "cell B = {} mT, theta = {} deg, replica {}: {}",
            failure.b_mt, failure.theta_deg, failure.replica, failure.message
        );
    }
    let path = write_output(&args.out, "sweep.csv", &csvio::sweep_to_csv(&outcome.records))?;
    println!(
        "wrote {} ({} cells, {} replicas each, seed {})",
        path.display(),
        outcome.records.len(),
        plan.replicas,
        cfg.sim.seed
    );
    if !outcome.failures.is_empty() {
        return Err(CliError::PartialSweep(outcome.failures.len()));
    }
    Ok(())
}

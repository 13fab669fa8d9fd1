//! Command-line front end: simulate scenarios, calibrate camera positions,
//! detect blockages, localize transmitters and export evaluation data.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "fresnel-loc", version, about = "Transmitter localization from Fresnel-zone blockage")]
struct Cli {
    /// Pipeline configuration (TOML). Flags override its values.
    #[arg(long, global = true, env = "FRESNEL_LOC_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize traces, tracks and ground truth from a scenario.
    Simulate(SimulateArgs),
    /// Fit a camera calibration from raw/true position pairs.
    Calibrate(CalibrateArgs),
    /// Detect blockage events in one trace.
    Detect(DetectArgs),
    /// Localize one transmitter from one anchor's trace and obstacle tracks.
    Localize(LocalizeArgs),
    /// Run the full pipeline on a data set or scenario and write a report.
    Evaluate(EvaluateArgs),
    /// Write CDF, error and confusion tables from a report.
    ExportPlot(ExportArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Scenario file (TOML); the built-in paper-mirror scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-sample noise, dB.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// CSV with header raw_x,raw_y,true_x,true_y.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
struct PipelineFlags {
    /// Correlation threshold.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    resolution: Option<ResolutionArg>,
    /// Scan step of the forward-scan resolution, seconds.
    #[arg(long)]
    scan_step: Option<f64>,
    /// Observation window start, seconds.
    #[arg(long, requires = "window_end")]
    window_start: Option<f64>,
    /// Observation window end, seconds.
    #[arg(long, requires = "window_start")]
    window_end: Option<f64>,
    /// Coarse grid step in d, meters.
    #[arg(long)]
    d_step: Option<f64>,
    /// Coarse grid step in theta, degrees.
    #[arg(long)]
    theta_step_deg: Option<f64>,
    #[arg(long)]
    refine_levels: Option<u32>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodArg {
    Plain,
    Split,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ResolutionArg {
    BestFirst,
    ForwardScan,
}

#[derive(Args, Debug)]
struct DetectArgs {
    /// CSV with header time_s,rssi_dbm.
    #[arg(long)]
    trace: PathBuf,
    /// Resampling interval for non-uniform timestamps, seconds.
    #[arg(long)]
    sample_interval: Option<f64>,
    #[command(flatten)]
    flags: PipelineFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LocalizeArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Track CSV (time_s,x_m,y_m[,nx,ny]); repeat for several passes.
    #[arg(long = "track", required = true)]
    tracks: Vec<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    anchor_x: f64,
    #[arg(long, allow_hyphen_values = true)]
    anchor_y: f64,
    /// Anchor frame heading, radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    anchor_rotation: f64,
    /// Carrier wavelength, meters.
    #[arg(long)]
    lambda: f64,
    /// Obstacle width, meters.
    #[arg(long)]
    width: f64,
    /// Camera calibration model (JSON from `calibrate`) applied to tracks.
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long)]
    sample_interval: Option<f64>,
    #[command(flatten)]
    flags: PipelineFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Data-set manifest (as written by `simulate`) or its directory.
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    data: Option<PathBuf>,
    /// Scenario file simulated in memory.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    flags: PipelineFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// Report JSON written by `evaluate`.
    #[arg(long)]
    report: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Detect(a) => commands::detect(cli.config.as_deref(), a),
        Command::Localize(a) => commands::localize(cli.config.as_deref(), a),
        Command::Evaluate(a) => commands::evaluate(cli.config.as_deref(), a),
        Command::ExportPlot(a) => commands::export_plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

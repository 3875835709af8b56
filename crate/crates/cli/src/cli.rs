use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ellipse_calib::UserType;

use crate::commands::{
    cmd_calibrate, cmd_eval, cmd_extract, cmd_fit, cmd_simulate, CalibrateOptions, ExtractOptions, FitOptions,
    SimulateOptions, DEFAULT_DX_M, DEFAULT_TRANSITION,
};
use crate::config::NoiseKind;
use crate::error::CliError;
use crate::io;

#[derive(Debug, Parser)]
#[command(
    name = "ellipse-calib",
    version,
    about = "Reflection-point calibration on delay ellipses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize measurement files and ground truth from a scenario.
    Simulate(SimulateArgs),
    /// Run the point-mass filter on measurement files.
    Calibrate(CalibrateArgs),
    /// Compare a report against ground truth.
    Eval(EvalArgs),
    /// Extract MPC power changes from channel snapshots.
    Extract(ExtractArgs),
    /// Fit fading and noise parameters to power changes.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub noise: Option<NoiseKind>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Directory holding `link<i>_mpc<n>.csv` files.
    #[arg(long)]
    pub measurements: PathBuf,
    /// Output directory for the report and weight histories.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    /// Grid spacing in meters.
    #[arg(long, default_value_t = DEFAULT_DX_M)]
    pub dx: f64,
    /// Dimensionless transition concentration.
    #[arg(long, conflicts_with = "transition")]
    pub eta: Option<f64>,
    /// Named transition preset, used when --eta is absent.
    #[arg(long)]
    pub transition: Option<String>,
    /// Gate distance in meters; 0 disables gating.
    #[arg(long)]
    pub gate: Option<f64>,
    #[arg(long, value_enum)]
    pub noise: Option<NoiseKind>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write the per-step grid weights.
    #[arg(long)]
    pub weights: bool,
    /// Record wall-clock duration in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub ground_truth: PathBuf,
    /// Fail when any error exceeds this many meters.
    #[arg(long)]
    pub max_error: Option<f64>,
    /// Also write the per-MPC errors as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Snapshots to evaluate.
    #[arg(long, num_args = 1.., required = true)]
    pub cir: Vec<PathBuf>,
    #[arg(long)]
    pub pulse: PathBuf,
    /// Ascending MPC delays in nanoseconds.
    #[arg(long, value_delimiter = ',', required = true)]
    pub delays_ns: Vec<f64>,
    /// Snapshots of the empty channel.
    #[arg(long, num_args = 1..)]
    pub idle: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with `xi_tx_m`, `xi_rx_m` and `z_db` columns.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Near/far split in meters; defaults to the Fresnel threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 0.0577)]
    pub wavelength: f64,
    #[arg(long, default_value_t = 3)]
    pub zone: u32,
    #[arg(long, default_value_t = UserType::Pedestrian)]
    pub user: UserType,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => {
            let written = cmd_simulate(&SimulateOptions {
                scenario: a.scenario,
                out: a.out,
                seed: a.seed,
                noise: a.noise,
            })?;
            for p in written {
                println!("{}", p.display());
            }
        }
        Command::Calibrate(a) => {
            let out = a.out.clone();
            let report = cmd_calibrate(&CalibrateOptions {
                scenario: a.scenario,
                measurements: a.measurements,
                out: a.out,
                ground_truth: a.ground_truth,
                dx: a.dx,
                eta: a.eta,
                transition: a.transition.unwrap_or_else(|| DEFAULT_TRANSITION.to_string()),
                gate: a.gate,
                noise: a.noise,
                jobs: a.jobs,
                weights: a.weights,
                timing: a.timing,
            })?;
            for m in &report.mpcs {
                let err = m.final_error_m.map_or(String::new(), |e| format!(", error {e:.4} m"));
                let flags = match (m.low_information, m.multimodal) {
                    (true, _) => " [low information]",
                    (false, true) => " [multimodal]",
                    _ => "",
                };
                println!(
                    "link {} mpc {}: arc {:.4} m at ({:.4}, {:.4}){err}{flags}",
                    m.link, m.mpc, m.estimate_arc_m, m.rp_x_m, m.rp_y_m
                );
            }
            println!("{}", out.join("report.json").display());
        }
        Command::Eval(a) => {
            let summary = cmd_eval(&a.report, &a.ground_truth)?;
            print!("{}", summary.table());
            if let Some(path) = &a.out {
                io::write_atomic(path, &summary.to_csv())?;
            }
            if let Some(bound) = a.max_error {
                let failed = summary.exceeding(bound);
                if failed > 0 {
                    return Err(CliError::GateFailed {
                        failed,
                        total: summary.rows.len(),
                        bound,
                    });
                }
            }
        }
        Command::Extract(a) => {
            let rows = cmd_extract(&ExtractOptions {
                cir: a.cir,
                pulse: a.pulse,
                delays_ns: a.delays_ns,
                idle: a.idle,
                out: a.out.clone(),
            })?;
            println!("{} power changes written to {}", rows.len(), a.out.display());
        }
        Command::Fit(a) => {
            let report = cmd_fit(&FitOptions {
                input: a.input,
                out: a.out.clone(),
                threshold: a.threshold,
                wavelength: a.wavelength,
                zone: a.zone,
                user: a.user,
            })?;
            println!(
                "phi {:.4} dB, kappa {:.4} m; written to {}",
                report.fading.phi_db,
                report.fading.kappa_m,
                a.out.display()
            );
        }
    }
    Ok(())
}

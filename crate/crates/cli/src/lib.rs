//! Command-line workflows around the `ellipse_calib` library: scenario
//! simulation, calibration, evaluation, amplitude extraction and model
//! fitting, with their file formats.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use cli::{run, Cli};
pub use commands::{
    cmd_calibrate, cmd_eval, cmd_extract, cmd_fit, cmd_simulate, evaluate, fit_rows, CalibrateOptions, ExtractOptions,
    FitOptions, FitReport, SimulateOptions,
};
pub use config::{load_scenario, parse_scenario, LoadedScenario, NoiseKind};
pub use error::{exit, CliError};
pub use report::{EvalRow, EvalSummary, MpcReport, Report};

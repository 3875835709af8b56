use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ellipse_calib::inference::eta_from_variance;
use ellipse_calib::{
    derive_ground_truth, elliptic_error, extract_sequentially, fit_fading_params, fit_noise_sigmas, power_change,
    presets, reference_power, run_calibration, synthesize_measurements, CalibrationConfig, FadingError, FadingParams,
    FadingSample, FresnelConfig, GroundTruth, Measurement, NoiseModel, SignalError, UserType,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{load_scenario, NoiseKind};
use crate::error::CliError;
use crate::io::{self, FitRow, PowerChangeRow};
use crate::report::{EvalRow, EvalSummary, MpcReport, Report};

/// Tolerance for ground-truth points against the scenario geometry.
const TRUTH_TOLERANCE_M: f64 = 1e-6;

pub const DEFAULT_DX_M: f64 = 0.05;
pub const DEFAULT_TRANSITION: &str = "setupII";

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub noise: Option<NoiseKind>,
}

/// Writes one measurement file per MPC and the ground truth; returns the
/// written paths.
pub fn cmd_simulate(opts: &SimulateOptions) -> Result<Vec<PathBuf>, CliError> {
    let loaded = load_scenario(&opts.scenario, opts.noise, opts.seed)?;
    let truth = derive_ground_truth(&loaded.scenario)?;
    let data = synthesize_measurements(&loaded.scenario, &truth)?;
    std::fs::create_dir_all(&opts.out).map_err(|e| CliError::io(&opts.out, e))?;
    let mut written = Vec::with_capacity(data.len() + 1);
    for d in &data {
        let path = opts.out.join(io::measurement_file_name(d.link, d.mpc));
        io::write_atomic(&path, &io::measurements_to_csv(&d.measurements))?;
        written.push(path);
    }
    let path = opts.out.join(io::GROUND_TRUTH_FILE);
    io::write_atomic(&path, &io::ground_truth_to_csv(&truth))?;
    written.push(path);
    log::info!("wrote {} files to {}", written.len(), opts.out.display());
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct CalibrateOptions {
    pub scenario: PathBuf,
    pub measurements: PathBuf,
    pub out: PathBuf,
    /// Defaults to the ground-truth file in the measurement directory, if
    /// present.
    pub ground_truth: Option<PathBuf>,
    pub dx: f64,
    /// Dimensionless concentration; overrides `transition`.
    pub eta: Option<f64>,
    /// Named transition preset used when `eta` is not given.
    pub transition: String,
    /// Gate distance in meters; defaults to the largest Fresnel radius.
    pub gate: Option<f64>,
    pub noise: Option<NoiseKind>,
    pub jobs: Option<usize>,
    pub weights: bool,
    pub timing: bool,
}

impl CalibrateOptions {
    pub fn new(scenario: PathBuf, measurements: PathBuf, out: PathBuf) -> Self {
        Self {
            scenario,
            measurements,
            out,
            ground_truth: None,
            dx: DEFAULT_DX_M,
            eta: None,
            transition: DEFAULT_TRANSITION.to_string(),
            gate: None,
            noise: None,
            jobs: None,
            weights: false,
            timing: false,
        }
    }
}

type JobOutput = (MpcReport, Option<Vec<Vec<f64>>>);

struct Job {
    link: usize,
    mpc: usize,
    measurements: Vec<Measurement>,
    truth: Option<f64>,
}

/// Runs the filter on every MPC and writes `report.json`, plus
/// `weights_link<i>_mpc<n>.csv` files on request.
pub fn cmd_calibrate(opts: &CalibrateOptions) -> Result<Report, CliError> {
    let started = Instant::now();
    let loaded = load_scenario(&opts.scenario, opts.noise, None)?;
    let scenario = &loaded.scenario;
    let ids = scenario.mpc_ids();

    let files = io::list_measurement_files(&opts.measurements)?;
    let found: BTreeSet<(usize, usize)> = files.iter().map(|(id, _)| *id).collect();
    let expected: BTreeSet<(usize, usize)> = ids.iter().copied().collect();
    if found != expected {
        return Err(CliError::Mismatch(format!(
            "measurement files in {} do not match the scenario: missing {}, unexpected {}",
            opts.measurements.display(),
            id_list(expected.difference(&found)),
            id_list(found.difference(&expected)),
        )));
    }

    let truth_path = opts.ground_truth.clone().or_else(|| {
        let p = opts.measurements.join(io::GROUND_TRUTH_FILE);
        p.exists().then_some(p)
    });
    let truth = match &truth_path {
        Some(p) => {
            let gt = io::read_ground_truth(p)?;
            check_truth(&gt, scenario, &ids, p)?;
            Some(gt)
        }
        None => None,
    };

    let mut jobs = Vec::with_capacity(files.len());
    for ((link, mpc), path) in &files {
        jobs.push(Job {
            link: *link,
            mpc: *mpc,
            measurements: io::read_measurements(path)?,
            truth: truth.as_ref().and_then(|t| t.get(*link, *mpc)).map(|r| r.arc),
        });
    }

    let variance = match opts.eta {
        Some(_) => None,
        None => Some(presets::transition_variance(&opts.transition)?),
    };
    let run_one = |job: &Job| -> Result<JobOutput, CliError> {
        let e = scenario.ellipse(job.link, job.mpc)?;
        let eta = match (opts.eta, variance) {
            (Some(eta), _) => eta,
            (None, Some(v)) => eta_from_variance(e.circumference, v),
            (None, None) => unreachable!("variance is resolved when eta is absent"),
        };
        let gate = opts.gate.unwrap_or_else(|| loaded.default_gate(e.path_length));
        let cfg = CalibrationConfig {
            dx: opts.dx,
            eta,
            gate_distance: gate,
            record_weights: opts.weights,
        };
        let run = run_calibration(
            &e,
            &job.measurements,
            &scenario.fading,
            &scenario.noise,
            &cfg,
            job.truth,
        )?;
        if run.low_information {
            log::warn!("link {} mpc {}: no measurement passed the gate", job.link, job.mpc);
        }
        let report = MpcReport {
            link: job.link,
            mpc: job.mpc,
            path_length_m: e.path_length,
            circumference_m: e.circumference,
            grid_points: run.state.len(),
            eta,
            gate_m: gate,
            estimate_arc_m: run.estimate.arc,
            rp_x_m: run.point.x,
            rp_y_m: run.point.y,
            final_error_m: run.error,
            multimodal: run.estimate.multimodal,
            mode_count: run.estimate.modes.len(),
            low_information: run.low_information,
            measurements: job.measurements.len(),
            used_measurements: run.used_count(),
            multimodal_steps: run.steps.iter().filter(|s| s.multimodal).count(),
            estimate_trace: run.steps.iter().map(|s| s.estimate).collect(),
            error_trace: run.error_trace(),
        };
        Ok((report, run.weight_history))
    };

    let threads = opts
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    let results: Vec<_> = pool.install(|| jobs.par_iter().map(run_one).collect());

    std::fs::create_dir_all(&opts.out).map_err(|e| CliError::io(&opts.out, e))?;
    let mut mpcs = Vec::with_capacity(results.len());
    for (job, result) in jobs.iter().zip(results) {
        let (report, history) = result?;
        if let Some(h) = history {
            let ks: Vec<u64> = job.measurements.iter().map(|m| m.k).collect();
            let path = opts.out.join(format!("weights_link{}_mpc{}.csv", job.link, job.mpc));
            io::write_atomic(&path, &io::weights_to_csv(&ks, &h))?;
        }
        mpcs.push(report);
    }
    let errors: Vec<f64> = mpcs.iter().filter_map(|m| m.final_error_m).collect();
    let mean_error_m =
        (!errors.is_empty() && errors.len() == mpcs.len()).then(|| errors.iter().sum::<f64>() / errors.len() as f64);
    let report = Report {
        dx_m: opts.dx,
        fading: scenario.fading,
        noise: scenario.noise,
        mpcs,
        mean_error_m,
        duration_s: opts.timing.then(|| started.elapsed().as_secs_f64()),
    };
    io::write_atomic(&opts.out.join("report.json"), &report.to_json())?;
    Ok(report)
}

fn id_list<'a>(ids: impl Iterator<Item = &'a (usize, usize)>) -> String {
    let names: Vec<String> = ids.map(|(l, m)| io::measurement_file_name(*l, *m)).collect();
    if names.is_empty() {
        "none".into()
    } else {
        names.join(", ")
    }
}

fn check_truth(
    truth: &GroundTruth,
    scenario: &ellipse_calib::Scenario,
    ids: &[(usize, usize)],
    path: &Path,
) -> Result<(), CliError> {
    if truth.rps.len() != ids.len() {
        return Err(CliError::Mismatch(format!(
            "{}: {} entries for {} scenario MPCs",
            path.display(),
            truth.rps.len(),
            ids.len()
        )));
    }
    for &(link, mpc) in ids {
        let rp = truth
            .get(link, mpc)
            .ok_or_else(|| CliError::Mismatch(format!("{}: no entry for link {link} mpc {mpc}", path.display())))?;
        let e = scenario.ellipse(link, mpc)?;
        let on_ellipse = e
            .arc_to_point(rp.arc)
            .map(|p| p.distance(rp.point) <= TRUTH_TOLERANCE_M)
            .unwrap_or(false);
        if !on_ellipse {
            return Err(CliError::Mismatch(format!(
                "{}: reflection point of link {link} mpc {mpc} is not on the scenario's delay ellipse",
                path.display()
            )));
        }
    }
    Ok(())
}

/// Per-MPC elliptic errors of a report against ground truth.
pub fn cmd_eval(report_path: &Path, truth_path: &Path) -> Result<EvalSummary, CliError> {
    let bytes = std::fs::read(report_path).map_err(|e| CliError::io(report_path, e))?;
    let report: Report = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::schema(report_path, format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let truth = io::read_ground_truth(truth_path)?;
    evaluate(&report, &truth)
}

pub fn evaluate(report: &Report, truth: &GroundTruth) -> Result<EvalSummary, CliError> {
    let ours: BTreeSet<(usize, usize)> = report.mpcs.iter().map(|m| (m.link, m.mpc)).collect();
    let theirs: BTreeSet<(usize, usize)> = truth.rps.iter().map(|r| (r.link, r.mpc)).collect();
    if ours != theirs || ours.len() != report.mpcs.len() {
        return Err(CliError::Mismatch(format!(
            "report and ground truth list different MPCs: only in report {}, only in ground truth {}",
            id_list(ours.difference(&theirs)),
            id_list(theirs.difference(&ours)),
        )));
    }
    let rows = report
        .mpcs
        .iter()
        .map(|m| {
            let t = truth.get(m.link, m.mpc).expect("identifier sets match");
            EvalRow {
                link: m.link,
                mpc: m.mpc,
                estimate_arc_m: m.estimate_arc_m,
                truth_arc_m: t.arc,
                circumference_m: m.circumference_m,
                error_m: elliptic_error(m.circumference_m, m.estimate_arc_m, t.arc),
            }
        })
        .collect();
    Ok(EvalSummary::from_rows(rows))
}

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub cir: Vec<PathBuf>,
    pub pulse: PathBuf,
    pub delays_ns: Vec<f64>,
    pub idle: Vec<PathBuf>,
    pub out: PathBuf,
}

/// Power change of every MPC in every snapshot relative to the idle
/// channel. Delays are measured from the first sample of a snapshot.
pub fn cmd_extract(opts: &ExtractOptions) -> Result<Vec<PowerChangeRow>, CliError> {
    if opts.idle.is_empty() {
        return Err(SignalError::EmptyIdleSet.into());
    }
    if opts.delays_ns.is_empty() {
        return Err(CliError::Usage("no MPC delays given".into()));
    }
    let pulse = io::read_signal(&opts.pulse)?;
    let delays_s: Vec<f64> = opts.delays_ns.iter().map(|ns| ns * 1e-9).collect();

    let mut idle_amplitudes: Vec<Vec<Complex64>> = vec![Vec::with_capacity(opts.idle.len()); delays_s.len()];
    for path in &opts.idle {
        let y = io::read_signal(path)?;
        let ex = extract_sequentially(&y, &pulse, &delays_s)?;
        for (acc, a) in idle_amplitudes.iter_mut().zip(ex.amplitudes) {
            acc.push(a);
        }
    }
    let mut references = Vec::with_capacity(delays_s.len());
    for (i, amps) in idle_amplitudes.iter().enumerate() {
        let r = reference_power(amps)?;
        if r.phase_unstable {
            log::warn!("mpc {i}: idle-channel phase is unstable; reference level is unreliable");
        }
        references.push(r);
    }

    let mut rows = Vec::with_capacity(opts.cir.len() * delays_s.len());
    for (snapshot, path) in opts.cir.iter().enumerate() {
        let y = io::read_signal(path)?;
        let ex = extract_sequentially(&y, &pulse, &delays_s)?;
        for (mpc, (a, r)) in ex.amplitudes.iter().zip(&references).enumerate() {
            let pc = power_change(*a, r.gamma_db);
            if pc.zero_amplitude {
                log::warn!("snapshot {snapshot} mpc {mpc}: zero amplitude, power change clamped");
            }
            rows.push(PowerChangeRow {
                snapshot,
                mpc,
                delay_ns: opts.delays_ns[mpc],
                amp_re: a.re,
                amp_im: a.im,
                z_db: pc.z_db,
            });
        }
    }
    io::write_atomic(&opts.out, &io::power_changes_to_csv(&rows))?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub input: PathBuf,
    pub out: PathBuf,
    /// Near/far split in meters; defaults to the Fresnel threshold.
    pub threshold: Option<f64>,
    pub wavelength: f64,
    pub zone: u32,
    pub user: UserType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fading: FadingParams,
    pub samples: usize,
    pub ssr: f64,
    pub zero_model_ssr: f64,
    pub iterations: usize,
    pub identifiable: bool,
    pub uniform_noise: NoiseModel,
    pub split_noise: NoiseModel,
    pub far_count: usize,
    pub near_count: usize,
}

/// Fits the fading model, then the noise sigmas of its residuals, and
/// writes the result as JSON.
pub fn cmd_fit(opts: &FitOptions) -> Result<FitReport, CliError> {
    let bytes = std::fs::read(&opts.input).map_err(|e| CliError::io(&opts.input, e))?;
    let rows = io::parse_fit_rows(&bytes, &opts.input)?;
    let threshold = match opts.threshold {
        Some(t) => t,
        None => FresnelConfig::new(opts.wavelength, opts.zone)?.threshold(),
    };
    let report = fit_rows(&rows, threshold, opts.user)?;
    let mut out = serde_json::to_vec_pretty(&report).expect("fit report serializes");
    out.push(b'\n');
    io::write_atomic(&opts.out, &out)?;
    Ok(report)
}

pub fn fit_rows(rows: &[FitRow], threshold_m: f64, user: UserType) -> Result<FitReport, CliError> {
    let samples: Vec<FadingSample> = rows
        .iter()
        .map(|r| FadingSample {
            xi_tx: r.xi_tx_m,
            xi_rx: r.xi_rx_m,
            z_db: r.z_db,
        })
        .collect();
    let fit = fit_fading_params(&samples, user)?;
    if !fit.identifiable {
        log::warn!("no sample lies within 3κ of a path; κ is not constrained by the data");
    }
    let residuals: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (s.xi_min(), s.z_db - fit.params.predicted_change(s.xi_tx, s.xi_rx)))
        .collect();
    let noise = fit_noise_sigmas(&residuals, threshold_m).map_err(|e| match e {
        FadingError::InsufficientData(msg) => FadingError::FitDiverged(format!("noise split: {msg}")),
        other => other,
    })?;
    if noise.degenerate {
        return Err(FadingError::FitDiverged(format!(
            "noise split is degenerate: near-path sigma {} does not exceed far sigma {}",
            noise.sigma_near_db, noise.sigma_far_db
        ))
        .into());
    }
    let all: Vec<f64> = residuals.iter().map(|r| r.1).collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let sigma = (all.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (all.len() as f64 - 1.0)).sqrt();
    Ok(FitReport {
        fading: fit.params,
        samples: samples.len(),
        ssr: fit.ssr,
        zero_model_ssr: fit.zero_model_ssr,
        iterations: fit.iterations,
        identifiable: fit.identifiable,
        uniform_noise: NoiseModel::uniform(sigma)?,
        split_noise: noise.to_model(threshold_m)?,
        far_count: noise.far_count,
        near_count: noise.near_count,
    })
}

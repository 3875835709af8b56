//! Dataset files: measurements, ground truth, channel snapshots, power
//! changes and weight histories.

use std::io::Write;
use std::path::{Path, PathBuf};

use ellipse_calib::{GroundTruth, Measurement, RpTruth, SampledSignal, Vec2};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MEASUREMENT_HEADER: [&str; 5] = ["k", "time_s", "user_x_m", "user_y_m", "z_db"];
pub const GROUND_TRUTH_HEADER: [&str; 5] = ["link", "mpc", "rp_arc_m", "rp_x_m", "rp_y_m"];
pub const CIR_HEADER: [&str; 3] = ["index", "re", "im"];
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
const CIR_INTERVAL_KEY: &str = "# sample_interval_s=";

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// `(link, mpc)`.
pub type MpcId = (usize, usize);

pub fn measurement_file_name(link: usize, mpc: usize) -> String {
    format!("link{link}_mpc{mpc}.csv")
}

/// `(link, mpc)` of a `link<i>_mpc<n>.csv` file name.
pub fn parse_measurement_file_name(name: &str) -> Option<MpcId> {
    let rest = name.strip_prefix("link")?.strip_suffix(".csv")?;
    let (link, mpc) = rest.split_once("_mpc")?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !(digits(link) && digits(mpc)) {
        return None;
    }
    Some((link.parse().ok()?, mpc.parse().ok()?))
}

/// Measurement files in `dir`, sorted by `(link, mpc)`.
pub fn list_measurement_files(dir: &Path) -> Result<Vec<(MpcId, PathBuf)>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let name = entry.file_name();
        if let Some(id) = name.to_str().and_then(parse_measurement_file_name) {
            out.push((id, entry.path()));
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasurementRow {
    k: u64,
    time_s: f64,
    user_x_m: f64,
    user_y_m: f64,
    z_db: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct GroundTruthRow {
    link: usize,
    mpc: usize,
    rp_arc_m: f64,
    rp_x_m: f64,
    rp_y_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CirRow {
    index: usize,
    re: f64,
    im: f64,
}

fn to_csv<T: Serialize>(header: &[&str], rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn from_csv<T: DeserializeOwned>(bytes: &[u8], header: &[&str], origin: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let found = r
        .headers()
        .map_err(|e| CliError::schema(origin, e.to_string()))?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CliError::schema(
            origin,
            format!(
                "line 1: expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| CliError::schema(origin, csv_message(&e))))
        .collect()
}

fn csv_message(e: &csv::Error) -> String {
    match e.position() {
        Some(pos) => format!("line {}: {}", pos.line(), e.kind_message()),
        None => e.to_string(),
    }
}

trait KindMessage {
    fn kind_message(&self) -> String;
}

impl KindMessage for csv::Error {
    fn kind_message(&self) -> String {
        match self.kind() {
            csv::ErrorKind::Deserialize { err, .. } => match err.field() {
                Some(f) => format!("field {}: {}", f + 1, err.kind()),
                None => err.kind().to_string(),
            },
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                format!("expected {expected_len} fields, found {len}")
            }
            _ => self.to_string(),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn measurements_to_csv(measurements: &[Measurement]) -> Vec<u8> {
    to_csv(
        &MEASUREMENT_HEADER,
        measurements.iter().map(|m| MeasurementRow {
            k: m.k,
            time_s: m.time_s,
            user_x_m: m.user.x,
            user_y_m: m.user.y,
            z_db: m.z_db,
        }),
    )
}

pub fn parse_measurements(bytes: &[u8], origin: &Path) -> Result<Vec<Measurement>, CliError> {
    let rows: Vec<MeasurementRow> = from_csv(bytes, &MEASUREMENT_HEADER, origin)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let m = Measurement::new(r.k, r.time_s, Vec2::new(r.user_x_m, r.user_y_m), r.z_db);
            if !(m.time_s.is_finite() && m.user.is_finite() && m.z_db.is_finite()) {
                return Err(CliError::schema(origin, format!("line {}: non-finite value", i + 2)));
            }
            Ok(m)
        })
        .collect()
}

pub fn read_measurements(path: &Path) -> Result<Vec<Measurement>, CliError> {
    parse_measurements(&read_file(path)?, path)
}

pub fn ground_truth_to_csv(truth: &GroundTruth) -> Vec<u8> {
    to_csv(
        &GROUND_TRUTH_HEADER,
        truth.rps.iter().map(|r| GroundTruthRow {
            link: r.link,
            mpc: r.mpc,
            rp_arc_m: r.arc,
            rp_x_m: r.point.x,
            rp_y_m: r.point.y,
        }),
    )
}

pub fn parse_ground_truth(bytes: &[u8], origin: &Path) -> Result<GroundTruth, CliError> {
    let rows: Vec<GroundTruthRow> = from_csv(bytes, &GROUND_TRUTH_HEADER, origin)?;
    let mut rps: Vec<RpTruth> = Vec::with_capacity(rows.len());
    for (i, r) in rows.into_iter().enumerate() {
        if rps.iter().any(|p| p.link == r.link && p.mpc == r.mpc) {
            return Err(CliError::schema(
                origin,
                format!("line {}: duplicate entry for link {} mpc {}", i + 2, r.link, r.mpc),
            ));
        }
        rps.push(RpTruth {
            link: r.link,
            mpc: r.mpc,
            arc: r.rp_arc_m,
            point: Vec2::new(r.rp_x_m, r.rp_y_m),
        });
    }
    Ok(GroundTruth { rps })
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth, CliError> {
    parse_ground_truth(&read_file(path)?, path)
}

/// Snapshot file: a `# sample_interval_s=<seconds>` line followed by
/// `index,re,im` rows.
pub fn signal_to_csv(signal: &SampledSignal) -> Vec<u8> {
    let mut out = format!("{CIR_INTERVAL_KEY}{}\n", signal.sample_interval_s).into_bytes();
    out.extend(to_csv(
        &CIR_HEADER,
        signal.samples.iter().enumerate().map(|(index, c)| CirRow {
            index,
            re: c.re,
            im: c.im,
        }),
    ));
    out
}

pub fn parse_signal(bytes: &[u8], origin: &Path) -> Result<SampledSignal, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|e| CliError::schema(origin, format!("not UTF-8: {e}")))?;
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let interval: f64 = first
        .trim_end_matches('\r')
        .strip_prefix(CIR_INTERVAL_KEY)
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| CliError::schema(origin, format!("line 1: expected `{CIR_INTERVAL_KEY}<seconds>`")))?;
    let rows: Vec<CirRow> = from_csv(rest.as_bytes(), &CIR_HEADER, origin).map_err(|e| shift_lines(e, 1))?;
    for (i, r) in rows.iter().enumerate() {
        if r.index != i {
            return Err(CliError::schema(
                origin,
                format!("line {}: sample index {} out of sequence", i + 3, r.index),
            ));
        }
    }
    let samples = rows.into_iter().map(|r| Complex64::new(r.re, r.im)).collect();
    SampledSignal::new(samples, interval).map_err(|e| CliError::schema(origin, e.to_string()))
}

fn shift_lines(e: CliError, by: usize) -> CliError {
    match e {
        CliError::Schema { path, message } => {
            let message = match message.strip_prefix("line ").and_then(|m| m.split_once(':')) {
                Some((n, tail)) if n.parse::<usize>().is_ok() => {
                    format!("line {}:{tail}", n.parse::<usize>().unwrap() + by)
                }
                _ => message,
            };
            CliError::Schema { path, message }
        }
        other => other,
    }
}

pub fn read_signal(path: &Path) -> Result<SampledSignal, CliError> {
    parse_signal(&read_file(path)?, path)
}

/// One extracted power change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerChangeRow {
    pub snapshot: usize,
    pub mpc: usize,
    pub delay_ns: f64,
    pub amp_re: f64,
    pub amp_im: f64,
    pub z_db: f64,
}

pub const POWER_CHANGE_HEADER: [&str; 6] = ["snapshot", "mpc", "delay_ns", "amp_re", "amp_im", "z_db"];

pub fn power_changes_to_csv(rows: &[PowerChangeRow]) -> Vec<u8> {
    to_csv(&POWER_CHANGE_HEADER, rows.iter())
}

pub fn parse_power_changes(bytes: &[u8], origin: &Path) -> Result<Vec<PowerChangeRow>, CliError> {
    from_csv(bytes, &POWER_CHANGE_HEADER, origin)
}

/// Fit input: power changes with the excess path lengths at which they
/// were observed. Extra columns are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub xi_tx_m: f64,
    pub xi_rx_m: f64,
    pub z_db: f64,
}

pub fn fit_rows_to_csv(rows: &[FitRow]) -> Vec<u8> {
    to_csv(&["xi_tx_m", "xi_rx_m", "z_db"], rows.iter())
}

pub fn parse_fit_rows(bytes: &[u8], origin: &Path) -> Result<Vec<FitRow>, CliError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers = r
        .headers()
        .map_err(|e| CliError::schema(origin, e.to_string()))?
        .clone();
    for col in ["xi_tx_m", "xi_rx_m", "z_db"] {
        if !headers.iter().any(|h| h == col) {
            return Err(CliError::schema(origin, format!("line 1: missing column `{col}`")));
        }
    }
    let rows: Vec<FitRow> = r
        .deserialize()
        .map(|row| row.map_err(|e| CliError::schema(origin, csv_message(&e))))
        .collect::<Result<_, _>>()?;
    for (i, row) in rows.iter().enumerate() {
        if !(row.xi_tx_m.is_finite() && row.xi_rx_m.is_finite() && row.z_db.is_finite()) {
            return Err(CliError::schema(origin, format!("line {}: non-finite value", i + 2)));
        }
        if row.xi_tx_m < 0.0 || row.xi_rx_m < 0.0 {
            return Err(CliError::schema(
                origin,
                format!("line {}: negative excess path", i + 2),
            ));
        }
    }
    Ok(rows)
}

/// One row per step: `k` followed by the grid weights.
pub fn weights_to_csv(ks: &[u64], history: &[Vec<f64>]) -> Vec<u8> {
    let n = history.first().map_or(0, Vec::len);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("k".to_string())
        .chain((0..n).map(|i| format!("w{i}")))
        .collect();
    w.write_record(&header).expect("in-memory write");
    let mut record = Vec::with_capacity(n + 1);
    for (k, weights) in ks.iter().zip(history) {
        record.clear();
        record.push(k.to_string());
        record.extend(weights.iter().map(|v| v.to_string()));
        w.write_record(&record).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

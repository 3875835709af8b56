use std::fmt::Write as _;

use ellipse_calib::{FadingParams, NoiseModel};
use serde::{Deserialize, Serialize};

/// Calibration result for one MPC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcReport {
    pub link: usize,
    pub mpc: usize,
    pub path_length_m: f64,
    pub circumference_m: f64,
    pub grid_points: usize,
    pub eta: f64,
    pub gate_m: f64,
    pub estimate_arc_m: f64,
    pub rp_x_m: f64,
    pub rp_y_m: f64,
    pub final_error_m: Option<f64>,
    pub multimodal: bool,
    pub mode_count: usize,
    pub low_information: bool,
    pub measurements: usize,
    pub used_measurements: usize,
    pub multimodal_steps: usize,
    pub estimate_trace: Vec<f64>,
    pub error_trace: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub dx_m: f64,
    pub fading: FadingParams,
    pub noise: NoiseModel,
    pub mpcs: Vec<MpcReport>,
    pub mean_error_m: Option<f64>,
    /// Wall-clock time of the calibration; only recorded on request so
    /// that reports stay reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

impl Report {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }
}

/// Elliptic error of one MPC against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub link: usize,
    pub mpc: usize,
    pub estimate_arc_m: f64,
    pub truth_arc_m: f64,
    pub circumference_m: f64,
    pub error_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub rows: Vec<EvalRow>,
    pub mean_error_m: f64,
    pub max_error_m: f64,
}

impl EvalSummary {
    pub fn from_rows(rows: Vec<EvalRow>) -> Self {
        let n = rows.len().max(1) as f64;
        let mean_error_m = rows.iter().map(|r| r.error_m).sum::<f64>() / n;
        let max_error_m = rows.iter().map(|r| r.error_m).fold(0.0, f64::max);
        Self {
            rows,
            mean_error_m,
            max_error_m,
        }
    }

    pub fn exceeding(&self, bound: f64) -> usize {
        self.rows.iter().filter(|r| r.error_m > bound).count()
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "{:>4} {:>4} {:>12} {:>12} {:>12}",
            "link", "mpc", "estimate_m", "truth_m", "error_m"
        )
        .unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{:>4} {:>4} {:>12.4} {:>12.4} {:>12.4}",
                r.link, r.mpc, r.estimate_arc_m, r.truth_arc_m, r.error_m
            )
            .unwrap();
        }
        writeln!(
            s,
            "mean error {:.4} m, max error {:.4} m",
            self.mean_error_m, self.max_error_m
        )
        .unwrap();
        s
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(error_m: f64) -> EvalRow {
        EvalRow {
            link: 0,
            mpc: 0,
            estimate_arc_m: 0.0,
            truth_arc_m: error_m,
            circumference_m: 10.0,
            error_m,
        }
    }

    #[test]
    fn summary_statistics() {
        let s = EvalSummary::from_rows(vec![row(0.0), row(5.0), row(1.0)]);
        assert_eq!(s.mean_error_m, 2.0);
        assert_eq!(s.max_error_m, 5.0);
        assert_eq!(s.exceeding(0.5), 2);
        assert!(s.table().contains("mean error 2.0000 m, max error 5.0000 m"));
    }

    #[test]
    fn duration_omitted_unless_set() {
        let r = Report {
            dx_m: 0.05,
            fading: FadingParams::new(-2.5, 0.015, ellipse_calib::UserType::Pedestrian).unwrap(),
            noise: NoiseModel::uniform(1.0).unwrap(),
            mpcs: vec![],
            mean_error_m: None,
            duration_s: None,
        };
        let text = String::from_utf8(r.to_json()).unwrap();
        assert!(!text.contains("duration_s"));
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}

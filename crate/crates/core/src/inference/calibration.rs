use serde::{Deserialize, Serialize};

use crate::fading::{FadingParams, NoiseModel};
use crate::geometry::{DelayEllipse, Vec2};

use super::pmf::{Estimate, PmfState, TransitionKernel};
use super::{elliptic_error, gate_measurement, InferenceError, Measurement};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// Requested grid spacing in meters.
    pub dx: f64,
    pub eta: f64,
    /// Measurements closer than this to the ellipse are skipped.
    pub gate_distance: f64,
    /// Keep a copy of the weights after every step.
    pub record_weights: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: u64,
    pub time_s: f64,
    /// `false` when the gate rejected the measurement.
    pub used: bool,
    pub estimate: f64,
    pub multimodal: bool,
    pub error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CalibrationRun {
    pub steps: Vec<StepRecord>,
    pub state: PmfState,
    pub estimate: Estimate,
    pub point: Vec2,
    pub error: Option<f64>,
    /// No measurement survived gating; the posterior is the uniform prior.
    pub low_information: bool,
    pub weight_history: Option<Vec<Vec<f64>>>,
}

impl CalibrationRun {
    pub fn used_count(&self) -> usize {
        self.steps.iter().filter(|s| s.used).count()
    }

    pub fn error_trace(&self) -> Option<Vec<f64>> {
        self.steps.iter().map(|s| s.error).collect()
    }
}

/// Runs gate, predict, update and estimate for each measurement in order.
pub fn run_calibration(
    ellipse: &DelayEllipse,
    measurements: &[Measurement],
    fading: &FadingParams,
    noise: &NoiseModel,
    config: &CalibrationConfig,
    truth: Option<f64>,
) -> Result<CalibrationRun, InferenceError> {
    let mut state = PmfState::new(ellipse, config.dx)?;
    let kernel = TransitionKernel::new(state.len(), config.eta)?;
    let l = ellipse.circumference;
    let mut steps = Vec::with_capacity(measurements.len());
    let mut history = config.record_weights.then(|| Vec::with_capacity(measurements.len()));
    let mut used_any = false;

    for m in measurements {
        let used = gate_measurement(ellipse, m, config.gate_distance);
        state.predict(&kernel);
        if used {
            state.update(m, fading, noise)?;
            used_any = true;
        } else {
            log::debug!("step {}: user within gate, measurement skipped", m.k);
        }
        let est = state.mmse();
        steps.push(StepRecord {
            k: m.k,
            time_s: m.time_s,
            used,
            estimate: est.arc,
            multimodal: est.multimodal,
            error: truth.map(|t| elliptic_error(l, est.arc, t)),
        });
        if let Some(h) = history.as_mut() {
            h.push(state.weights().to_vec());
        }
    }

    let estimate = state.mmse();
    if !used_any {
        log::warn!("no measurement passed the gate; estimate carries no information");
    }
    if estimate.multimodal {
        log::warn!(
            "posterior is multimodal ({} modes); estimate at {:.3} m may sit on a mirror ambiguity",
            estimate.modes.len(),
            estimate.arc
        );
    }
    let point = ellipse.arc_to_point(estimate.arc)?;
    Ok(CalibrationRun {
        steps,
        error: truth.map(|t| elliptic_error(l, estimate.arc, t)),
        point,
        estimate,
        state,
        low_information: !used_any,
        weight_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::UserType;
    use crate::geometry::{Mpc, NetworkLink};

    fn setup() -> (DelayEllipse, FadingParams, NoiseModel, CalibrationConfig) {
        let link = NetworkLink::new(Vec2::new(-3.0, 0.0), Vec2::new(3.0, 0.0)).unwrap();
        let e = DelayEllipse::new(link, Mpc::from_path_length(10.0)).unwrap();
        let f = FadingParams::new(-2.5, 0.05, UserType::Pedestrian).unwrap();
        let n = NoiseModel::uniform(0.3).unwrap();
        let c = CalibrationConfig {
            dx: 0.05,
            eta: 1e8,
            gate_distance: 0.3,
            record_weights: true,
        };
        (e, f, n, c)
    }

    #[test]
    fn everything_gated_is_low_information() {
        let (e, f, n, c) = setup();
        let ms: Vec<Measurement> = (0..5)
            .map(|k| Measurement::new(k, k as f64, e.arc_to_point(1.0).unwrap(), -1.0))
            .collect();
        let run = run_calibration(&e, &ms, &f, &n, &c, None).unwrap();
        assert!(run.low_information);
        assert!(run.state.is_uniform());
        assert_eq!(run.estimate.arc, 0.0);
        assert_eq!(run.used_count(), 0);

        let run = run_calibration(&e, &[], &f, &n, &c, Some(2.0)).unwrap();
        assert!(run.low_information);
        assert_eq!(run.error, Some(2.0));
    }

    #[test]
    fn walking_both_legs_locates_the_rp() {
        let (e, f, n, c) = setup();
        let rp = Vec2::new(0.0, 4.0);
        let truth = e.point_to_arc(rp);
        let walk = |from: Vec2, to: Vec2, k0: u64| -> Vec<Measurement> {
            (0..=200)
                .map(|i| {
                    let t = i as f64 / 200.0;
                    let u = from + (to - from) * t;
                    let xi = e.excess_paths(rp, u).unwrap();
                    Measurement::new(k0 + i, t, u, f.predicted_change(xi.tx, xi.rx))
                })
                .collect()
        };
        let mut ms = walk(Vec2::new(-3.0, 2.0), Vec2::new(0.0, 2.0), 0);
        ms.extend(walk(Vec2::new(0.5, 2.2), Vec2::new(3.0, 1.5), 1000));
        let run = run_calibration(&e, &ms, &f, &n, &c, Some(truth)).unwrap();
        assert!(!run.low_information);
        assert!(run.error.unwrap() <= 2.0 * c.dx, "{:?}", run.error);
        assert_eq!(run.weight_history.as_ref().unwrap().len(), ms.len());
        assert!(run.point.distance(rp) < 0.2);
    }

    #[test]
    fn repeat_runs_are_bit_identical() {
        let (e, f, n, c) = setup();
        let ms: Vec<Measurement> = (0..50)
            .map(|k| {
                Measurement::new(
                    k,
                    0.1 * k as f64,
                    Vec2::new(-2.0 + 0.08 * k as f64, 1.7),
                    -0.1 * (k % 7) as f64,
                )
            })
            .collect();
        let a = run_calibration(&e, &ms, &f, &n, &c, None).unwrap();
        let b = run_calibration(&e, &ms, &f, &n, &c, None).unwrap();
        let bits = |r: &CalibrationRun| -> Vec<u64> {
            r.weight_history
                .as_ref()
                .unwrap()
                .iter()
                .flatten()
                .map(|w| w.to_bits())
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }
}

//! Bayesian mapping of a reflection point along its delay ellipse.
//!
//! The state is the arc length of the reflection point. Its posterior is
//! held by a point-mass filter on a fixed equidistant grid; the transition
//! prior is an elliptic normal (a von Mises density stretched over the
//! circumference) and the likelihood comes from the fading model.

mod calibration;
mod elliptic_normal;
pub mod modes;
mod pmf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrapped_distance, DelayEllipse, GeometryError, Vec2};

pub use calibration::{run_calibration, CalibrationConfig, CalibrationRun, StepRecord};
pub use elliptic_normal::{bessel_i0e, eta_from_variance, EllipticNormal};
pub use modes::{find_modes, Mode};
pub use pmf::{expected_cost, Estimate, PmfGrid, PmfState, TransitionKernel, MULTIMODAL_RATIO};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("invalid concentration {0}")]
    InvalidConcentration(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite measurement at step {0}")]
    NonFiniteMeasurement(u64),
    #[error("all likelihoods underflowed at step {0}")]
    NumericalUnderflow(u64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A power-change observation with the user's reported position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub k: u64,
    pub time_s: f64,
    pub user: Vec2,
    pub z_db: f64,
}

impl Measurement {
    pub fn new(k: u64, time_s: f64, user: Vec2, z_db: f64) -> Self {
        Self { k, time_s, user, z_db }
    }
}

/// Shortest distance along the ellipse between an estimate and the truth.
pub fn elliptic_error(circumference: f64, estimate: f64, truth: f64) -> f64 {
    wrapped_distance(circumference, estimate, truth)
}

/// `true` if the measurement should be used, `false` if the user stands
/// within `gate_distance` of the ellipse.
pub fn gate_measurement(ellipse: &DelayEllipse, m: &Measurement, gate_distance: f64) -> bool {
    gate_distance <= 0.0 || ellipse.distance_to(m.user) >= gate_distance
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Mpc, NetworkLink};

    #[test]
    fn error_examples() {
        assert!((elliptic_error(97.633, 0.1, 97.533) - 0.2).abs() < 1e-9);
        assert_eq!(elliptic_error(97.633, 12.0, 12.0), 0.0);
        assert_eq!(elliptic_error(100.0, 10.0, 60.0), 50.0);
    }

    #[test]
    fn gate_examples() {
        let link = NetworkLink::new(Vec2::new(-3.0, 0.0), Vec2::new(3.0, 0.0)).unwrap();
        let e = DelayEllipse::new(link, Mpc::from_path_length(10.0)).unwrap();
        let on = Measurement::new(0, 0.0, Vec2::new(0.0, 4.0), 0.0);
        let center = Measurement::new(1, 0.0, Vec2::ZERO, 0.0);
        assert!(!gate_measurement(&e, &on, 0.5));
        assert!(gate_measurement(&e, &center, 0.5));
        assert!(gate_measurement(&e, &on, 0.0));
    }
}

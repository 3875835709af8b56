//! Reflection-point calibration for multipath-enhanced device-free
//! localization.
//!
//! A single-bounce multipath component constrains its reflection point to a
//! delay ellipse around the transmitter and receiver. While a user walks a
//! known trajectory, the measured power changes of the component are fed
//! through an exponential fading model into a point-mass filter on the
//! ellipse arc, which converges on the reflection point.
//!
//! ```
//! use ellipse_calib::{DelayEllipse, Mpc, NetworkLink, Vec2};
//!
//! let link = NetworkLink::new(Vec2::new(-3.0, 0.0), Vec2::new(3.0, 0.0)).unwrap();
//! let e = DelayEllipse::new(link, Mpc::from_path_length(10.0)).unwrap();
//! let top = e.arc_to_point(e.circumference / 4.0).unwrap();
//! assert!(top.distance(Vec2::new(0.0, 4.0)) < 1e-9);
//! ```

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fading;
pub mod geometry;
pub mod inference;
pub mod presets;
pub mod scenario;
pub mod signal;

pub use fading::{
    fit_fading_params, fit_noise_sigmas, FadingError, FadingFit, FadingParams, FadingSample, FresnelConfig, NoiseFit,
    NoiseModel, UserType,
};
pub use geometry::{
    wrapped_distance, DelayEllipse, ExcessPaths, GeometryError, Mpc, NetworkLink, Surface, Vec2, VirtualNodes,
};
pub use inference::{
    elliptic_error, gate_measurement, run_calibration, CalibrationConfig, CalibrationRun, EllipticNormal, Estimate,
    InferenceError, Measurement, PmfState, StepRecord, TransitionKernel,
};
pub use scenario::{
    derive_ground_truth, sample_trajectory, synthesize_measurements, GroundTruth, LinkSetup, MpcMeasurements, RpTruth,
    Scenario, ScenarioError, Trajectory,
};
pub use signal::{extract_sequentially, power_change, project_amplitude, reference_power, SampledSignal, SignalError};

//! Empirical exponential fading model for single-bounce MPCs.
//!
//! A user at excess path lengths `ξ_tx`, `ξ_rx` from the two legs of a
//! reflected path changes the MPC power by
//!
//! ```text
//! f = φ · (exp(−ξ_tx / κ) + exp(−ξ_rx / κ))     [dB]
//! ```
//!
//! with measurement noise whose standard deviation switches from `σ_far` to
//! `σ_near` once the smaller excess drops to the Fresnel threshold
//! `ξ_th = n_F · λ / 2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FadingError {
    #[error("invalid fading parameters: {0}")]
    InvalidParams(String),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("fit diverged: {0}")]
    FitDiverged(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserType {
    Pedestrian,
    Bike,
    Car,
    Custom,
}

impl fmt::Display for UserType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UserType::Pedestrian => "pedestrian",
            UserType::Bike => "bike",
            UserType::Car => "car",
            UserType::Custom => "custom",
        })
    }
}

impl FromStr for UserType {
    type Err = FadingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pedestrian" => Ok(UserType::Pedestrian),
            "bike" => Ok(UserType::Bike),
            "car" => Ok(UserType::Car),
            "custom" => Ok(UserType::Custom),
            other => Err(FadingError::UnknownPreset(other.to_string())),
        }
    }
}

/// Signed maximum power change `φ` (dB) and spatial decay rate `κ` (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    pub phi_db: f64,
    pub kappa_m: f64,
    pub user_type: UserType,
}

impl FadingParams {
    pub fn new(phi_db: f64, kappa_m: f64, user_type: UserType) -> Result<Self, FadingError> {
        if !phi_db.is_finite() || phi_db == 0.0 {
            return Err(FadingError::InvalidParams(format!(
                "phi must be finite and nonzero, got {phi_db}"
            )));
        }
        if !kappa_m.is_finite() || kappa_m <= 0.0 {
            return Err(FadingError::InvalidParams(format!(
                "kappa must be positive, got {kappa_m}"
            )));
        }
        Ok(Self {
            phi_db,
            kappa_m,
            user_type,
        })
    }

    /// Looks up a preset by table name and user type. Preset magnitudes are
    /// negated so that `phi_db` is an attenuation.
    pub fn preset(name: &str, user_type: UserType) -> Result<Self, FadingError> {
        crate::presets::fading(name, user_type)
    }

    /// Predicted power change for the given excess path lengths.
    #[inline]
    pub fn predicted_change(&self, xi_tx: f64, xi_rx: f64) -> f64 {
        debug_assert!(xi_tx >= -1e-9 && xi_rx >= -1e-9, "negative excess path");
        let inv = 1.0 / self.kappa_m;
        self.phi_db * ((-xi_tx.max(0.0) * inv).exp() + (-xi_rx.max(0.0) * inv).exp())
    }
}

/// Free-function form of [`FadingParams::predicted_change`].
pub fn predicted_change(params: &FadingParams, xi_tx: f64, xi_rx: f64) -> f64 {
    params.predicted_change(xi_tx, xi_rx)
}

/// Standard deviation of the power-change noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Uniform {
        sigma_db: f64,
    },
    LocationDependent {
        sigma_far_db: f64,
        sigma_near_db: f64,
        threshold_m: f64,
    },
}

impl NoiseModel {
    pub fn uniform(sigma_db: f64) -> Result<Self, FadingError> {
        if !(sigma_db.is_finite() && sigma_db > 0.0) {
            return Err(FadingError::InvalidNoise(format!(
                "sigma must be positive, got {sigma_db}"
            )));
        }
        Ok(NoiseModel::Uniform { sigma_db })
    }

    pub fn location_dependent(sigma_far_db: f64, sigma_near_db: f64, threshold_m: f64) -> Result<Self, FadingError> {
        let all_finite = sigma_far_db.is_finite() && sigma_near_db.is_finite() && threshold_m.is_finite();
        if !all_finite || sigma_far_db <= 0.0 || sigma_near_db <= 0.0 {
            return Err(FadingError::InvalidNoise(format!(
                "sigmas must be positive, got far={sigma_far_db} near={sigma_near_db}"
            )));
        }
        if sigma_far_db >= sigma_near_db {
            return Err(FadingError::InvalidNoise(format!(
                "near-path sigma {sigma_near_db} must exceed far sigma {sigma_far_db}"
            )));
        }
        if threshold_m <= 0.0 {
            return Err(FadingError::InvalidNoise(format!(
                "threshold must be positive, got {threshold_m}"
            )));
        }
        Ok(NoiseModel::LocationDependent {
            sigma_far_db,
            sigma_near_db,
            threshold_m,
        })
    }

    /// σ for a user whose smaller excess path length is `xi_min`. The
    /// threshold itself belongs to the near-path regime.
    #[inline]
    pub fn sigma(&self, xi_min: f64) -> f64 {
        match *self {
            NoiseModel::Uniform { sigma_db } => sigma_db,
            NoiseModel::LocationDependent {
                sigma_far_db,
                sigma_near_db,
                threshold_m,
            } => {
                if xi_min <= threshold_m {
                    sigma_near_db
                } else {
                    sigma_far_db
                }
            }
        }
    }

    pub fn is_location_dependent(&self) -> bool {
        matches!(self, NoiseModel::LocationDependent { .. })
    }
}

pub fn noise_sigma(model: &NoiseModel, xi_min: f64) -> f64 {
    model.sigma(xi_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FresnelConfig {
    pub wavelength_m: f64,
    pub zone: u32,
}

impl FresnelConfig {
    /// Pedestrian default: third Fresnel zone.
    pub const DEFAULT_ZONE: u32 = 3;

    pub fn new(wavelength_m: f64, zone: u32) -> Result<Self, FadingError> {
        if !(wavelength_m.is_finite() && wavelength_m > 0.0) || zone == 0 {
            return Err(FadingError::InvalidParams(format!(
                "wavelength must be positive and zone >= 1, got {wavelength_m} / {zone}"
            )));
        }
        Ok(Self { wavelength_m, zone })
    }

    /// `n_F · λ / 2`.
    pub fn threshold(&self) -> f64 {
        self.zone as f64 * self.wavelength_m / 2.0
    }

    /// `sqrt(n_F · λ · d) / 2` for a path of length `d`.
    pub fn max_radius(&self, path_length: f64) -> f64 {
        (self.zone as f64 * self.wavelength_m * path_length).sqrt() / 2.0
    }
}

pub fn fresnel_threshold(cfg: &FresnelConfig) -> f64 {
    cfg.threshold()
}

pub fn fresnel_max_radius(cfg: &FresnelConfig, path_length: f64) -> f64 {
    cfg.max_radius(path_length)
}

/// One fitting observation: excess path lengths and measured change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingSample {
    pub xi_tx: f64,
    pub xi_rx: f64,
    pub z_db: f64,
}

impl FadingSample {
    pub fn xi_min(&self) -> f64 {
        self.xi_tx.min(self.xi_rx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FadingFit {
    pub params: FadingParams,
    pub ssr: f64,
    pub zero_model_ssr: f64,
    pub iterations: usize,
    /// False when no sample lies within `3κ̂` of a path, so `κ̂` is not
    /// constrained by the data.
    pub identifiable: bool,
}

const MIN_FIT_SAMPLES: usize = 10;
/// Changes smaller than this (dB) carry no usable signal.
const MIN_SIGNAL_DB: f64 = 1e-6;

/// Least-squares fit of `(φ, κ)` by Levenberg-Marquardt over `(φ, ln κ)`.
pub fn fit_fading_params(samples: &[FadingSample], user_type: UserType) -> Result<FadingFit, FadingError> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(FadingError::InsufficientData(format!(
            "need at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|s| !(s.xi_tx.is_finite() && s.xi_rx.is_finite() && s.z_db.is_finite()))
    {
        return Err(FadingError::InsufficientData("non-finite sample".into()));
    }
    let zero_model_ssr: f64 = samples.iter().map(|s| s.z_db * s.z_db).sum();
    let extreme = samples
        .iter()
        .map(|s| s.z_db)
        .fold(0.0_f64, |acc, z| if z.abs() > acc.abs() { z } else { acc });
    if extreme.abs() < MIN_SIGNAL_DB {
        return Err(FadingError::FitDiverged(
            "no measurable power change in the data".into(),
        ));
    }

    let phi0 = extreme;
    let mut strong: Vec<f64> = samples
        .iter()
        .filter(|s| s.z_db.abs() > 0.5 * phi0.abs())
        .map(|s| s.xi_min())
        .filter(|x| *x > 0.0)
        .collect();
    if strong.is_empty() {
        strong = samples.iter().map(|s| s.xi_min()).filter(|x| *x > 0.0).collect();
    }
    let kappa0 = if strong.is_empty() { 1e-3 } else { median(&mut strong) };

    let ssr_at = |phi: f64, log_kappa: f64| -> f64 {
        let inv = (-log_kappa).exp();
        samples
            .iter()
            .map(|s| {
                let f = phi * ((-s.xi_tx.max(0.0) * inv).exp() + (-s.xi_rx.max(0.0) * inv).exp());
                (s.z_db - f).powi(2)
            })
            .sum()
    };

    let mut phi = phi0;
    let mut log_kappa = kappa0.ln();
    let mut ssr = ssr_at(phi, log_kappa);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for _ in 0..500 {
        iterations += 1;
        // normal equations J^T J δ = J^T r for the two parameters
        let inv = (-log_kappa).exp();
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for s in samples {
            let ut = s.xi_tx.max(0.0) * inv;
            let ur = s.xi_rx.max(0.0) * inv;
            let et = (-ut).exp();
            let er = (-ur).exp();
            let j_phi = et + er;
            let j_logk = phi * (et * ut + er * ur);
            let r = s.z_db - phi * j_phi;
            a11 += j_phi * j_phi;
            a12 += j_phi * j_logk;
            a22 += j_logk * j_logk;
            g1 += j_phi * r;
            g2 += j_logk * r;
        }
        let mut improved = false;
        let mut converged = false;
        for _ in 0..40 {
            let d11 = a11 + lambda * a11.max(1e-300);
            let d22 = a22 + lambda * a22.max(1e-300);
            let det = d11 * d22 - a12 * a12;
            if det == 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let dphi = (g1 * d22 - a12 * g2) / det;
            let dlogk = (d11 * g2 - a12 * g1) / det;
            let trial_phi = phi + dphi;
            let trial_logk = log_kappa + dlogk.clamp(-5.0, 5.0);
            let trial = ssr_at(trial_phi, trial_logk);
            if trial.is_finite() && trial <= ssr {
                let rel = (ssr - trial) / ssr.max(1e-300);
                converged = dphi.abs() <= 1e-14 * phi.abs().max(1e-12) && dlogk.abs() <= 1e-14
                    || rel < 1e-16 && (dphi.abs() <= 1e-10 * phi.abs() && dlogk.abs() <= 1e-10);
                phi = trial_phi;
                log_kappa = trial_logk;
                ssr = trial;
                lambda = (lambda * 0.1).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !improved || converged || ssr == 0.0 {
            break;
        }
    }

    let kappa = log_kappa.exp();
    if !(phi.is_finite() && kappa.is_finite() && kappa > 0.0 && phi != 0.0) {
        return Err(FadingError::FitDiverged(format!(
            "non-finite estimate phi={phi}, kappa={kappa}"
        )));
    }
    if !(ssr < zero_model_ssr) {
        return Err(FadingError::FitDiverged(format!(
            "residual {ssr} does not improve on the zero model {zero_model_ssr}"
        )));
    }
    let identifiable = samples.iter().any(|s| s.xi_min() < 3.0 * kappa);
    Ok(FadingFit {
        params: FadingParams::new(phi, kappa, user_type)?,
        ssr,
        zero_model_ssr,
        iterations,
        identifiable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseFit {
    pub sigma_far_db: f64,
    pub sigma_near_db: f64,
    pub far_count: usize,
    pub near_count: usize,
    /// Set when a sigma is zero or the near-path sigma does not exceed the
    /// far one; such a fit cannot form a [`NoiseModel`].
    pub degenerate: bool,
}

impl NoiseFit {
    pub fn to_model(&self, threshold_m: f64) -> Result<NoiseModel, FadingError> {
        NoiseModel::location_dependent(self.sigma_far_db, self.sigma_near_db, threshold_m)
    }
}

/// Sample standard deviations of residuals `(ξ_min, r)` on either side of
/// `threshold_m`; `ξ_min == threshold_m` counts as near-path.
pub fn fit_noise_sigmas(residuals: &[(f64, f64)], threshold_m: f64) -> Result<NoiseFit, FadingError> {
    let (near, far): (Vec<f64>, Vec<f64>) = {
        let mut near = Vec::new();
        let mut far = Vec::new();
        for &(xi, r) in residuals {
            if xi <= threshold_m {
                near.push(r);
            } else {
                far.push(r);
            }
        }
        (near, far)
    };
    if near.len() < 2 || far.len() < 2 {
        return Err(FadingError::InsufficientData(format!(
            "each regime needs at least 2 residuals, got near={} far={}",
            near.len(),
            far.len()
        )));
    }
    let sigma_near_db = sample_std(&near);
    let sigma_far_db = sample_std(&far);
    let degenerate = sigma_far_db <= 0.0 || sigma_near_db <= 0.0 || sigma_far_db >= sigma_near_db;
    Ok(NoiseFit {
        sigma_far_db,
        sigma_near_db,
        far_count: far.len(),
        near_count: near.len(),
        degenerate,
    })
}

pub(crate) fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

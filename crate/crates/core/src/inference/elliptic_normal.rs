use std::f64::consts::{PI, TAU};

use super::InferenceError;

/// `exp(−x) · I₀(x)` for `x ≥ 0`.
pub fn bessel_i0e(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 30.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // asymptotic series; terms shrink until k ≈ 2x, far past convergence
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            term *= odd * odd / (8.0 * kf * x);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum / (TAU * x).sqrt()
    }
}

/// von Mises density wrapped onto a closed curve of length `L`:
///
/// ```text
/// p(s) = exp(η cos(2π (s − s̄) / L)) / (L · I₀(η))
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticNormal {
    circumference: f64,
    eta: f64,
    mean: f64,
}

impl EllipticNormal {
    pub fn new(circumference: f64, eta: f64, mean: f64) -> Result<Self, InferenceError> {
        if !(circumference.is_finite() && circumference > 0.0) {
            return Err(InferenceError::InvalidGrid(format!("circumference {circumference}")));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(InferenceError::InvalidConcentration(eta));
        }
        if !(mean.is_finite() && (0.0..circumference).contains(&mean)) {
            return Err(InferenceError::InvalidGrid(format!(
                "mean {mean} outside [0, {circumference})"
            )));
        }
        Ok(Self {
            circumference,
            eta,
            mean,
        })
    }

    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn ln_pdf(&self, s: f64) -> f64 {
        let half = PI * (s - self.mean) / self.circumference;
        let sin = half.sin();
        // η(cos 2h − 1) = −2η sin²h keeps precision for large η
        -2.0 * self.eta * sin * sin - (self.circumference * bessel_i0e(self.eta)).ln()
    }

    pub fn pdf(&self, s: f64) -> f64 {
        self.ln_pdf(s).exp()
    }
}

/// Concentration whose small-angle limit matches a normal of the given
/// variance (m²) on the arc.
pub fn eta_from_variance(circumference: f64, variance_m2: f64) -> f64 {
    let r = circumference / TAU;
    r * r / variance_m2
}

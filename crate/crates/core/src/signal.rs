//! MPC amplitude estimation from sampled channel snapshots.
//!
//! Amplitudes are projections of the received signal onto the delayed,
//! unit-energy transmit pulse. The received signal is conjugated in the
//! inner product, so a component `α·s(t − τ)` projects to `conj(α)`; only
//! magnitudes are used downstream.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Power changes are clamped to this value when the amplitude vanishes.
pub const POWER_FLOOR_DB: f64 = -120.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("delay {delay_s} s is outside the observation window [0, {window_s}] s")]
    DelayOutOfWindow { delay_s: f64, window_s: f64 },
    #[error("sample intervals differ: signal {signal_s} s, pulse {pulse_s} s")]
    IntervalMismatch { signal_s: f64, pulse_s: f64 },
    #[error("delays must be sorted ascending")]
    UnsortedDelays,
    #[error("pulse has zero energy")]
    ZeroPulse,
    #[error("no idle snapshots")]
    EmptyIdleSet,
    #[error("invalid signal: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    pub samples: Vec<Complex64>,
    pub sample_interval_s: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<Complex64>, sample_interval_s: f64) -> Result<Self, SignalError> {
        if !(sample_interval_s.is_finite() && sample_interval_s > 0.0) {
            return Err(SignalError::Invalid(format!("sample interval {sample_interval_s}")));
        }
        if samples.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(SignalError::Invalid("non-finite sample".into()));
        }
        Ok(Self {
            samples,
            sample_interval_s,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.sample_interval_s
    }

    /// `∫|y|² dt`, approximated by `T·Σ|y[n]|²`.
    pub fn energy(&self) -> f64 {
        self.sample_interval_s * self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Band-limited value at time `t`.
    pub fn interpolate(&self, t: f64) -> Complex64 {
        let x = t / self.sample_interval_s;
        let nearest = x.round();
        if (x - nearest).abs() < 1e-12 {
            let i = nearest as i64;
            return if i >= 0 && (i as usize) < self.samples.len() {
                self.samples[i as usize]
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        // sin(π(x − m)) alternates in sign with m
        let base = (PI * x).sin() / PI;
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, p) in self.samples.iter().enumerate() {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            acc += p * (sign * base / (x - m as f64));
        }
        acc
    }
}

/// `s(t − τ)` on the sample instants of a window of `len` samples.
fn shifted_pulse(pulse: &SampledSignal, delay_s: f64, len: usize) -> Vec<Complex64> {
    let t = pulse.sample_interval_s;
    (0..len).map(|n| pulse.interpolate(n as f64 * t - delay_s)).collect()
}

/// Delayed pulse scaled to unit energy over the observation window.
pub fn unit_template(y: &SampledSignal, pulse: &SampledSignal, delay_s: f64) -> Result<Vec<Complex64>, SignalError> {
    check_intervals(y, pulse)?;
    let window = y.duration();
    if !(delay_s.is_finite() && (0.0..=window).contains(&delay_s)) {
        return Err(SignalError::DelayOutOfWindow {
            delay_s,
            window_s: window,
        });
    }
    let mut s = shifted_pulse(pulse, delay_s, y.len());
    let energy = y.sample_interval_s * s.iter().map(|c| c.norm_sqr()).sum::<f64>();
    if !(energy > 0.0) {
        return Err(SignalError::ZeroPulse);
    }
    let scale = 1.0 / energy.sqrt();
    for c in &mut s {
        *c *= scale;
    }
    Ok(s)
}

fn check_intervals(y: &SampledSignal, pulse: &SampledSignal) -> Result<(), SignalError> {
    let (a, b) = (y.sample_interval_s, pulse.sample_interval_s);
    if (a - b).abs() > 1e-9 * a.max(b) {
        return Err(SignalError::IntervalMismatch {
            signal_s: a,
            pulse_s: b,
        });
    }
    Ok(())
}

fn inner(y: &[Complex64], template: &[Complex64], dt: f64) -> Complex64 {
    let sum: Complex64 = y.iter().zip(template).map(|(a, b)| a.conj() * b).sum();
    sum * dt
}

/// `∫ y*(t) · s(t − τ) dt` with `s` normalized to unit energy.
pub fn project_amplitude(y: &SampledSignal, pulse: &SampledSignal, delay_s: f64) -> Result<Complex64, SignalError> {
    let u = unit_template(y, pulse, delay_s)?;
    Ok(inner(&y.samples, &u, y.sample_interval_s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// One projection per delay, in the order given.
    pub amplitudes: Vec<Complex64>,
    /// What is left after removing every component.
    pub residual: SampledSignal,
    /// Index pairs of neighboring delays closer than the pulse duration.
    pub overlaps: Vec<(usize, usize)>,
}

impl Extraction {
    pub fn has_overlap(&self) -> bool {
        !self.overlaps.is_empty()
    }
}

/// Projects each component on the residual left by all earlier ones.
pub fn extract_sequentially(
    y: &SampledSignal,
    pulse: &SampledSignal,
    delays_s: &[f64],
) -> Result<Extraction, SignalError> {
    if delays_s.windows(2).any(|w| w[1] < w[0]) {
        return Err(SignalError::UnsortedDelays);
    }
    let width = pulse.duration();
    let overlaps: Vec<(usize, usize)> = delays_s
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[1] - w[0]).abs() < width)
        .map(|(i, _)| (i, i + 1))
        .collect();
    for (i, j) in &overlaps {
        log::warn!(
            "components {i} and {j} are {:.3e} s apart, less than the pulse width {width:.3e} s",
            delays_s[*j] - delays_s[*i]
        );
    }
    let dt = y.sample_interval_s;
    let mut residual = y.samples.clone();
    let mut amplitudes = Vec::with_capacity(delays_s.len());
    for &tau in delays_s {
        let u = unit_template(y, pulse, tau)?;
        let a = inner(&residual, &u, dt);
        // the projection is conj(channel amplitude)
        let channel = a.conj();
        for (r, s) in residual.iter_mut().zip(&u) {
            *r -= channel * s;
        }
        amplitudes.push(a);
    }
    Ok(Extraction {
        amplitudes,
        residual: SampledSignal {
            samples: residual,
            sample_interval_s: dt,
        },
        overlaps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerChange {
    pub z_db: f64,
    /// The amplitude was zero and `z_db` sits at the floor.
    pub zero_amplitude: bool,
}

/// `20·log10|α̂| − γ̄`, clamped below at [`POWER_FLOOR_DB`].
pub fn power_change(amplitude: Complex64, reference_db: f64) -> PowerChange {
    let mag = amplitude.norm();
    if mag == 0.0 {
        return PowerChange {
            z_db: POWER_FLOOR_DB,
            zero_amplitude: true,
        };
    }
    PowerChange {
        z_db: (20.0 * mag.log10() - reference_db).max(POWER_FLOOR_DB),
        zero_amplitude: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePower {
    pub mean: Complex64,
    pub magnitude: f64,
    pub gamma_db: f64,
    /// The complex mean lost more than half the average magnitude, so the
    /// idle phase drifted.
    pub phase_unstable: bool,
}

/// Complex mean of idle-channel amplitudes and its level in dB.
pub fn reference_power(idle: &[Complex64]) -> Result<ReferencePower, SignalError> {
    if idle.is_empty() {
        return Err(SignalError::EmptyIdleSet);
    }
    let n = idle.len() as f64;
    let mean = idle.iter().sum::<Complex64>() / n;
    let mean_mag = idle.iter().map(|a| a.norm()).sum::<f64>() / n;
    let magnitude = mean.norm();
    let gamma_db = if magnitude > 0.0 {
        (20.0 * magnitude.log10()).max(POWER_FLOOR_DB)
    } else {
        POWER_FLOOR_DB
    };
    Ok(ReferencePower {
        mean,
        magnitude,
        gamma_db,
        phase_unstable: magnitude < 0.5 * mean_mag,
    })
}

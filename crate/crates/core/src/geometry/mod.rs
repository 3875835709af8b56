//! Single-bounce propagation geometry.
//!
//! A multipath component (MPC) produced by one reflection has a fixed path
//! length `d`, so its reflection point lies on the ellipse whose foci are the
//! transmitter and the receiver and whose focal-distance sum is `d`. Positions
//! on that ellipse are addressed by arc length `s ∈ [0, L)`, measured
//! counterclockwise in the ellipse's local frame from the vertex on the
//! receiver side of the major axis.

mod ellipse;
pub mod elliptic;
mod vec2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ellipse::{wrapped_distance, DelayEllipse, ExcessPaths, Projection, VirtualNodes};
pub use vec2::Vec2;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("transmitter and receiver coincide at {0}")]
    DegenerateLink(Vec2),
    #[error("path length {path_length} m does not exceed the line-of-sight distance {los_distance} m")]
    DegenerateEllipse { path_length: f64, los_distance: f64 },
    #[error("{what} = {value} is outside [{lo}, {hi})")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("reflection point {0} coincides with a focus")]
    DegenerateRp(Vec2),
    #[error("surface endpoints coincide at {0}")]
    DegenerateSurface(Vec2),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
}

/// A transmitter/receiver pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkLink {
    pub tx: Vec2,
    pub rx: Vec2,
}

impl NetworkLink {
    pub fn new(tx: Vec2, rx: Vec2) -> Result<Self, GeometryError> {
        if !tx.is_finite() || !rx.is_finite() {
            return Err(GeometryError::NonFinite("link node"));
        }
        if tx == rx {
            return Err(GeometryError::DegenerateLink(tx));
        }
        Ok(Self { tx, rx })
    }

    /// Line-of-sight distance `‖rx − tx‖`.
    pub fn los_distance(&self) -> f64 {
        self.tx.distance(self.rx)
    }
}

/// A multipath component: its propagation delay and the corresponding
/// geometric path length `d = c·τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    pub delay_s: f64,
    pub path_length: f64,
}

impl Mpc {
    pub fn from_delay(delay_s: f64) -> Self {
        Self {
            delay_s,
            path_length: delay_s * SPEED_OF_LIGHT,
        }
    }

    pub fn from_path_length(path_length: f64) -> Self {
        Self {
            delay_s: path_length / SPEED_OF_LIGHT,
            path_length,
        }
    }
}

/// A straight reflecting wall segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub p0: Vec2,
    pub p1: Vec2,
}

impl Surface {
    pub fn new(p0: Vec2, p1: Vec2) -> Result<Self, GeometryError> {
        if !p0.is_finite() || !p1.is_finite() {
            return Err(GeometryError::NonFinite("surface endpoint"));
        }
        if p0 == p1 {
            return Err(GeometryError::DegenerateSurface(p0));
        }
        Ok(Self { p0, p1 })
    }
}

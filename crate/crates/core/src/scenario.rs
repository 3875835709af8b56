//! Synthetic calibration scenarios: network geometry, a user walking a
//! polyline, ground-truth reflection points and noisy power-change
//! measurements drawn from the fading model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fading::{FadingParams, NoiseModel};
use crate::geometry::{DelayEllipse, GeometryError, Mpc, NetworkLink, Surface, Vec2};
use crate::inference::Measurement;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("link {link} mpc {mpc}: {count} candidate reflection points, expected exactly one")]
    AmbiguousRp { link: usize, mpc: usize, count: usize },
    #[error("link {link} mpc {mpc}: no surface meets the delay ellipse")]
    NoRpFound { link: usize, mpc: usize },
    #[error("link {link} mpc {mpc}: {source}")]
    Geometry {
        link: usize,
        mpc: usize,
        #[source]
        source: GeometryError,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Vec2>,
    pub speed_mps: f64,
    pub update_time_s: f64,
}

impl Trajectory {
    pub fn new(waypoints: Vec<Vec2>, speed_mps: f64, update_time_s: f64) -> Result<Self, ScenarioError> {
        if waypoints.len() < 2 {
            return Err(ScenarioError::InvalidTrajectory(format!(
                "need at least 2 waypoints, got {}",
                waypoints.len()
            )));
        }
        if waypoints.iter().any(|p| !p.is_finite()) {
            return Err(ScenarioError::InvalidTrajectory("non-finite waypoint".into()));
        }
        if !(speed_mps.is_finite() && speed_mps > 0.0) {
            return Err(ScenarioError::InvalidTrajectory(format!(
                "speed must be positive, got {speed_mps}"
            )));
        }
        if !(update_time_s.is_finite() && update_time_s > 0.0) {
            return Err(ScenarioError::InvalidTrajectory(format!(
                "update time must be positive, got {update_time_s}"
            )));
        }
        Ok(Self {
            waypoints,
            speed_mps,
            update_time_s,
        })
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

/// A position sample along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub time_s: f64,
    pub position: Vec2,
}

/// Constant-speed samples every `update_time_s`, starting at the first
/// waypoint. The final waypoint is included only if it falls on a sample
/// instant.
pub fn sample_trajectory(t: &Trajectory) -> Result<Vec<TrajectorySample>, ScenarioError> {
    let total = t.length();
    if !(total > 0.0) {
        return Err(ScenarioError::InvalidTrajectory("trajectory has zero length".into()));
    }
    let step = t.speed_mps * t.update_time_s;
    let count = (total / step + 1e-9).floor() as usize + 1;
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for k in 0..count {
        let s = (k as f64 * step).min(total);
        loop {
            let len = t.waypoints[seg].distance(t.waypoints[seg + 1]);
            if s <= seg_start + len || seg + 2 == t.waypoints.len() {
                let frac = if len > 0.0 {
                    ((s - seg_start) / len).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let a = t.waypoints[seg];
                let b = t.waypoints[seg + 1];
                out.push(TrajectorySample {
                    time_s: k as f64 * t.update_time_s,
                    position: a + (b - a) * frac,
                });
                break;
            }
            seg_start += len;
            seg += 1;
        }
    }
    Ok(out)
}

/// One link with the MPCs to calibrate on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSetup {
    pub link: NetworkLink,
    pub mpcs: Vec<Mpc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub links: Vec<LinkSetup>,
    pub surfaces: Vec<Surface>,
    pub trajectory: Trajectory,
    pub fading: FadingParams,
    pub noise: NoiseModel,
    pub seed: u64,
    /// When set, measurements taken within this distance of a delay
    /// ellipse get three times the model noise.
    pub scatter_distance: Option<f64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.links.is_empty() {
            return Err(ScenarioError::Invalid("no links".into()));
        }
        for (li, l) in self.links.iter().enumerate() {
            for (mi, _) in l.mpcs.iter().enumerate() {
                self.ellipse(li, mi)?;
            }
        }
        if let Some(d) = self.scatter_distance {
            if !(d.is_finite() && d >= 0.0) {
                return Err(ScenarioError::Invalid(format!("scatter distance {d}")));
            }
        }
        Ok(())
    }

    pub fn ellipse(&self, link: usize, mpc: usize) -> Result<DelayEllipse, ScenarioError> {
        let setup = self
            .links
            .get(link)
            .ok_or_else(|| ScenarioError::Invalid(format!("no link {link}")))?;
        let m = setup
            .mpcs
            .get(mpc)
            .ok_or_else(|| ScenarioError::Invalid(format!("link {link} has no mpc {mpc}")))?;
        DelayEllipse::new(setup.link, *m).map_err(|source| ScenarioError::Geometry { link, mpc, source })
    }

    /// `(link, mpc)` pairs in link-major order.
    pub fn mpc_ids(&self) -> Vec<(usize, usize)> {
        self.links
            .iter()
            .enumerate()
            .flat_map(|(li, l)| (0..l.mpcs.len()).map(move |mi| (li, mi)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpTruth {
    pub link: usize,
    pub mpc: usize,
    pub arc: f64,
    pub point: Vec2,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub rps: Vec<RpTruth>,
}

impl GroundTruth {
    pub fn get(&self, link: usize, mpc: usize) -> Option<&RpTruth> {
        self.rps.iter().find(|r| r.link == link && r.mpc == mpc)
    }
}

/// The unique surface/ellipse contact point of every MPC.
pub fn derive_ground_truth(scenario: &Scenario) -> Result<GroundTruth, ScenarioError> {
    let mut rps = Vec::new();
    for (link, mpc) in scenario.mpc_ids() {
        let e = scenario.ellipse(link, mpc)?;
        let arcs = e.find_reflection_points(&scenario.surfaces);
        match arcs.as_slice() {
            [] => return Err(ScenarioError::NoRpFound { link, mpc }),
            [arc] => {
                let point = e
                    .arc_to_point(*arc)
                    .map_err(|source| ScenarioError::Geometry { link, mpc, source })?;
                rps.push(RpTruth {
                    link,
                    mpc,
                    arc: *arc,
                    point,
                });
            }
            many => {
                return Err(ScenarioError::AmbiguousRp {
                    link,
                    mpc,
                    count: many.len(),
                })
            }
        }
    }
    Ok(GroundTruth { rps })
}

/// Measurements of one MPC along the trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcMeasurements {
    pub link: usize,
    pub mpc: usize,
    pub measurements: Vec<Measurement>,
}

/// Seed for the `index`-th MPC of a scenario.
pub fn mpc_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

/// Draws `z = f(ξ at the true RP) + w` for every trajectory sample.
pub fn synthesize_measurements(
    scenario: &Scenario,
    truth: &GroundTruth,
) -> Result<Vec<MpcMeasurements>, ScenarioError> {
    let samples = sample_trajectory(&scenario.trajectory)?;
    scenario
        .mpc_ids()
        .into_iter()
        .enumerate()
        .map(|(index, (link, mpc))| {
            let rp = truth.get(link, mpc).ok_or(ScenarioError::NoRpFound { link, mpc })?;
            let e = scenario.ellipse(link, mpc)?;
            let measurements = synthesize_one(scenario, &e, rp.point, &samples, mpc_seed(scenario.seed, index))
                .map_err(|source| ScenarioError::Geometry { link, mpc, source })?;
            Ok(MpcMeasurements {
                link,
                mpc,
                measurements,
            })
        })
        .collect()
}

fn synthesize_one(
    scenario: &Scenario,
    e: &DelayEllipse,
    rp: Vec2,
    samples: &[TrajectorySample],
    seed: u64,
) -> Result<Vec<Measurement>, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = e.virtual_nodes(rp)?;
    Ok(samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let xi = nodes.excess(&e.link, e.path_length, s.position);
            let f = scenario.fading.predicted_change(xi.tx.max(0.0), xi.rx.max(0.0));
            let mut sigma = scenario.noise.sigma(xi.min());
            if let Some(gate) = scenario.scatter_distance {
                if e.distance_to(s.position) < gate {
                    sigma *= 3.0;
                }
            }
            let w: f64 = StandardNormal.sample(&mut rng);
            Measurement::new(k as u64, s.time_s, s.position, f + sigma * w)
        })
        .collect())
}

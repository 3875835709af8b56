//! Scenario files.
//!
//! ```toml
//! seed = 7
//!
//! [nodes]
//! tx = [0.0, 0.0]
//! rx = [31.37, 0.0]
//!
//! [[surfaces]]
//! from = [-5.0, 12.0]
//! to = [20.0, 12.0]
//!
//! [[mpcs]]
//! tx = "tx"
//! rx = "rx"
//! delay_ns = 129.0
//!
//! [trajectory]
//! waypoints = [[-1.0, 6.0], [26.0, 6.0]]
//! speed_mps = 1.0
//! update_time_s = 0.02
//!
//! [fading]
//! preset = "calibration"
//!
//! [noise]
//! preset = "setup2"
//! model = "split"
//! ```
//!
//! Links are numbered by first appearance of a `(tx, rx)` pair in `mpcs`;
//! MPCs are numbered in file order within their link.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ellipse_calib::presets;
use ellipse_calib::{
    FadingParams, FresnelConfig, LinkSetup, Mpc, NetworkLink, NoiseModel, Scenario, Surface, Trajectory, UserType, Vec2,
};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Uniform,
    Split,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Uniform => "uniform",
            NoiseKind::Split => "split",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(NoiseKind::Uniform),
            "split" => Ok(NoiseKind::Split),
            other => Err(format!("unknown noise model `{other}`, expected uniform or split")),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    seed: u64,
    scatter_distance_m: Option<Spanned<f64>>,
    nodes: BTreeMap<String, Spanned<[f64; 2]>>,
    #[serde(default)]
    surfaces: Vec<Spanned<SurfaceDef>>,
    mpcs: Vec<Spanned<MpcDef>>,
    trajectory: Spanned<TrajectoryDef>,
    fading: Spanned<FadingDef>,
    noise: Spanned<NoiseDef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceDef {
    from: [f64; 2],
    to: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MpcDef {
    tx: Spanned<String>,
    rx: Spanned<String>,
    delay_ns: Option<f64>,
    path_length_m: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryDef {
    waypoints: Vec<[f64; 2]>,
    speed_mps: f64,
    update_time_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FadingDef {
    preset: Option<String>,
    user: Option<UserType>,
    phi_db: Option<f64>,
    kappa_m: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseDef {
    preset: Option<String>,
    model: Option<NoiseKind>,
    sigma_db: Option<f64>,
    sigma_far_db: Option<f64>,
    sigma_near_db: Option<f64>,
    threshold_m: Option<f64>,
    wavelength_m: Option<f64>,
    fresnel_zone: Option<u32>,
}

/// Noise parameters of a scenario before a model is chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSettings {
    pub default_kind: NoiseKind,
    pub sigma_db: Option<f64>,
    pub sigma_far_db: Option<f64>,
    pub sigma_near_db: Option<f64>,
    pub threshold_m: Option<f64>,
    pub fresnel: Option<FresnelConfig>,
}

impl NoiseSettings {
    pub fn model(&self, kind: Option<NoiseKind>) -> Result<NoiseModel, String> {
        match kind.unwrap_or(self.default_kind) {
            NoiseKind::Uniform => {
                let sigma = self.sigma_db.ok_or("uniform noise needs `sigma_db`")?;
                NoiseModel::uniform(sigma).map_err(|e| e.to_string())
            }
            NoiseKind::Split => {
                let far = self.sigma_far_db.ok_or("split noise needs `sigma_far_db`")?;
                let near = self.sigma_near_db.ok_or("split noise needs `sigma_near_db`")?;
                let threshold = self
                    .threshold_m
                    .or_else(|| self.fresnel.map(|f| f.threshold()))
                    .ok_or("split noise needs `threshold_m` or `wavelength_m`")?;
                NoiseModel::location_dependent(far, near, threshold).map_err(|e| e.to_string())
            }
        }
    }
}

/// A parsed scenario with its noise model resolved.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub noise: NoiseSettings,
    pub noise_kind: NoiseKind,
}

impl LoadedScenario {
    /// Default gate for an MPC: the largest Fresnel-zone radius of its path.
    pub fn default_gate(&self, path_length: f64) -> f64 {
        self.noise.fresnel.map(|f| f.max_radius(path_length)).unwrap_or(0.0)
    }
}

pub fn load_scenario(
    path: &Path,
    noise_kind: Option<NoiseKind>,
    seed: Option<u64>,
) -> Result<LoadedScenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenario(&text, path, noise_kind, seed)
}

/// Parses scenario text; `origin` only labels error messages.
pub fn parse_scenario(
    text: &str,
    origin: &Path,
    noise_kind: Option<NoiseKind>,
    seed: Option<u64>,
) -> Result<LoadedScenario, CliError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| CliError::config(origin, e.to_string()))?;
    let at = |span: std::ops::Range<usize>, msg: String| {
        let (line, col) = line_col(text, span.start);
        CliError::config(origin, format!("line {line}, column {col}: {msg}"))
    };

    let mut node_pos = BTreeMap::new();
    for (name, p) in &file.nodes {
        let v = vec2(*p.get_ref());
        if !v.is_finite() {
            return Err(at(p.span(), format!("node `{name}` has a non-finite position")));
        }
        node_pos.insert(name.as_str(), v);
    }

    let mut surfaces = Vec::with_capacity(file.surfaces.len());
    for s in &file.surfaces {
        let def = s.get_ref();
        let surface = Surface::new(vec2(def.from), vec2(def.to)).map_err(|e| at(s.span(), format!("surface: {e}")))?;
        surfaces.push(surface);
    }

    if file.mpcs.is_empty() {
        return Err(CliError::config(origin, "scenario lists no mpcs"));
    }
    let mut links: Vec<(String, String, LinkSetup)> = Vec::new();
    for m in &file.mpcs {
        let def = m.get_ref();
        let lookup = |name: &Spanned<String>| {
            node_pos
                .get(name.get_ref().as_str())
                .copied()
                .ok_or_else(|| at(name.span(), format!("unknown node `{}`", name.get_ref())))
        };
        let tx = lookup(&def.tx)?;
        let rx = lookup(&def.rx)?;
        let mpc = match (def.delay_ns, def.path_length_m) {
            (Some(ns), None) => Mpc::from_delay(ns * 1e-9),
            (None, Some(d)) => Mpc::from_path_length(d),
            _ => {
                return Err(at(
                    m.span(),
                    "give exactly one of `delay_ns` and `path_length_m`".into(),
                ))
            }
        };
        let pos = links
            .iter()
            .position(|(t, r, _)| t == def.tx.get_ref() && r == def.rx.get_ref());
        match pos {
            Some(i) => links[i].2.mpcs.push(mpc),
            None => {
                let link = NetworkLink::new(tx, rx).map_err(|e| at(m.span(), e.to_string()))?;
                links.push((
                    def.tx.get_ref().clone(),
                    def.rx.get_ref().clone(),
                    LinkSetup { link, mpcs: vec![mpc] },
                ));
            }
        }
    }

    let t = file.trajectory.get_ref();
    let trajectory = Trajectory::new(
        t.waypoints.iter().map(|&p| vec2(p)).collect(),
        t.speed_mps,
        t.update_time_s,
    )
    .map_err(|e| at(file.trajectory.span(), e.to_string()))?;

    let fading = resolve_fading(file.fading.get_ref()).map_err(|msg| at(file.fading.span(), msg))?;
    let noise = resolve_noise(file.noise.get_ref()).map_err(|msg| at(file.noise.span(), msg))?;
    let noise_kind = noise_kind.unwrap_or(noise.default_kind);
    let model = noise
        .model(Some(noise_kind))
        .map_err(|msg| at(file.noise.span(), msg))?;

    let scatter_distance = match &file.scatter_distance_m {
        Some(s) if !(s.get_ref().is_finite() && *s.get_ref() >= 0.0) => {
            return Err(at(
                s.span(),
                format!("scatter distance must be non-negative, got {}", s.get_ref()),
            ))
        }
        Some(s) => Some(*s.get_ref()),
        None => None,
    };

    let scenario = Scenario {
        links: links.into_iter().map(|(_, _, l)| l).collect(),
        surfaces,
        trajectory,
        fading,
        noise: model,
        seed: seed.unwrap_or(file.seed),
        scatter_distance,
    };
    scenario
        .validate()
        .map_err(|e| CliError::config(origin, e.to_string()))?;
    Ok(LoadedScenario {
        scenario,
        noise,
        noise_kind,
    })
}

fn resolve_fading(def: &FadingDef) -> Result<FadingParams, String> {
    let user = def.user.unwrap_or(if def.preset.is_some() {
        UserType::Pedestrian
    } else {
        UserType::Custom
    });
    let base = match &def.preset {
        Some(name) => Some(presets::fading(name, user).map_err(|e| e.to_string())?),
        None => None,
    };
    let phi = def
        .phi_db
        .or(base.map(|b| b.phi_db))
        .ok_or("fading needs `preset` or `phi_db`")?;
    let kappa = def
        .kappa_m
        .or(base.map(|b| b.kappa_m))
        .ok_or("fading needs `preset` or `kappa_m`")?;
    FadingParams::new(phi, kappa, user).map_err(|e| e.to_string())
}

fn resolve_noise(def: &NoiseDef) -> Result<NoiseSettings, String> {
    let mut s = NoiseSettings {
        default_kind: def.model.unwrap_or(NoiseKind::Split),
        sigma_db: None,
        sigma_far_db: None,
        sigma_near_db: None,
        threshold_m: None,
        fresnel: None,
    };
    if let Some(name) = &def.preset {
        let uniform = presets::uniform_noise(name).map_err(|e| e.to_string())?;
        if let NoiseModel::Uniform { sigma_db } = uniform {
            s.sigma_db = Some(sigma_db);
        }
        let split = presets::split_noise(name).map_err(|e| e.to_string())?;
        if let NoiseModel::LocationDependent {
            sigma_far_db,
            sigma_near_db,
            threshold_m,
        } = split
        {
            s.sigma_far_db = Some(sigma_far_db);
            s.sigma_near_db = Some(sigma_near_db);
            s.threshold_m = Some(threshold_m);
        }
        s.fresnel = Some(presets::fresnel(name).map_err(|e| e.to_string())?);
    }
    if def.sigma_db.is_some() {
        s.sigma_db = def.sigma_db;
    }
    if def.sigma_far_db.is_some() {
        s.sigma_far_db = def.sigma_far_db;
    }
    if def.sigma_near_db.is_some() {
        s.sigma_near_db = def.sigma_near_db;
    }
    if def.wavelength_m.is_some() || def.fresnel_zone.is_some() {
        let wavelength = def
            .wavelength_m
            .or(s.fresnel.map(|f| f.wavelength_m))
            .ok_or("`fresnel_zone` needs `wavelength_m`")?;
        let zone = def.fresnel_zone.unwrap_or(FresnelConfig::DEFAULT_ZONE);
        let fresnel = FresnelConfig::new(wavelength, zone).map_err(|e| e.to_string())?;
        s.fresnel = Some(fresnel);
        s.threshold_m = Some(fresnel.threshold());
    }
    if def.threshold_m.is_some() {
        s.threshold_m = def.threshold_m;
    }
    Ok(s)
}

fn vec2(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

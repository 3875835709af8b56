//! Built-in parameter tables.

use std::sync::OnceLock;

use serde::Deserialize;

use crate::fading::{FadingError, FadingParams, FresnelConfig, NoiseModel, UserType};

const TABLES: &str = include_str!("../presets/tables.toml");

#[derive(Debug, Deserialize)]
struct Tables {
    fading: Vec<FadingRow>,
    noise: Vec<NoiseRow>,
    transition: Vec<TransitionRow>,
}

#[derive(Debug, Deserialize)]
struct FadingRow {
    name: String,
    user: UserType,
    phi_db: f64,
    kappa_m: f64,
}

#[derive(Debug, Deserialize)]
struct NoiseRow {
    name: String,
    wavelength_m: f64,
    sigma_db: f64,
    threshold_m: f64,
    sigma_far_db: f64,
    sigma_near_db: f64,
}

#[derive(Debug, Deserialize)]
struct TransitionRow {
    name: String,
    variance_m2: f64,
}

fn tables() -> &'static Tables {
    static TABLES_CELL: OnceLock<Tables> = OnceLock::new();
    TABLES_CELL.get_or_init(|| toml::from_str(TABLES).expect("embedded preset tables are valid"))
}

pub fn fading(name: &str, user: UserType) -> Result<FadingParams, FadingError> {
    tables()
        .fading
        .iter()
        .find(|r| r.name == name && r.user == user)
        .ok_or_else(|| FadingError::UnknownPreset(format!("{name}/{user}")))
        .and_then(|r| FadingParams::new(-r.phi_db, r.kappa_m, r.user))
}

pub fn uniform_noise(name: &str) -> Result<NoiseModel, FadingError> {
    let r = noise_row(name)?;
    NoiseModel::uniform(r.sigma_db)
}

pub fn split_noise(name: &str) -> Result<NoiseModel, FadingError> {
    let r = noise_row(name)?;
    NoiseModel::location_dependent(r.sigma_far_db, r.sigma_near_db, r.threshold_m)
}

/// Fresnel configuration (third zone) matching a noise preset.
pub fn fresnel(name: &str) -> Result<FresnelConfig, FadingError> {
    let r = noise_row(name)?;
    FresnelConfig::new(r.wavelength_m, FresnelConfig::DEFAULT_ZONE)
}

/// Arc-domain variance (m²) of a named transition preset.
pub fn transition_variance(name: &str) -> Result<f64, FadingError> {
    tables()
        .transition
        .iter()
        .find(|r| r.name == name)
        .map(|r| r.variance_m2)
        .ok_or_else(|| FadingError::UnknownPreset(name.to_string()))
}

pub fn fading_names() -> Vec<(String, UserType)> {
    tables().fading.iter().map(|r| (r.name.clone(), r.user)).collect()
}

fn noise_row(name: &str) -> Result<&'static NoiseRow, FadingError> {
    tables()
        .noise
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| FadingError::UnknownPreset(name.to_string()))
}

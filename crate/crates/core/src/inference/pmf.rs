use std::f64::consts::PI;

use crate::fading::{FadingParams, NoiseModel};
use crate::geometry::{DelayEllipse, Vec2, VirtualNodes};

use super::modes::{find_modes, Mode};
use super::{InferenceError, Measurement};

/// Kernel values below this fraction of the central tap are dropped.
const KERNEL_CUTOFF: f64 = 1e-18;

/// Mass ratio between the second and first mode above which an estimate is
/// flagged as multimodal.
pub const MULTIMODAL_RATIO: f64 = 0.5;

/// The discretized transition prior: one circulant row of the elliptic
/// normal on an `n`-point grid, normalized to unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    eta: f64,
    n: usize,
    /// `taps[m]` weights a shift of `m` grid points in either direction.
    taps: Vec<f64>,
}

impl TransitionKernel {
    pub fn new(n: usize, eta: f64) -> Result<Self, InferenceError> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(InferenceError::InvalidConcentration(eta));
        }
        if n == 0 {
            return Err(InferenceError::InvalidGrid("empty grid".into()));
        }
        let half = n / 2;
        let mut taps = Vec::with_capacity(half + 1);
        for m in 0..=half {
            let sin = (PI * m as f64 / n as f64).sin();
            let v = (-2.0 * eta * sin * sin).exp();
            if v < KERNEL_CUTOFF {
                break;
            }
            taps.push(v);
        }
        let mut total = 0.0;
        for m in 0..n {
            let off = m.min(n - m);
            if let Some(v) = taps.get(off) {
                total += v;
            }
        }
        for v in &mut taps {
            *v /= total;
        }
        Ok(Self { eta, n, taps })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Largest retained shift in grid points.
    pub fn support(&self) -> usize {
        self.taps.len() - 1
    }

    /// Transition probability for a signed shift of `offset` grid points.
    pub fn weight(&self, offset: isize) -> f64 {
        let n = self.n as isize;
        let m = offset.rem_euclid(n) as usize;
        let m = m.min(self.n - m);
        self.taps.get(m).copied().unwrap_or(0.0)
    }

    fn apply(&self, weights: &[f64], out: &mut [f64]) {
        let n = self.n;
        let r = self.support();
        if 2 * r + 1 >= n {
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, w) in weights.iter().enumerate() {
                    let d = i.abs_diff(j);
                    acc += w * self.taps.get(d.min(n - d)).copied().unwrap_or(0.0);
                }
                *o = acc;
            }
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = self.taps[0] * weights[i];
            for (m, t) in self.taps.iter().enumerate().skip(1) {
                let fwd = if i + m >= n { i + m - n } else { i + m };
                let back = if i >= m { i - m } else { i + n - m };
                acc += t * (weights[fwd] + weights[back]);
            }
            *o = acc;
        }
    }
}

/// Fixed arc-length grid over a delay ellipse with the geometry each grid
/// hypothesis needs for the likelihood.
#[derive(Debug, Clone)]
pub struct PmfGrid {
    ellipse: DelayEllipse,
    spacing: f64,
    points: Vec<Vec2>,
    nodes: Vec<VirtualNodes>,
}

impl PmfGrid {
    pub fn new(ellipse: &DelayEllipse, dx: f64) -> Result<Self, InferenceError> {
        let l = ellipse.circumference;
        if !(dx.is_finite() && dx > 0.0 && dx < l) {
            return Err(InferenceError::InvalidGrid(format!("spacing {dx} outside (0, {l})")));
        }
        let n = (l / dx).round() as usize;
        let spacing = l / n as f64;
        let mut points = Vec::with_capacity(n);
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let p = ellipse.arc_to_point(i as f64 * spacing)?;
            nodes.push(ellipse.virtual_nodes(p)?);
            points.push(p);
        }
        Ok(Self {
            ellipse: ellipse.clone(),
            spacing,
            points,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn ellipse(&self) -> &DelayEllipse {
        &self.ellipse
    }

    pub fn arc(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }

    pub fn point(&self, i: usize) -> Vec2 {
        self.points[i]
    }

    pub fn virtual_nodes(&self, i: usize) -> VirtualNodes {
        self.nodes[i]
    }
}

/// MMSE estimate with its multimodality diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub arc: f64,
    pub index: usize,
    pub modes: Vec<Mode>,
    pub multimodal: bool,
}

/// Posterior weights on a [`PmfGrid`].
#[derive(Debug, Clone)]
pub struct PmfState {
    grid: PmfGrid,
    weights: Vec<f64>,
    scratch: Vec<f64>,
}

impl PmfState {
    /// Uniform prior on `N_s = round(L / dx)` points.
    pub fn new(ellipse: &DelayEllipse, dx: f64) -> Result<Self, InferenceError> {
        Ok(Self::from_grid(PmfGrid::new(ellipse, dx)?))
    }

    pub fn from_grid(grid: PmfGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            weights: vec![1.0 / n as f64; n],
            scratch: vec![0.0; n],
        }
    }

    /// Replaces the weights; they are normalized and must be nonnegative.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, InferenceError> {
        if weights.len() != self.grid.len() {
            return Err(InferenceError::InvalidGrid(format!(
                "expected {} weights, got {}",
                self.grid.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(InferenceError::InvalidGrid(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(InferenceError::InvalidGrid("weights sum to zero".into()));
        }
        self.weights = weights.into_iter().map(|w| w / total).collect();
        Ok(self)
    }

    pub fn grid(&self) -> &PmfGrid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn predict(&mut self, kernel: &TransitionKernel) {
        assert_eq!(kernel.len(), self.len(), "kernel built for a different grid");
        kernel.apply(&self.weights, &mut self.scratch);
        std::mem::swap(&mut self.weights, &mut self.scratch);
        normalize(&mut self.weights);
    }

    /// Bayes update with the fading-model likelihood, evaluated in the log
    /// domain.
    pub fn update(&mut self, m: &Measurement, fading: &FadingParams, noise: &NoiseModel) -> Result<(), InferenceError> {
        if !(m.z_db.is_finite() && m.user.is_finite()) {
            return Err(InferenceError::NonFiniteMeasurement(m.k));
        }
        let link = self.grid.ellipse.link;
        let d = self.grid.ellipse.path_length;
        let u = m.user;
        let to_tx = link.tx.distance(u) - d;
        let to_rx = link.rx.distance(u) - d;
        let (sigma_far, sigma_near, threshold) = match *noise {
            NoiseModel::Uniform { sigma_db } => (sigma_db, sigma_db, f64::INFINITY),
            NoiseModel::LocationDependent {
                sigma_far_db,
                sigma_near_db,
                threshold_m,
            } => (sigma_far_db, sigma_near_db, threshold_m),
        };
        let (ln_far, ln_near) = (sigma_far.ln(), sigma_near.ln());
        let inv_kappa = 1.0 / fading.kappa_m;
        let logs = &mut self.scratch;
        let mut max = f64::NEG_INFINITY;
        for ((lw, w), vn) in logs.iter_mut().zip(&self.weights).zip(&self.grid.nodes) {
            let xi_tx = (to_tx + vn.vr.distance(u)).max(0.0);
            let xi_rx = (to_rx + vn.vt.distance(u)).max(0.0);
            let f = fading.phi_db * ((-xi_tx * inv_kappa).exp() + (-xi_rx * inv_kappa).exp());
            let (sigma, ln_sigma) = if xi_tx.min(xi_rx) <= threshold {
                (sigma_near, ln_near)
            } else {
                (sigma_far, ln_far)
            };
            let r = (m.z_db - f) / sigma;
            *lw = w.ln() - 0.5 * r * r - ln_sigma;
            max = max.max(*lw);
        }
        if !max.is_finite() {
            return Err(InferenceError::NumericalUnderflow(m.k));
        }
        for (w, lw) in self.weights.iter_mut().zip(logs.iter()) {
            *w = (lw - max).exp();
        }
        normalize(&mut self.weights);
        Ok(())
    }

    /// Grid point minimizing the expected squared wrapped distance; ties go
    /// to the smallest arc length.
    pub fn mmse(&self) -> Estimate {
        let index = mmse_index(&self.weights);
        let modes = find_modes(&self.weights);
        let multimodal = modes.len() >= 2 && modes[1].mass / modes[0].mass > MULTIMODAL_RATIO;
        Estimate {
            arc: self.grid.arc(index),
            index,
            modes,
            multimodal,
        }
    }

    /// Fraction of grid points whose weight reaches `rel` times the peak.
    pub fn support_fraction(&self, rel: f64) -> f64 {
        let peak = self.weights.iter().copied().fold(0.0, f64::max);
        let count = self.weights.iter().filter(|w| **w >= rel * peak).count();
        count as f64 / self.len() as f64
    }

    pub fn is_uniform(&self) -> bool {
        let first = self.weights[0];
        self.weights.iter().all(|w| *w == first)
    }
}

fn normalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    let inv = 1.0 / total;
    for v in w.iter_mut() {
        *v *= inv;
    }
}

/// Expected squared wrapped distance, in grid units², with the estimate at
/// grid point `j`.
pub fn expected_cost(weights: &[f64], j: usize) -> f64 {
    let n = weights.len();
    weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let d = i.abs_diff(j);
            let d = d.min(n - d) as f64;
            w * d * d
        })
        .sum()
}

/// Index of the minimum of [`expected_cost`] over all grid points in O(N)
/// via prefix sums over a tripled index range.
pub(crate) fn mmse_index(weights: &[f64]) -> usize {
    let n = weights.len();
    if n == 1 {
        return 0;
    }
    let ahead = n / 2;
    let behind = n - 1 - ahead;
    // prefix sums over positions m = 0..3n with w(m) = weights[m mod n]
    let len = 3 * n;
    let mut s0 = vec![0.0; len + 1];
    let mut s1 = vec![0.0; len + 1];
    let mut s2 = vec![0.0; len + 1];
    for m in 0..len {
        let w = weights[m % n];
        let mf = m as f64;
        s0[m + 1] = s0[m] + w;
        s1[m + 1] = s1[m] + w * mf;
        s2[m + 1] = s2[m] + w * mf * mf;
    }
    let mut costs = Vec::with_capacity(n);
    for j in 0..n {
        let c = (j + n) as f64;
        let lo = j + n - behind;
        let hi = j + n + ahead + 1;
        let a0 = s0[hi] - s0[lo];
        let a1 = s1[hi] - s1[lo];
        let a2 = s2[hi] - s2[lo];
        costs.push(a2 - 2.0 * c * a1 + c * c * a0);
    }
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    // accumulated rounding in the prefix sums is bounded by about
    // len·ε·len²; anything within that of the minimum is a tie
    let tol = 4.0 * f64::EPSILON * (len as f64).powi(3);
    costs.iter().position(|c| *c <= best + tol).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::UserType;
    use crate::geometry::{Mpc, NetworkLink};

    fn ellipse_345() -> DelayEllipse {
        let link = NetworkLink::new(Vec2::new(-3.0, 0.0), Vec2::new(3.0, 0.0)).unwrap();
        DelayEllipse::new(link, Mpc::from_path_length(10.0)).unwrap()
    }

    fn circle(l: f64) -> DelayEllipse {
        let r = l / std::f64::consts::TAU;
        DelayEllipse::from_axes(Vec2::ZERO, r, r, 0.0).unwrap()
    }

    fn oracle_predict(w: &[f64], eta: f64) -> Vec<f64> {
        let n = w.len();
        let kern: Vec<f64> = (0..n)
            .map(|m| (eta * ((2.0 * PI * m as f64 / n as f64).cos() - 1.0)).exp())
            .collect();
        let ksum: f64 = kern.iter().sum();
        let mut out: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| w[j] * kern[(i + n - j) % n] / ksum).sum())
            .collect();
        let total: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= total);
        out
    }

    #[test]
    fn grid_rounding() {
        let s = PmfState::new(&circle(10.0), 1.0).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.weights().iter().all(|w| (*w - 0.1).abs() < 1e-15));
        let s = PmfState::new(&circle(10.0), 3.0).unwrap();
        assert_eq!(s.len(), 3);
        assert!((s.grid().spacing() - 10.0 / 3.0).abs() < 1e-12);
        assert!(PmfState::new(&circle(10.0), 10.0).is_err());
        assert!(PmfState::new(&circle(10.0), 0.0).is_err());
    }

    #[test]
    fn uniform_stays_uniform() {
        for eta in [0.0, 0.5, 4.0, 1e3] {
            let mut s = PmfState::new(&circle(8.0), 0.25).unwrap();
            s.predict(&TransitionKernel::new(s.len(), eta).unwrap());
            let u = 1.0 / s.len() as f64;
            assert!(s.weights().iter().all(|w| (w - u).abs() < 1e-15), "eta={eta}");
        }
    }

    #[test]
    fn point_mass_spreads_as_kernel() {
        let base = PmfState::new(&circle(8.0), 1.0).unwrap();
        let mut w = vec![0.0; 8];
        w[0] = 1.0;
        let mut s = base.with_weights(w).unwrap();
        s.predict(&TransitionKernel::new(8, 4.0).unwrap());
        let raw: Vec<f64> = (0..8)
            .map(|i| (4.0 * (2.0 * PI * i as f64 / 8.0).cos()).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        for (got, r) in s.weights().iter().zip(&raw) {
            assert!((got - r / total).abs() < 1e-15);
        }
    }

    #[test]
    fn huge_concentration_is_identity() {
        let n = 40;
        let base = PmfState::new(&circle(40.0), 1.0).unwrap();
        let w: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.7).sin().abs()).collect();
        let mut s = base.with_weights(w).unwrap();
        let before = s.weights().to_vec();
        s.predict(&TransitionKernel::new(n, 1e9).unwrap());
        for (a, b) in s.weights().iter().zip(&before) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn predict_matches_dense_oracle() {
        for (n, eta) in [(7, 0.3), (16, 4.0), (64, 50.0), (64, 2000.0)] {
            let base = PmfState::new(&circle(n as f64), 1.0).unwrap();
            let w: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 + 0.5).powi(2)).collect();
            let mut s = base.with_weights(w).unwrap();
            let want = oracle_predict(s.weights(), eta);
            s.predict(&TransitionKernel::new(n, eta).unwrap());
            for (a, b) in s.weights().iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "n={n} eta={eta}");
            }
        }
    }

    #[test]
    fn flat_likelihood_leaves_weights() {
        let e = ellipse_345();
        let mut s = PmfState::new(&e, 0.1).unwrap();
        let before = s.weights().to_vec();
        let m = Measurement::new(0, 0.0, Vec2::new(500.0, 500.0), 0.0);
        let fading = FadingParams::new(-2.5, 0.015, UserType::Pedestrian).unwrap();
        s.update(&m, &fading, &NoiseModel::uniform(0.5).unwrap()).unwrap();
        for (a, b) in s.weights().iter().zip(&before) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn update_matches_bayes_rule() {
        let e = ellipse_345();
        let mut s = PmfState::new(&e, 0.5).unwrap();
        let prior: Vec<f64> = (0..s.len()).map(|i| 1.0 + (i % 5) as f64).collect();
        s = s.with_weights(prior).unwrap();
        let fading = FadingParams::new(-2.5, 0.3, UserType::Custom).unwrap();
        let noise = NoiseModel::location_dependent(0.5, 1.0, 0.2).unwrap();
        let m = Measurement::new(3, 0.1, Vec2::new(-1.0, 2.0), -1.3);
        let mut want: Vec<f64> = (0..s.len())
            .map(|i| {
                let xi = e.excess_paths(s.grid().point(i), m.user).unwrap();
                let f = fading.predicted_change(xi.tx, xi.rx);
                let sigma = noise.sigma(xi.min());
                let pdf = (-(m.z_db - f).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt());
                s.weights()[i] * pdf
            })
            .collect();
        let total: f64 = want.iter().sum();
        want.iter_mut().for_each(|v| *v /= total);
        s.update(&m, &fading, &noise).unwrap();
        for (a, b) in s.weights().iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn update_survives_extreme_likelihoods() {
        let e = ellipse_345();
        let mut s = PmfState::new(&e, 0.05).unwrap();
        let fading = FadingParams::new(-2.5, 0.015, UserType::Pedestrian).unwrap();
        let noise = NoiseModel::uniform(1e-3).unwrap();
        let m = Measurement::new(0, 0.0, Vec2::new(-1.5, 2.0), 40.0);
        s.update(&m, &fading, &noise).unwrap();
        assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.weights().iter().all(|w| w.is_finite()));
    }

    #[test]
    fn mmse_point_mass() {
        let base = PmfState::new(&circle(100.0), 1.0).unwrap();
        let mut w = vec![0.0; 100];
        w[37] = 1.0;
        let est = base.with_weights(w).unwrap().mmse();
        assert_eq!(est.index, 37);
        assert!((est.arc - 37.0).abs() < 1e-12);
        assert!(!est.multimodal);
    }

    #[test]
    fn mmse_matches_brute_force_on_wrapped_normal() {
        let n = 200;
        let base = PmfState::new(&circle(100.0), 0.5).unwrap();
        let w: Vec<f64> = (0..n)
            .map(|i| {
                let s = i as f64 * 0.5;
                let d = crate::geometry::wrapped_distance(100.0, s, 10.0);
                (-d * d / (2.0 * 9.0)).exp()
            })
            .collect();
        let s = base.with_weights(w).unwrap();
        let brute = (0..n)
            .min_by(|a, b| expected_cost(s.weights(), *a).total_cmp(&expected_cost(s.weights(), *b)))
            .unwrap();
        let est = s.mmse();
        assert_eq!(est.index, brute);
        assert!((est.arc - 10.0).abs() <= 0.5);
    }

    #[test]
    fn mmse_wraps_across_origin() {
        let base = PmfState::new(&circle(100.0), 1.0).unwrap();
        let mut w = vec![0.0; 100];
        w[98] = 1.0;
        w[2] = 1.0;
        let est = base.with_weights(w).unwrap().mmse();
        assert_eq!(est.index, 0);
    }

    #[test]
    fn antipodal_masses_are_flagged() {
        let base = PmfState::new(&circle(8.0), 1.0).unwrap();
        let mut w = vec![0.0; 8];
        w[1] = 1.0;
        w[5] = 1.0;
        let est = base.with_weights(w).unwrap().mmse();
        assert!(est.multimodal);
        // both quarter points minimize the expected squared wrapped distance
        assert_eq!(est.index, 3);
        let costs: Vec<f64> = (0..8)
            .map(|j| expected_cost(&[0.0, 0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0], j))
            .collect();
        assert_eq!(costs[3], costs[7]);
        assert!(costs[3] < costs[1]);
    }

    #[test]
    fn uniform_posterior_estimate_is_origin() {
        let s = PmfState::new(&circle(10.0), 0.1).unwrap();
        let est = s.mmse();
        assert_eq!(est.index, 0);
        assert!(!est.multimodal);
    }
}

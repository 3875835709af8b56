use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::elliptic::{complete_second_kind, quarter_partial};
use super::{GeometryError, Mpc, NetworkLink, Surface, Vec2};

/// Intersections closer than this (meters) are reported once.
const DEDUP_DISTANCE: f64 = 1e-3;
/// Relative discriminant magnitude below which a surface is treated as tangent.
const TANGENT_TOL: f64 = 1e-12;

/// The ellipse of feasible reflection points for one MPC of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayEllipse {
    pub link: NetworkLink,
    /// Path length `d` of the MPC; also the focal-distance sum.
    pub path_length: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub center: Vec2,
    /// Angle from the world x-axis to the local major axis (tx → rx).
    pub rotation: f64,
    pub eccentricity: f64,
    pub circumference: f64,
    /// `E(ε)`, the arc length of one quarter divided by `a`.
    quarter_integral: f64,
}

/// Nearest point on the ellipse to some query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Ellipse parameter θ in `[0, 2π)`.
    pub theta: f64,
    pub point: Vec2,
    pub distance: f64,
}

/// Mirror images of the receiver (`vt`) and transmitter (`vr`) for a given
/// reflection point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualNodes {
    pub vt: Vec2,
    pub vr: Vec2,
}

/// Excess path lengths of a user with respect to the two legs of a
/// single-bounce path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessPaths {
    pub tx: f64,
    pub rx: f64,
}

impl ExcessPaths {
    #[inline]
    pub fn min(&self) -> f64 {
        self.tx.min(self.rx)
    }
}

impl DelayEllipse {
    pub fn new(link: NetworkLink, mpc: Mpc) -> Result<Self, GeometryError> {
        let d = mpc.path_length;
        if !d.is_finite() {
            return Err(GeometryError::NonFinite("path length"));
        }
        let los = link.los_distance();
        if los <= 0.0 {
            return Err(GeometryError::DegenerateLink(link.tx));
        }
        if d <= los {
            return Err(GeometryError::DegenerateEllipse {
                path_length: d,
                los_distance: los,
            });
        }
        let a = 0.5 * d;
        let b = 0.5 * ((d - los) * (d + los)).sqrt();
        if b <= 0.0 {
            return Err(GeometryError::DegenerateEllipse {
                path_length: d,
                los_distance: los,
            });
        }
        let axis = (link.rx - link.tx) * (1.0 / los);
        let cos_alpha = axis.x.clamp(-1.0, 1.0);
        // sign of det([e_x, e_xl]); a zero determinant means the axis is
        // parallel to e_x and the angle is 0 or π
        let sign = if axis.y < 0.0 { -1.0 } else { 1.0 };
        let rotation = sign * cos_alpha.acos();
        Ok(Self::assemble(link, d, a, b, link.tx.midpoint(link.rx), rotation))
    }

    /// Builds an ellipse directly from its axes, allowing the circle `a == b`.
    /// The foci are placed on the rotated major axis.
    pub fn from_axes(center: Vec2, semi_major: f64, semi_minor: f64, rotation: f64) -> Result<Self, GeometryError> {
        if !(semi_major.is_finite() && semi_minor.is_finite() && center.is_finite() && rotation.is_finite()) {
            return Err(GeometryError::NonFinite("ellipse axes"));
        }
        if !(semi_minor > 0.0 && semi_minor <= semi_major) {
            return Err(GeometryError::DegenerateEllipse {
                path_length: 2.0 * semi_major,
                los_distance: 2.0 * (semi_major * semi_major - semi_minor * semi_minor).max(0.0).sqrt(),
            });
        }
        let c = ((semi_major - semi_minor) * (semi_major + semi_minor)).sqrt();
        let axis = Vec2::new(1.0, 0.0).rotated(rotation);
        let link = NetworkLink {
            tx: center - axis * c,
            rx: center + axis * c,
        };
        Ok(Self::assemble(
            link,
            2.0 * semi_major,
            semi_major,
            semi_minor,
            center,
            rotation,
        ))
    }

    fn assemble(link: NetworkLink, d: f64, a: f64, b: f64, center: Vec2, rotation: f64) -> Self {
        let eccentricity = (1.0 - (b / a) * (b / a)).max(0.0).sqrt();
        let quarter_integral = complete_second_kind(eccentricity);
        Self {
            link,
            path_length: d,
            semi_major: a,
            semi_minor: b,
            center,
            rotation,
            eccentricity,
            circumference: 4.0 * a * quarter_integral,
            quarter_integral,
        }
    }

    pub fn tx(&self) -> Vec2 {
        self.link.tx
    }

    pub fn rx(&self) -> Vec2 {
        self.link.rx
    }

    pub fn to_world(&self, local: Vec2) -> Vec2 {
        local.rotated(self.rotation) + self.center
    }

    pub fn to_local(&self, world: Vec2) -> Vec2 {
        (world - self.center).rotated(-self.rotation)
    }

    /// World point for ellipse parameter θ.
    pub fn point_at_theta(&self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        self.to_world(Vec2::new(self.semi_major * c, self.semi_minor * s))
    }

    /// `ds/dθ`.
    #[inline]
    pub fn arc_speed(&self, theta: f64) -> f64 {
        let c = theta.cos();
        self.semi_major * (1.0 - self.eccentricity * self.eccentricity * c * c).max(0.0).sqrt()
    }

    /// Arc length from θ = 0 to `theta`, for θ in `[0, 2π]`.
    pub fn arc_length(&self, theta: f64) -> Result<f64, GeometryError> {
        if !theta.is_finite() || !(0.0..=TAU).contains(&theta) {
            return Err(GeometryError::Domain {
                what: "ellipse parameter",
                value: theta,
                lo: 0.0,
                hi: TAU,
            });
        }
        Ok(self.arc_length_unchecked(theta))
    }

    fn arc_length_unchecked(&self, theta: f64) -> f64 {
        let quarter_len = 0.25 * self.circumference;
        let q = ((theta / FRAC_PI_2).floor() as i64).clamp(0, 4);
        if q == 4 {
            return self.circumference;
        }
        let r = (theta - q as f64 * FRAC_PI_2).clamp(0.0, FRAC_PI_2);
        q as f64 * quarter_len + self.semi_major * self.quarter_fraction(q, r)
    }

    /// Integral of the unit-scaled arc speed from the start of quarter `q`
    /// to `r` radians into it.
    fn quarter_fraction(&self, q: i64, r: f64) -> f64 {
        if q % 2 == 0 {
            quarter_partial(self.eccentricity, r)
        } else {
            // the integrand is mirrored about π/2 within odd quarters
            self.quarter_integral - quarter_partial(self.eccentricity, (FRAC_PI_2 - r).max(0.0))
        }
    }

    /// Ellipse parameter θ ∈ `[0, 2π)` at arc length `s` ∈ `[0, L)`.
    pub fn inverse_arc_length(&self, s: f64) -> Result<f64, GeometryError> {
        self.check_arc(s)?;
        Ok(self.inverse_arc_length_unchecked(s))
    }

    fn inverse_arc_length_unchecked(&self, s: f64) -> f64 {
        let quarter_len = 0.25 * self.circumference;
        let q = ((s / quarter_len).floor() as i64).clamp(0, 3);
        let target = (s - q as f64 * quarter_len) / self.semi_major;
        let base = q as f64 * FRAC_PI_2;
        let tol = 1e-13 * self.circumference / self.semi_major;

        let (mut lo, mut hi) = (0.0, FRAC_PI_2);
        let mut x = (target / self.quarter_integral * FRAC_PI_2).clamp(lo, hi);
        for _ in 0..100 {
            let f = self.quarter_fraction(q, x) - target;
            if f.abs() <= tol {
                break;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = self.arc_speed(base + x) / self.semi_major;
            let newton = if slope > 0.0 { x - f / slope } else { f64::NAN };
            x = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * FRAC_PI_2 {
                break;
            }
        }
        let theta = base + x;
        if theta >= TAU {
            0.0
        } else {
            theta
        }
    }

    /// World point at arc length `s`.
    pub fn arc_to_point(&self, s: f64) -> Result<Vec2, GeometryError> {
        let theta = self.inverse_arc_length(s)?;
        Ok(self.point_at_theta(theta))
    }

    /// Projects `p` onto the ellipse.
    ///
    /// Damped Newton descent on the squared distance over θ, started from the
    /// four vertices and from the direction of `p`. Equidistant candidates
    /// resolve to the smallest θ.
    pub fn project(&self, p: Vec2) -> Projection {
        let q = self.to_local(p);
        let (a, b) = (self.semi_major, self.semi_minor);
        let dist2 = |t: f64| {
            let (s, c) = t.sin_cos();
            let dx = a * c - q.x;
            let dy = b * s - q.y;
            dx * dx + dy * dy
        };

        let mut starts = [0.0, FRAC_PI_2, PI, 1.5 * PI, 0.0];
        starts[4] = wrap_angle((q.y * a).atan2(q.x * b));

        let mut best: Option<(f64, f64)> = None;
        for &start in &starts {
            let theta = wrap_angle(self.descend(q, start));
            let d2 = dist2(theta);
            best = match best {
                None => Some((theta, d2)),
                Some((bt, bd)) => {
                    let tol = 1e-12 * (1.0 + bd);
                    if d2 < bd - tol || ((d2 - bd).abs() <= tol && theta < bt - 1e-12) {
                        Some((theta, d2))
                    } else {
                        Some((bt, bd))
                    }
                }
            };
        }
        let (theta, d2) = best.expect("at least one start");
        Projection {
            theta,
            point: self.point_at_theta(theta),
            distance: d2.max(0.0).sqrt(),
        }
    }

    fn descend(&self, q: Vec2, start: f64) -> f64 {
        let (a, b) = (self.semi_major, self.semi_minor);
        let k = b * b - a * a;
        let dist2 = |t: f64| {
            let (s, c) = t.sin_cos();
            let dx = a * c - q.x;
            let dy = b * s - q.y;
            dx * dx + dy * dy
        };
        let mut theta = start;
        let mut value = dist2(theta);
        for _ in 0..200 {
            let (s, c) = theta.sin_cos();
            let grad = k * s * c + a * q.x * s - b * q.y * c;
            let curv = k * (c * c - s * s) + a * q.x * c + b * q.y * s;
            let mut step = if curv > 0.0 {
                (-grad / curv).clamp(-0.5, 0.5)
            } else if grad != 0.0 {
                -0.25 * grad.signum()
            } else {
                // stationary but not a minimum: nudge off the maximum
                0.25
            };
            let mut accepted = false;
            for _ in 0..60 {
                let candidate = theta + step;
                let cv = dist2(candidate);
                if cv <= value {
                    theta = candidate;
                    value = cv;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted || step.abs() < 1e-15 {
                break;
            }
        }
        theta
    }

    /// Arc length of the ellipse point nearest to `p`.
    pub fn point_to_arc(&self, p: Vec2) -> f64 {
        let proj = self.project(p);
        let s = self.arc_length_unchecked(proj.theta);
        if s >= self.circumference {
            0.0
        } else {
            s
        }
    }

    /// Euclidean distance from `p` to the ellipse.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.project(p).distance
    }

    /// Virtual transmitter and receiver for reflection point `rp`.
    pub fn virtual_nodes(&self, rp: Vec2) -> Result<VirtualNodes, GeometryError> {
        let d = self.path_length;
        let from_rx = (rp - self.link.rx)
            .normalized()
            .ok_or(GeometryError::DegenerateRp(rp))?;
        let from_tx = (rp - self.link.tx)
            .normalized()
            .ok_or(GeometryError::DegenerateRp(rp))?;
        Ok(VirtualNodes {
            vt: self.link.rx + from_rx * d,
            vr: self.link.tx + from_tx * d,
        })
    }

    /// Excess path lengths of `user` for the path reflecting at `rp`.
    pub fn excess_paths(&self, rp: Vec2, user: Vec2) -> Result<ExcessPaths, GeometryError> {
        let nodes = self.virtual_nodes(rp)?;
        Ok(nodes.excess(&self.link, self.path_length, user))
    }

    /// Arc lengths where any surface meets the ellipse, ascending, with
    /// points closer than 1 mm merged.
    pub fn find_reflection_points(&self, surfaces: &[Surface]) -> Vec<f64> {
        let (a, b) = (self.semi_major, self.semi_minor);
        let mut thetas: Vec<f64> = Vec::new();
        for surface in surfaces {
            let p0 = self.to_local(surface.p0);
            let p1 = self.to_local(surface.p1);
            let dir = p1 - p0;
            let qa = dir.x * dir.x / (a * a) + dir.y * dir.y / (b * b);
            let qb = 2.0 * (p0.x * dir.x / (a * a) + p0.y * dir.y / (b * b));
            let qc = p0.x * p0.x / (a * a) + p0.y * p0.y / (b * b) - 1.0;
            if qa <= 0.0 {
                continue;
            }
            let disc = qb * qb - 4.0 * qa * qc;
            let scale = (qb * qb).max((4.0 * qa * qc).abs()).max(qa * qa);
            let roots: Vec<f64> = if disc.abs() <= TANGENT_TOL * scale {
                vec![-qb / (2.0 * qa)]
            } else if disc < 0.0 {
                Vec::new()
            } else {
                let sq = disc.sqrt();
                // numerically stable pair
                let t1 = if qb >= 0.0 {
                    (-qb - sq) / (2.0 * qa)
                } else {
                    (-qb + sq) / (2.0 * qa)
                };
                let t2 = if t1 != 0.0 { qc / (qa * t1) } else { -qb / qa };
                vec![t1, t2]
            };
            let seg_len = dir.norm();
            let eps = 1e-9 / seg_len.max(1e-300);
            for t in roots {
                if t >= -eps && t <= 1.0 + eps {
                    let local = p0 + dir * t.clamp(0.0, 1.0);
                    thetas.push(wrap_angle((local.y / b).atan2(local.x / a)));
                }
            }
        }

        let mut found: Vec<(f64, Vec2)> = thetas
            .into_iter()
            .map(|t| {
                let s = self.arc_length_unchecked(t);
                let s = if s >= self.circumference { 0.0 } else { s };
                (s, self.point_at_theta(t))
            })
            .collect();
        found.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, Vec2)> = Vec::with_capacity(found.len());
        for (s, p) in found {
            if out.iter().any(|(_, q)| q.distance(p) < DEDUP_DISTANCE) {
                continue;
            }
            out.push((s, p));
        }
        out.into_iter().map(|(s, _)| s).collect()
    }

    /// Shortest distance along the ellipse between two arc positions.
    pub fn arc_distance(&self, s1: f64, s2: f64) -> f64 {
        wrapped_distance(self.circumference, s1, s2)
    }

    /// Wraps any arc length into `[0, L)`.
    pub fn wrap_arc(&self, s: f64) -> f64 {
        wrap_arc(s, self.circumference)
    }

    pub(crate) fn check_arc(&self, s: f64) -> Result<(), GeometryError> {
        if !s.is_finite() || s < 0.0 || s >= self.circumference {
            return Err(GeometryError::Domain {
                what: "arc length",
                value: s,
                lo: 0.0,
                hi: self.circumference,
            });
        }
        Ok(())
    }
}

impl VirtualNodes {
    /// Excess path lengths for a user at `user`, given the physical link and
    /// path length these virtual nodes were built for.
    #[inline]
    pub fn excess(&self, link: &NetworkLink, path_length: f64, user: Vec2) -> ExcessPaths {
        ExcessPaths {
            tx: link.tx.distance(user) + self.vr.distance(user) - path_length,
            rx: self.vt.distance(user) + link.rx.distance(user) - path_length,
        }
    }
}

pub(crate) fn wrap_angle(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

pub(crate) fn wrap_arc(s: f64, circumference: f64) -> f64 {
    let w = s.rem_euclid(circumference);
    if w >= circumference {
        0.0
    } else {
        w
    }
}

/// `min(|a − b|, L − |a − b|)` for positions on a closed curve of length `L`.
pub fn wrapped_distance(circumference: f64, a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(circumference);
    d.min(circumference - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_four_five() -> DelayEllipse {
        let link = NetworkLink::new(Vec2::new(-3.0, 0.0), Vec2::new(3.0, 0.0)).unwrap();
        DelayEllipse::new(link, Mpc::from_path_length(10.0)).unwrap()
    }

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn reference_link_geometry() {
        let link = NetworkLink::new(Vec2::new(0.0, 0.0), Vec2::new(31.370, 0.0)).unwrap();
        let e = DelayEllipse::new(link, Mpc::from_path_length(38.673)).unwrap();
        assert!((e.semi_major - 19.337).abs() < 1e-3);
        assert!((e.semi_minor - 11.308).abs() < 1e-3);
        // 4·a·E(ε) for these axes, cross-checked by direct quadrature
        assert!(
            (e.circumference - 97.932_931_388_468).abs() < 1e-9,
            "{}",
            e.circumference
        );
    }

    #[test]
    fn three_four_five_axes() {
        let e = three_four_five();
        assert_eq!(e.semi_major, 5.0);
        assert_eq!(e.semi_minor, 4.0);
        assert_eq!(e.center, Vec2::ZERO);
        assert_eq!(e.rotation, 0.0);
        assert!((e.eccentricity - 0.6).abs() < 1e-15);
    }

    #[test]
    fn vertical_link_rotates_by_quarter_turn() {
        let link = NetworkLink::new(Vec2::new(0.0, -3.0), Vec2::new(0.0, 3.0)).unwrap();
        let e = DelayEllipse::new(link, Mpc::from_path_length(10.0)).unwrap();
        assert!((e.rotation - FRAC_PI_2).abs() < 1e-15);
        assert_eq!((e.semi_major, e.semi_minor), (5.0, 4.0));
        let down = NetworkLink::new(Vec2::new(0.0, 3.0), Vec2::new(0.0, -3.0)).unwrap();
        let e = DelayEllipse::new(down, Mpc::from_path_length(10.0)).unwrap();
        assert!((e.rotation + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn reversed_horizontal_link_is_half_turn() {
        let link = NetworkLink::new(Vec2::new(3.0, 0.0), Vec2::new(-3.0, 0.0)).unwrap();
        let e = DelayEllipse::new(link, Mpc::from_path_length(10.0)).unwrap();
        assert!((e.rotation - PI).abs() < 1e-15);
        // θ = 0 sits on the receiver side
        assert!(close(e.point_at_theta(0.0), Vec2::new(-5.0, 0.0), 1e-12));
    }

    #[test]
    fn rejects_degenerate_path_length() {
        let link = NetworkLink::new(Vec2::new(-3.0, 0.0), Vec2::new(3.0, 0.0)).unwrap();
        for d in [6.0, 5.0, f64::NAN] {
            assert!(DelayEllipse::new(link, Mpc::from_path_length(d)).is_err());
        }
        assert!(NetworkLink::new(Vec2::ZERO, Vec2::ZERO).is_err());
    }

    #[test]
    fn arc_length_landmarks() {
        let e = three_four_five();
        let l = e.circumference;
        assert_eq!(e.arc_length(0.0).unwrap(), 0.0);
        assert!((e.arc_length(FRAC_PI_2).unwrap() - l / 4.0).abs() < 1e-12);
        assert!((e.arc_length(PI).unwrap() - l / 2.0).abs() < 1e-12);
        assert!((e.arc_length(TAU).unwrap() - l).abs() < 1e-12);
        assert!(e.arc_length(-0.1).is_err());
        assert!(e.arc_length(TAU + 1e-9).is_err());
    }

    #[test]
    fn circle_arc_length_is_radius_times_angle() {
        let c = DelayEllipse::from_axes(Vec2::ZERO, 1.0, 1.0, 0.0).unwrap();
        assert!((c.arc_length(FRAC_PI_2).unwrap() - FRAC_PI_2).abs() < 1e-14);
        assert!((c.inverse_arc_length(PI).unwrap() - PI).abs() < 1e-12);
        assert_eq!(c.inverse_arc_length(0.0).unwrap(), 0.0);
    }

    #[test]
    fn inverse_rejects_out_of_range() {
        let e = three_four_five();
        assert!(e.inverse_arc_length(-1e-9).is_err());
        assert!(e.inverse_arc_length(e.circumference).is_err());
        assert!(e.arc_to_point(f64::NAN).is_err());
    }

    #[test]
    fn arc_to_point_landmarks() {
        let e = three_four_five();
        let l = e.circumference;
        assert!(close(e.arc_to_point(0.0).unwrap(), Vec2::new(5.0, 0.0), 1e-12));
        assert!(close(e.arc_to_point(l / 2.0).unwrap(), Vec2::new(-5.0, 0.0), 1e-9));
        assert!(close(e.arc_to_point(l / 4.0).unwrap(), Vec2::new(0.0, 4.0), 1e-9));
    }

    #[test]
    fn projection_cases() {
        let e = three_four_five();
        let l = e.circumference;
        assert_eq!(e.point_to_arc(Vec2::new(10.0, 0.0)), 0.0);
        assert!((e.distance_to(Vec2::new(10.0, 0.0)) - 5.0).abs() < 1e-12);
        // centre is equidistant from both co-vertices; the smaller arc wins
        assert!((e.point_to_arc(Vec2::ZERO) - l / 4.0).abs() < 1e-9);
        assert!((e.distance_to(Vec2::ZERO) - 4.0).abs() < 1e-12);
        let p = e.arc_to_point(1.234).unwrap();
        assert!((e.point_to_arc(p) - 1.234).abs() < 1e-9);
        assert!(e.distance_to(p) < 1e-9);
    }

    #[test]
    fn virtual_node_examples() {
        let e = three_four_five();
        let v = e.virtual_nodes(Vec2::new(0.0, 4.0)).unwrap();
        assert!(close(v.vt, Vec2::new(-3.0, 8.0), 1e-12));
        assert!(close(v.vr, Vec2::new(3.0, 8.0), 1e-12));
        let v = e.virtual_nodes(Vec2::new(5.0, 0.0)).unwrap();
        assert!(close(v.vt, Vec2::new(13.0, 0.0), 1e-12));
        assert!(close(v.vr, Vec2::new(7.0, 0.0), 1e-12));
        let v = e.virtual_nodes(Vec2::new(0.0, -4.0)).unwrap();
        assert!(close(v.vt, Vec2::new(-3.0, -8.0), 1e-12));
        assert!(close(v.vr, Vec2::new(3.0, -8.0), 1e-12));
        assert_eq!(
            e.virtual_nodes(Vec2::new(3.0, 0.0)),
            Err(GeometryError::DegenerateRp(Vec2::new(3.0, 0.0)))
        );
    }

    #[test]
    fn excess_path_examples() {
        let e = three_four_five();
        let rp = Vec2::new(0.0, 4.0);
        let on_tx_leg = e.excess_paths(rp, Vec2::new(-1.5, 2.0)).unwrap();
        assert!(on_tx_leg.tx.abs() < 1e-12);
        let at_rp = e.excess_paths(rp, rp).unwrap();
        assert!(at_rp.tx.abs() < 1e-12 && at_rp.rx.abs() < 1e-12);
        let centre = e.excess_paths(rp, Vec2::ZERO).unwrap();
        // |tx| + |vr| - d = 3 + sqrt(73) - 10
        let expected = 3.0 + 73f64.sqrt() - 10.0;
        assert!((centre.tx - expected).abs() < 1e-12);
        assert!((centre.rx - expected).abs() < 1e-12);
        assert!((centre.min() - 1.5440).abs() < 1e-4);
    }

    #[test]
    fn reflection_point_search() {
        let e = three_four_five();
        let l = e.circumference;
        let tangent = Surface::new(Vec2::new(-10.0, 4.0), Vec2::new(10.0, 4.0)).unwrap();
        let found = e.find_reflection_points(&[tangent]);
        assert_eq!(found.len(), 1);
        assert!((found[0] - l / 4.0).abs() < 1e-9);

        let outside = Surface::new(Vec2::new(-10.0, 6.0), Vec2::new(10.0, 6.0)).unwrap();
        assert!(e.find_reflection_points(&[outside]).is_empty());

        let crossing = Surface::new(Vec2::new(0.0, -10.0), Vec2::new(0.0, 10.0)).unwrap();
        let found = e.find_reflection_points(&[crossing]);
        assert_eq!(found.len(), 2);
        assert!((found[0] - l / 4.0).abs() < 1e-9);
        assert!((found[1] - 3.0 * l / 4.0).abs() < 1e-9);

        // duplicated wall collapses onto the same points
        assert_eq!(e.find_reflection_points(&[crossing, crossing]).len(), 2);
        // a short segment that ends before reaching the ellipse
        let short = Surface::new(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0)).unwrap();
        assert!(e.find_reflection_points(&[short]).is_empty());
    }

    #[test]
    fn wrapped_distance_cases() {
        assert!((wrapped_distance(97.633, 0.1, 97.533) - 0.2).abs() < 1e-9);
        assert_eq!(wrapped_distance(100.0, 10.0, 60.0), 50.0);
        assert_eq!(wrapped_distance(100.0, 42.0, 42.0), 0.0);
    }
}

#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use ellipse_calib::{DelayEllipse, Mpc, NetworkLink, Surface, Vec2};

pub const LOS_M: f64 = 31.370;
pub const PATH_M: f64 = 38.673;
/// Parameter angle at which the wall touches the intersection ellipse.
pub const WALL_THETA: f64 = 2.0;

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ellipse-calib"));
    c.env_remove("ELLIPSE_CALIB_LOG");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// 3-4-5 ellipse with a wall tangent at its top, `(0, 4)`.
pub fn minimal_scenario(seed: u64) -> String {
    format!(
        r#"seed = {seed}

[nodes]
tx = [-3.0, 0.0]
rx = [3.0, 0.0]

[[surfaces]]
from = [-10.0, 4.0]
to = [10.0, 4.0]

[[mpcs]]
tx = "tx"
rx = "rx"
path_length_m = 10.0

[trajectory]
waypoints = [[-4.0, 2.0], [4.0, 2.0]]
speed_mps = 1.0
update_time_s = 0.05

[fading]
preset = "calibration"

[noise]
preset = "calibration"
"#
    )
}

pub fn intersection_ellipse() -> DelayEllipse {
    let link = NetworkLink::new(Vec2::new(0.0, 0.0), Vec2::new(LOS_M, 0.0)).unwrap();
    DelayEllipse::new(link, Mpc::from_path_length(PATH_M)).unwrap()
}

/// A 10 m wall touching the intersection ellipse at [`WALL_THETA`], moved
/// inward by a nanometer so that it meets the ellipse in one cluster.
pub fn tangent_wall(e: &DelayEllipse) -> Surface {
    let p = e.point_at_theta(WALL_THETA);
    let (s, c) = WALL_THETA.sin_cos();
    let t = Vec2::new(-e.semi_major * s, e.semi_minor * c)
        .rotated(e.rotation)
        .normalized()
        .unwrap();
    let inward = (e.center - p).normalized().unwrap() * 1e-9;
    Surface::new(p - t * 5.0 + inward, p + t * 5.0 + inward).unwrap()
}

/// Setup-II-like outdoor link: the user walks across both legs of the
/// MPC whose reflection point lies on a tangent wall.
pub fn intersection_scenario(seed: u64, noise_model: &str) -> String {
    let e = intersection_ellipse();
    let w = tangent_wall(&e);
    format!(
        r#"seed = {seed}

[nodes]
tx = [0.0, 0.0]
rx = [{LOS_M:?}, 0.0]

[[surfaces]]
from = [{:?}, {:?}]
to = [{:?}, {:?}]

[[mpcs]]
tx = "tx"
rx = "rx"
path_length_m = {PATH_M:?}

[trajectory]
waypoints = [[-1.0, 6.0], [26.0, 6.0]]
speed_mps = 1.0
update_time_s = 0.02

[fading]
preset = "calibration"

[noise]
preset = "setup2"
model = "{noise_model}"
"#,
        w.p0.x, w.p0.y, w.p1.x, w.p1.y
    )
}

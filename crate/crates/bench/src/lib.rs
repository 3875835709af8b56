//! Shared fixtures for the benchmarks.

use ellipse_calib::{DelayEllipse, Measurement, Mpc, NetworkLink, Vec2};

/// The 31.37 m link with a 38.673 m path: about 1950 grid points at 5 cm.
pub fn intersection_ellipse() -> DelayEllipse {
    let link = NetworkLink::new(Vec2::new(0.0, 0.0), Vec2::new(31.370, 0.0)).expect("distinct nodes");
    DelayEllipse::new(link, Mpc::from_path_length(38.673)).expect("path longer than the link")
}

/// A straight walk across the ellipse with a constant attenuation.
pub fn walk(count: usize) -> Vec<Measurement> {
    (0..count)
        .map(|k| {
            let x = -1.0 + 27.0 * k as f64 / count as f64;
            Measurement::new(k as u64, 0.02 * k as f64, Vec2::new(x, 6.0), -0.5)
        })
        .collect()
}

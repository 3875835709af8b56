//! Peak detection on circular weight vectors.

/// Minimum prominence of a reported mode, relative to the largest weight.
pub const MIN_PROMINENCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// Grid index of the peak.
    pub index: usize,
    pub height: f64,
    pub prominence: f64,
    /// Total weight of the basin attributed to this peak.
    pub mass: f64,
}

/// Local maxima of a circular sequence whose prominence reaches
/// [`MIN_PROMINENCE`] of the largest value, ordered by decreasing mass.
///
/// Plateaus count once, at their first index. A constant sequence has no
/// modes.
pub fn find_modes(w: &[f64]) -> Vec<Mode> {
    let n = w.len();
    if n < 2 {
        return Vec::new();
    }
    let peak = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // rotate so the global minimum sits at both ends of a linear view
    let start = (0..n).min_by(|a, b| w[*a].total_cmp(&w[*b])).unwrap_or(0);
    let at = |k: usize| w[(start + k) % n];
    let len = n + 1;

    let mut peaks: Vec<usize> = Vec::new();
    let mut k = 1;
    while k < len - 1 {
        if at(k) > at(k - 1) {
            let mut e = k;
            while e + 1 < len - 1 && at(e + 1) == at(k) {
                e += 1;
            }
            if at(e + 1) < at(k) {
                peaks.push(k);
            }
            k = e + 1;
        } else {
            k += 1;
        }
    }

    let mut kept: Vec<(usize, f64)> = Vec::new();
    for &p in &peaks {
        let h = at(p);
        let mut left_min = h;
        let mut i = p;
        while i > 0 {
            i -= 1;
            let v = at(i);
            if v > h {
                break;
            }
            left_min = left_min.min(v);
        }
        let mut right_min = h;
        let mut i = p;
        while i + 1 < len {
            i += 1;
            let v = at(i);
            if v > h {
                break;
            }
            right_min = right_min.min(v);
        }
        let prominence = h - left_min.max(right_min);
        if prominence >= MIN_PROMINENCE * peak {
            kept.push((p, prominence));
        }
    }
    if kept.is_empty() {
        return Vec::new();
    }

    // basins split at the lowest point between neighboring peaks
    let mut bounds = vec![0];
    for pair in kept.windows(2) {
        let (a, b) = (pair[0].0, pair[1].0);
        let mut lo = a;
        for i in a..=b {
            if at(i) < at(lo) {
                lo = i;
            }
        }
        bounds.push(lo);
    }
    bounds.push(len - 1);

    let mut modes: Vec<Mode> = kept
        .iter()
        .enumerate()
        .map(|(idx, &(p, prominence))| {
            let mass: f64 = (bounds[idx]..bounds[idx + 1]).map(at).sum();
            Mode {
                index: (start + p) % n,
                height: at(p),
                prominence,
                mass,
            }
        })
        .collect();
    modes.sort_by(|a, b| b.mass.total_cmp(&a.mass).then(a.index.cmp(&b.index)));
    modes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bumps(n: usize, centers: &[(usize, f64)], width: f64) -> Vec<f64> {
        (0..n)
            .map(|i| {
                centers
                    .iter()
                    .map(|&(c, h)| {
                        let d = (i as f64 - c as f64).abs();
                        let d = d.min(n as f64 - d);
                        h * (-d * d / (2.0 * width * width)).exp()
                    })
                    .sum::<f64>()
                    + 1e-6
            })
            .collect()
    }

    #[test]
    fn counts_separated_bumps() {
        let w = bumps(200, &[(10, 1.0), (80, 0.5), (150, 0.3)], 4.0);
        let modes = find_modes(&w);
        assert_eq!(modes.len(), 3);
        let mut idx: Vec<usize> = modes.iter().map(|m| m.index).collect();
        idx.sort();
        assert_eq!(idx, vec![10, 80, 150]);
        assert_eq!(modes[0].index, 10);
    }

    #[test]
    fn bump_across_origin_is_one_mode() {
        let w = bumps(100, &[(0, 1.0)], 3.0);
        let modes = find_modes(&w);
        assert_eq!(modes.len(), 1);
        assert_eq!(modes[0].index, 0);
        assert!((modes[0].mass - w.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn small_ripples_are_ignored() {
        let mut w = bumps(100, &[(30, 1.0)], 5.0);
        w[70] += 0.05;
        assert_eq!(find_modes(&w).len(), 1);
    }

    #[test]
    fn flat_and_plateau() {
        assert!(find_modes(&[0.25; 4]).is_empty());
        let w = [0.0, 1.0, 1.0, 1.0, 0.0, 0.0];
        let modes = find_modes(&w);
        assert_eq!(modes.len(), 1);
        assert_eq!(modes[0].index, 1);
    }

    #[test]
    fn masses_split_between_basins() {
        let w = bumps(100, &[(25, 1.0), (75, 1.0)], 3.0);
        let modes = find_modes(&w);
        assert_eq!(modes.len(), 2);
        assert!((modes[0].mass - modes[1].mass).abs() < 1e-9);
    }
}

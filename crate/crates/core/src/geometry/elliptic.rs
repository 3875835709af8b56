//! Elliptic integrals of the second kind.
//!
//! The complete integral uses the arithmetic-geometric mean. Partial
//! integrals over a quarter period use adaptive Gauss-Legendre quadrature
//! of `sqrt(1 - e^2 cos^2 t)`.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

const GL_ORDER: usize = 16;
const MAX_DEPTH: u32 = 48;

/// Complete elliptic integral of the second kind `E(e)` for modulus
/// (eccentricity) `e` in `[0, 1]`.
pub fn complete_second_kind(eccentricity: f64) -> f64 {
    let m = eccentricity * eccentricity;
    if m >= 1.0 {
        return 1.0;
    }
    let mut a = 1.0_f64;
    let mut g = (1.0 - m).sqrt();
    let mut sum = 0.5 * m;
    let mut weight = 0.5;
    for _ in 0..64 {
        let c = 0.5 * (a - g);
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        weight *= 2.0;
        sum += weight * c * c;
        let a_next = 0.5 * (a + g);
        g = (a * g).sqrt();
        a = a_next;
    }
    let k = FRAC_PI_2 / a;
    k * (1.0 - sum)
}

/// `∫₀^x sqrt(1 - e² cos² t) dt` for `x` in `[0, π/2]`.
pub fn quarter_partial(eccentricity: f64, x: f64) -> f64 {
    debug_assert!((0.0..=FRAC_PI_2 + 1e-15).contains(&x));
    if x <= 0.0 {
        return 0.0;
    }
    let m = eccentricity * eccentricity;
    let integrand = |t: f64| {
        let c = t.cos();
        (1.0 - m * c * c).max(0.0).sqrt()
    };
    adaptive_gauss_legendre(integrand, 0.0, x, 1e-15)
}

/// Adaptive Gauss-Legendre quadrature: a panel is accepted when one
/// `GL_ORDER`-point rule agrees with the sum over its two halves.
pub fn adaptive_gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let whole = gauss_legendre(&f, a, b);
    refine(&f, a, b, whole, tol, 0)
}

fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = gauss_legendre(f, a, mid);
    let right = gauss_legendre(f, mid, b);
    let halves = left + right;
    if (halves - whole).abs() <= tol || depth >= MAX_DEPTH {
        return halves;
    }
    refine(f, a, mid, left, 0.5 * tol, depth + 1) + refine(f, mid, b, right, 0.5 * tol, depth + 1)
}

fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gl_rule();
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights.iter()) {
        acc += w * f(center + half * x);
    }
    acc * half
}

/// Nodes and weights on `[-1, 1]`, computed once by Newton iteration on the
/// Legendre polynomial.
fn gl_rule() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = [0.0; GL_ORDER];
        let mut weights = [0.0; GL_ORDER];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_limit() {
        assert!((complete_second_kind(0.0) - FRAC_PI_2).abs() < 1e-15);
        assert!((quarter_partial(0.0, 0.3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn degenerate_modulus_one() {
        assert_eq!(complete_second_kind(1.0), 1.0);
    }

    #[test]
    fn known_value() {
        // E(k = 1/sqrt(2)) = 1.3506438810476755...
        let e = complete_second_kind(std::f64::consts::FRAC_1_SQRT_2);
        assert!((e - 1.350_643_881_047_675_5).abs() < 1e-14, "{e}");
    }

    #[test]
    fn rule_integrates_polynomials_exactly() {
        // degree 2n-1 = 31 is exact; check a degree-20 monomial on [0, 1]
        let v = gauss_legendre(&|x: f64| x.powi(20), 0.0, 1.0);
        assert!((v - 1.0 / 21.0).abs() < 1e-15);
        let s: f64 = gl_rule().1.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn full_quarter_matches_agm() {
        for &e in &[0.1, 0.5, 0.9, 0.99, 0.999] {
            let q = quarter_partial(e, FRAC_PI_2);
            let c = complete_second_kind(e);
            assert!((q - c).abs() < 1e-13, "e={e}: {q} vs {c}");
        }
    }
}

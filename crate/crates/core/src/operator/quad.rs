//! Small numerical integration helpers shared by the operator code.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn cached(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let table = TABLE.get_or_init(|| (0..=24).map(|k| gauss_legendre(k.max(1))).collect());
    &table[n]
}

/// Integrate `f` over [a, b] with an `n`-point Gauss rule (n <= 24).
pub fn gl(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = cached(n.min(24));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(mid + half * xi))
        .sum::<f64>()
        * half
}

/// Gauss rule on a mesh graded geometrically toward both endpoints, for
/// integrands with algebraic or logarithmic endpoint singularities.
pub fn graded(f: &impl Fn(f64) -> f64, a: f64, b: f64, levels: usize) -> f64 {
    let mid = 0.5 * (a + b);
    let ratio = 0.35;
    let mut total = 0.0;
    for (lo, hi) in [(a, mid), (b, mid)] {
        // panels [lo + (hi-lo) r^{k+1}, lo + (hi-lo) r^k]
        let len = hi - lo;
        let mut outer = 1.0;
        // panels narrower than the spacing of floats near `lo` are dropped
        let tiny = 64.0 * f64::EPSILON * lo.abs();
        for _ in 0..levels {
            let inner = outer * ratio;
            if (len * inner).abs() <= tiny {
                break;
            }
            total += gl(f, lo + len * inner, lo + len * outer, 12) * len.signum();
            outer = inner;
        }
        if (len * outer).abs() > tiny {
            total += gl(f, lo, lo + len * outer, 12) * len.signum();
        }
    }
    total
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `∫_0^∞ (1 - cos t) t^{-1-2s} dt`.
pub fn cosine_moment(s: f64) -> f64 {
    PI / (2.0 * gamma(1.0 + 2.0 * s) * (PI * s).sin())
}

/// `∫_0^∞ (sin t - [s > 1/2] t) t^{-1-2s} dt` for `s != 1/2`.
pub fn sine_moment(s: f64) -> f64 {
    -gamma(-2.0 * s) * (PI * s).sin()
}

/// `∫_{S^{n-1}} |θ_1|^{2s} dθ`.
pub fn sphere_power_moment(dim: usize, s: f64) -> f64 {
    match dim {
        1 => 2.0,
        n => {
            let nf = n as f64;
            // 2 π^{(n-1)/2} Γ(s + 1/2) / Γ(s + n/2)
            2.0 * PI.powf((nf - 1.0) / 2.0) * gamma(s + 0.5) / gamma(s + nf / 2.0)
        }
    }
}

/// Surface measure of the unit sphere in R^n.
pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(n / 2.0) / gamma(n / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let v = gl(|x| x.powi(9) + 3.0 * x * x, -1.0, 2.0, 6);
        let exact = (2f64.powi(10) - 1.0) / 10.0 + (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn graded_rule_handles_endpoint_singularities() {
        let v = graded(&|x: f64| x.powf(-0.5) + (1.0 - x).ln(), 0.0, 1.0, 70);
        assert!((v - (2.0 - 1.0)).abs() < 1e-10, "{v}");
    }

    #[test]
    fn moments_match_known_values() {
        assert!((cosine_moment(0.5) - PI / 2.0).abs() < 1e-14);
        // ∫ sin t t^{-3/2} dt = sqrt(2π)
        assert!((sine_moment(0.25) - (2.0 * PI).sqrt()).abs() < 1e-12);
        assert!((sphere_power_moment(2, 0.5) - 4.0).abs() < 1e-13);
        assert!((sphere_power_moment(2, 1.0) - PI).abs() < 1e-13);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(1) - 2.0).abs() < 1e-13);
    }
}

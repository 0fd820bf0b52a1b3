use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::quad;
use crate::error::{Error, Module, Result};

/// Angular density `a(θ)` of a homogeneous kernel, stored as a trigonometric
/// series in the polar angle `φ` of `θ = (cos φ, sin φ)`.
///
/// In one dimension the sphere is `{+1, -1}`, i.e. `φ ∈ {0, π}`, so only the
/// mean and the `cos` coefficients matter.
///
/// The density is dimensionless: the kernel is
/// `K(y) = c_{n,s} a(y/|y|) |y|^{-n-2s}` and `a ≡ 1` is the fractional
/// Laplacian `-(-Δ)^s` with symbol `|ξ|^{2s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalDensity {
    pub mean: f64,
    /// `cos(kφ)` coefficients, `k = 1, 2, ...`
    pub cos: Vec<f64>,
    /// `sin(kφ)` coefficients, `k = 1, 2, ...`
    pub sin: Vec<f64>,
}

impl SphericalDensity {
    pub fn isotropic(value: f64) -> Self {
        SphericalDensity {
            mean: value,
            cos: vec![],
            sin: vec![],
        }
    }

    /// One-dimensional density with `a(+1) = plus`, `a(-1) = minus`.
    pub fn two_sided(plus: f64, minus: f64) -> Self {
        SphericalDensity {
            mean: 0.5 * (plus + minus),
            cos: vec![0.5 * (plus - minus)],
            sin: vec![],
        }
    }

    /// Fit the series to `samples` taken at `φ_i = 2πi/N` (trapezoid rule,
    /// exact for band-limited densities with bandwidth below `N/2`).
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        assert!(n >= 2, "need at least two samples");
        let kmax = (n - 1) / 2;
        let mean = samples.iter().sum::<f64>() / n as f64;
        let mut cos = vec![0.0; kmax];
        let mut sin = vec![0.0; kmax];
        for k in 1..=kmax {
            let (mut c, mut s) = (0.0, 0.0);
            for (i, v) in samples.iter().enumerate() {
                let phi = 2.0 * PI * (i * k) as f64 / n as f64;
                c += v * phi.cos();
                s += v * phi.sin();
            }
            cos[k - 1] = 2.0 * c / n as f64;
            sin[k - 1] = 2.0 * s / n as f64;
        }
        SphericalDensity { mean, cos, sin }.trimmed()
    }

    pub fn from_fn(f: impl Fn(f64) -> f64, nodes: usize) -> Self {
        let samples: Vec<f64> = (0..nodes)
            .map(|i| f(2.0 * PI * i as f64 / nodes as f64))
            .collect();
        Self::from_samples(&samples)
    }

    fn trimmed(mut self) -> Self {
        for v in self.cos.iter_mut().chain(self.sin.iter_mut()) {
            if v.abs() < 1e-14 {
                *v = 0.0;
            }
        }
        while self.cos.last() == Some(&0.0) {
            self.cos.pop();
        }
        while self.sin.last() == Some(&0.0) {
            self.sin.pop();
        }
        self
    }

    pub fn at_angle(&self, phi: f64) -> f64 {
        self.mean + self.part_at_angle(phi, |_| true)
    }

    fn part_at_angle(&self, phi: f64, keep: impl Fn(usize) -> bool) -> f64 {
        let mut v = 0.0;
        for (i, c) in self.cos.iter().enumerate() {
            if keep(i + 1) {
                v += c * ((i + 1) as f64 * phi).cos();
            }
        }
        for (i, c) in self.sin.iter().enumerate() {
            if keep(i + 1) {
                v += c * ((i + 1) as f64 * phi).sin();
            }
        }
        v
    }

    /// `a(θ) = a(-θ)` part.
    pub fn even_at_angle(&self, phi: f64) -> f64 {
        self.mean + self.part_at_angle(phi, |k| k % 2 == 0)
    }

    /// `a(θ) - a(-θ)` over two.
    pub fn odd_at_angle(&self, phi: f64) -> f64 {
        self.part_at_angle(phi, |k| k % 2 == 1)
    }

    pub fn at(&self, theta: &[f64]) -> f64 {
        self.at_angle(angle_of(theta))
    }

    pub fn max_abs_odd_coefficient(&self) -> f64 {
        let odd = |v: &Vec<f64>| {
            v.iter()
                .enumerate()
                .filter(|(i, _)| (i + 1) % 2 == 1)
                .map(|(_, c)| c.abs())
                .fold(0.0, f64::max)
        };
        odd(&self.cos).max(odd(&self.sin))
    }
}

pub(crate) fn angle_of(theta: &[f64]) -> f64 {
    match theta.len() {
        1 => {
            if theta[0] >= 0.0 {
                0.0
            } else {
                PI
            }
        }
        _ => theta[1].atan2(theta[0]),
    }
}

/// Quadrature nodes `(angle, weight)` on the unit sphere for dimension 1 or 2.
pub(crate) fn sphere_nodes(dim: usize, count: usize) -> Vec<(f64, f64)> {
    match dim {
        1 => vec![(0.0, 1.0), (PI, 1.0)],
        _ => (0..count)
            .map(|i| (2.0 * PI * i as f64 / count as f64, 2.0 * PI / count as f64))
            .collect(),
    }
}

pub(crate) fn direction(dim: usize, phi: f64) -> Vec<f64> {
    match dim {
        1 => vec![phi.cos().round()],
        _ => vec![phi.cos(), phi.sin()],
    }
}

/// An admissible nonlocal operator of order `2s`:
///
/// `ℒu(x) = p.v.∫ (u(x+y) - u(x) [- ∇u(x)·y]) K(y) dy + b·∇u(x)`,
/// with the gradient compensation only for non-symmetric kernels and
/// `s > 1/2`, and the drift `b` only for `s = 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub s: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub density: SphericalDensity,
    pub drift: Vec<f64>,
    pub dim: usize,
    pub symmetric: bool,
}

pub(crate) const SYMMETRY_TOL: f64 = 1e-12;
const SAMPLE_NODES: usize = 720;

fn bad(msg: impl Into<String>) -> Error {
    Error::invalid(Module::Operator, msg)
}

pub fn make_kernel(
    s: f64,
    lambda: f64,
    big_lambda: f64,
    density: SphericalDensity,
    drift: Vec<f64>,
    dim: usize,
) -> Result<KernelSpec> {
    if !(s > 0.0 && s < 1.0) {
        return Err(bad(format!("order s = {s} outside (0, 1)")));
    }
    if !(lambda > 0.0 && lambda <= big_lambda) {
        return Err(bad(format!(
            "ellipticity constants must satisfy 0 < λ ≤ Λ (got {lambda}, {big_lambda})"
        )));
    }
    if dim == 0 || dim > 3 {
        return Err(bad(format!("unsupported dimension {dim}")));
    }
    if dim == 3 {
        // The density series is parametrized by a polar angle.
        if !density.cos.is_empty() || !density.sin.is_empty() {
            return Err(bad("anisotropic densities are only supported for n ≤ 2"));
        }
    }
    let drift = if drift.is_empty() {
        vec![0.0; dim]
    } else {
        drift
    };
    if drift.len() != dim {
        return Err(bad(format!(
            "drift has {} components, dimension is {dim}",
            drift.len()
        )));
    }
    if drift.iter().any(|b| *b != 0.0) && (s - 0.5).abs() > 1e-14 {
        return Err(bad(format!("drift requires s = 1/2 (got s = {s})")));
    }
    let nodes = sphere_nodes(dim.min(2), SAMPLE_NODES);
    let mut max_odd: f64 = 0.0;
    for (phi, _) in &nodes {
        let a = density.at_angle(*phi);
        if a < lambda * (1.0 - 1e-12) || a > big_lambda * (1.0 + 1e-12) {
            return Err(bad(format!(
                "density value {a} at angle {phi:.4} violates λ ≤ a ≤ Λ = [{lambda}, {big_lambda}]"
            )));
        }
        max_odd = max_odd.max(density.odd_at_angle(*phi).abs());
    }
    let symmetric = max_odd <= SYMMETRY_TOL * big_lambda;
    let half = (s - 0.5).abs() < 1e-14;
    if half && !symmetric {
        let moment = zero_moment(&density, dim);
        if moment > 1e-10 {
            return Err(bad(format!(
                "non-symmetric kernel with s = 1/2 fails the zero-moment condition (|∫θ a(θ)dθ| = {moment:.3e})"
            )));
        }
    }
    Ok(KernelSpec {
        s,
        lambda,
        big_lambda,
        density,
        drift,
        dim,
        symmetric,
    })
}

/// `|∫_{S^{n-1}} θ a(θ) dθ|` by trapezoid quadrature on the sphere.
pub fn zero_moment(density: &SphericalDensity, dim: usize) -> f64 {
    let mut m = [0.0f64; 2];
    for (phi, w) in sphere_nodes(dim.min(2), SAMPLE_NODES) {
        let a = density.at_angle(phi);
        let th = direction(dim.min(2), phi);
        for (k, t) in th.iter().enumerate() {
            m[k] += w * a * t;
        }
    }
    (m[0] * m[0] + m[1] * m[1]).sqrt()
}

impl KernelSpec {
    /// `-(-Δ)^s` in dimension `dim`.
    pub fn fractional_laplacian(dim: usize, s: f64) -> Result<Self> {
        make_kernel(s, 1.0, 1.0, SphericalDensity::isotropic(1.0), vec![], dim)
    }

    /// `-√(-Δ) + b·∇`.
    pub fn half_laplacian_with_drift(drift: Vec<f64>) -> Result<Self> {
        let dim = drift.len();
        make_kernel(0.5, 1.0, 1.0, SphericalDensity::isotropic(1.0), drift, dim)
    }

    /// Normalization `c_{n,s}` making `a ≡ 1` the operator with symbol `|ξ|^{2s}`.
    pub fn norm_const(&self) -> f64 {
        norm_const(self.dim, self.s)
    }

    pub fn is_critical(&self) -> bool {
        (self.s - 0.5).abs() < 1e-14
    }

    pub fn has_drift(&self) -> bool {
        self.drift.iter().any(|b| *b != 0.0)
    }

    /// `K(y)`.
    pub fn kernel_at(&self, y: &[f64]) -> f64 {
        let r = norm(y);
        self.norm_const() * self.density.at(y) * r.powf(-(self.dim as f64) - 2.0 * self.s)
    }

    pub fn with_drift(&self, drift: Vec<f64>) -> Result<Self> {
        make_kernel(
            self.s,
            self.lambda,
            self.big_lambda,
            self.density.clone(),
            drift,
            self.dim,
        )
    }
}

pub fn norm_const(dim: usize, s: f64) -> f64 {
    1.0 / (quad::cosine_moment(s) * quad::sphere_power_moment(dim, s))
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_laplacian_constant_in_one_dimension() {
        assert!((norm_const(1, 0.5) - 1.0 / PI).abs() < 1e-15);
        assert!((norm_const(2, 0.5) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        // standard 4^s Γ(n/2+s) / (π^{n/2} |Γ(-s)|)
        let s: f64 = 0.75;
        let standard = 4f64.powf(s) * quad::gamma(0.5 + s)
            / (PI.sqrt() * quad::gamma(-s).abs());
        assert!((norm_const(1, s) - standard).abs() < 1e-13);
    }

    #[test]
    fn rejects_out_of_range_order() {
        let d = SphericalDensity::isotropic(1.0);
        assert!(make_kernel(0.0, 1.0, 1.0, d.clone(), vec![], 1).is_err());
        assert!(make_kernel(1.0, 1.0, 1.0, d, vec![], 1).is_err());
    }

    #[test]
    fn rejects_density_outside_ellipticity_band() {
        let d = SphericalDensity::from_fn(|p| 1.0 + 0.5 * p.cos().powi(2), 16);
        assert!(make_kernel(0.75, 1.0, 1.5, d.clone(), vec![], 2).is_ok());
        assert!(make_kernel(0.75, 1.0, 1.4, d, vec![], 2).is_err());
    }

    #[test]
    fn drift_requires_critical_order() {
        let d = SphericalDensity::from_fn(|p| 1.0 + 0.5 * p.cos().powi(2), 16);
        let err = make_kernel(0.75, 1.0, 1.5, d, vec![1.0, 0.0], 2).unwrap_err();
        assert!(err.to_string().contains("drift requires s = 1/2"));
        assert!(KernelSpec::half_laplacian_with_drift(vec![1.0, 0.0]).is_ok());
    }

    #[test]
    fn zero_moment_enforced_for_nonsymmetric_critical_kernels() {
        // cos φ term has a nonzero first moment
        let bad = SphericalDensity {
            mean: 1.0,
            cos: vec![0.2],
            sin: vec![],
        };
        assert!(make_kernel(0.5, 0.5, 1.5, bad.clone(), vec![], 2).is_err());
        // allowed away from s = 1/2
        assert!(make_kernel(0.3, 0.5, 1.5, bad, vec![], 2).is_ok());
        // cos 3φ is odd but has zero first moment
        let ok = SphericalDensity {
            mean: 1.0,
            cos: vec![0.0, 0.0, 0.3],
            sin: vec![],
        };
        let k = make_kernel(0.5, 0.5, 1.5, ok, vec![], 2).unwrap();
        assert!(!k.symmetric);
    }

    #[test]
    fn from_samples_recovers_band_limited_series() {
        let d = SphericalDensity::from_fn(|p| 1.25 + 0.25 * (2.0 * p).cos() + 0.1 * (3.0 * p).sin(), 32);
        assert!((d.mean - 1.25).abs() < 1e-14);
        assert!((d.cos[1] - 0.25).abs() < 1e-14);
        assert!((d.sin[2] - 0.1).abs() < 1e-14);
        assert!((d.even_at_angle(0.3) - (1.25 + 0.25 * 0.6f64.cos())).abs() < 1e-14);
    }

    #[test]
    fn two_sided_density_one_dimension() {
        let d = SphericalDensity::two_sided(1.5, 0.5);
        assert!((d.at(&[1.0]) - 1.5).abs() < 1e-15);
        assert!((d.at(&[-2.0]) - 0.5).abs() < 1e-15);
        let k = make_kernel(0.75, 0.5, 1.5, d, vec![], 1).unwrap();
        assert!(!k.symmetric);
    }
}

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use super::{unit, Barrier, BarrierKind, Sense, Term};
use crate::error::{Error, Module, Result};
use crate::operator::kernel::{dot, norm};
use crate::operator::{Growth, KernelSpec};

/// Distance from a point at angle `alpha` from the axis to the boundary of
/// the rotationally symmetric cone of half-opening `opening` (apex included).
fn cone_boundary_distance(r: f64, alpha: f64, opening: f64) -> f64 {
    let gap = (opening - alpha).abs();
    if gap <= FRAC_PI_2 {
        r * gap.sin()
    } else {
        r
    }
}

fn angle_to(e: &[f64], x: &[f64]) -> (f64, f64) {
    let r = norm(x);
    if r == 0.0 {
        return (0.0, 0.0);
    }
    (r, (dot(x, e) / r).clamp(-1.0, 1.0).acos())
}

/// `Φ(x) = (x·e + η|x|(1 - (x·e/|x|)²))_+^θ`, claimed `ℒΦ ≤ -c < 0` on the
/// interior of its support inside `B_2`.
pub fn cone_supersolution(e: &[f64], eta: f64, theta_exp: f64) -> Result<Barrier> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(Module::Barriers, format!("η must be positive (got {eta})")));
    }
    if !(theta_exp > 0.0 && theta_exp < 1.0) {
        return Err(Error::invalid(Module::Barriers, format!("θ = {theta_exp} outside (0, 1)")));
    }
    let e = unit(e)?;
    let dim = e.len();
    let arg = {
        let e = e.clone();
        move |x: &[f64]| -> f64 {
            let r = norm(x);
            if r == 0.0 {
                return 0.0;
            }
            let c = dot(x, &e);
            c + eta * r * (1.0 - (c / r) * (c / r))
        }
    };
    // support {σ·e ≥ c_b} on the sphere
    let c_b = (1.0 - (1.0 + 4.0 * eta * eta).sqrt()) / (2.0 * eta);
    let opening = if dim == 1 { FRAC_PI_2 } else { c_b.acos() };
    let peak = if eta >= 0.5 { eta + 0.25 / eta } else { 1.0 };
    let a1 = arg.clone();
    let a2 = arg.clone();
    let f = move |x: &[f64], _t: f64| a1(x).max(0.0).powf(theta_exp);
    let amp = move |sigma: &[f64]| a2(sigma).max(0.0).powf(theta_exp);
    let e2 = e.clone();
    let e3 = e.clone();
    Ok(Barrier {
        kind: BarrierKind::ConeSuper,
        params: vec![("eta".into(), eta), ("theta_exp".into(), theta_exp)],
        dim,
        parabolic: false,
        sense: Sense::Negative,
        terms: vec![Term {
            f: Arc::new(f),
            growth: Growth::power(theta_exp, peak.powf(theta_exp), Some(Arc::new(amp))),
        }],
        dt: None,
        region: Arc::new(move |x, _| {
            let (r, alpha) = angle_to(&e2, x);
            r > 0.0 && r < 2.0 && alpha < opening
        }),
        singular: Arc::new(move |x, _| {
            let (r, alpha) = angle_to(&e3, x);
            cone_boundary_distance(r, alpha, opening)
        }),
    })
}

/// Points `rσ` of the support of a [`cone_supersolution`] with `|x|` in
/// `radii`, `n_angles` directions per radius (two dimensions), kept only
/// when at least `min_gap` from the cone boundary.
pub fn cone_samples(b: &Barrier, radii: &[f64], n_angles: usize, min_gap: f64) -> Vec<(Vec<f64>, f64)> {
    let mut out = Vec::new();
    for r in radii {
        let dirs: Vec<Vec<f64>> = match b.dim {
            1 => vec![vec![1.0], vec![-1.0]],
            _ => (0..n_angles)
                .map(|k| {
                    let a = -PI + 2.0 * PI * (k as f64 + 0.5) / n_angles as f64;
                    let mut v = vec![0.0; b.dim];
                    v[0] = a.cos();
                    v[1] = a.sin();
                    v
                })
                .collect(),
        };
        for d in dirs {
            let x: Vec<f64> = d.iter().map(|c| c * r).collect();
            if b.in_region(&x, 0.0) && b.singular_distance(&x, 0.0) >= min_gap {
                out.push((x, 0.0));
            }
        }
    }
    out
}

/// One-homogeneous `ψ ≥ 0` on the cone `{∠(e, x) ≤ θ₀}`: the distance to
/// the complement on the outer collar `∠ ≥ 0.9θ₀`, and `A - Bα²` in the
/// angle `α` inside, matched to first order at `0.9θ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeProfile {
    pub e: Vec<f64>,
    pub opening: f64,
    a: f64,
    b: f64,
}

impl ConeProfile {
    pub fn new(e: &[f64], opening: f64) -> Result<Self> {
        if !(opening > 0.0 && opening < PI) {
            return Err(Error::invalid(Module::Barriers, format!("cone opening {opening} outside (0, π)")));
        }
        let e = unit(e)?;
        let (a, b) = if e.len() == 1 {
            (1.0, 0.0)
        } else {
            let a1 = 0.9 * opening;
            let b = (0.1 * opening).cos() / (2.0 * a1);
            ((0.1 * opening).sin() + b * a1 * a1, b)
        };
        let p = ConeProfile { e, opening, a, b };
        if p.e.len() > 1 {
            let n = 2000;
            for i in 0..n {
                let alpha = p.opening * i as f64 / n as f64;
                if !(p.axial_slope(alpha) > 0.0) {
                    return Err(Error::invalid(
                        Module::Barriers,
                        format!("∇ψ·e fails to be positive at angle {alpha:.4} for opening {opening}"),
                    ));
                }
            }
        }
        Ok(p)
    }

    fn g(&self, alpha: f64) -> f64 {
        if alpha >= 0.9 * self.opening {
            (self.opening - alpha).max(0.0).sin()
        } else {
            self.a - self.b * alpha * alpha
        }
    }

    fn dg(&self, alpha: f64) -> f64 {
        if alpha >= 0.9 * self.opening {
            -(self.opening - alpha).cos()
        } else {
            -2.0 * self.b * alpha
        }
    }

    /// `∇ψ·e` at angle `α` on the unit sphere.
    fn axial_slope(&self, alpha: f64) -> f64 {
        self.g(alpha) * alpha.cos() - self.dg(alpha) * alpha.sin()
    }

    /// `ψ(y)`, zero outside the cone.
    pub fn psi(&self, y: &[f64]) -> f64 {
        if self.e.len() == 1 {
            return (y[0] * self.e[0]).max(0.0);
        }
        let (r, alpha) = angle_to(&self.e, y);
        if r == 0.0 || alpha >= self.opening {
            0.0
        } else {
            r * self.g(alpha)
        }
    }

    /// `∇ψ(y)·e`, zero outside the cone.
    pub fn axial_derivative(&self, y: &[f64]) -> f64 {
        if self.e.len() == 1 {
            return if y[0] * self.e[0] > 0.0 { 1.0 } else { 0.0 };
        }
        let (r, alpha) = angle_to(&self.e, y);
        if r == 0.0 || alpha >= self.opening {
            0.0
        } else {
            self.axial_slope(alpha)
        }
    }

    /// Distance to the boundary of the cone, from either side.
    pub fn boundary_distance(&self, y: &[f64]) -> f64 {
        if self.e.len() == 1 {
            return y[0].abs();
        }
        let (r, alpha) = angle_to(&self.e, y);
        cone_boundary_distance(r, alpha, self.opening)
    }

    pub fn max_value_on_sphere(&self) -> f64 {
        if self.e.len() == 1 {
            1.0
        } else {
            self.a.max(0.0)
        }
    }
}

/// `φ(x,t) = ψ(x + ωte)_+^{2s-γ}` on the traveling cone, claimed
/// `(∂_t - ℒ)φ ≤ -c < 0` in `B_1 × (-1, 0)`.
pub fn traveling_cone_subsolution(k: &KernelSpec, e: &[f64], omega: f64, theta0: f64, gamma: f64) -> Result<Barrier> {
    if k.s < 0.5 {
        return Err(Error::invalid(Module::Barriers, format!("traveling cones need s ≥ 1/2 (got {})", k.s)));
    }
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::invalid(Module::Barriers, format!("ω must be nonnegative (got {omega})")));
    }
    if !(gamma > 0.0 && gamma < 2.0 * k.s) {
        return Err(Error::invalid(Module::Barriers, format!("γ = {gamma} outside (0, 2s)")));
    }
    if e.len() != k.dim {
        return Err(Error::invalid(Module::Barriers, "direction and kernel dimensions differ"));
    }
    let prof = Arc::new(ConeProfile::new(e, theta0)?);
    let mu = 2.0 * k.s - gamma;
    let shift = {
        let e = prof.e.clone();
        move |x: &[f64], t: f64| -> Vec<f64> { x.iter().zip(&e).map(|(xi, ei)| xi + omega * t * ei).collect() }
    };
    let (p1, p2, p3, p4) = (prof.clone(), prof.clone(), prof.clone(), prof.clone());
    let (s1, s2, s3) = (shift.clone(), shift.clone(), shift);
    Ok(Barrier {
        kind: BarrierKind::TravelingConeSub,
        params: vec![("omega".into(), omega), ("theta0".into(), theta0), ("gamma".into(), gamma)],
        dim: k.dim,
        parabolic: true,
        sense: Sense::Negative,
        terms: vec![Term {
            f: Arc::new(move |x, t| p1.psi(&s1(x, t)).powf(mu)),
            growth: Growth::power(
                mu,
                (prof.max_value_on_sphere() * (1.0 + omega)).powf(mu),
                Some(Arc::new(move |sigma: &[f64]| p4.psi(sigma).powf(mu))),
            ),
        }],
        dt: Some(Arc::new(move |x, t| {
            let y = s2(x, t);
            let v = p2.psi(&y);
            if v <= 0.0 {
                0.0
            } else {
                mu * v.powf(mu - 1.0) * omega * p2.axial_derivative(&y)
            }
        })),
        region: Arc::new(|x, t| norm(x) <= 1.0 && (-1.0..=0.0).contains(&t)),
        singular: Arc::new(move |x, t| p3.boundary_distance(&s3(x, t))),
    })
}

/// Samples of `B_1 × (-1, 0)`: a lattice of spacing `step` in the unit ball
/// at each of `times`, kept at least `min_gap` from the moving cone boundary.
pub fn traveling_cone_samples(b: &Barrier, step: f64, times: &[f64], min_gap: f64) -> Vec<(Vec<f64>, f64)> {
    let m = (1.0 / step).floor() as i64;
    let mut pts: Vec<Vec<f64>> = Vec::new();
    match b.dim {
        1 => {
            for i in -m..=m {
                pts.push(vec![i as f64 * step]);
            }
        }
        _ => {
            for i in -m..=m {
                for j in -m..=m {
                    let mut v = vec![0.0; b.dim];
                    v[0] = i as f64 * step;
                    v[1] = j as f64 * step;
                    pts.push(v);
                }
            }
        }
    }
    let mut out = Vec::new();
    for t in times {
        for x in &pts {
            if b.in_region(x, *t) && b.singular_distance(x, *t) >= min_gap {
                out.push((x.clone(), *t));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_values() {
        let b = cone_supersolution(&[1.0, 0.0], 0.5, 0.2).unwrap();
        assert!((b.eval(&[1.0, 0.0], 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(b.eval(&[-1.0, 0.0], 0.0), 0.0);
        // the support boundary ray
        let c = (1.0 - 2f64.sqrt()) / 1.0;
        let x = [c, (1.0 - c * c).sqrt()];
        assert!(b.eval(&x, 0.0).abs() < 1e-3);
        assert!(b.singular_distance(&x, 0.0) < 1e-12);
    }

    #[test]
    fn profile_meets_collar_distance() {
        let p = ConeProfile::new(&[1.0, 0.0], PI / 3.0).unwrap();
        for alpha in [0.9 * PI / 3.0, 0.95 * PI / 3.0] {
            let y = [alpha.cos(), alpha.sin()];
            assert!((p.psi(&y) - p.boundary_distance(&y)).abs() < 1e-12);
        }
        // first-order match at the seam
        let a1 = 0.9 * PI / 3.0;
        let (l, r) = (p.g(a1 - 1e-7), p.g(a1 + 1e-7));
        assert!((l - r).abs() < 1e-6);
        assert!(p.axial_derivative(&[0.3, 0.1]) > 0.0);
    }

    #[test]
    fn traveling_cone_homogeneity() {
        let k = KernelSpec::fractional_laplacian(2, 0.5).unwrap();
        let b = traveling_cone_subsolution(&k, &[1.0, 0.0], 0.7, PI / 3.0, 0.2).unwrap();
        assert_eq!(b.eval(&[0.0, 0.0], 0.0), 0.0);
        for (x, t) in [([0.3, 0.1], -0.2), ([0.5, -0.2], -0.7)] {
            let r: f64 = 0.37;
            let lhs = b.eval(&[r * x[0], r * x[1]], r * t);
            let rhs = r.powf(0.8) * b.eval(&x, t);
            assert!((lhs - rhs).abs() <= 1e-14 * rhs.abs().max(1.0));
        }
        assert!(traveling_cone_subsolution(&k, &[1.0, 0.0], 0.7, PI / 3.0, 1.0).is_err());
    }
}

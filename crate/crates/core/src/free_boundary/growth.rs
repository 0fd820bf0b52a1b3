use std::fmt;

use serde::{Deserialize, Serialize};

use super::normal::estimate_normal_speed;
use super::BoundaryPoint;
use crate::error::{Error, Module, Result};
use crate::metrics::{linear_fit, LinearFit};
use crate::operator::{GridFunction, KernelSpec};
use crate::profiles::{gamma_critical, gamma_elliptic};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyThresholds {
    /// Half-width of the band around `1 + γ` accepted as regular.
    pub delta_cls: f64,
    /// Exponents at or above `2 - eps_c` are degenerate.
    pub eps_c: f64,
    pub min_r2: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        ClassifyThresholds {
            delta_cls: 0.12,
            eps_c: 0.2,
            min_r2: 0.98,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum Classification {
    Regular { gamma: f64 },
    Degenerate,
    Unresolved,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Regular { .. } => f.write_str("regular"),
            Classification::Degenerate => f.write_str("degenerate"),
            Classification::Unresolved => f.write_str("unresolved"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub beta: f64,
    pub fit: LinearFit,
    pub radii: Vec<f64>,
    /// Parabolic distance from the point to the maximizing node of each cylinder.
    pub effective_radii: Vec<f64>,
    pub sups: Vec<f64>,
    /// Set when the radii span less than one decade.
    pub narrow_range: bool,
}

/// Geometric radii from `r_min` to `r_max`: `n` of them when given,
/// otherwise ratio `√2`.
pub fn radii_ladder(r_min: f64, r_max: f64, n: Option<usize>) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(Error::invalid(Module::FreeBoundary, format!("need 0 < r_min < r_max (got {r_min}, {r_max})")));
    }
    Ok(match n {
        Some(n) if n >= 2 => {
            let q = (r_max / r_min).powf(1.0 / (n - 1) as f64);
            (0..n).map(|i| r_min * q.powi(i as i32)).collect()
        }
        Some(_) => return Err(Error::invalid(Module::FreeBoundary, "need at least two radii")),
        None => {
            let mut r = vec![r_min];
            while r[r.len() - 1] * 2f64.sqrt() <= r_max * (1.0 + 1e-12) {
                let next = r[r.len() - 1] * 2f64.sqrt();
                r.push(next);
            }
            r
        }
    })
}

/// Slope of `log sup_{𝒬_r} w` against `log r`, where the sup runs over the
/// nodes strictly inside the cylinder and `r` is the parabolic distance of
/// the node attaining it. The nominal radius overstates that distance by up
/// to a cell on whichever side the sup is not, which biases the slope.
pub fn fit_growth_exponent(
    w: &GridFunction,
    point: &BoundaryPoint,
    r_min: f64,
    r_max: f64,
    n_radii: Option<usize>,
) -> Result<GrowthFit> {
    if r_min < 4.0 * w.h * (1.0 - 1e-9) {
        return Err(Error::pre(Module::FreeBoundary, format!("r_min = {r_min} is below 4h = {}", 4.0 * w.h)));
    }
    let up = w.upper();
    for a in 0..w.dim() {
        if point.x[a] - r_max < w.origin[a] - 1e-9 * w.h || point.x[a] + r_max > up[a] + 1e-9 * w.h {
            return Err(Error::pre(Module::FreeBoundary, format!("ball of radius {r_max} leaves the grid")));
        }
    }
    if w.is_space_time() {
        let tau = r_max.powf(2.0 * w.s);
        let t_end = w.time(w.time_len() - 1);
        if point.t - tau < w.t0 - 1e-9 || point.t + tau > t_end + 1e-9 {
            return Err(Error::pre(
                Module::FreeBoundary,
                format!("cylinder of radius {r_max} at t = {} leaves [{}, {t_end}]", point.t, w.t0),
            ));
        }
    }
    let radii = radii_ladder(r_min, r_max, n_radii)?;
    let mut sups = Vec::with_capacity(radii.len());
    let mut effective = Vec::with_capacity(radii.len());
    let n = w.space_len();
    for r in &radii {
        let nodes = w.cylinder(&point.x, point.t, *r);
        let (sup, at) = nodes
            .iter()
            .map(|i| (w.values[*i], *i))
            .fold((0.0f64, usize::MAX), |a, b| if b.0 > a.0 { b } else { a });
        if !(sup > 0.0) {
            return Err(Error::pre(
                Module::FreeBoundary,
                format!("u - φ vanishes on the cylinder of radius {r}; the point is inside the contact set"),
            ));
        }
        let x = w.coords(at % n);
        let dx = x.iter().zip(&point.x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let dt = (w.time(at / n) - point.t).abs().powf(1.0 / (2.0 * w.s));
        effective.push(if w.is_space_time() { dx.max(dt) } else { dx });
        sups.push(sup);
    }
    let lx: Vec<f64> = effective.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = sups.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(GrowthFit {
        beta: fit.slope,
        fit,
        narrow_range: r_max / r_min < 10.0,
        radii,
        effective_radii: effective,
        sups,
    })
}

/// Predicted `γ` for a boundary point with spatial normal direction `e` and speed `v0`.
pub fn predicted_gamma(k: &KernelSpec, e: &[f64], v0: f64) -> Result<f64> {
    if k.is_critical() {
        if v0.is_infinite() {
            return Ok(1.0);
        }
        gamma_critical(k, e, v0.max(0.0))
    } else {
        gamma_elliptic(k, e)
    }
}

pub fn classify_point(
    beta: f64,
    r2: f64,
    v0: f64,
    e: &[f64],
    k: &KernelSpec,
    thr: &ClassifyThresholds,
) -> Result<Classification> {
    if !beta.is_finite() || r2 < thr.min_r2 {
        return Ok(Classification::Unresolved);
    }
    let gamma = predicted_gamma(k, e, v0)?;
    if (beta - 1.0 - gamma).abs() <= thr.delta_cls {
        Ok(Classification::Regular { gamma })
    } else if beta >= 2.0 - thr.eps_c {
        Ok(Classification::Degenerate)
    } else {
        Ok(Classification::Unresolved)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeBoundaryPoint {
    pub x: Vec<f64>,
    pub t: f64,
    pub nu_x: Vec<f64>,
    pub nu_t: f64,
    pub speed: f64,
    pub beta: f64,
    pub r2: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub gamma_pred: f64,
    pub classification: Classification,
}

/// Normal, speed, growth exponent and class of one boundary point. Failures
/// of the normal or growth fits give an `Unresolved` point.
#[allow(clippy::too_many_arguments)]
pub fn analyze_point(
    w: &GridFunction,
    cloud: &[BoundaryPoint],
    point: &BoundaryPoint,
    k: &KernelSpec,
    normal_radius: f64,
    r_min: f64,
    r_max: f64,
    thr: &ClassifyThresholds,
) -> Result<FreeBoundaryPoint> {
    let mut out = FreeBoundaryPoint {
        x: point.x.clone(),
        t: point.t,
        nu_x: vec![f64::NAN; point.x.len()],
        nu_t: f64::NAN,
        speed: f64::NAN,
        beta: f64::NAN,
        r2: f64::NAN,
        r_min,
        r_max,
        gamma_pred: f64::NAN,
        classification: Classification::Unresolved,
    };
    let normal = match estimate_normal_speed(cloud, point, normal_radius, w) {
        Ok(n) => n,
        Err(Error::Unresolved { .. }) => return Ok(out),
        Err(e) => return Err(e),
    };
    out.nu_x = normal.nu_x.clone();
    out.nu_t = normal.nu_t;
    out.speed = normal.speed;
    let e = normal.direction();
    out.gamma_pred = predicted_gamma(k, &e, normal.speed)?;
    let fit = match fit_growth_exponent(w, point, r_min, r_max, None) {
        Ok(f) => f,
        Err(Error::Precondition { .. }) => return Ok(out),
        Err(e) => return Err(e),
    };
    out.beta = fit.beta;
    out.r2 = fit.fit.r2;
    out.classification = classify_point(fit.beta, fit.fit.r2, normal.speed, &e, k, thr)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_examples() {
        let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
        let thr = ClassifyThresholds::default();
        assert_eq!(
            classify_point(1.5, 1.0, 0.0, &[1.0], &k, &thr).unwrap(),
            Classification::Regular { gamma: 0.5 }
        );
        assert_eq!(classify_point(1.96, 1.0, 0.0, &[1.0], &k, &thr).unwrap(), Classification::Degenerate);
        assert_eq!(classify_point(1.7, 1.0, 0.0, &[1.0], &k, &thr).unwrap(), Classification::Unresolved);
        assert_eq!(classify_point(1.5, 0.5, 0.0, &[1.0], &k, &thr).unwrap(), Classification::Unresolved);
    }

    #[test]
    fn exact_power_growth() {
        let w = GridFunction::from_fn(&[401], 0.005, &[-1.0], 0.75, |x| x[0].max(0.0).powf(1.75));
        let p = BoundaryPoint { x: vec![0.0], t: 0.0 };
        let f = fit_growth_exponent(&w, &p, 0.02, 0.5, None).unwrap();
        assert!((f.beta - 1.75).abs() < 0.05, "{}", f.beta);
        assert!(!f.narrow_range);
    }

    #[test]
    fn ladder_ratio() {
        let r = radii_ladder(0.01, 0.1, None).unwrap();
        assert_eq!(r.len(), 7);
        assert!(radii_ladder(0.1, 0.01, None).is_err());
    }
}

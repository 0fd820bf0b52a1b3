//! One-dimensional power profiles `κ (x·e + vt)₊^{1+γ}` and their exponents.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Module, Result};
use crate::metrics::{convergence_order, OrderEstimate};
use crate::operator::kernel::{dot, norm};
use crate::operator::{effective_1d_kernel, symbol, EvalOptions, Growth, KernelSpec, PointEvaluator};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile1D {
    pub kappa: f64,
    pub e: Vec<f64>,
    pub v: f64,
    pub gamma: f64,
    pub s: f64,
}

impl Profile1D {
    /// Any exponent for which `∂_e u₀ ~ z^γ` is integrable against the
    /// kernel is accepted, so off-law exponents can be used as probes.
    pub fn new(kappa: f64, e: Vec<f64>, v: f64, gamma: f64, s: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::invalid(Module::Profiles, format!("amplitude must be nonnegative (got {kappa})")));
        }
        if e.is_empty() || (norm(&e) - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(Module::Profiles, "direction must be a unit vector"));
        }
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::invalid(Module::Profiles, format!("speed must be nonnegative (got {v})")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::invalid(Module::Profiles, format!("order s = {s} outside (0, 1)")));
        }
        if v > 0.0 && (s - 0.5).abs() > 1e-14 {
            return Err(Error::invalid(Module::Profiles, "moving profiles require s = 1/2"));
        }
        let lo = (2.0 * s - 1.0).max(0.0);
        let hi = (2.0 * s).min(1.0);
        if !(gamma > lo && gamma < hi) {
            return Err(Error::invalid(
                Module::Profiles,
                format!("exponent γ = {gamma} outside ({lo}, {hi})"),
            ));
        }
        Ok(Profile1D { kappa, e, v, gamma, s })
    }

    /// The profile whose exponent is dictated by the kernel, direction and speed.
    pub fn for_kernel(k: &KernelSpec, kappa: f64, e: Vec<f64>, v: f64) -> Result<Self> {
        let gamma = if k.is_critical() {
            gamma_critical(k, &e, v)?
        } else {
            if v > 0.0 {
                return Err(Error::invalid(Module::Profiles, "moving profiles require s = 1/2"));
            }
            gamma_elliptic(k, &e)?
        };
        Profile1D::new(kappa, e, v, gamma, k.s)
    }

    /// `x·e + vt`.
    pub fn phase(&self, x: &[f64], t: f64) -> f64 {
        dot(x, &self.e) + self.v * t
    }
}

/// `γ = 1/2 + (1/π) arctan((v - 𝓑(e)) / 𝒜(e))` for `s = 1/2`; with no drift or
/// asymmetry this is `1/2 + (1/π) arctan(v / 𝒜(e))`.
pub fn gamma_critical(k: &KernelSpec, e: &[f64], v: f64) -> Result<f64> {
    if !k.is_critical() {
        return Err(Error::invalid(Module::Profiles, format!("critical exponent needs s = 1/2 (got {})", k.s)));
    }
    if !(v >= 0.0) {
        return Err(Error::invalid(Module::Profiles, format!("speed must be nonnegative (got {v})")));
    }
    let sym = symbol(k, e, 1.0)?;
    let b = if k.symmetric && !k.has_drift() { 0.0 } else { sym.b };
    Ok(0.5 + ((v - b) / sym.a).atan() / PI)
}

/// `γ_{ℒ,e} = s - (1/π) arctan(𝓑(e)/𝒜(e))`; exactly `s` for symmetric kernels.
pub fn gamma_elliptic(k: &KernelSpec, e: &[f64]) -> Result<f64> {
    let sym = symbol(k, e, 1.0)?;
    if k.symmetric && !k.has_drift() {
        return Ok(k.s);
    }
    Ok(k.s - (sym.b / sym.a).atan() / PI)
}

/// `γ_b = 1/2 - (1/π) arctan|b|` for `-√(-Δ) + b·∇`.
pub fn gamma_drift(b_norm: f64) -> Result<f64> {
    if !(b_norm >= 0.0) {
        return Err(Error::invalid(Module::Profiles, format!("|b| must be nonnegative (got {b_norm})")));
    }
    Ok(0.5 - b_norm.atan() / PI)
}

pub fn eval_profile(p: &Profile1D, x: &[f64], t: f64) -> f64 {
    let z = p.phase(x, t);
    if z <= 0.0 {
        0.0
    } else {
        p.kappa * z.powf(1.0 + p.gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualLevel {
    pub h: f64,
    /// Maximum over the sample points.
    pub residual: f64,
    pub worst_point: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub levels: Vec<ResidualLevel>,
    pub order: Option<OrderEstimate>,
}

impl ResidualReport {
    pub fn finest(&self) -> f64 {
        self.levels.last().map_or(f64::NAN, |l| l.residual)
    }
}

/// Residual of the profile equation, measured on the derivative
/// `w = ∂_e u₀ = κ(1+γ) z₊^γ`, which has the integrable growth the operator
/// needs: `|ℒ_eff w|` at the phases `samples`, one row per spacing in `spacings`.
///
/// `ℒ_eff` is the one-dimensional operator of [`effective_1d_kernel`], which
/// folds the speed in as a drift, so the elliptic and parabolic cases share
/// the same check.
pub fn profile_residual(k: &KernelSpec, p: &Profile1D, samples: &[f64], spacings: &[f64]) -> Result<ResidualReport> {
    if samples.is_empty() || spacings.is_empty() {
        return Err(Error::invalid(Module::Profiles, "need sample points and at least one spacing"));
    }
    if p.e.len() != k.dim || (p.s - k.s).abs() > 1e-12 {
        return Err(Error::invalid(Module::Profiles, "profile does not match the kernel"));
    }
    let eff = effective_1d_kernel(k, &p.e, p.v)?;
    let reach = samples.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let (g, amp) = (p.gamma, p.kappa * (1.0 + p.gamma));
    let w = move |z: &[f64]| if z[0] > 0.0 { amp * z[0].powf(g) } else { 0.0 };
    let growth = Growth::power(g, amp, Some(Arc::new(move |th: &[f64]| if th[0] > 0.0 { amp } else { 0.0 })));
    let mut levels = Vec::with_capacity(spacings.len());
    for &h in spacings {
        if let Some(z) = samples.iter().find(|z| **z < 2.0 * h * (1.0 - 1e-9)) {
            return Err(Error::pre(
                Module::Profiles,
                format!("sample z = {z} closer than 2h = {} to the free boundary", 2.0 * h),
            ));
        }
        // the kink at z = 0 must sit in the lattice part, not the far field
        let ev = PointEvaluator::new(&eff, h, reach + 1.0, EvalOptions::default())?;
        let pts: Vec<Vec<f64>> = samples.iter().map(|z| vec![*z]).collect();
        let vals = ev.eval_many(&w, &growth, &pts)?;
        let (i, r) = vals
            .iter()
            .map(|v| v.abs())
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        levels.push(ResidualLevel {
            h,
            residual: r,
            worst_point: samples[i],
        });
    }
    let order = if levels.len() >= 3 {
        let r: Vec<f64> = levels.iter().map(|l| l.residual.max(f64::MIN_POSITIVE)).collect();
        let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
        Some(convergence_order(&r, &h)?)
    } else {
        None
    };
    Ok(ResidualReport { levels, order })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        let p = Profile1D::new(1.0, vec![1.0], 0.0, 0.5, 0.5).unwrap();
        assert_eq!(eval_profile(&p, &[4.0], 3.0), 8.0);
        assert_eq!(eval_profile(&p, &[-1.0], 0.0), 0.0);
        let q = Profile1D::new(2.0, vec![1.0], 1.0, 0.75, 0.5).unwrap();
        assert_eq!(eval_profile(&q, &[0.0], 1.0), 2.0);
    }

    #[test]
    fn drift_exponent_is_the_minimum_over_directions() {
        let k = KernelSpec::half_laplacian_with_drift(vec![0.6, 0.8]).unwrap();
        let min = (0..3600)
            .map(|i| {
                let a = i as f64 * 2.0 * PI / 3600.0;
                gamma_elliptic(&k, &[a.cos(), a.sin()]).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((min - gamma_drift(1.0).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(Profile1D::new(1.0, vec![1.0], 1.0, 0.75, 0.75).is_err());
        assert!(Profile1D::new(-1.0, vec![1.0], 0.0, 0.5, 0.5).is_err());
        assert!(gamma_drift(-1.0).is_err());
    }
}

use std::f64::consts::PI;

use serde::Serialize;

use super::kernel::{dot, make_kernel, norm, KernelSpec, SphericalDensity};
use super::quad;
use crate::error::{Error, Module, Result};

/// Fourier symbol with the convention `ℒ e^{iξ·x} = (-𝒜(ξ) + i𝓑(ξ)) e^{iξ·x}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Symbol {
    pub e: Vec<f64>,
    pub magnitude: f64,
    /// `𝒜(|ξ| e)`.
    pub a: f64,
    /// `𝓑(|ξ| e)`, drift included.
    pub b: f64,
    /// Achieved quadrature error estimate on the unit-magnitude values.
    pub error_estimate: f64,
}

const TARGET: f64 = 1e-13;

fn unit_check(e: &[f64], dim: usize) -> Result<()> {
    if e.len() != dim {
        return Err(Error::invalid(Module::Operator, format!("direction has {} components, kernel dimension is {dim}", e.len())));
    }
    if (norm(e) - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(Module::Operator, format!("direction must be a unit vector (|e| = {})", norm(e))));
    }
    Ok(())
}

/// Integrate a function of the polar angle that is smooth except where
/// `e·θ = 0`, i.e. at `α ± π/2`; graded meshes toward those angles with
/// resolution escalation.
fn circle_integral(f: &impl Fn(f64) -> f64, alpha: f64) -> Result<(f64, f64)> {
    let arcs = [
        (alpha - PI / 2.0, alpha + PI / 2.0),
        (alpha + PI / 2.0, alpha + 3.0 * PI / 2.0),
    ];
    let eval = |levels: usize| -> f64 { arcs.iter().map(|(a, b)| quad::graded(f, *a, *b, levels)).sum() };
    let mut prev = eval(12);
    let mut est = f64::INFINITY;
    for levels in [18, 26, 36, 50, 70] {
        let cur = eval(levels);
        est = (cur - prev).abs();
        if est <= TARGET * cur.abs().max(1.0) {
            return Ok((cur, est));
        }
        prev = cur;
    }
    Err(Error::Quadrature {
        estimate: est,
        target: TARGET,
    })
}

/// Unit-magnitude values `(𝒜(e), kernel part of 𝓑(e), error estimate)`.
fn unit_symbol(k: &KernelSpec, e: &[f64]) -> Result<(f64, f64, f64)> {
    let s = k.s;
    let c = k.norm_const();
    let dcos = quad::cosine_moment(s);
    let half = (s - 0.5).abs() < 1e-14;
    match k.dim {
        1 => {
            let sg = e[0].signum();
            let ap = k.density.at_angle(0.0);
            let am = k.density.at_angle(PI);
            let a = dcos * c * (ap + am);
            let b = if half { 0.0 } else { c * quad::sine_moment(s) * (ap - am) * sg };
            Ok((a, b, 0.0))
        }
        2 => {
            let alpha = e[1].atan2(e[0]);
            let fa = |phi: f64| {
                let x = (phi - alpha).cos().abs();
                k.density.at_angle(phi) * x.powf(2.0 * s)
            };
            let (ia, ea) = circle_integral(&fa, alpha)?;
            let (ib, eb) = if k.symmetric {
                (0.0, 0.0)
            } else if half {
                let fb = |phi: f64| {
                    let x = (phi - alpha).cos();
                    if x == 0.0 {
                        0.0
                    } else {
                        k.density.odd_at_angle(phi) * x * x.abs().ln()
                    }
                };
                let (v, err) = circle_integral(&fb, alpha)?;
                (-v, err)
            } else {
                let fb = |phi: f64| {
                    let x = (phi - alpha).cos();
                    k.density.odd_at_angle(phi) * x.signum() * x.abs().powf(2.0 * s)
                };
                let (v, err) = circle_integral(&fb, alpha)?;
                (quad::sine_moment(s) * v, err)
            };
            Ok((dcos * c * ia, c * ib, (dcos * c * ea).max(c * eb)))
        }
        _ => Ok((k.density.mean, 0.0, 0.0)),
    }
}

/// `𝒜` and `𝓑` at `ξ = magnitude · e`, scaled analytically from `|ξ| = 1`.
pub fn symbol(k: &KernelSpec, e: &[f64], magnitude: f64) -> Result<Symbol> {
    unit_check(e, k.dim)?;
    if !(magnitude > 0.0) {
        return Err(Error::invalid(Module::Operator, "symbol magnitude must be positive"));
    }
    let (a, bk, err) = unit_symbol(k, e)?;
    let scale = magnitude.powf(2.0 * k.s);
    Ok(Symbol {
        e: e.to_vec(),
        magnitude,
        a: a * scale,
        b: bk * scale + dot(&k.drift, e) * magnitude,
        error_estimate: err,
    })
}

/// The one-dimensional operator acting on profiles `U(x·e + vt)`:
/// `(∂_t - ℒ)U(x·e + vt) = -(ℒ_eff U)(x·e + vt)`.
///
/// Its symmetric part has symbol `𝒜(e)|k|^{2s}`; the odd part and drift
/// reproduce `𝓑(e)`, and the time derivative adds the drift `-v`.
pub fn effective_1d_kernel(k: &KernelSpec, e: &[f64], v: f64) -> Result<KernelSpec> {
    unit_check(e, k.dim)?;
    if !(v >= 0.0) {
        return Err(Error::invalid(Module::Operator, format!("speed must be nonnegative (got {v})")));
    }
    let half = k.is_critical();
    if v > 0.0 && !half {
        return Err(Error::invalid(
            Module::Operator,
            format!("moving profiles (v = {v} > 0) require s = 1/2 (got s = {})", k.s),
        ));
    }
    let sym = symbol(k, e, 1.0)?;
    if half {
        return make_kernel(0.5, sym.a, sym.a, SphericalDensity::isotropic(sym.a), vec![sym.b - v], 1);
    }
    let c1 = super::kernel::norm_const(1, k.s);
    let skew = sym.b / (2.0 * c1 * quad::sine_moment(k.s));
    let (ap, am) = (sym.a + skew, sym.a - skew);
    if ap <= 0.0 || am <= 0.0 {
        return Err(Error::pre(
            Module::Operator,
            format!("one-dimensional reduction is not elliptic (a+ = {ap}, a- = {am})"),
        ));
    }
    make_kernel(k.s, ap.min(am), ap.max(am), SphericalDensity::two_sided(ap, am), vec![], 1)
}

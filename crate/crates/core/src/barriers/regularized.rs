use std::sync::Arc;

use serde::Serialize;

use super::verify::{verify_inequality, VerifyOptions, VerifyReport};
use super::{unit, Barrier, BarrierKind, Sense, Term};
use crate::error::{Error, Module, Result};
use crate::operator::kernel::dot;
use crate::operator::{GridFunction, Growth, KernelSpec};
use crate::profiles::gamma_critical;

/// A moving region `Ω = {(x,t) : x·e > a(t)}` whose complement is the
/// vanishing set. `a` is linear or piecewise linear in time.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingDomain {
    pub e: Vec<f64>,
    /// Knots `(t, a(t))` sorted by time; two knots describe a straight front.
    pub front: Vec<(f64, f64)>,
}

impl MovingDomain {
    /// Front `x·e = -vt`, moving in the direction `-e` at speed `v`.
    pub fn flat(e: &[f64], v: f64) -> Result<Self> {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid(Module::Barriers, format!("front speed must be nonnegative (got {v})")));
        }
        Ok(MovingDomain {
            e: unit(e)?,
            front: vec![(-1.0, v), (1.0, -v)],
        })
    }

    /// Reads the front from a one-dimensional space-time mask (`true` on the
    /// vanishing set). Each time level must be a nonempty proper prefix
    /// `{x ≤ a(t)}`; anything else has no graph structure and is rejected.
    pub fn from_mask(grid: &GridFunction, mask: &[bool]) -> Result<Self> {
        if grid.dim() != 1 || !grid.is_space_time() || mask.len() != grid.values.len() {
            return Err(Error::invalid(Module::Barriers, "expected a one-dimensional space-time mask"));
        }
        let n = grid.space_len();
        let mut front = Vec::with_capacity(grid.time_len());
        for k in 0..grid.time_len() {
            let row = &mask[k * n..(k + 1) * n];
            let m = row.iter().take_while(|b| **b).count();
            if m == 0 || m == n || row[m..].iter().any(|b| *b) {
                return Err(Error::pre(
                    Module::Barriers,
                    format!("mask at t = {} is not of the form {{x ≤ a}}", grid.time(k)),
                ));
            }
            // midway between the last vanishing node and the first positive one
            front.push((grid.time(k), grid.origin[0] + (m as f64 - 0.5) * grid.h));
        }
        if front.len() < 2 {
            return Err(Error::pre(Module::Barriers, "need at least two time levels"));
        }
        Ok(MovingDomain { e: vec![1.0], front })
    }

    fn segment(&self, t: f64) -> usize {
        let f = &self.front;
        let mut i = 0;
        while i + 2 < f.len() && t > f[i + 1].0 {
            i += 1;
        }
        i
    }

    /// `a(t)`, extrapolated linearly beyond the knots.
    pub fn position(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let ((t0, a0), (t1, a1)) = (self.front[i], self.front[i + 1]);
        a0 + (a1 - a0) * (t - t0) / (t1 - t0)
    }

    /// Boundary speed `-a'(t)` in the direction `-e`.
    pub fn speed(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let ((t0, a0), (t1, a1)) = (self.front[i], self.front[i + 1]);
        -(a1 - a0) / (t1 - t0)
    }

    /// Signed space-time distance to the front in the `(x·e, t)` plane,
    /// positive in `Ω`.
    pub fn distance(&self, x: &[f64], t: f64) -> f64 {
        let z = dot(x, &self.e);
        let inside = z > self.position(t);
        let f = &self.front;
        let mut best = f64::INFINITY;
        let last = f.len() - 2;
        for i in 0..=last {
            let ((t0, a0), (t1, a1)) = (f[i], f[i + 1]);
            let (dt, da) = (t1 - t0, a1 - a0);
            let len2 = dt * dt + da * da;
            let mut q = ((t - t0) * dt + (z - a0) * da) / len2;
            // the end segments continue as rays
            if i > 0 {
                q = q.max(0.0);
            }
            if i < last {
                q = q.min(1.0);
            }
            let (pt, pa) = (t0 + q * dt, a0 + q * da);
            best = best.min(((t - pt) * (t - pt) + (z - pa) * (z - pa)).sqrt());
        }
        if inside {
            best
        } else {
            -best
        }
    }

    /// Regularized distance: the mean of `d` over four points at distance
    /// `d/2` in the `(x·e, t)` plane. Exact for straight fronts.
    pub fn regularized_distance(&self, x: &[f64], t: f64) -> f64 {
        let d = self.distance(x, t);
        if d <= 0.0 || self.front.len() == 2 {
            return d.max(0.0);
        }
        let r = 0.5 * d;
        let mut acc = 0.0;
        for (dz, dt) in [(r, 0.0), (-r, 0.0), (0.0, r), (0.0, -r)] {
            let y: Vec<f64> = x.iter().zip(&self.e).map(|(xi, ei)| xi + dz * ei).collect();
            acc += self.distance(&y, t + dt).max(0.0);
        }
        0.25 * acc
    }

    /// Spatial distance to the front along `e`, from either side.
    pub fn front_gap(&self, x: &[f64], t: f64) -> f64 {
        (dot(x, &self.e) - self.position(t)).abs()
    }
}

/// The pair built from `φ = ρ^{Γ̄}` and `ρ^{γ₀+ε}`:
/// `Φ₁ = Mφ + ρ^{γ₀+ε}` with claimed `(∂_t - ℒ)Φ₁ ≤ -1` and
/// `Φ₂ = Mφ - ρ^{γ₀+ε}` with claimed `(∂_t - ℒ)Φ₂ ≥ 1`, both on
/// `Ω ∩ 𝒬_{δ₀}` around the front point at `t = 0`.
#[derive(Debug, Clone)]
pub struct RegularizedPair {
    pub sub: Barrier,
    pub sup: Barrier,
    pub gamma0: f64,
    pub eps: f64,
    pub m: f64,
    pub delta0: f64,
}

impl RegularizedPair {
    /// `max(Φ/d^{Γ̄}, d^{Γ̄}/Φ)` over the samples for both barriers; infinite
    /// when some `Φ ≤ 0`.
    pub fn sandwich_constant(&self, domain: &MovingDomain, samples: &[(Vec<f64>, f64)]) -> f64 {
        let mut c: f64 = 1.0;
        for (x, t) in samples {
            let d = domain.distance(x, *t);
            if d <= 0.0 {
                continue;
            }
            let base = d.powf(self.gamma0);
            for b in [&self.sub, &self.sup] {
                let v = b.eval(x, *t);
                if !(v > 0.0) {
                    return f64::INFINITY;
                }
                c = c.max(v / base).max(base / v);
            }
        }
        c
    }
}

/// `Γ̄` at the nearest front time: the exponent of the local speed, shifted
/// so that it equals `gamma0` at `t = 0`.
fn exponent_field(k: &KernelSpec, domain: &MovingDomain, gamma0: f64) -> Result<Vec<(f64, f64)>> {
    let g0 = gamma_critical(k, &domain.e, domain.speed(0.0).max(0.0))?;
    domain
        .front
        .windows(2)
        .map(|w| {
            let tm = 0.5 * (w[0].0 + w[1].0);
            Ok((tm, gamma0 + gamma_critical(k, &domain.e, domain.speed(tm).max(0.0))? - g0))
        })
        .collect()
}

pub fn power_regularized_barriers(
    k: &KernelSpec,
    domain: &MovingDomain,
    gamma0: f64,
    eps: f64,
    m: f64,
    delta0: f64,
) -> Result<RegularizedPair> {
    if !k.is_critical() {
        return Err(Error::invalid(Module::Barriers, format!("regularized barriers need s = 1/2 (got {})", k.s)));
    }
    if domain.e.len() != k.dim {
        return Err(Error::invalid(Module::Barriers, "domain and kernel dimensions differ"));
    }
    if !(gamma0 > 0.0 && gamma0 < 1.0) {
        return Err(Error::invalid(Module::Barriers, format!("γ₀ = {gamma0} outside (0, 1)")));
    }
    if !(eps > 0.0 && eps < 0.5 * gamma0) {
        return Err(Error::invalid(Module::Barriers, format!("ε = {eps} outside (0, γ₀/2)")));
    }
    let beta = gamma0 + eps;
    if beta >= 2.0 * k.s {
        return Err(Error::invalid(
            Module::Barriers,
            format!("γ₀ + ε = {beta} reaches 2s; the barrier would not be integrable"),
        ));
    }
    if !(m > 0.0 && delta0 > 0.0) {
        return Err(Error::invalid(Module::Barriers, "M and δ₀ must be positive"));
    }
    let field = Arc::new(exponent_field(k, domain, gamma0)?);
    let dom = Arc::new(domain.clone());
    let gbar = {
        let field = field.clone();
        let dom = dom.clone();
        move |t: f64| -> f64 { field[dom.segment(t).min(field.len() - 1)].1 }
    };
    let gmax = field.iter().map(|(_, g)| *g).fold(gamma0, f64::max);
    if gmax >= 2.0 * k.s {
        return Err(Error::invalid(Module::Barriers, "the exponent field reaches 2s"));
    }
    // far-field amplitudes from the slope of the front at time 0
    let tilt = (1.0 + domain.speed(0.0).powi(2)).sqrt();
    let e_amp = Arc::new(domain.e.clone());
    let phi: SpaceTimeFnOwned = {
        let dom = dom.clone();
        Arc::new(move |x: &[f64], t: f64| {
            let r = dom.regularized_distance(x, t);
            if r <= 0.0 {
                0.0
            } else {
                m * r.powf(gbar(t))
            }
        })
    };
    let rho_beta: SpaceTimeFnOwned = {
        let dom = dom.clone();
        Arc::new(move |x: &[f64], t: f64| dom.regularized_distance(x, t).max(0.0).powf(beta))
    };
    let amp = |power: f64, scale: f64| {
        let e = e_amp.clone();
        move |sigma: &[f64]| scale * (dot(sigma, &e).max(0.0) / tilt).powf(power)
    };
    let phi_term = Term {
        f: phi.clone(),
        growth: Growth::power(gmax, 2.0 * m, Some(Arc::new(amp(gamma0, m)))),
    };
    let make = |sign: f64, sense: Sense| -> Barrier {
        let r = rho_beta.clone();
        let region_dom = dom.clone();
        let gap_dom = dom.clone();
        let x0 = domain.position(0.0);
        let e0 = domain.e.clone();
        Barrier {
            kind: BarrierKind::PowerRegularized,
            params: vec![
                ("gamma0".into(), gamma0),
                ("eps".into(), eps),
                ("m".into(), m),
                ("delta0".into(), delta0),
                ("sign".into(), sign),
            ],
            dim: k.dim,
            parabolic: true,
            sense,
            terms: vec![
                phi_term.clone(),
                Term {
                    f: Arc::new(move |x: &[f64], t: f64| sign * r(x, t)),
                    growth: Growth::power(beta, 2.0, Some(Arc::new(amp(beta, sign)))),
                },
            ],
            dt: None,
            region: Arc::new(move |x, t| {
                let c: Vec<f64> = x.iter().zip(&e0).map(|(xi, ei)| xi - x0 * ei).collect();
                dot(&c, &c).sqrt() < delta0 && t.abs() < delta0 && region_dom.distance(x, t) > 0.0
            }),
            singular: Arc::new(move |x, t| gap_dom.front_gap(x, t)),
        }
    };
    Ok(RegularizedPair {
        sub: make(1.0, Sense::AtMost(-1.0)),
        sup: make(-1.0, Sense::AtLeast(1.0)),
        gamma0,
        eps,
        m,
        delta0,
    })
}

type SpaceTimeFnOwned = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Samples of `Ω ∩ 𝒬_δ` around the front point at `t = 0`: `n` offsets
/// along `e` (and across it in two dimensions) times `n` time levels, kept
/// at least `min_gap` from the front.
pub fn regularized_samples(domain: &MovingDomain, delta: f64, n: usize, min_gap: f64) -> Vec<(Vec<f64>, f64)> {
    let x0 = domain.position(0.0);
    let dim = domain.e.len();
    let mut out = Vec::new();
    for j in 0..n {
        let t = -delta + 2.0 * delta * (j as f64 + 0.5) / n as f64;
        for i in 0..n {
            let along = -delta + 2.0 * delta * (i as f64 + 0.5) / n as f64;
            let across: Vec<f64> = if dim == 1 {
                vec![0.0]
            } else {
                (0..3).map(|q| (q as f64 - 1.0) * 0.5 * delta).collect()
            };
            for c in across {
                let mut x: Vec<f64> = domain.e.iter().map(|ei| (x0 + along) * ei).collect();
                if dim > 1 {
                    // perpendicular offset in the plane of the first two axes
                    let (p0, p1) = (-domain.e[1], domain.e[0]);
                    x[0] += c * p0;
                    x[1] += c * p1;
                }
                let r: f64 = (0..dim).map(|a| (x[a] - x0 * domain.e[a]).powi(2)).sum::<f64>().sqrt();
                if r < delta && domain.distance(&x, t) > 0.0 && domain.front_gap(&x, t) >= min_gap {
                    out.push((x, t));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizedSearch {
    pub m: Option<f64>,
    pub delta0: Option<f64>,
    /// `(M, δ₀, Φ₁ passes, Φ₂ passes, sandwich constant)` for every pair tried.
    pub tried: Vec<(f64, f64, bool, bool, f64)>,
    pub sub: Option<VerifyReport>,
    pub sup: Option<VerifyReport>,
    pub sandwich: Option<f64>,
}

/// Doubles `M` from 1 and, for each `M`, halves `δ₀` from 1 until both
/// signs hold and both barriers are positive on `Ω ∩ 𝒬₁`.
#[allow(clippy::too_many_arguments)]
pub fn search_regularized(
    k: &KernelSpec,
    domain: &MovingDomain,
    gamma0: f64,
    eps: f64,
    spacings: &[f64],
    samples_per_axis: usize,
    max_doublings: usize,
    opts: &VerifyOptions,
) -> Result<RegularizedSearch> {
    let gap = opts.collar * spacings[0];
    let outer = regularized_samples(domain, 1.0, samples_per_axis, gap);
    let mut out = RegularizedSearch {
        m: None,
        delta0: None,
        tried: Vec::new(),
        sub: None,
        sup: None,
        sandwich: None,
    };
    for i in 0..=max_doublings {
        let m = 2f64.powi(i as i32);
        for j in 0..4 {
            let delta0 = 0.5f64.powi(j);
            let pair = power_regularized_barriers(k, domain, gamma0, eps, m, delta0)?;
            let sandwich = pair.sandwich_constant(domain, &outer);
            let samples = regularized_samples(domain, delta0, samples_per_axis, gap);
            if samples.is_empty() {
                continue;
            }
            let sub = verify_inequality(k, &pair.sub, &samples, spacings, opts)?;
            let sup = verify_inequality(k, &pair.sup, &samples, spacings, opts)?;
            out.tried.push((m, delta0, sub.pass, sup.pass, sandwich));
            if sub.pass && sup.pass && sandwich.is_finite() {
                out.m = Some(m);
                out.delta0 = Some(delta0);
                out.sub = Some(sub);
                out.sup = Some(sup);
                out.sandwich = Some(sandwich);
                return Ok(out);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_front_geometry() {
        let d = MovingDomain::flat(&[1.0], 0.5).unwrap();
        assert!((d.position(2.0) + 1.0).abs() < 1e-15);
        assert!((d.speed(0.3) - 0.5).abs() < 1e-15);
        let x = [0.7];
        let want = (0.7 + 0.5 * 0.2) / 1.25f64.sqrt();
        assert!((d.distance(&x, 0.2) - want).abs() < 1e-14);
        assert!((d.regularized_distance(&x, 0.2) - want).abs() < 1e-14);
        assert!(d.distance(&[-1.0], 0.0) < 0.0);
    }

    #[test]
    fn mask_without_graph_structure_rejected() {
        let g = GridFunction::space_time_zeros(&[6], 0.1, &[0.0], 2, 0.1, 0.0, 0.5);
        let good = [true, true, false, false, false, false, true, true, true, false, false, false];
        let dom = MovingDomain::from_mask(&g, &good).unwrap();
        assert!((dom.speed(0.05) + 1.0).abs() < 1e-12);
        let bad = [true, false, true, false, false, false, true, true, true, false, false, false];
        assert!(MovingDomain::from_mask(&g, &bad).is_err());
    }

    #[test]
    fn flat_static_pair_values() {
        let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
        let d = MovingDomain::flat(&[1.0], 0.0).unwrap();
        let pair = power_regularized_barriers(&k, &d, 0.5, 0.1, 2.0, 1.0).unwrap();
        let x = [0.36];
        let want = 2.0 * 0.6 + 0.36f64.powf(0.6);
        assert!((pair.sub.eval(&x, 0.0) - want).abs() < 1e-14);
        assert_eq!(pair.sup.eval(&[-0.1], 0.0), 0.0);
    }
}

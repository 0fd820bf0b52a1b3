use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::BoundaryPoint;
use crate::error::{Error, Module, Result};
use crate::operator::GridFunction;
use crate::operator::KernelSpec;
use crate::profiles::{eval_profile, Profile1D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    /// `r‖∇u‖ + r^{2s}‖∂_t u‖` over the cylinder.
    #[default]
    Gradient,
    /// `sup |u|` over the cylinder.
    Sup,
}

/// `ũ(y, τ) = u(x0 + r y, t0 + r^{2s} τ) / N` on `[-1, 1]^n` (times
/// `[-1, 1]` for space-time input), sampled with `nodes` points per axis.
pub fn blow_up_rescale(
    u: &GridFunction,
    point: &BoundaryPoint,
    r: f64,
    mode: NormMode,
    nodes: usize,
) -> Result<GridFunction> {
    if nodes < 3 || !(r > 0.0) {
        return Err(Error::invalid(Module::FreeBoundary, "need r > 0 and at least three nodes per axis"));
    }
    let d = u.dim();
    let up = u.upper();
    for a in 0..d {
        if point.x[a] - r < u.origin[a] - 1e-9 * u.h || point.x[a] + r > up[a] + 1e-9 * u.h {
            return Err(Error::pre(Module::FreeBoundary, format!("blow-up box of radius {r} leaves the grid")));
        }
    }
    let tau = r.powf(2.0 * u.s);
    if u.is_space_time() {
        let t_end = u.time(u.time_len() - 1);
        if point.t - tau < u.t0 - 1e-9 || point.t + tau > t_end + 1e-9 {
            return Err(Error::pre(Module::FreeBoundary, format!("blow-up cylinder of radius {r} leaves the time range")));
        }
    }
    let cyl = u.cylinder(&point.x, point.t, r);
    let denom = match mode {
        NormMode::Sup => cyl.iter().map(|i| u.values[*i].abs()).fold(0.0, f64::max),
        NormMode::Gradient => {
            let (g, dt) = derivative_bounds(u, &cyl);
            r * g + tau * dt
        }
    };
    if !(denom > 0.0) {
        return Err(Error::pre(Module::FreeBoundary, "normalization vanishes on the cylinder"));
    }
    let hs = 2.0 / (nodes - 1) as f64;
    let dims = vec![nodes; d];
    let origin = vec![-1.0; d];
    let sample = |y: &[f64], tt: f64| -> f64 {
        let x: Vec<f64> = point.x.iter().zip(y).map(|(c, yi)| c + r * yi).collect();
        u.sample(&x, point.t + tau * tt).unwrap_or(0.0) / denom
    };
    Ok(if u.is_space_time() {
        GridFunction::from_space_time_fn(&dims, hs, &origin, nodes, hs, -1.0, u.s, sample)
    } else {
        GridFunction::from_fn(&dims, hs, &origin, u.s, |y| sample(y, 0.0))
    })
}

/// Max of `|∇u|` and `|∂_t u|` over the given flat indices, by centered
/// differences (one-sided at the edges).
fn derivative_bounds(u: &GridFunction, idx: &[usize]) -> (f64, f64) {
    let n = u.space_len();
    let d = u.dim();
    let mut stride = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        stride[a] = stride[a + 1] * u.dims[a + 1];
    }
    let nt = u.time_len();
    let (mut g, mut gt) = (0.0f64, 0.0f64);
    for &f in idx {
        let (k, i) = (f / n, f % n);
        let mi = u.multi_index(i);
        let mut s2 = 0.0;
        for a in 0..d {
            let lo = if mi[a] > 0 { f - stride[a] } else { f };
            let hi = if mi[a] + 1 < u.dims[a] { f + stride[a] } else { f };
            let span = ((hi - lo) / stride[a]) as f64 * u.h;
            let dv = (u.values[hi] - u.values[lo]) / span;
            s2 += dv * dv;
        }
        g = g.max(s2.sqrt());
        if let (true, Some(dt)) = (nt > 1, u.dt) {
            let lo = if k > 0 { f - n } else { f };
            let hi = if k + 1 < nt { f + n } else { f };
            gt = gt.max(((u.values[hi] - u.values[lo]) / (((hi - lo) / n) as f64 * dt)).abs());
        }
    }
    (g, gt)
}

/// `‖d‖_∞ + Lip(d)` for `d = ũ - u₀` over the unit-cylinder nodes, with
/// difference quotients along every grid axis (time included).
pub fn lip_distance(data: &GridFunction, profile: &Profile1D) -> f64 {
    let zero = vec![0.0; data.dim()];
    let cyl = data.cylinder(&zero, 0.0, 1.0);
    let n = data.space_len();
    let mut inside = vec![false; data.values.len()];
    for i in &cyl {
        inside[*i] = true;
    }
    let diff = |f: usize| -> f64 {
        let x = data.coords(f % n);
        data.values[f] - eval_profile(profile, &x, data.time(f / n))
    };
    let d = data.dim();
    let mut stride = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        stride[a] = stride[a + 1] * data.dims[a + 1];
    }
    let (mut sup, mut lip) = (0.0f64, 0.0f64);
    for &f in &cyl {
        let df = diff(f);
        sup = sup.max(df.abs());
        let mi = data.multi_index(f % n);
        for a in 0..d {
            if mi[a] + 1 < data.dims[a] && inside[f + stride[a]] {
                lip = lip.max((diff(f + stride[a]) - df).abs() / data.h);
            }
        }
        if let Some(dt) = data.dt {
            if f + n < data.values.len() && inside[f + n] {
                lip = lip.max((diff(f + n) - df).abs() / dt);
            }
        }
    }
    sup + lip
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileFit {
    pub profile: Profile1D,
    pub lip_distance: f64,
    /// Root-mean-square misfit over the unit cylinder.
    pub rms: f64,
    pub converged_restarts: usize,
}

fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize) -> (Vec<f64>, f64, bool) {
    let m = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..m {
        let mut x = x0.to_vec();
        x[i] += step;
        simplex.push(x);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=m).collect();
        order.sort_by(|a, b| vals[*a].total_cmp(&vals[*b]));
        simplex = order.iter().map(|i| simplex[*i].clone()).collect();
        vals = order.iter().map(|i| vals[*i]).collect();
        let size = simplex[1..]
            .iter()
            .map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if size < 1e-9 || (vals[m] - vals[0]).abs() <= 1e-15 * vals[0].abs().max(1e-300) {
            return (simplex[0].clone(), vals[0], true);
        }
        let centroid: Vec<f64> = (0..m).map(|j| simplex[..m].iter().map(|x| x[j]).sum::<f64>() / m as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[m]).map(|(c, w)| c + t * (w - c)).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[m] = xe;
                vals[m] = fe;
            } else {
                simplex[m] = xr;
                vals[m] = fr;
            }
        } else if fr < vals[m - 1] {
            simplex[m] = xr;
            vals[m] = fr;
        } else {
            let xc = if fr < vals[m] { along(-0.5) } else { along(0.5) };
            let fc = f(&xc);
            if fc < vals[m].min(fr) {
                simplex[m] = xc;
                vals[m] = fc;
            } else {
                for i in 1..=m {
                    let x: Vec<f64> = simplex[i].iter().zip(&simplex[0]).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    vals[i] = f(&x);
                    simplex[i] = x;
                }
            }
        }
    }
    let best = (0..=m).min_by(|a, b| vals[*a].total_cmp(&vals[*b])).unwrap();
    (simplex[best].clone(), vals[best], false)
}

/// Least-squares fit of `κ (y·e + vτ)₊^{1+γ(e, v)}` to a blow-up on the unit
/// cylinder. `κ` is solved in closed form; `(e, v)` by Nelder–Mead from 8
/// starts (plus `hint` when given).
pub fn fit_1d_profile(data: &GridFunction, k: &KernelSpec, hint: Option<(&[f64], f64)>) -> Result<ProfileFit> {
    let d = data.dim();
    if d != k.dim || d > 2 {
        return Err(Error::invalid(Module::FreeBoundary, "profile fits need n ≤ 2 matching the kernel"));
    }
    let zero = vec![0.0; d];
    let cyl = data.cylinder(&zero, 0.0, 1.0);
    if cyl.is_empty() {
        return Err(Error::pre(Module::FreeBoundary, "no nodes in the unit cylinder"));
    }
    let n = data.space_len();
    let pts: Vec<(Vec<f64>, f64, f64)> = cyl
        .iter()
        .map(|f| (data.coords(f % n), data.time(f / n), data.values[*f]))
        .collect();
    let moving = k.is_critical() && data.is_space_time();
    // parameters: angle (n = 2) then v (moving case); e = ±1 in 1D is enumerated
    let build = |p: &[f64], sign: f64| -> Result<Profile1D> {
        let (e, rest) = if d == 2 {
            (vec![p[0].cos(), p[0].sin()], &p[1..])
        } else {
            (vec![sign], p)
        };
        let v = if moving { rest[0].abs() } else { 0.0 };
        Profile1D::for_kernel(k, 1.0, e, v)
    };
    let misfit = |prof: &Profile1D| -> (f64, f64) {
        let (mut sdp, mut spp) = (0.0, 0.0);
        let vals: Vec<f64> = pts.iter().map(|(x, t, _)| eval_profile(prof, x, *t)).collect();
        for ((_, _, dv), pv) in pts.iter().zip(&vals) {
            sdp += dv * pv;
            spp += pv * pv;
        }
        let kappa = if spp > 0.0 { (sdp / spp).max(0.0) } else { 0.0 };
        let sse: f64 = pts.iter().zip(&vals).map(|((_, _, dv), pv)| (dv - kappa * pv).powi(2)).sum();
        (kappa, sse)
    };
    let objective = |p: &[f64], sign: f64| -> f64 { build(p, sign).map(|pr| misfit(&pr).1).unwrap_or(f64::INFINITY) };
    let signs: &[f64] = if d == 1 { &[1.0, -1.0] } else { &[1.0] };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for i in 0..8 {
        let mut s = Vec::new();
        if d == 2 {
            s.push(2.0 * PI * i as f64 / 8.0);
        }
        if moving {
            s.push([0.0, 0.5, 1.0, 2.0, 0.25, 1.5, 3.0, 0.75][i]);
        }
        starts.push(s);
    }
    if let Some((e, v)) = hint {
        let mut s = Vec::new();
        if d == 2 {
            s.push(e[1].atan2(e[0]));
        }
        if moving {
            s.push(v.max(0.0));
        }
        starts.push(s);
    }
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut converged = 0;
    for &sign in signs {
        for s in &starts {
            let (x, fx, ok) = if s.is_empty() {
                (vec![], objective(&[], sign), true)
            } else {
                nelder_mead(&|p| objective(p, sign), s, 0.3, 4000)
            };
            if ok {
                converged += 1;
            }
            if ok && fx.is_finite() && best.as_ref().is_none_or(|b| fx < b.0) {
                best = Some((fx, x, sign));
            }
        }
    }
    let (sse, x, sign) = best.ok_or_else(|| Error::Unresolved {
        module: Module::FreeBoundary,
        msg: "profile fit did not converge from any start".into(),
    })?;
    let mut profile = build(&x, sign)?;
    let (kappa, _) = misfit(&profile);
    profile.kappa = kappa;
    Ok(ProfileFit {
        lip_distance: lip_distance(data, &profile),
        rms: (sse / pts.len() as f64).sqrt(),
        profile,
        converged_restarts: converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_fit_recovers_profile() {
        let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
        let p = Profile1D::for_kernel(&k, 1.0, vec![1.0], 1.0).unwrap();
        let g = GridFunction::from_space_time_fn(&[41], 0.05, &[-1.0], 41, 0.05, -1.0, 0.5, |x, t| eval_profile(&p, x, t));
        let fit = fit_1d_profile(&g, &k, None).unwrap();
        assert!((fit.profile.kappa - 1.0).abs() < 0.02, "{:?}", fit.profile);
        assert!((fit.profile.v - 1.0).abs() < 0.02, "{:?}", fit.profile);
        assert_eq!(fit.profile.e, vec![1.0]);
        assert!(fit.lip_distance < 1e-6);
    }

    #[test]
    fn sup_rescaling_of_homogeneous_profile_is_a_fixed_point() {
        let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
        let p = Profile1D::for_kernel(&k, 2.0, vec![1.0], 1.0).unwrap();
        let u = GridFunction::from_space_time_fn(&[201], 0.01, &[-1.0], 201, 0.01, 0.0, 0.5, |x, t| {
            eval_profile(&p, x, t - 1.0)
        });
        let pt = BoundaryPoint { x: vec![0.0], t: 1.0 };
        let a = blow_up_rescale(&u, &pt, 0.8, NormMode::Sup, 21).unwrap();
        let b = blow_up_rescale(&u, &pt, 0.4, NormMode::Sup, 21).unwrap();
        let diff = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 0.02, "{diff}");
    }
}

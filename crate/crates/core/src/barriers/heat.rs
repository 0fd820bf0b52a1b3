use serde::Serialize;

use crate::error::{Error, Module, Result};
use crate::operator::kernel::dot;
use crate::operator::{ExteriorRule, Growth, KernelSpec};
use crate::solver::{solve_linear_parabolic, SolverOptions, SpaceTimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatTailOptions {
    pub radii: Vec<f64>,
    /// Half-width of the box in units of `R`.
    pub box_factor: f64,
    /// Grid nodes per unit length.
    pub nodes_per_unit: usize,
    pub steps: usize,
    /// Allowed ratio between the largest and smallest `C_obs` over the radii.
    pub spread: f64,
    #[serde(skip)]
    pub solver: SolverOptions,
}

impl Default for HeatTailOptions {
    fn default() -> Self {
        HeatTailOptions {
            radii: vec![2.0, 4.0, 8.0],
            box_factor: 2.0,
            nodes_per_unit: 16,
            steps: 64,
            spread: 4.0,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatTailRow {
    pub r: f64,
    /// `max S¹ · R^{γ₀}` over `B_{R/4} × (-1, 0)`.
    pub c_upper: f64,
    /// `min S¹ / |x|^{2s-γ₀}` over `|x| ≥ R` inside the box.
    pub c_lower: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatTailReport {
    pub gamma0: f64,
    pub rows: Vec<HeatTailRow>,
    pub c_obs: f64,
    pub c_obs_lower: f64,
    pub pass: bool,
}

/// `S¹ = h + R^{-γ₀}(t + 1)` on `(-1, 0)`, where `h` solves the linear
/// equation off the zero set `A` starting from `|x|^{2s-γ₀}` outside
/// `B_{R/2}` and keeps that profile outside the box. The construction holds
/// when `S¹ R^{γ₀}` stays bounded near the origin uniformly in `R` while `S¹`
/// dominates a multiple of `|x|^{2s-γ₀}` far out.
pub fn heat_tail_supersolution(
    k: &KernelSpec,
    gamma0: f64,
    zero_set: &(dyn Fn(&[f64], f64) -> bool + Sync),
    opts: &HeatTailOptions,
) -> Result<HeatTailReport> {
    let mu = 2.0 * k.s - gamma0;
    if !(mu > 0.0 && gamma0 > 0.0) {
        return Err(Error::invalid(Module::Barriers, format!("γ₀ = {gamma0} outside (0, 2s)")));
    }
    if opts.radii.is_empty() || opts.nodes_per_unit < 4 || opts.steps == 0 || !(opts.box_factor > 1.0) {
        return Err(Error::invalid(Module::Barriers, "heat-tail options need radii, a box wider than R and steps"));
    }
    let mut rows = Vec::with_capacity(opts.radii.len());
    for &r in &opts.radii {
        if !(r > 0.0) {
            return Err(Error::invalid(Module::Barriers, "radii must be positive"));
        }
        let h = 1.0 / opts.nodes_per_unit as f64;
        let half = opts.box_factor * r;
        let n = (2.0 * half / h).round() as usize + 1;
        let dims = vec![n; k.dim];
        let origin = vec![-half; k.dim];
        let grid = SpaceTimeGrid {
            dims: dims.clone(),
            h,
            origin: origin.clone(),
            dt: 1.0 / opts.steps as f64,
            steps: opts.steps,
        };
        let start = move |x: &[f64]| {
            let m = dot(x, x).sqrt();
            if m > 0.5 * r {
                m.powf(mu)
            } else {
                0.0
            }
        };
        let initial = crate::operator::GridFunction::from_fn(&dims, h, &origin, k.s, start).values;
        let ext = ExteriorRule::function(move |x, _| start(x), Growth::power(mu, 2.0 * half.powf(mu), None));
        // grid time τ = t + 1
        let in_set = |x: &[f64], tau: f64| zero_set(x, tau - 1.0);
        let (sol, rep) = solve_linear_parabolic(k, &grid, &in_set, &|_, _| 0.0, &initial, &ext, &opts.solver)?;
        let shift = r.powf(-gamma0);
        let mut c_upper: f64 = 0.0;
        let mut c_lower = f64::INFINITY;
        for kt in 1..sol.time_len() {
            let tau = sol.time(kt);
            let level = sol.slice(kt);
            for (i, v) in level.iter().enumerate() {
                let x = sol.coords(i);
                let m = dot(&x, &x).sqrt();
                let s1 = v + shift * tau;
                if m < 0.25 * r {
                    c_upper = c_upper.max(s1 * r.powf(gamma0));
                }
                if m >= r && !zero_set(&x, tau - 1.0) {
                    c_lower = c_lower.min(s1 / m.powf(mu));
                }
            }
        }
        rows.push(HeatTailRow {
            r,
            c_upper,
            c_lower,
            iterations: rep.iterations,
        });
    }
    let c_obs = rows.iter().map(|w| w.c_upper).fold(0.0, f64::max);
    let c_min = rows.iter().map(|w| w.c_upper).fold(f64::INFINITY, f64::min);
    let c_obs_lower = rows.iter().map(|w| w.c_lower).fold(f64::INFINITY, f64::min);
    let pass = c_obs.is_finite() && c_obs <= opts.spread * c_min && c_obs_lower > 0.0 && c_obs_lower.is_finite();
    Ok(HeatTailReport {
        gamma0,
        rows,
        c_obs,
        c_obs_lower,
        pass,
    })
}

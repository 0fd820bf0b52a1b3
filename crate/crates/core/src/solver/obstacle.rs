use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::lcp::{solve_lcp_masked, LcpOptions, RowOperator};
use crate::error::{Error, Module, Result};
use crate::operator::{BoxOperator, EvalOptions, ExteriorRule, GridFunction, Growth, KernelSpec, SpaceFn};

/// `shift·I - ℒ_h` restricted to the box.
pub struct ShiftedOperator<'a> {
    pub op: &'a BoxOperator,
    pub shift: f64,
}

impl RowOperator for ShiftedOperator<'_> {
    fn len(&self) -> usize {
        self.op.len()
    }

    fn diag(&self, _i: usize) -> f64 {
        self.shift - self.op.diag()
    }

    fn row_dot(&self, i: usize, u: &[f64]) -> f64 {
        self.shift * u[i] - self.op.row_dot(i, u)
    }
}

/// Spatial box plus optional time levels `t_k = k·dt`, `k = 0..=steps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceTimeGrid {
    pub dims: Vec<usize>,
    pub h: f64,
    pub origin: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
}

impl SpaceTimeGrid {
    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.dt > 0.0) || self.steps == 0 {
            return Err(Error::invalid(Module::Solver, "space-time grid needs h > 0, dt > 0 and at least one step"));
        }
        if self.origin.len() != self.dims.len() {
            return Err(Error::invalid(Module::Solver, "origin and extents differ in dimension"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation factor; estimated from the spectrum when `None`.
    pub omega: Option<f64>,
    #[serde(skip)]
    pub eval: EvalOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iter: 200_000,
            omega: None,
            eval: EvalOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ObstacleProblem {
    pub kernel: KernelSpec,
    /// Obstacle sampled on the box.
    pub obstacle: GridFunction,
    /// Values of `u` outside the box.
    pub extension: ExteriorRule,
    /// Final time and number of implicit steps for the parabolic problem.
    pub horizon: Option<(f64, usize)>,
    /// Largest discrete second difference of the obstacle on the box.
    pub d2_bound: f64,
}

impl ObstacleProblem {
    /// Elliptic problem with `u ≡ φ` outside the box.
    pub fn new(
        kernel: &KernelSpec,
        phi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        growth: Growth,
        dims: &[usize],
        h: f64,
        origin: &[f64],
    ) -> Result<Self> {
        if dims.len() != kernel.dim || origin.len() != kernel.dim {
            return Err(Error::invalid(Module::Solver, "grid and kernel dimensions differ"));
        }
        let phi: SpaceFn = Arc::new(phi);
        let obstacle = GridFunction::from_fn(dims, h, origin, kernel.s, |x| phi(x));
        obstacle.validate()?;
        let ext_phi = phi.clone();
        let extension = ExteriorRule::function(move |x, _| ext_phi(x), growth);
        let d2_bound = second_difference_bound(&obstacle);
        Ok(ObstacleProblem {
            kernel: kernel.clone(),
            obstacle,
            extension,
            horizon: None,
            d2_bound,
        })
    }

    pub fn with_extension(mut self, ext: ExteriorRule) -> Self {
        self.extension = ext;
        self
    }

    pub fn parabolic(mut self, horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || steps == 0 {
            return Err(Error::invalid(Module::Solver, "horizon must be positive with at least one step"));
        }
        self.horizon = Some((horizon, steps));
        Ok(self)
    }
}

fn second_difference_bound(g: &GridFunction) -> f64 {
    let mut m: f64 = 0.0;
    let d = g.dim();
    let mut stride = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        stride[a] = stride[a + 1] * g.dims[a + 1];
    }
    for i in 0..g.values.len() {
        let idx = g.multi_index(i);
        for a in 0..d {
            if idx[a] == 0 || idx[a] + 1 >= g.dims[a] {
                continue;
            }
            let v = g.values[i + stride[a]] + g.values[i - stride[a]] - 2.0 * g.values[i];
            m = m.max(v.abs() / (g.h * g.h));
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    /// Total relaxation sweeps over all steps.
    pub iterations: usize,
    /// Largest final complementarity residual over all steps.
    pub residual: f64,
    /// Contact-set size per solved step.
    pub active_sizes: Vec<usize>,
    /// Steps at which the contact set grew.
    pub active_growth_steps: Vec<usize>,
    pub omega: f64,
    pub scale: f64,
    pub obstacle_d2_bound: f64,
    /// Bound on the neglected far-field tail of the exterior values.
    pub tail_bound: f64,
    pub wall_time: f64,
}

/// Relaxation factor from the Jacobi spectral radius of `shift - ℒ_h`,
/// estimated with the lowest Dirichlet mode of the box.
fn estimate_omega(k: &KernelSpec, op: &BoxOperator, shift: f64) -> f64 {
    let len = op.dims.iter().map(|n| (*n as f64 - 1.0) * op.h).fold(0.0, f64::max);
    let diag = shift - op.diag();
    let lowest = shift + 0.5 * k.lambda * (PI / len).powf(2.0 * k.s);
    let rho = (1.0 - lowest / diag).clamp(0.0, 1.0);
    let w = 2.0 / (1.0 + (1.0 - rho * rho).sqrt());
    let cap = if k.symmetric && !k.has_drift() { 1.95 } else { 1.6 };
    w.clamp(1.0, cap)
}

fn lcp_options(opts: &SolverOptions, omega: f64, scale: f64) -> LcpOptions {
    LcpOptions {
        tol: opts.tol,
        max_iter: opts.max_iter,
        omega,
        scale,
        stagnation_window: 50,
    }
}

fn complementarity_scale(op: &BoxOperator, phi: &[f64]) -> f64 {
    op.apply(phi).iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0
}

/// `min{-ℒu, u - φ} = 0` in the box.
pub fn solve_elliptic_obstacle(p: &ObstacleProblem, opts: &SolverOptions) -> Result<(GridFunction, SolveReport)> {
    if p.horizon.is_some() {
        return Err(Error::invalid(Module::Solver, "problem has a horizon; use the parabolic solver"));
    }
    let start = Instant::now();
    let op = BoxOperator::for_grid(&p.kernel, &p.obstacle, &p.extension, 0.0, &opts.eval)?;
    let phi = &p.obstacle.values;
    let scale = complementarity_scale(&op, phi);
    let omega = opts.omega.unwrap_or_else(|| estimate_omega(&p.kernel, &op, 0.0));
    let sys = ShiftedOperator { op: &op, shift: 0.0 };
    let rhs = op.exterior.clone();
    let mut u = phi.clone();
    let rep = solve_lcp_masked(&sys, phi, &rhs, &mut u, None, &lcp_options(opts, omega, scale))?;
    let mut out = p.obstacle.clone();
    out.values = u;
    Ok((
        out,
        SolveReport {
            iterations: rep.iterations,
            residual: rep.residual,
            active_sizes: vec![rep.active],
            active_growth_steps: vec![],
            omega,
            scale,
            obstacle_d2_bound: p.d2_bound,
            tail_bound: op.tail_bound,
            wall_time: start.elapsed().as_secs_f64(),
        },
    ))
}

/// `min{∂_t u - ℒu, u - φ} = 0`, `u(·, 0) = φ`, by implicit Euler with one
/// complementarity problem per step. Returns `steps + 1` time levels.
pub fn solve_parabolic_obstacle(p: &ObstacleProblem, opts: &SolverOptions) -> Result<(GridFunction, SolveReport)> {
    let (horizon, steps) = p
        .horizon
        .ok_or_else(|| Error::invalid(Module::Solver, "parabolic solve needs a horizon"))?;
    let start = Instant::now();
    let dt = horizon / steps as f64;
    let g = &p.obstacle;
    let n = g.space_len();
    let mut out = GridFunction::space_time_zeros(&g.dims, g.h, &g.origin, steps + 1, dt, 0.0, g.s);
    out.slice_mut(0).copy_from_slice(&g.values);
    let mut op = BoxOperator::for_grid(&p.kernel, g, &p.extension, 0.0, &opts.eval)?;
    let phi = &g.values;
    let scale = complementarity_scale(&op, phi);
    let omega = opts.omega.unwrap_or_else(|| estimate_omega(&p.kernel, &op, 1.0 / dt));
    let lopts = lcp_options(opts, omega, scale);
    let time_dependent = matches!(p.extension, ExteriorRule::Function { .. });
    let mut report = SolveReport {
        iterations: 0,
        residual: 0.0,
        active_sizes: Vec::with_capacity(steps),
        active_growth_steps: vec![],
        omega,
        scale,
        obstacle_d2_bound: p.d2_bound,
        tail_bound: op.tail_bound,
        wall_time: 0.0,
    };
    let mut u = phi.clone();
    let mut rhs = vec![0.0; n];
    let mut prev_active = n;
    for k in 1..=steps {
        let t = k as f64 * dt;
        if time_dependent && k > 1 {
            op.set_exterior(&p.kernel, &p.extension, t, &opts.eval)?;
            report.tail_bound = report.tail_bound.max(op.tail_bound);
        }
        for i in 0..n {
            rhs[i] = op.exterior[i] + u[i] / dt;
        }
        let sys = ShiftedOperator { op: &op, shift: 1.0 / dt };
        let rep = solve_lcp_masked(&sys, phi, &rhs, &mut u, None, &lopts)?;
        report.iterations += rep.iterations;
        report.residual = report.residual.max(rep.residual);
        if rep.active > prev_active {
            report.active_growth_steps.push(k);
        }
        prev_active = rep.active;
        report.active_sizes.push(rep.active);
        out.slice_mut(k).copy_from_slice(&u);
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((out, report))
}

/// `∂_t v - ℒv = f` off the closed set `A(t)` with `v ≡ 0` on `A(t)`, by
/// implicit Euler. `in_set(x, t)` decides membership in `A`.
#[allow(clippy::too_many_arguments)]
pub fn solve_linear_parabolic(
    kernel: &KernelSpec,
    grid: &SpaceTimeGrid,
    in_set: &dyn Fn(&[f64], f64) -> bool,
    rhs: &dyn Fn(&[f64], f64) -> f64,
    initial: &[f64],
    extension: &ExteriorRule,
    opts: &SolverOptions,
) -> Result<(GridFunction, SolveReport)> {
    grid.validate()?;
    let start = Instant::now();
    let (dt, steps) = (grid.dt, grid.steps);
    let mut out = GridFunction::space_time_zeros(&grid.dims, grid.h, &grid.origin, steps + 1, dt, 0.0, kernel.s);
    let n = out.space_len();
    if initial.len() != n {
        return Err(Error::invalid(Module::Solver, "initial data has the wrong length"));
    }
    let mut op = BoxOperator::new(kernel, &grid.dims, grid.h, &grid.origin, extension, 0.0, &opts.eval)?;
    let omega = opts.omega.unwrap_or_else(|| estimate_omega(kernel, &op, 1.0 / dt));
    let scale = initial.iter().fold(0.0f64, |m, v| m.max(v.abs())) / dt + 1.0;
    let lopts = lcp_options(opts, omega, scale);
    let coords: Vec<Vec<f64>> = (0..n).map(|i| out.coords(i)).collect();
    let mut u = initial.to_vec();
    for (i, x) in coords.iter().enumerate() {
        if in_set(x, 0.0) {
            u[i] = 0.0;
        }
    }
    out.slice_mut(0).copy_from_slice(&u);
    let lower = vec![f64::NEG_INFINITY; n];
    let mut b = vec![0.0; n];
    let mut report = SolveReport {
        iterations: 0,
        residual: 0.0,
        active_sizes: vec![],
        active_growth_steps: vec![],
        omega,
        scale,
        obstacle_d2_bound: 0.0,
        tail_bound: op.tail_bound,
        wall_time: 0.0,
    };
    let time_dependent = matches!(extension, ExteriorRule::Function { .. });
    for k in 1..=steps {
        let t = k as f64 * dt;
        if time_dependent {
            op.set_exterior(kernel, extension, t, &opts.eval)?;
            report.tail_bound = report.tail_bound.max(op.tail_bound);
        }
        let fixed: Vec<bool> = coords.iter().map(|x| in_set(x, t)).collect();
        let zeros = fixed.iter().filter(|f| **f).count();
        if zeros == n {
            return Err(Error::pre(Module::Solver, format!("the complement of the zero set is empty at t = {t}")));
        }
        for i in 0..n {
            if fixed[i] {
                u[i] = 0.0;
            }
            b[i] = op.exterior[i] + u[i] / dt + rhs(&coords[i], t);
        }
        let sys = ShiftedOperator { op: &op, shift: 1.0 / dt };
        let rep = solve_lcp_masked(&sys, &lower, &b, &mut u, Some(&fixed), &lopts)?;
        report.iterations += rep.iterations;
        report.residual = report.residual.max(rep.residual);
        report.active_sizes.push(zeros);
        out.slice_mut(k).copy_from_slice(&u);
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((out, report))
}

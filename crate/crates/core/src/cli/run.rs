use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::config::{BarrierChoice, ExperimentConfig, FitConfig, Scenario};
use super::expr::Expr;
use super::report::{Cell, Report};
use crate::barriers::{
    cone_samples, cone_supersolution, exp_cusp_barrier, heat_tail_supersolution, search_descending,
    search_regularized, traveling_cone_samples, traveling_cone_subsolution, verify_inequality, HeatTailOptions,
    MovingDomain, VerifyOptions, VerifyReport,
};
use crate::error::{Error, Module, Result};
use crate::free_boundary::{
    analyze_point, blow_up_rescale, contact_set, extract_boundary, fit_1d_profile, gap, BoundaryPoint,
    ClassifyThresholds, NormMode,
};
use crate::harnack::{run_harnack, HarnackData, HarnackScenario};
use crate::metrics::{fit_time_regularity, parabolic_holder_seminorm, HolderMode, Region, SearchOptions};
use crate::operator::{EvalOptions, GridFunction, Growth, KernelSpec, SpaceTimeFn};
use crate::profiles::{gamma_critical, gamma_elliptic};
use crate::solver::{solve_elliptic_obstacle, solve_parabolic_obstacle, ObstacleProblem, SolveReport, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    FitExponent,
    Blowup,
    VerifyBarrier,
    Gamma,
    Symbol,
    Harnack,
    Regularity,
}

impl Command {
    pub fn accepts(&self, sc: Scenario) -> bool {
        use Scenario as S;
        match self {
            Command::Solve => matches!(sc, S::SolveElliptic | S::SolveParabolic),
            Command::FitExponent => sc == S::FitExponent,
            Command::Blowup => sc == S::Blowup,
            Command::VerifyBarrier => sc == S::VerifyBarrier,
            Command::Gamma => sc == S::Gamma,
            Command::Symbol => sc == S::Symbol,
            Command::Harnack => sc == S::Harnack,
            Command::Regularity => sc == S::Regularity,
        }
    }

    /// Scenario used when no config file is given.
    pub fn default_scenario(&self) -> Scenario {
        match self {
            Command::Solve => Scenario::SolveElliptic,
            Command::FitExponent => Scenario::FitExponent,
            Command::Blowup => Scenario::Blowup,
            Command::VerifyBarrier => Scenario::VerifyBarrier,
            Command::Gamma => Scenario::Gamma,
            Command::Symbol => Scenario::Symbol,
            Command::Harnack => Scenario::Harnack,
            Command::Regularity => Scenario::Regularity,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

struct Sink<'a> {
    dir: &'a Path,
    cfg: &'a ExperimentConfig,
    hash: String,
    files: Vec<PathBuf>,
}

impl Sink<'_> {
    fn csv(&mut self, report: &Report) -> Result<()> {
        let path = self.dir.join(format!("{}.csv", report.name));
        report.save(&path, self.cfg.scenario.name(), &self.hash, self.cfg.seed)?;
        self.files.push(path);
        Ok(())
    }

    fn grid(&mut self, name: &str, g: &GridFunction) -> Result<()> {
        if !self.cfg.output.write_grids {
            return Ok(());
        }
        let path = self.dir.join(format!("{name}.fbrg"));
        g.save(&path)?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs one scenario, writing its CSV reports and grids into `out`.
pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    if !cmd.accepts(cfg.scenario) {
        return Err(Error::Config {
            code: "E_SCENARIO",
            line: 0,
            msg: format!("scenario '{}' cannot be run by this subcommand", cfg.scenario.name()),
        });
    }
    std::fs::create_dir_all(out)?;
    let mut sink = Sink {
        dir: out,
        cfg,
        hash: cfg.hash(),
        files: Vec::new(),
    };
    let k = cfg.kernel.build()?;
    let summary = match cfg.scenario {
        Scenario::SolveElliptic | Scenario::SolveParabolic => run_solve(cfg, &k, &mut sink)?,
        Scenario::FitExponent | Scenario::Blowup => run_fit(cfg, &k, &mut sink)?,
        Scenario::VerifyBarrier => run_barrier(cfg, &k, &mut sink)?,
        Scenario::Gamma | Scenario::Symbol => run_gamma(cfg, &k, &mut sink)?,
        Scenario::Harnack => run_harnack_scenario(cfg, &k, &mut sink)?,
        Scenario::Regularity => run_regularity(cfg, &k, &mut sink)?,
    };
    Ok(RunOutput {
        summary: format!("{} [{}]: {summary}", cfg.scenario.name(), &sink.hash[..12]),
        files: sink.files,
    })
}

fn solver_options(cfg: &ExperimentConfig) -> SolverOptions {
    let s = cfg.solver.clone().unwrap_or_default();
    SolverOptions {
        tol: s.tol,
        max_iter: s.max_iter,
        omega: s.omega,
        eval: EvalOptions {
            tol: s.quad_tol,
            ..EvalOptions::default()
        },
    }
}

fn solve(cfg: &ExperimentConfig, k: &KernelSpec) -> Result<(ObstacleProblem, GridFunction, SolveReport)> {
    let g = cfg.grid.clone().unwrap_or_default();
    let o = cfg.obstacle.clone().unwrap_or_default();
    let expr = Arc::new(Expr::parse(&o.expr).map_err(|e| Error::Config {
        code: "E_EXPR",
        line: 0,
        msg: e.to_string(),
    })?);
    let growth = match (o.support, o.bound) {
        (Some(r), _) => Growth::compact(r),
        (None, Some(b)) => Growth::bounded(b),
        (None, None) => return Err(Error::invalid(Module::Cli, "obstacle needs `support` or `bound`")),
    };
    let n = g.nodes();
    let e = expr.clone();
    let mut p = ObstacleProblem::new(k, move |x| e.eval(x, 0.0), growth, &vec![n; k.dim], g.h, &vec![-g.half_width; k.dim])?;
    if let (Some(t), Some(steps)) = (g.horizon, g.steps) {
        p = p.parabolic(t, steps)?;
    }
    let opts = solver_options(cfg);
    let (u, rep) = if p.horizon.is_some() {
        solve_parabolic_obstacle(&p, &opts)?
    } else {
        solve_elliptic_obstacle(&p, &opts)?
    };
    Ok((p, u, rep))
}

fn run_solve(cfg: &ExperimentConfig, k: &KernelSpec, sink: &mut Sink) -> Result<String> {
    let (p, u, rep) = solve(cfg, k)?;
    let mut r = Report::new("solve", &["step", "t", "active", "iterations", "residual", "omega", "tail_bound"]);
    if rep.active_sizes.is_empty() {
        r.push(vec![0usize.into(), 0.0.into(), contact_count(&u, &p)?.into(), rep.iterations.into(), rep.residual.into(), rep.omega.into(), rep.tail_bound.into()]);
    }
    for (i, a) in rep.active_sizes.iter().enumerate() {
        r.push(vec![(i + 1).into(), u.time(i + 1).into(), (*a).into(), rep.iterations.into(), rep.residual.into(), rep.omega.into(), rep.tail_bound.into()]);
    }
    sink.csv(&r)?;
    sink.grid("solution", &u)?;
    sink.grid("obstacle", &p.obstacle)?;
    Ok(format!("{} sweeps, residual {:.3e}", rep.iterations, rep.residual))
}

fn contact_count(u: &GridFunction, p: &ObstacleProblem) -> Result<usize> {
    Ok(contact_set(u, &p.obstacle, 1e-9)?.iter().filter(|c| **c).count())
}

fn probe_points(pts: &[BoundaryPoint], fit: &FitConfig, u: &GridFunction) -> Vec<BoundaryPoint> {
    if !u.is_space_time() {
        return pts.to_vec();
    }
    let dt = u.dt.unwrap_or(0.0);
    pts.iter()
        .filter(|p| p.t > u.t0)
        .filter(|p| fit.times.is_empty() || fit.times.iter().any(|t| (p.t - t).abs() <= 0.5 * dt))
        .cloned()
        .collect()
}

fn run_fit(cfg: &ExperimentConfig, k: &KernelSpec, sink: &mut Sink) -> Result<String> {
    let fit = cfg.fit.clone().unwrap_or_default();
    let (p, u, _) = solve(cfg, k)?;
    let w = gap(&u, &p.obstacle)?;
    let mask = contact_set(&u, &p.obstacle, fit.gap_tol)?;
    let cloud = extract_boundary(&mask, &w, fit.boundary_power.unwrap_or(1.0 + k.s))?;
    let probes = probe_points(&cloud, &fit, &u);
    let thr = ClassifyThresholds {
        delta_cls: fit.delta_cls,
        eps_c: fit.eps_c,
        min_r2: fit.min_r2,
    };
    let r_min = fit.r_min_cells * u.h;
    let t_end = if u.is_space_time() { u.time(u.time_len() - 1) } else { 0.0 };
    let d = k.dim;
    let mut cols: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    cols.push("t".into());
    cols.extend((1..=d).map(|i| format!("nu_x{i}")));
    for c in ["nu_t", "v0", "beta", "r2", "class", "gamma_pred", "r_max"] {
        cols.push(c.into());
    }
    let blow = cfg.scenario == Scenario::Blowup;
    if blow {
        for c in ["r", "kappa", "v_fit", "lip_distance", "rms"] {
            cols.push(c.into());
        }
        cols.extend((1..=d).map(|i| format!("e_fit{i}")));
    }
    let colrefs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut report = Report::new(cfg.scenario.name(), &colrefs);
    let mut regular = 0;
    for pt in &probes {
        let mut r_max = fit.r_max;
        if u.is_space_time() {
            let q = 1.0 / (2.0 * k.s);
            r_max = r_max.min((pt.t - u.t0).powf(q)).min((t_end - pt.t).max(0.0).powf(q));
        }
        if r_max <= 2.0 * r_min {
            continue;
        }
        let fp = analyze_point(&w, &cloud, pt, k, fit.normal_radius, r_min, r_max, &thr)?;
        if matches!(fp.classification, crate::free_boundary::Classification::Regular { .. }) {
            regular += 1;
        }
        let mut row: Vec<Cell> = fp.x.iter().map(|v| (*v).into()).collect();
        row.push(fp.t.into());
        row.extend(fp.nu_x.iter().map(|v| Cell::from(*v)));
        row.extend([
            fp.nu_t.into(),
            fp.speed.into(),
            fp.beta.into(),
            fp.r2.into(),
            fp.classification.to_string().into(),
            fp.gamma_pred.into(),
            r_max.into(),
        ]);
        if !blow {
            report.push(row);
            continue;
        }
        let hint_e: Vec<f64> = {
            let n = fp.nu_x.iter().map(|v| v * v).sum::<f64>().sqrt();
            fp.nu_x.iter().map(|v| v / n).collect()
        };
        let hint = (hint_e.iter().all(|v| v.is_finite()) && fp.speed.is_finite()).then_some((hint_e.as_slice(), fp.speed));
        for &r in fit.blowup_radii.iter().filter(|r| **r <= r_max) {
            let mut full = row.clone();
            let fitted = blow_up_rescale(&w, pt, r, NormMode::Gradient, fit.blowup_nodes)
                .and_then(|b| fit_1d_profile(&b, k, hint));
            full.push(r.into());
            match fitted {
                Ok(f) => {
                    full.extend([f.profile.kappa.into(), f.profile.v.into(), f.lip_distance.into(), f.rms.into()]);
                    full.extend(f.profile.e.iter().map(|v| Cell::from(*v)));
                }
                Err(Error::Precondition { .. } | Error::Unresolved { .. }) => {
                    full.extend((0..4 + d).map(|_| Cell::from(f64::NAN)));
                }
                Err(e) => return Err(e),
            }
            report.push(full);
        }
    }
    sink.csv(&report)?;
    sink.grid("solution", &u)?;
    Ok(format!("{} probe points, {regular} regular", probes.len()))
}

fn verify_rows(report: &mut Report, parameter: &str, value: f64, rep: &VerifyReport) {
    let order = rep.order.as_ref().map(|o| o.order).unwrap_or(f64::NAN);
    for (i, l) in rep.levels.iter().enumerate() {
        report.push(vec![
            rep.kind.to_string().into(),
            parameter.into(),
            value.into(),
            i.into(),
            l.h.into(),
            l.worst.into(),
            l.margin.into(),
            rep.stable.into(),
            rep.pass.into(),
            order.into(),
        ]);
    }
}

fn run_barrier(cfg: &ExperimentConfig, k: &KernelSpec, sink: &mut Sink) -> Result<String> {
    let b = cfg.barrier.clone().unwrap_or_default();
    let opts = VerifyOptions {
        eval: EvalOptions {
            tol: cfg.solver.as_ref().map(|s| s.quad_tol).unwrap_or(1e-8),
            ..EvalOptions::default()
        },
        ..VerifyOptions::default()
    };
    let gap = opts.collar * b.spacings.first().copied().unwrap_or(0.0);
    let cols = ["kind", "parameter", "value", "level", "h", "worst", "margin", "stable", "pass", "order"];
    let mut report = Report::new("verify-barrier", &cols);
    let candidates = |v: f64| if b.search.is_empty() { vec![v] } else { b.search.clone() };
    let summary = match b.kind {
        BarrierChoice::ExpCusp => {
            let bar = exp_cusp_barrier(&b.e, b.theta, b.v, b.parabolic)?;
            let m = (1.0 / b.sample_step).round() as i64;
            let samples: Vec<(Vec<f64>, f64)> = (-m..m)
                .map(|i| (i as f64 + 0.5) * b.sample_step)
                .filter(|z| z.abs() >= gap)
                .map(|z| (b.e.iter().map(|c| c * z).collect(), 0.0))
                .collect();
            let rep = verify_inequality(k, &bar, &samples, &b.spacings, &opts)?;
            verify_rows(&mut report, "theta", b.theta, &rep);
            format!("{} margin {:.3e}", if rep.pass { "pass" } else { "fail" }, rep.finest().margin)
        }
        BarrierChoice::ConeSuper => {
            let radii: Vec<f64> = (0..).map(|i| 0.1 + i as f64 * b.sample_step).take_while(|r| *r < 1.95).collect();
            let search = search_descending("theta", &candidates(b.theta), |th| {
                let bar = cone_supersolution(&b.e, b.eta, th)?;
                let samples = cone_samples(&bar, &radii, 24, gap);
                let rep = verify_inequality(k, &bar, &samples, &b.spacings, &opts)?;
                verify_rows(&mut report, "theta", th, &rep);
                Ok(rep)
            })?;
            found_summary("theta", search.found)
        }
        BarrierChoice::TravelingConeSub => {
            let search = search_descending("gamma", &candidates(b.gamma), |g| {
                let bar = traveling_cone_subsolution(k, &b.e, b.omega, b.theta0, g)?;
                let samples = traveling_cone_samples(&bar, b.sample_step, &[-0.9, -0.5, -0.1], gap);
                let rep = verify_inequality(k, &bar, &samples, &b.spacings, &opts)?;
                verify_rows(&mut report, "gamma", g, &rep);
                Ok(rep)
            })?;
            found_summary("gamma", search.found)
        }
        BarrierChoice::PowerRegularized => {
            let domain = MovingDomain::flat(&b.e, b.v)?;
            let g0 = match b.gamma0 {
                Some(g) => g,
                None => gamma_critical(k, &b.e, b.v)?,
            };
            let res = search_regularized(k, &domain, g0, b.eps, &b.spacings, 12, b.max_doublings, &opts)?;
            let mut r = Report::new("verify-barrier", &["kind", "gamma0", "eps", "m", "delta0", "sub_pass", "sup_pass", "sandwich"]);
            for (m, d0, p1, p2, c) in &res.tried {
                r.push(vec!["power-regularized".into(), g0.into(), b.eps.into(), (*m).into(), (*d0).into(), (*p1).into(), (*p2).into(), (*c).into()]);
            }
            report = r;
            match (res.m, res.delta0) {
                (Some(m), Some(d)) => format!("pass at M = {m}, δ₀ = {d}"),
                _ => "fail: no M found".into(),
            }
        }
        BarrierChoice::HeatTailSuper => {
            let g0 = match b.gamma0 {
                Some(g) => g,
                None if k.is_critical() => gamma_critical(k, &b.e, 0.0)?,
                None => gamma_elliptic(k, &b.e)?,
            };
            let hopts = HeatTailOptions {
                radii: b.radii.clone(),
                nodes_per_unit: b.nodes_per_unit,
                steps: b.steps,
                solver: solver_options(cfg),
                ..HeatTailOptions::default()
            };
            let e = b.e.clone();
            let rep = heat_tail_supersolution(k, g0, &move |x: &[f64], _| crate::operator::kernel::dot(x, &e) <= 0.0, &hopts)?;
            let mut r = Report::new("verify-barrier", &["kind", "gamma0", "r", "c_upper", "c_lower", "iterations", "c_obs", "c_obs_lower", "pass"]);
            for row in &rep.rows {
                r.push(vec![
                    "heat-tail-super".into(),
                    g0.into(),
                    row.r.into(),
                    row.c_upper.into(),
                    row.c_lower.into(),
                    row.iterations.into(),
                    rep.c_obs.into(),
                    rep.c_obs_lower.into(),
                    rep.pass.into(),
                ]);
            }
            report = r;
            format!("{} C_obs {:.4}", if rep.pass { "pass" } else { "fail" }, rep.c_obs)
        }
    };
    sink.csv(&report)?;
    Ok(summary)
}

fn found_summary(name: &str, found: Option<f64>) -> String {
    match found {
        Some(v) => format!("pass at {name} = {v}"),
        None => format!("fail for every {name} tried"),
    }
}

fn run_gamma(cfg: &ExperimentConfig, k: &KernelSpec, sink: &mut Sink) -> Result<String> {
    let g = cfg.gamma.clone().unwrap_or_default();
    let d = k.dim;
    let mut cols: Vec<String> = (1..=d).map(|i| format!("e{i}")).collect();
    let symbol_table = cfg.scenario == Scenario::Symbol;
    if symbol_table {
        cols.extend(["magnitude", "a", "b"].map(String::from));
    } else {
        cols.extend(["v", "a", "b", "gamma"].map(String::from));
    }
    let colrefs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut report = Report::new(cfg.scenario.name(), &colrefs);
    for e in &g.directions {
        if symbol_table {
            for m in &g.magnitudes {
                let sym = crate::operator::symbol(k, e, *m)?;
                let mut row: Vec<Cell> = e.iter().map(|v| (*v).into()).collect();
                row.extend([(*m).into(), sym.a.into(), sym.b.into()]);
                report.push(row);
            }
        } else {
            let sym = crate::operator::symbol(k, e, 1.0)?;
            for v in &g.speeds {
                let gamma = if k.is_critical() { gamma_critical(k, e, *v)? } else { gamma_elliptic(k, e)? };
                let mut row: Vec<Cell> = e.iter().map(|c| (*c).into()).collect();
                row.extend([(*v).into(), sym.a.into(), sym.b.into(), gamma.into()]);
                report.push(row);
            }
        }
    }
    sink.csv(&report)?;
    Ok(format!("{} rows", report.rows.len()))
}

fn expr_or(src: &Option<String>, default: SpaceTimeFn) -> Result<SpaceTimeFn> {
    Ok(match src {
        Some(s) => {
            let e = Expr::parse(s).map_err(|e| Error::Config {
                code: "E_EXPR",
                line: 0,
                msg: e.to_string(),
            })?;
            Arc::new(move |x: &[f64], t: f64| e.eval(x, t))
        }
        None => default,
    })
}

fn run_harnack_scenario(cfg: &ExperimentConfig, k: &KernelSpec, sink: &mut Sink) -> Result<String> {
    let h = cfg.harnack.clone().unwrap_or_default();
    if k.dim > 1 && (h.initial1.is_none() || h.initial2.is_none()) {
        return Err(Error::Config {
            code: "E_MISSING",
            line: 0,
            msg: "harnack runs in more than one dimension need initial1 and initial2".into(),
        });
    }
    let base = HarnackScenario::one_dimensional(k.s.max(0.5), h.omega, h.eps)?;
    let mut data = Vec::new();
    for (i, (init, forcing)) in [(&h.initial1, &h.forcing1), (&h.initial2, &h.forcing2)].into_iter().enumerate() {
        let d = &base.data[i];
        let di = d.initial.clone();
        let init = expr_or(init, Arc::new(move |x: &[f64], _| di(x)))?;
        let forcing = expr_or(forcing, d.forcing.clone())?;
        data.push(HarnackData::new(move |x| init(x, 0.0), move |x, t| forcing(x, t)));
    }
    let data: [HarnackData; 2] = [data[0].clone(), data[1].clone()];
    let mut sc = HarnackScenario::new(k.clone(), &h.e, h.opening, h.omega, h.eps, data)?;
    sc.h = h.h;
    sc.half_width = h.half_width;
    sc.horizon = h.horizon;
    sc.steps = h.steps;
    sc.radii = h.radii.clone();
    sc.floor = h.floor;
    sc.solver = solver_options(cfg);
    let rep = run_harnack(&sc)?;
    let cols = ["r", "osc", "cells", "excluded", "alpha", "r2", "min_v1_over_v2", "min_v2_over_v1", "positivity", "monotone", "pass"];
    let mut report = Report::new("harnack", &cols);
    let alpha = rep.alpha.unwrap_or(f64::NAN);
    let r2 = rep.fit.map(|f| f.r2).unwrap_or(f64::NAN);
    for row in &rep.rows {
        report.push(vec![
            row.r.into(),
            row.osc.into(),
            row.cells.into(),
            row.excluded.into(),
            alpha.into(),
            r2.into(),
            rep.comparability.0.into(),
            rep.comparability.1.into(),
            rep.positivity.into(),
            rep.monotone.into(),
            rep.pass().into(),
        ]);
    }
    sink.csv(&report)?;
    Ok(format!("{} α_obs {alpha:.4}", if rep.pass() { "pass" } else { "fail" }))
}

fn run_regularity(cfg: &ExperimentConfig, k: &KernelSpec, sink: &mut Sink) -> Result<String> {
    let r = cfg.regularity.clone().unwrap_or_default();
    let (_, u, _) = solve(cfg, k)?;
    let tr = fit_time_regularity(&u, r.eps, r.t1, r.t2)?;
    let holder = parabolic_holder_seminorm(
        &u,
        r.beta,
        HolderMode::Parabolic,
        &Region::all().with_times(r.t1, r.t2),
        &SearchOptions {
            pair_budget: r.pair_budget,
            seed: cfg.seed,
            force_sampled: false,
        },
    )?;
    let cols = ["lag", "modulus", "measured", "predicted", "r2", "holder_beta", "holder_value", "holder_exact"];
    let mut report = Report::new("regularity", &cols);
    for (lag, m) in tr.lags.iter().zip(&tr.modulus) {
        report.push(vec![
            (*lag).into(),
            (*m).into(),
            tr.measured.into(),
            tr.predicted.into(),
            tr.fit.r2.into(),
            r.beta.into(),
            holder.value.into(),
            holder.exact.into(),
        ]);
    }
    sink.csv(&report)?;
    sink.grid("solution", &u)?;
    Ok(format!("time exponent {:.4} (predicted {:.4})", tr.measured, tr.predicted))
}

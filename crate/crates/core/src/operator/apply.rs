use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::grid::GridFunction;
use super::kernel::{direction, norm, KernelSpec};
use super::quad;
use super::stencil::{box_radius, octant_nodes, DriftScheme, Stencil};
use crate::error::{Error, Module, Result};

pub type SpaceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Growth model of a function at infinity: `|f(z)| ≤ bound (1 + |z|)^mu`,
/// optionally `f(z) ≈ amplitude(z/|z|) |z|^mu`, or `f = 0` beyond `support`.
#[derive(Clone)]
pub struct Growth {
    pub mu: f64,
    pub bound: f64,
    pub amplitude: Option<SpaceFn>,
    pub support: Option<f64>,
}

impl fmt::Debug for Growth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Growth")
            .field("mu", &self.mu)
            .field("bound", &self.bound)
            .field("amplitude", &self.amplitude.is_some())
            .field("support", &self.support)
            .finish()
    }
}

impl Growth {
    pub fn bounded(bound: f64) -> Self {
        Growth {
            mu: 0.0,
            bound,
            amplitude: None,
            support: None,
        }
    }

    /// Vanishes outside the ball of the given radius.
    pub fn compact(radius: f64) -> Self {
        Growth {
            mu: 0.0,
            bound: 0.0,
            amplitude: None,
            support: Some(radius),
        }
    }

    pub fn power(mu: f64, bound: f64, amplitude: Option<SpaceFn>) -> Self {
        Growth {
            mu,
            bound,
            amplitude,
            support: None,
        }
    }
}

/// Values of `u` outside the computational box.
#[derive(Clone)]
pub enum ExteriorRule {
    Constant(f64),
    Periodic,
    Function { f: SpaceTimeFn, growth: Growth },
}

impl fmt::Debug for ExteriorRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExteriorRule::Constant(c) => write!(f, "Constant({c})"),
            ExteriorRule::Periodic => write!(f, "Periodic"),
            ExteriorRule::Function { growth, .. } => write!(f, "Function({growth:?})"),
        }
    }
}

impl ExteriorRule {
    pub fn function(f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static, growth: Growth) -> Self {
        ExteriorRule::Function {
            f: Arc::new(f),
            growth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Absolute tolerance for the far-field truncation.
    pub tol: f64,
    /// Fixed truncation radius; chosen automatically when `None`.
    pub r_tail: Option<f64>,
    /// Gauss points per octant for two-dimensional far fields.
    pub angular_nodes: usize,
    /// Width of the Gauss panels in `log r`.
    pub panel: f64,
    pub scheme: DriftScheme,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            tol: 1e-8,
            r_tail: None,
            angular_nodes: 16,
            panel: 0.5,
            scheme: DriftScheme::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FarField {
    pub value: f64,
    /// Bound on the neglected tail beyond `r_tail`.
    pub bound: f64,
    pub r_tail: f64,
}

fn tail_bound(k: &KernelSpec, g: &Growth, xnorm: f64, r: f64) -> f64 {
    let s2 = 2.0 * k.s;
    let area = match k.dim {
        1 => 2.0,
        d => quad::sphere_area(d),
    };
    let pre = g.bound * k.norm_const() * k.big_lambda * area * 2f64.powf(g.mu);
    if g.amplitude.is_some() {
        pre * (1.0 + xnorm) * r.powf(g.mu - 1.0 - s2) / (s2 + 1.0 - g.mu)
    } else {
        pre * r.powf(g.mu - s2) / (s2 - g.mu)
    }
}

/// `∫_{|y|∞ > half} f(x + y) K(y) dy`.
pub fn far_field(
    k: &KernelSpec,
    half: f64,
    x: &[f64],
    f: &dyn Fn(&[f64]) -> f64,
    g: &Growth,
    opts: &EvalOptions,
) -> Result<FarField> {
    let s = k.s;
    if g.mu >= 2.0 * s {
        return Err(Error::invalid(
            Module::Operator,
            format!("extension grows like |z|^{} which is not integrable against a kernel of order 2s = {}", g.mu, 2.0 * s),
        ));
    }
    if k.dim > 2 {
        return Err(Error::invalid(Module::Operator, "far-field quadrature is implemented for n ≤ 2"));
    }
    let xn = norm(x);
    let target = 0.1 * opts.tol;
    let floor = (2.0 * half).max(2.0 * (1.0 + xn));
    let (r_tail, bound) = if let Some(sup) = g.support {
        ((sup + xn).max(half * 1.0001), 0.0)
    } else if let Some(r) = opts.r_tail {
        let b = tail_bound(k, g, xn, r.max(1.0 + xn));
        if b > target {
            return Err(Error::TailCutoff { bound: b, target });
        }
        (r, b)
    } else if g.bound == 0.0 {
        (floor, 0.0)
    } else {
        // tail_bound is a pure power of r beyond the floor
        let b0 = tail_bound(k, g, xn, floor);
        let expo = if g.amplitude.is_some() {
            g.mu - 1.0 - 2.0 * s
        } else {
            g.mu - 2.0 * s
        };
        let r = if b0 <= target {
            floor
        } else {
            floor * (target / b0).powf(1.0 / expo)
        };
        if r > half * 1e40 {
            return Err(Error::TailCutoff {
                bound: tail_bound(k, g, xn, half * 1e40),
                target,
            });
        }
        (r, tail_bound(k, g, xn, r))
    };
    let c = k.norm_const();
    let nodes: Vec<(f64, f64)> = match k.dim {
        1 => vec![(0.0, 1.0), (std::f64::consts::PI, 1.0)],
        _ => octant_nodes(opts.angular_nodes.clamp(1, 24)),
    };
    let (gx, gw) = quad::gauss_legendre(10);
    let mut p = vec![0.0; x.len()];
    let mut total = 0.0;
    for (phi, wphi) in nodes {
        let a = k.density.at_angle(phi);
        let th = direction(k.dim, phi);
        let r0 = box_radius(k.dim, half, phi);
        let tmax = (r_tail / r0).ln();
        let mut ray = 0.0;
        if tmax > 0.0 {
            let panels = (tmax / opts.panel).ceil().max(1.0) as usize;
            let width = tmax / panels as f64;
            for q in 0..panels {
                let mid = (q as f64 + 0.5) * width;
                for (xi, wi) in gx.iter().zip(&gw) {
                    let tau = mid + 0.5 * width * xi;
                    let r = r0 * tau.exp();
                    for (pi, (xi0, ti)) in p.iter_mut().zip(x.iter().zip(&th)) {
                        *pi = xi0 + r * ti;
                    }
                    ray += 0.5 * width * wi * f(&p) * r.powf(-2.0 * s);
                }
            }
        }
        if let (Some(amp), None) = (&g.amplitude, g.support) {
            let rt = r_tail.max(r0);
            ray += amp(&th) * rt.powf(g.mu - 2.0 * s) / (2.0 * s - g.mu);
        }
        total += wphi * c * a * ray;
    }
    Ok(FarField {
        value: total,
        bound,
        r_tail,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct PointValue {
    pub value: f64,
    /// Bound on the truncated far-field tail.
    pub tail_bound: f64,
}

/// Evaluates `ℒf` at arbitrary points for a function known everywhere,
/// using the lattice `x + hZ^n` out to a fixed physical radius and
/// quadrature beyond it.
#[derive(Debug, Clone)]
pub struct PointEvaluator {
    pub kernel: KernelSpec,
    pub stencil: Stencil,
    pub opts: EvalOptions,
}

impl PointEvaluator {
    pub fn new(kernel: &KernelSpec, h: f64, radius: f64, opts: EvalOptions) -> Result<Self> {
        if !(h > 0.0) || !(radius >= h) {
            return Err(Error::invalid(
                Module::Operator,
                format!("lattice radius {radius} must be at least the spacing {h}"),
            ));
        }
        let m = ((radius / h) - 0.5).ceil().max(1.0) as usize;
        Ok(PointEvaluator {
            kernel: kernel.clone(),
            stencil: Stencil::new(kernel, h, m, opts.scheme),
            opts,
        })
    }

    pub fn h(&self) -> f64 {
        self.stencil.h
    }

    /// Lattice part `Σ_j T_j f(x + jh)`.
    pub fn lattice_sum(&self, f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
        let st = &self.stencil;
        let d = st.dim;
        let m = st.m as i64;
        let side = st.side();
        let h = st.h;
        let mut p = vec![0.0; d];
        let mut acc = 0.0;
        match d {
            1 => {
                for (i, t) in st.taps.iter().enumerate() {
                    if *t != 0.0 {
                        p[0] = x[0] + (i as i64 - m) as f64 * h;
                        acc += t * f(&p);
                    }
                }
            }
            2 => {
                for a in 0..side {
                    p[0] = x[0] + (a as i64 - m) as f64 * h;
                    let row = &st.taps[a * side..(a + 1) * side];
                    for (b, t) in row.iter().enumerate() {
                        if *t != 0.0 {
                            p[1] = x[1] + (b as i64 - m) as f64 * h;
                            acc += t * f(&p);
                        }
                    }
                }
            }
            _ => {
                for (i, t) in st.taps.iter().enumerate() {
                    if *t != 0.0 {
                        let j = st.offset(i);
                        for a in 0..d {
                            p[a] = x[a] + j[a] as f64 * h;
                        }
                        acc += t * f(&p);
                    }
                }
            }
        }
        acc
    }

    pub fn eval(&self, f: &dyn Fn(&[f64]) -> f64, growth: &Growth, x: &[f64]) -> Result<PointValue> {
        if x.len() != self.kernel.dim {
            return Err(Error::invalid(Module::Operator, "point dimension mismatch"));
        }
        let lat = self.lattice_sum(f, x);
        let far = far_field(&self.kernel, self.stencil.half_width, x, f, growth, &self.opts)?;
        Ok(PointValue {
            value: lat + far.value,
            tail_bound: far.bound,
        })
    }

    /// `ℒf` at many points in parallel.
    pub fn eval_many(
        &self,
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        growth: &Growth,
        points: &[Vec<f64>],
    ) -> Result<Vec<f64>> {
        points
            .par_iter()
            .map(|x| self.eval(f, growth, x).map(|v| v.value))
            .collect()
    }
}

/// `ℒ` restricted to the nodes of a box: `(ℒu)_i = Σ_k A_ik u_k + E_i`,
/// with `A` block Toeplitz and `E` the contribution of the exterior values.
#[derive(Debug, Clone)]
pub struct BoxOperator {
    pub dims: Vec<usize>,
    pub h: f64,
    pub origin: Vec<f64>,
    /// Taps for offsets `-(n_a - 1) ..= n_a - 1` on every axis.
    taps: Vec<f64>,
    pub exterior: Vec<f64>,
    pub periodic: bool,
    pub scheme: DriftScheme,
    pub tail_bound: f64,
    stencil: Option<Arc<Stencil>>,
}

impl BoxOperator {
    pub fn new(
        k: &KernelSpec,
        dims: &[usize],
        h: f64,
        origin: &[f64],
        ext: &ExteriorRule,
        t: f64,
        opts: &EvalOptions,
    ) -> Result<Self> {
        let d = dims.len();
        if d != k.dim {
            return Err(Error::invalid(Module::Operator, "grid and kernel dimensions differ"));
        }
        if dims.iter().any(|n| *n < 2) {
            return Err(Error::invalid(Module::Operator, "grid needs at least two nodes per axis"));
        }
        let nmax = *dims.iter().max().unwrap();
        let tside: Vec<usize> = dims.iter().map(|n| 2 * n - 1).collect();
        let tlen: usize = tside.iter().product();
        match ext {
            ExteriorRule::Periodic => {
                let images = match d {
                    1 => 1024,
                    2 => 8,
                    _ => 2,
                };
                let m = nmax * images;
                let st = Stencil::new(k, h, m, opts.scheme);
                let ncell: usize = dims.iter().product();
                let mut circ = vec![st.far_mass / ncell as f64; ncell];
                for (i, t) in st.taps.iter().enumerate() {
                    let j = st.offset(i);
                    let r = j
                        .iter()
                        .zip(dims)
                        .fold(0usize, |acc, (v, n)| acc * n + v.rem_euclid(*n as i64) as usize);
                    circ[r] += t;
                }
                let mut taps = vec![0.0; tlen];
                for (ti, tap) in taps.iter_mut().enumerate() {
                    let mut rem = ti;
                    let mut r = 0usize;
                    let mut stride = 1usize;
                    for a in (0..d).rev() {
                        let off = (rem % tside[a]) as i64 - (dims[a] as i64 - 1);
                        rem /= tside[a];
                        r += off.rem_euclid(dims[a] as i64) as usize * stride;
                        stride *= dims[a];
                    }
                    *tap = circ[r];
                }
                Ok(BoxOperator {
                    dims: dims.to_vec(),
                    h,
                    origin: origin.to_vec(),
                    taps,
                    exterior: vec![0.0; ncell],
                    periodic: true,
                    scheme: st.scheme,
                    tail_bound: 0.0,
                    stencil: None,
                })
            }
            _ => {
                let m = 2 * nmax - 1;
                let st = Arc::new(Stencil::new(k, h, m, opts.scheme));
                let mut taps = vec![0.0; tlen];
                for (ti, tap) in taps.iter_mut().enumerate() {
                    let mut rem = ti;
                    let mut j = vec![0i64; d];
                    for a in (0..d).rev() {
                        j[a] = (rem % tside[a]) as i64 - (dims[a] as i64 - 1);
                        rem /= tside[a];
                    }
                    *tap = st.tap(&j);
                }
                let mut op = BoxOperator {
                    dims: dims.to_vec(),
                    h,
                    origin: origin.to_vec(),
                    taps,
                    exterior: vec![],
                    periodic: false,
                    scheme: st.scheme,
                    tail_bound: 0.0,
                    stencil: Some(st),
                };
                op.set_exterior(k, ext, t, opts)?;
                Ok(op)
            }
        }
    }

    pub fn for_grid(k: &KernelSpec, u: &GridFunction, ext: &ExteriorRule, t: f64, opts: &EvalOptions) -> Result<Self> {
        Self::new(k, &u.dims, u.h, &u.origin, ext, t, opts)
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn diag(&self) -> f64 {
        self.taps[self.taps.len() / 2]
    }

    /// Recompute the exterior contribution (e.g. for a new time level).
    pub fn set_exterior(&mut self, k: &KernelSpec, ext: &ExteriorRule, t: f64, opts: &EvalOptions) -> Result<()> {
        if self.periodic {
            return Ok(());
        }
        let st = self.stencil.clone().expect("stencil kept for non-periodic operators");
        let n = self.len();
        let d = self.dims.len();
        let dims = self.dims.clone();
        let in_box = |i: usize, j: &[i64]| -> bool {
            let mut rem = i;
            let mut ok = true;
            for a in (0..d).rev() {
                let ia = (rem % dims[a]) as i64;
                rem /= dims[a];
                let q = ia + j[a];
                if q < 0 || q >= dims[a] as i64 {
                    ok = false;
                }
            }
            ok
        };
        let offsets: Vec<(Vec<i64>, f64)> = st
            .taps
            .iter()
            .enumerate()
            .filter(|(_, t)| **t != 0.0)
            .map(|(i, t)| (st.offset(i), *t))
            .collect();
        match ext {
            ExteriorRule::Constant(cv) => {
                let e: Vec<f64> = (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let inside: f64 = offsets
                            .iter()
                            .filter(|(j, _)| in_box(i, j))
                            .map(|(_, t)| t)
                            .sum();
                        // all taps plus the far mass sum to zero
                        -cv * inside
                    })
                    .collect();
                self.exterior = e;
                self.tail_bound = 0.0;
            }
            ExteriorRule::Function { f, growth } => {
                let h = self.h;
                let origin = self.origin.clone();
                let results: Result<Vec<(f64, f64)>> = (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let mut x = vec![0.0; d];
                        let mut rem = i;
                        for a in (0..d).rev() {
                            x[a] = origin[a] + (rem % dims[a]) as f64 * h;
                            rem /= dims[a];
                        }
                        let mut p = vec![0.0; d];
                        let mut acc = 0.0;
                        for (j, tap) in &offsets {
                            if in_box(i, j) {
                                continue;
                            }
                            for a in 0..d {
                                p[a] = x[a] + j[a] as f64 * h;
                            }
                            acc += tap * f(&p, t);
                        }
                        let g = |z: &[f64]| f(z, t);
                        let far = far_field(k, st.half_width, &x, &g, growth, opts)?;
                        Ok((acc + far.value, far.bound))
                    })
                    .collect();
                let results = results?;
                self.tail_bound = results.iter().map(|r| r.1).fold(0.0, f64::max);
                self.exterior = results.into_iter().map(|r| r.0).collect();
            }
            ExteriorRule::Periodic => unreachable!(),
        }
        Ok(())
    }

    /// `Σ_k A_ik u_k` (without the exterior term).
    pub fn row_dot(&self, i: usize, u: &[f64]) -> f64 {
        match self.dims.len() {
            1 => {
                let n = self.dims[0];
                let t = &self.taps[n - 1 - i..2 * n - 1 - i];
                t.iter().zip(u).map(|(a, b)| a * b).sum()
            }
            2 => {
                let (n0, n1) = (self.dims[0], self.dims[1]);
                let (i0, i1) = (i / n1, i % n1);
                let ts = 2 * n1 - 1;
                let mut acc = 0.0;
                for k0 in 0..n0 {
                    let r = k0 + n0 - 1 - i0;
                    let t = &self.taps[r * ts + (n1 - 1 - i1)..r * ts + (2 * n1 - 1 - i1)];
                    let ur = &u[k0 * n1..(k0 + 1) * n1];
                    acc += t.iter().zip(ur).map(|(a, b)| a * b).sum::<f64>();
                }
                acc
            }
            d => {
                let dims = &self.dims;
                let mut iv = vec![0usize; d];
                let mut rem = i;
                for a in (0..d).rev() {
                    iv[a] = rem % dims[a];
                    rem /= dims[a];
                }
                let mut acc = 0.0;
                for (k, uk) in u.iter().enumerate() {
                    let mut rem = k;
                    let mut ti = 0usize;
                    let mut kv = vec![0usize; d];
                    for a in (0..d).rev() {
                        kv[a] = rem % dims[a];
                        rem /= dims[a];
                    }
                    for a in 0..d {
                        ti = ti * (2 * dims[a] - 1) + (kv[a] + dims[a] - 1 - iv[a]);
                    }
                    acc += self.taps[ti] * uk;
                }
                acc
            }
        }
    }

    /// `(ℒu)_i` at every node.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|i| self.row_dot(i, u) + self.exterior[i])
            .collect()
    }

    /// Smallest off-diagonal coefficient.
    pub fn min_off_diagonal(&self) -> f64 {
        let c = self.taps.len() / 2;
        self.taps
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != c)
            .map(|(_, t)| *t)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `ℒu` on every node of the box (at time level `time_slice` for space-time
/// grids), with `u` extended outside the box by `ext`.
pub fn apply_operator(
    k: &KernelSpec,
    u: &GridFunction,
    ext: &ExteriorRule,
    time_slice: Option<usize>,
    opts: &EvalOptions,
) -> Result<GridFunction> {
    u.validate()?;
    if (u.s - k.s).abs() > 1e-12 {
        return Err(Error::invalid(Module::Operator, "grid scaling order differs from the kernel order"));
    }
    let kt = match (u.steps, time_slice) {
        (Some(nt), Some(kt)) if kt < nt => kt,
        (Some(_), Some(kt)) => {
            return Err(Error::invalid(Module::Operator, format!("time slice {kt} out of range")))
        }
        (Some(_), None) => {
            return Err(Error::invalid(Module::Operator, "space-time grid needs a time slice"))
        }
        (None, _) => 0,
    };
    let t = u.time(kt);
    let op = BoxOperator::for_grid(k, u, ext, t, opts)?;
    let mut out = u.time_slice(kt);
    out.values = op.apply(u.slice(kt));
    Ok(out)
}

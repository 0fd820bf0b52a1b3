//! Boundary Harnack experiment: two positive solutions of the linear
//! equation that vanish on a common moving cone complement, and the decay of
//! the oscillation of their quotient near a boundary point.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Module, Result};
use crate::metrics::{linear_fit, LinearFit};
use crate::operator::kernel::dot;
use crate::operator::{ExteriorRule, GridFunction, KernelSpec, SpaceFn, SpaceTimeFn};
use crate::solver::{solve_linear_parabolic, SolverOptions, SpaceTimeGrid};

/// Initial value and forcing of one solution.
#[derive(Clone)]
pub struct HarnackData {
    pub initial: SpaceFn,
    pub forcing: SpaceTimeFn,
}

impl fmt::Debug for HarnackData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("HarnackData")
    }
}

impl HarnackData {
    pub fn new(
        initial: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        forcing: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        HarnackData {
            initial: Arc::new(initial),
            forcing: Arc::new(forcing),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let (i, f) = (self.initial.clone(), self.forcing.clone());
        HarnackData::new(move |x| a * i(x), move |x, t| a * f(x, t))
    }
}

/// Both solutions vanish off `Ω(t) = {x : x - ω(T - t)e ∈ Σ}` where `Σ` is
/// the cone of half-opening `θ` around `e` (a half-line in one dimension).
/// The probe point is on the lateral boundary of `Ω(T)` at unit distance from
/// the apex; the anchor sits half a unit inside from it.
#[derive(Debug, Clone)]
pub struct HarnackScenario {
    pub kernel: KernelSpec,
    pub e: Vec<f64>,
    pub opening: f64,
    pub omega: f64,
    /// Bound on `|f_i|`.
    pub eps: f64,
    pub data: [HarnackData; 2],
    /// Decreasing cylinder radii.
    pub radii: Vec<f64>,
    pub half_width: f64,
    pub h: f64,
    pub horizon: f64,
    pub steps: usize,
    /// Cells where `v₂ < floor · v₂(anchor)` are excluded from the quotient.
    pub floor: f64,
    /// Allowed relative increase of the oscillation from one radius to the next.
    pub monotone_tol: f64,
    pub solver: SolverOptions,
}

impl HarnackScenario {
    /// A one-dimensional scenario with two generic data on `[-3, 3]`.
    pub fn one_dimensional(s: f64, omega: f64, eps: f64) -> Result<Self> {
        let kernel = KernelSpec::fractional_laplacian(1, s)?;
        let v1 = HarnackData::new(
            |x| if x[0] > 0.0 { x[0].min(1.0) * (-0.3 * x[0]).exp() } else { 0.0 },
            move |x, t| eps * (3.0 * x[0] + t).cos(),
        );
        let v2 = HarnackData::new(
            |x| if x[0] > 0.0 { x[0].sqrt() * (1.0 + 0.5 * (2.0 * x[0]).sin()) } else { 0.0 },
            move |_, _| -0.5 * eps,
        );
        Self::new(kernel, &[1.0], std::f64::consts::FRAC_PI_2, omega, eps, [v1, v2])
    }

    pub fn new(
        kernel: KernelSpec,
        e: &[f64],
        opening: f64,
        omega: f64,
        eps: f64,
        data: [HarnackData; 2],
    ) -> Result<Self> {
        if kernel.s < 0.5 || kernel.s >= 1.0 {
            return Err(Error::invalid(
                Module::Harnack,
                format!("boundary Harnack needs s ∈ [1/2, 1) (got {})", kernel.s),
            ));
        }
        if kernel.dim != e.len() {
            return Err(Error::invalid(Module::Harnack, "direction and kernel dimensions differ"));
        }
        let n = dot(e, e).sqrt();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(Module::Harnack, "direction must be a unit vector"));
        }
        if !(opening > 0.0 && opening < std::f64::consts::PI) {
            return Err(Error::invalid(Module::Harnack, format!("cone opening {opening} outside (0, π)")));
        }
        if !(omega >= 0.0 && eps >= 0.0) {
            return Err(Error::invalid(Module::Harnack, "speed and forcing bound must be nonnegative"));
        }
        Ok(HarnackScenario {
            kernel,
            e: e.to_vec(),
            opening,
            omega,
            eps,
            data,
            radii: vec![0.5, 0.25, 0.125, 0.0625],
            half_width: 3.0,
            h: 1.0 / 128.0,
            horizon: 1.5,
            steps: 192,
            floor: 1e-6,
            monotone_tol: 0.05,
            solver: SolverOptions::default(),
        })
    }

    fn apex(&self, t: f64) -> Vec<f64> {
        self.e.iter().map(|c| self.omega * (self.horizon - t) * c).collect()
    }

    /// Whether `x` is in the vanishing set at time `t`.
    pub fn in_vanishing_set(&self, x: &[f64], t: f64) -> bool {
        let a = self.apex(t);
        let y: Vec<f64> = x.iter().zip(&a).map(|(p, q)| p - q).collect();
        let r = dot(&y, &y).sqrt();
        if self.e.len() == 1 {
            return y[0] <= 0.0;
        }
        r == 0.0 || (dot(&y, &self.e) / r).clamp(-1.0, 1.0).acos() >= self.opening
    }

    /// Lateral boundary point at unit distance from the apex at time `T` and
    /// the inward unit normal there.
    pub fn probe(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.e.len();
        if d == 1 {
            return (vec![0.0], self.e.clone());
        }
        // rotate e by the opening in the plane of e and a perpendicular axis
        let mut p = vec![0.0; d];
        let mut q = vec![0.0; d];
        let axis = if self.e[0].abs() < 0.9 { 0 } else { 1 };
        let mut f = vec![0.0; d];
        f[axis] = 1.0;
        let c = dot(&f, &self.e);
        let fl: f64 = f.iter().zip(&self.e).map(|(a, b)| (a - c * b).powi(2)).sum::<f64>().sqrt();
        for i in 0..d {
            let perp = (f[i] - c * self.e[i]) / fl;
            p[i] = self.opening.cos() * self.e[i] + self.opening.sin() * perp;
            q[i] = self.opening.sin() * self.e[i] - self.opening.cos() * perp;
        }
        (p, q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnackRow {
    pub r: f64,
    pub osc: f64,
    pub cells: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnackReport {
    pub rows: Vec<HarnackRow>,
    /// Fitted decay exponent of `osc` against `r`; absent when every
    /// oscillation vanishes.
    pub alpha: Option<f64>,
    pub fit: Option<LinearFit>,
    pub monotone: bool,
    /// `min v₁/v₂` and `min v₂/v₁` on `Q₁ ∩ Ω` after normalizing at the anchor.
    pub comparability: (f64, f64),
    /// Smallest normalized `v_i` on `Q₁ ∩ Ω`, at least `2h` inside.
    pub positivity: f64,
    pub anchor_values: (f64, f64),
    pub iterations: usize,
}

impl HarnackReport {
    pub fn pass(&self) -> bool {
        self.monotone
            && self.alpha.is_some_and(|a| a > 0.0)
            && self.comparability.0 > 0.0
            && self.comparability.1 > 0.0
            && self.positivity > 0.0
    }
}

pub fn run_harnack(sc: &HarnackScenario) -> Result<HarnackReport> {
    if sc.radii.len() < 2 || sc.radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid(Module::Harnack, "radii must be decreasing, at least two"));
    }
    if sc.radii[sc.radii.len() - 1] < 2.0 * sc.h {
        return Err(Error::invalid(Module::Harnack, "the smallest radius is below two grid spacings"));
    }
    let d = sc.kernel.dim;
    let n = (2.0 * sc.half_width / sc.h).round() as usize + 1;
    let grid = SpaceTimeGrid {
        dims: vec![n; d],
        h: sc.h,
        origin: vec![-sc.half_width; d],
        dt: sc.horizon / sc.steps as f64,
        steps: sc.steps,
    };
    let in_set = |x: &[f64], t: f64| sc.in_vanishing_set(x, t);
    let mut sols = Vec::with_capacity(2);
    let mut iterations = 0;
    for data in &sc.data {
        let init = GridFunction::from_fn(&grid.dims, sc.h, &grid.origin, sc.kernel.s, |x| (data.initial)(x)).values;
        let f = data.forcing.clone();
        let (u, rep) = solve_linear_parabolic(
            &sc.kernel,
            &grid,
            &in_set,
            &move |x, t| f(x, t),
            &init,
            &ExteriorRule::Constant(0.0),
            &sc.solver,
        )?;
        iterations += rep.iterations;
        sols.push(u);
    }
    let (u1, u2) = (&sols[0], &sols[1]);
    let t_end = sc.horizon;
    let (xb, normal) = sc.probe();
    let anchor: Vec<f64> = xb.iter().zip(&normal).map(|(p, q)| p + 0.5 * q).collect();
    let a1 = u1.sample(&anchor, t_end).unwrap_or(f64::NAN);
    let a2 = u2.sample(&anchor, t_end).unwrap_or(f64::NAN);
    if !(a1 > 0.0 && a2 > 0.0) {
        return Err(Error::unresolved(
            Module::Harnack,
            format!("solutions are not positive at the anchor ({a1}, {a2})"),
        ));
    }
    let floor = sc.floor * a2;
    let two_s = 2.0 * sc.kernel.s;
    let nt = u1.time_len();
    let ns = u1.space_len();
    let coords: Vec<Vec<f64>> = (0..ns).map(|i| u1.coords(i)).collect();
    let mut rows = Vec::with_capacity(sc.radii.len());
    for &r in &sc.radii {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut cells, mut excluded) = (0, 0);
        for k in 0..nt {
            let t = u1.time(k);
            if t <= t_end - r.powf(two_s) {
                continue;
            }
            let (s1, s2) = (u1.slice(k), u2.slice(k));
            for (i, x) in coords.iter().enumerate() {
                let dx: Vec<f64> = x.iter().zip(&xb).map(|(p, q)| p - q).collect();
                if dot(&dx, &dx).sqrt() >= r || sc.in_vanishing_set(x, t) {
                    continue;
                }
                if s2[i] < floor {
                    excluded += 1;
                    continue;
                }
                let q = s1[i] / s2[i];
                lo = lo.min(q);
                hi = hi.max(q);
                cells += 1;
            }
        }
        if cells == 0 {
            return Err(Error::unresolved(Module::Harnack, format!("no resolved cells in the cylinder of radius {r}")));
        }
        rows.push(HarnackRow {
            r,
            osc: hi - lo,
            cells,
            excluded,
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].osc <= w[0].osc * (1.0 + sc.monotone_tol) + 1e-14);
    let (alpha, fit) = if rows.iter().all(|w| w.osc > 0.0) {
        let lx: Vec<f64> = rows.iter().map(|w| w.r.ln()).collect();
        let ly: Vec<f64> = rows.iter().map(|w| w.osc.ln()).collect();
        let f = linear_fit(&lx, &ly)?;
        (Some(f.slope), Some(f))
    } else {
        (None, None)
    };
    // comparability and positivity on Q₁ ∩ Ω
    let mut c12 = f64::INFINITY;
    let mut c21 = f64::INFINITY;
    let mut positivity = f64::INFINITY;
    let inner = 2.0 * sc.h;
    for k in 0..nt {
        let t = u1.time(k);
        if t <= t_end - 1.0 {
            continue;
        }
        let (s1, s2) = (u1.slice(k), u2.slice(k));
        for (i, x) in coords.iter().enumerate() {
            let dx: Vec<f64> = x.iter().zip(&xb).map(|(p, q)| p - q).collect();
            if dot(&dx, &dx).sqrt() >= 1.0 || sc.in_vanishing_set(x, t) {
                continue;
            }
            let (w1, w2) = (s1[i] / a1, s2[i] / a2);
            if w1 >= sc.floor && w2 >= sc.floor {
                c12 = c12.min(w1 / w2);
                c21 = c21.min(w2 / w1);
            }
            let deep = (0..d).all(|a| {
                let mut y = x.clone();
                y[a] -= inner;
                let mut z = x.clone();
                z[a] += inner;
                !sc.in_vanishing_set(&y, t) && !sc.in_vanishing_set(&z, t)
            });
            if deep {
                positivity = positivity.min(w1.min(w2));
            }
        }
    }
    if !c12.is_finite() {
        c12 = 0.0;
        c21 = 0.0;
    }
    Ok(HarnackReport {
        rows,
        alpha,
        fit,
        monotone,
        comparability: (c12, c21),
        positivity: if positivity.is_finite() { positivity } else { 0.0 },
        anchor_values: (a1, a2),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(omega: f64) -> HarnackScenario {
        let mut sc = HarnackScenario::one_dimensional(0.5, omega, 0.0).unwrap();
        sc.h = 1.0 / 32.0;
        sc.steps = 48;
        sc.radii = vec![0.5, 0.25, 0.125];
        sc
    }

    #[test]
    fn supercritical_rejected() {
        assert!(HarnackScenario::one_dimensional(0.4, 0.0, 0.0).is_err());
    }

    #[test]
    fn scaled_copy_has_constant_quotient() {
        let mut sc = quick(0.5);
        sc.data[1] = sc.data[0].scaled(0.5);
        let rep = run_harnack(&sc).unwrap();
        assert!(rep.rows.iter().all(|w| w.osc < 1e-10), "{:?}", rep.rows);
        assert!(rep.alpha.is_none() || rep.rows.iter().all(|w| w.osc < 1e-10));
    }

    #[test]
    fn vanishing_set_moves() {
        let sc = quick(0.5);
        assert!(sc.in_vanishing_set(&[0.1], 1.0));
        assert!(!sc.in_vanishing_set(&[0.1], 1.5));
    }
}

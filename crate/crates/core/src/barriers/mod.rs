//! Explicit sub- and supersolutions and a uniform harness that checks their
//! inequalities pointwise through the operator discretization.

mod cone;
mod heat;
mod regularized;
mod verify;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

pub use cone::{cone_samples, cone_supersolution, traveling_cone_samples, traveling_cone_subsolution, ConeProfile};
pub use heat::{heat_tail_supersolution, HeatTailOptions, HeatTailReport, HeatTailRow};
pub use regularized::{
    power_regularized_barriers, regularized_samples, search_regularized, MovingDomain, RegularizedPair,
    RegularizedSearch,
};
pub use verify::{search_descending, verify_inequality, ParameterSearch, VerifyLevel, VerifyOptions, VerifyReport};

use crate::error::{Error, Module, Result};
use crate::operator::kernel::dot;
use crate::operator::{Growth, SpaceTimeFn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierKind {
    ExpCusp,
    ConeSuper,
    TravelingConeSub,
    PowerRegularized,
    HeatTailSuper,
    /// A user-supplied function.
    Custom,
}

impl fmt::Display for BarrierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BarrierKind::ExpCusp => "exp-cusp",
            BarrierKind::ConeSuper => "cone-super",
            BarrierKind::TravelingConeSub => "traveling-cone-sub",
            BarrierKind::PowerRegularized => "power-regularized",
            BarrierKind::HeatTailSuper => "heat-tail-super",
            BarrierKind::Custom => "custom",
        })
    }
}

/// Claimed inequality for `Q = ℒB` (elliptic) or `Q = (∂_t - ℒ)B`
/// (parabolic). The margin is the worst violation: pass means margin ≤ 0,
/// or < 0 for the strict senses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "sense", content = "bound", rename_all = "kebab-case")]
pub enum Sense {
    /// `Q ≤ b`; margin `sup Q - b`.
    AtMost(f64),
    /// `Q ≤ -c < 0` for some `c`; margin `sup Q`, strict.
    Negative,
    /// `Q ≥ b`; margin `b - inf Q`.
    AtLeast(f64),
    /// `Q ≤ C` for some finite `C`; margin `sup Q`.
    BoundedAbove,
    /// `Q ≥ -C` for some finite `C`; margin `-inf Q`.
    BoundedBelow,
}

impl Sense {
    /// Whether the worst value is a supremum.
    pub fn upper(&self) -> bool {
        matches!(self, Sense::AtMost(_) | Sense::Negative | Sense::BoundedAbove)
    }

    pub fn margin(&self, worst: f64) -> f64 {
        match self {
            Sense::AtMost(b) => worst - b,
            Sense::Negative | Sense::BoundedAbove => worst,
            Sense::AtLeast(b) => b - worst,
            Sense::BoundedBelow => -worst,
        }
    }

    /// Pass test on a margin; the bounded senses only need a finite value.
    pub fn holds(&self, margin: f64) -> bool {
        match self {
            Sense::AtMost(_) | Sense::AtLeast(_) => margin <= 0.0,
            Sense::Negative => margin < 0.0,
            Sense::BoundedAbove | Sense::BoundedBelow => margin.is_finite(),
        }
    }
}

type Predicate = Arc<dyn Fn(&[f64], f64) -> bool + Send + Sync>;

/// One summand of a barrier with its own growth model, so that each
/// far-field tail is integrated against the right power.
#[derive(Clone)]
pub struct Term {
    pub f: SpaceTimeFn,
    pub growth: Growth,
}

/// An explicit barrier: a sum of terms over space-time, the region where
/// the inequality is claimed and the distance to the set where it is
/// singular.
#[derive(Clone)]
pub struct Barrier {
    pub kind: BarrierKind,
    pub params: Vec<(String, f64)>,
    pub dim: usize,
    pub parabolic: bool,
    pub sense: Sense,
    pub terms: Vec<Term>,
    dt: Option<SpaceTimeFn>,
    region: Predicate,
    singular: SpaceTimeFn,
}

impl fmt::Debug for Barrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Barrier")
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("dim", &self.dim)
            .field("parabolic", &self.parabolic)
            .field("sense", &self.sense)
            .finish()
    }
}

impl Barrier {
    /// A barrier from its parts. `singular` returns the distance to the set
    /// where the barrier is not smooth; `f64::INFINITY` if there is none.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        dim: usize,
        parabolic: bool,
        sense: Sense,
        growth: Growth,
        f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        region: impl Fn(&[f64], f64) -> bool + Send + Sync + 'static,
        singular: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Barrier {
            kind: BarrierKind::Custom,
            params: Vec::new(),
            dim,
            parabolic,
            sense,
            terms: vec![Term { f: Arc::new(f), growth }],
            dt: None,
            region: Arc::new(region),
            singular: Arc::new(singular),
        }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        self.terms.iter().map(|term| (term.f)(x, t)).sum()
    }

    /// `∂_t B` in closed form when the construction provides it.
    pub fn time_derivative(&self, x: &[f64], t: f64) -> Option<f64> {
        self.dt.as_ref().map(|d| d(x, t))
    }

    pub fn in_region(&self, x: &[f64], t: f64) -> bool {
        (self.region)(x, t)
    }

    pub fn singular_distance(&self, x: &[f64], t: f64) -> f64 {
        (self.singular)(x, t)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn with_sense(mut self, sense: Sense) -> Self {
        self.sense = sense;
        self
    }
}

pub(crate) fn unit(e: &[f64]) -> Result<Vec<f64>> {
    let n = dot(e, e).sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::invalid(Module::Barriers, "direction must be a nonzero vector"));
    }
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(Module::Barriers, format!("direction must be a unit vector (|e| = {n})")));
    }
    Ok(e.iter().map(|v| v / n).collect())
}

/// `exp(-|x·e + vt|^{1-θ})`. With `v = 0` and `parabolic = false` the
/// claimed sense is `ℒφ ≤ C`; the parabolic form claims `∂_tψ - ℒψ ≥ -C`.
pub fn exp_cusp_barrier(e: &[f64], theta: f64, v: f64, parabolic: bool) -> Result<Barrier> {
    if !(theta > 0.0 && theta <= 0.25) {
        return Err(Error::invalid(Module::Barriers, format!("θ = {theta} outside (0, 1/4]")));
    }
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::invalid(Module::Barriers, format!("speed must be nonnegative (got {v})")));
    }
    if v > 0.0 && !parabolic {
        return Err(Error::invalid(Module::Barriers, "a moving cusp needs the parabolic form"));
    }
    let e = unit(e)?;
    let p = 1.0 - theta;
    let (e1, e2, e3) = (e.clone(), e.clone(), e.clone());
    Ok(Barrier {
        kind: BarrierKind::ExpCusp,
        params: vec![("theta".into(), theta), ("v".into(), v)],
        dim: e.len(),
        parabolic,
        sense: if parabolic { Sense::BoundedBelow } else { Sense::BoundedAbove },
        terms: vec![Term {
            f: Arc::new(move |x, t| (-(dot(x, &e1) + v * t).abs().powf(p)).exp()),
            growth: Growth::bounded(1.0),
        }],
        dt: Some(Arc::new(move |x, t| {
            let z = dot(x, &e2) + v * t;
            if z == 0.0 {
                return 0.0;
            }
            -v * p * z.abs().powf(-theta) * z.signum() * (-z.abs().powf(p)).exp()
        })),
        region: Arc::new(|_, _| true),
        singular: Arc::new(move |x, t| (dot(x, &e3) + v * t).abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cusp_apex_and_monotonicity() {
        let b = exp_cusp_barrier(&[1.0], 0.2, 0.0, false).unwrap();
        assert_eq!(b.eval(&[0.0], 0.0), 1.0);
        let mut prev = 1.0;
        for k in 1..50 {
            let v = b.eval(&[k as f64 * 0.1], 0.0);
            assert!(v <= prev);
            prev = v;
        }
        assert!(exp_cusp_barrier(&[1.0], 0.3, 0.0, false).is_err());
    }

    #[test]
    fn static_parabolic_cusp_matches_elliptic() {
        let a = exp_cusp_barrier(&[0.6, 0.8], 0.1, 0.0, false).unwrap();
        let b = exp_cusp_barrier(&[0.6, 0.8], 0.1, 0.0, true).unwrap();
        for x in [[0.3, -0.2], [1.0, 2.0]] {
            assert_eq!(a.eval(&x, 0.0), b.eval(&x, 0.7));
        }
    }

    #[test]
    fn sense_margins() {
        assert_eq!(Sense::AtMost(0.0).margin(0.0), 0.0);
        assert!(Sense::AtMost(0.0).holds(0.0));
        assert!(!Sense::Negative.holds(0.0));
        assert_eq!(Sense::AtLeast(1.0).margin(3.0), -2.0);
    }
}

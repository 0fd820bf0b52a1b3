use rayon::prelude::*;
use serde::Serialize;

use super::{Barrier, BarrierKind, Sense};
use crate::error::{Error, Module, Result};
use crate::metrics::{convergence_order, OrderEstimate};
use crate::operator::{EvalOptions, KernelSpec, PointEvaluator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Physical radius of the lattice part of the operator.
    pub lattice_radius: f64,
    /// Samples must lie this many coarsest spacings away from singular sets.
    pub collar: f64,
    /// Allowed relative change of the worst value between the last two levels.
    pub stability: f64,
    pub eval: EvalOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            lattice_radius: 2.0,
            collar: 2.0,
            stability: 0.2,
            eval: EvalOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyLevel {
    pub h: f64,
    /// `sup Q` or `inf Q` over the samples, depending on the sense.
    pub worst: f64,
    pub margin: f64,
    pub worst_x: Vec<f64>,
    pub worst_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub kind: BarrierKind,
    pub params: Vec<(String, f64)>,
    pub sense: Sense,
    pub samples: usize,
    pub levels: Vec<VerifyLevel>,
    /// Order of the successive changes of the worst value; needs four levels.
    pub order: Option<OrderEstimate>,
    pub stable: bool,
    pub pass: bool,
}

impl VerifyReport {
    pub fn finest(&self) -> &VerifyLevel {
        &self.levels[self.levels.len() - 1]
    }
}

/// Pointwise check of `ℒB` (or `(∂_t - ℒ)B`) against the barrier's sense at
/// the given samples, on each lattice spacing. Time derivatives come from
/// the barrier when available, otherwise from centered differences with
/// step `h/4`.
pub fn verify_inequality(
    k: &KernelSpec,
    barrier: &Barrier,
    samples: &[(Vec<f64>, f64)],
    spacings: &[f64],
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    if k.dim != barrier.dim {
        return Err(Error::invalid(
            Module::Barriers,
            format!("kernel dimension {} differs from barrier dimension {}", k.dim, barrier.dim),
        ));
    }
    if samples.is_empty() || spacings.is_empty() {
        return Err(Error::invalid(Module::Barriers, "need at least one sample and one spacing"));
    }
    if spacings.iter().any(|h| !(*h > 0.0)) || spacings.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid(Module::Barriers, "spacings must be positive and decreasing"));
    }
    let collar = opts.collar * spacings[0];
    for (x, t) in samples {
        if x.len() != barrier.dim {
            return Err(Error::invalid(Module::Barriers, "sample dimension mismatch"));
        }
        if !barrier.in_region(x, *t) {
            return Err(Error::pre(
                Module::Barriers,
                format!("sample ({x:?}, {t}) lies outside the validity region"),
            ));
        }
        let d = barrier.singular_distance(x, *t);
        if d < collar {
            return Err(Error::pre(
                Module::Barriers,
                format!("sample ({x:?}, {t}) is {d:.3e} from a singular set, inside the {collar:.3e} collar"),
            ));
        }
    }
    let sense = barrier.sense;
    let mut levels = Vec::with_capacity(spacings.len());
    for h in spacings {
        let ev = PointEvaluator::new(k, *h, opts.lattice_radius.max(*h), opts.eval)?;
        let q: Vec<f64> = samples
            .par_iter()
            .map(|(x, t)| -> Result<f64> {
                let mut l = 0.0;
                for term in &barrier.terms {
                    let f = |y: &[f64]| (term.f)(y, *t);
                    l += ev.eval(&f, &term.growth, x)?.value;
                }
                Ok(if barrier.parabolic {
                    let dt = barrier.time_derivative(x, *t).unwrap_or_else(|| {
                        let tau = 0.25 * h;
                        (barrier.eval(x, t + tau) - barrier.eval(x, t - tau)) / (2.0 * tau)
                    });
                    dt - l
                } else {
                    l
                })
            })
            .collect::<Result<_>>()?;
        if let Some(i) = q.iter().position(|v| v.is_nan()) {
            return Err(Error::unresolved(
                Module::Barriers,
                format!("operator value is NaN at sample {:?}", samples[i]),
            ));
        }
        let mut best = 0;
        for i in 1..q.len() {
            let better = if sense.upper() { q[i] > q[best] } else { q[i] < q[best] };
            if better {
                best = i;
            }
        }
        levels.push(VerifyLevel {
            h: *h,
            worst: q[best],
            margin: sense.margin(q[best]),
            worst_x: samples[best].0.clone(),
            worst_t: samples[best].1,
        });
    }
    let l = levels.len();
    let stable = l < 2 || {
        let (a, b) = (levels[l - 2].worst, levels[l - 1].worst);
        (a - b).abs() <= opts.stability * a.abs() + 1e-12 || (a == b)
    };
    let order = if l >= 4 {
        let diffs: Vec<f64> = levels.windows(2).map(|w| (w[1].worst - w[0].worst).abs()).collect();
        if diffs.iter().all(|d| *d > 0.0) {
            convergence_order(&diffs, &spacings[..l - 1]).ok()
        } else {
            None
        }
    } else {
        None
    };
    let pass = sense.holds(levels[l - 1].margin) && stable;
    Ok(VerifyReport {
        kind: barrier.kind,
        params: barrier.params.clone(),
        sense,
        samples: samples.len(),
        levels,
        order,
        stable,
        pass,
    })
}

/// Outcome of trying parameter values in a fixed order until one passes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSearch {
    pub parameter: String,
    /// Value, pass flag and finest margin of every value tried.
    pub tried: Vec<(f64, bool, f64)>,
    pub found: Option<f64>,
    pub report: Option<VerifyReport>,
}

/// Tries `candidates` in order and stops at the first passing verification.
pub fn search_descending(
    parameter: &str,
    candidates: &[f64],
    mut check: impl FnMut(f64) -> Result<VerifyReport>,
) -> Result<ParameterSearch> {
    let mut out = ParameterSearch {
        parameter: parameter.to_string(),
        tried: Vec::new(),
        found: None,
        report: None,
    };
    for c in candidates {
        let rep = check(*c)?;
        out.tried.push((*c, rep.pass, rep.finest().margin));
        if rep.pass {
            out.found = Some(*c);
            out.report = Some(rep);
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Growth;

    #[test]
    fn constant_has_zero_margin() {
        let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
        let b = Barrier::custom(1, false, Sense::AtMost(0.0), Growth::power(0.0, 1.0, Some(std::sync::Arc::new(|_: &[f64]| 1.0))), |_, _| 1.0, |_, _| true, |_, _| f64::INFINITY);
        let samples = vec![(vec![0.0], 0.0), (vec![0.5], 0.0)];
        let rep = verify_inequality(&k, &b, &samples, &[0.1, 0.05], &VerifyOptions::default()).unwrap();
        // a zero-power amplitude makes the tail exact
        assert!(rep.finest().margin.abs() < 1e-13, "{}", rep.finest().margin);
    }

    #[test]
    fn samples_in_collar_rejected() {
        let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
        let b = super::super::exp_cusp_barrier(&[1.0], 0.2, 0.0, false).unwrap();
        let err = verify_inequality(&k, &b, &[(vec![0.01], 0.0)], &[0.1], &VerifyOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition { .. }));
    }
}

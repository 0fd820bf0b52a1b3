use serde::Serialize;

use super::fit::{linear_fit, LinearFit};
use crate::error::{Error, Module, Result};
use crate::operator::GridFunction;

/// `(√5 - 1)/2`.
pub const GOLDEN_THRESHOLD: f64 = 0.618_033_988_749_894_9;

/// Expected Hölder exponent of `∂_t u` in time: `s` below the golden
/// threshold, `1/s - 1 - ε` above it.
pub fn predicted_time_exponent(s: f64, eps: f64) -> f64 {
    if s < GOLDEN_THRESHOLD {
        s
    } else {
        1.0 / s - 1.0 - eps
    }
}

/// Minimum number of time steps inside the window.
pub const MIN_WINDOW_STEPS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeRegularityReport {
    pub measured: f64,
    pub predicted: f64,
    pub fit: LinearFit,
    pub lags: Vec<f64>,
    /// `max_x max_t |∂_t u(x, t + τ) - ∂_t u(x, t)|` for each lag `τ`.
    pub modulus: Vec<f64>,
    pub window: (f64, f64),
}

/// Log-log slope of the time modulus of continuity of `∂_t u` over dyadic
/// lags, with `∂_t u` taken as forward differences inside `[t1, t2]`.
/// Lags start at `4Δt`: a forward difference is a cell average of `∂_t u`
/// and flattens the modulus over the first few steps.
pub fn fit_time_regularity(u: &GridFunction, eps: f64, t1: f64, t2: f64) -> Result<TimeRegularityReport> {
    let dt = match (u.steps, u.dt) {
        (Some(_), Some(dt)) => dt,
        _ => return Err(Error::pre(Module::Metrics, "time regularity needs a space-time grid")),
    };
    if !(t2 > t1 && t1 > u.t0) {
        return Err(Error::invalid(
            Module::Metrics,
            format!("window [{t1}, {t2}] must be increasing and exclude the initial time {}", u.t0),
        ));
    }
    let nt = u.time_len();
    let k1 = ((t1 - u.t0) / dt - 1e-9).ceil().max(0.0) as usize;
    let k2 = (((t2 - u.t0) / dt + 1e-9).floor() as usize).min(nt - 1);
    if k2 < k1 + MIN_WINDOW_STEPS {
        return Err(Error::pre(
            Module::Metrics,
            format!("{} time steps in the window, need {MIN_WINDOW_STEPS}", k2.saturating_sub(k1)),
        ));
    }
    let n = u.space_len();
    // ∂_t u on levels k1..k2-1
    let levels = k2 - k1;
    let ut: Vec<Vec<f64>> = (k1..k2)
        .map(|k| {
            let (a, b) = (u.slice(k), u.slice(k + 1));
            a.iter().zip(b).map(|(p, q)| (q - p) / dt).collect()
        })
        .collect();
    let mut lags = Vec::new();
    let mut modulus = Vec::new();
    let mut lag = 4usize;
    while 4 * lag <= levels {
        let mut m: f64 = 0.0;
        for k in 0..levels - lag {
            for i in 0..n {
                m = m.max((ut[k + lag][i] - ut[k][i]).abs());
            }
        }
        lags.push(lag as f64 * dt);
        modulus.push(m);
        lag *= 2;
    }
    if modulus.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::pre(Module::Metrics, "∂_t u is constant in time on the window"));
    }
    let lx: Vec<f64> = lags.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = modulus.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(TimeRegularityReport {
        measured: fit.slope,
        predicted: predicted_time_exponent(u.s, eps),
        fit,
        lags,
        modulus,
        window: (u.time(k1), u.time(k2)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_switch() {
        assert_eq!(predicted_time_exponent(0.55, 0.01), 0.55);
        assert!((predicted_time_exponent(0.75, 0.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((GOLDEN_THRESHOLD - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-16);
    }

    #[test]
    fn pure_time_power() {
        // ∂_t u = (t - 0.3)_+^{0.4}
        let alpha = 0.4;
        let u = GridFunction::from_space_time_fn(&[3], 0.1, &[0.0], 1025, 1.0 / 1024.0, 0.0, 0.5, |_, t| {
            (t - 0.3).max(0.0).powf(1.0 + alpha) / (1.0 + alpha)
        });
        let r = fit_time_regularity(&u, 0.0, 0.1, 1.0).unwrap();
        assert!((r.measured - alpha).abs() < 0.05, "{}", r.measured);
    }

    #[test]
    fn short_window_rejected() {
        let u = GridFunction::from_space_time_fn(&[3], 0.1, &[0.0], 20, 0.05, 0.0, 0.5, |_, t| t);
        assert!(fit_time_regularity(&u, 0.0, 0.1, 0.9).is_err());
    }
}

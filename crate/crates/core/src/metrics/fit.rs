use serde::Serialize;

use crate::error::{Error, Module, Result};

/// Ordinary least-squares line `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Root-mean-square of the residuals.
    pub rms: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid(Module::Metrics, "a line fit needs at least two paired values"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid(Module::Metrics, "non-finite value in fit data"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(Module::Metrics, "abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - slope * a - intercept;
            r * r
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        rms: (sse / n).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub order: f64,
    pub fit: LinearFit,
    /// False when the values do not decrease monotonically with the spacing.
    pub monotone: bool,
}

/// Slope of `log value` against `log spacing`.
pub fn convergence_order(values: &[f64], spacings: &[f64]) -> Result<OrderEstimate> {
    if values.len() < 3 || values.len() != spacings.len() {
        return Err(Error::invalid(
            Module::Metrics,
            "a convergence order needs at least three levels with matching spacings",
        ));
    }
    if values.iter().chain(spacings).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid(Module::Metrics, "levels must have positive finite values and spacings"));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|a, b| spacings[*b].total_cmp(&spacings[*a]));
    let monotone = idx.windows(2).all(|w| values[w[1]] <= values[w[0]]);
    let lx: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(OrderEstimate {
        order: fit.slope,
        fit,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_powers() {
        let h = [0.1, 0.05, 0.025, 0.0125];
        let v: Vec<f64> = h.iter().map(|x| x * x).collect();
        let o = convergence_order(&v, &h).unwrap();
        assert!((o.order - 2.0).abs() < 1e-12 && o.monotone);
        let v: Vec<f64> = h.iter().map(|x| 3.0 * x.sqrt()).collect();
        assert!((convergence_order(&v, &h).unwrap().order - 0.5).abs() < 1e-12);
    }

    #[test]
    fn flags_non_monotone() {
        let o = convergence_order(&[1.0, 2.0, 0.5], &[0.1, 0.05, 0.025]).unwrap();
        assert!(!o.monotone);
        assert!(convergence_order(&[1.0, 2.0], &[0.1, 0.05]).is_err());
    }
}

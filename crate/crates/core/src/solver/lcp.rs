use serde::Serialize;

use crate::error::{Error, Module, Result};

/// A square matrix accessed row by row.
pub trait RowOperator: Sync {
    fn len(&self) -> usize;
    fn diag(&self, i: usize) -> f64;
    /// `(M u)_i`.
    fn row_dot(&self, i: usize, u: &[f64]) -> f64;
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub a: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(n: usize, a: Vec<f64>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::invalid(Module::Solver, "dense matrix size mismatch"));
        }
        Ok(DenseMatrix { n, a })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }
}

impl RowOperator for DenseMatrix {
    fn len(&self) -> usize {
        self.n
    }

    fn diag(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    fn row_dot(&self, i: usize, u: &[f64]) -> f64 {
        self.a[i * self.n..(i + 1) * self.n].iter().zip(u).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LcpOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation factor in `(0, 2)`.
    pub omega: f64,
    /// Residuals are divided by this before comparing with `tol`.
    pub scale: f64,
    /// Sweeps over which the best residual must drop by at least 0.1%.
    pub stagnation_window: usize,
}

impl Default for LcpOptions {
    fn default() -> Self {
        LcpOptions {
            tol: 1e-10,
            max_iter: 100_000,
            omega: 1.0,
            scale: 1.0,
            stagnation_window: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LcpReport {
    /// Forward plus backward sweeps count as two.
    pub iterations: usize,
    pub residual: f64,
    pub active: usize,
}

/// `max_i |min((Mu - f)_i, M_ii (u_i - φ_i))|` over free nodes, divided by `scale`.
pub fn complementarity_residual(
    op: &dyn RowOperator,
    u: &[f64],
    lower: &[f64],
    rhs: &[f64],
    fixed: Option<&[bool]>,
    scale: f64,
) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..op.len() {
        if fixed.is_some_and(|m| m[i]) {
            continue;
        }
        let g = op.row_dot(i, u) - rhs[i];
        let gap = op.diag(i) * (u[i] - lower[i]);
        r = r.max(g.min(gap).abs());
    }
    r / scale
}

/// Projected SOR for `u ≥ φ`, `Mu - f ≥ 0`, `(u - φ)·(Mu - f) = 0`.
///
/// Sweeps alternate forward and backward. Nodes flagged in `fixed` keep
/// their value in `u`; `φ = -∞` gives the unconstrained system.
pub fn solve_lcp_masked(
    op: &dyn RowOperator,
    lower: &[f64],
    rhs: &[f64],
    u: &mut [f64],
    fixed: Option<&[bool]>,
    opts: &LcpOptions,
) -> Result<LcpReport> {
    let n = op.len();
    if lower.len() != n || rhs.len() != n || u.len() != n || fixed.is_some_and(|m| m.len() != n) {
        return Err(Error::invalid(Module::Solver, "LCP vectors have inconsistent lengths"));
    }
    if !(opts.omega > 0.0 && opts.omega < 2.0) {
        return Err(Error::invalid(Module::Solver, format!("relaxation factor {} outside (0, 2)", opts.omega)));
    }
    if !(opts.tol > 0.0 && opts.scale > 0.0) {
        return Err(Error::invalid(Module::Solver, "tolerance and scale must be positive"));
    }
    let diag: Vec<f64> = (0..n).map(|i| op.diag(i)).collect();
    if let Some(i) = (0..n).find(|i| !fixed.is_some_and(|m| m[*i]) && !(diag[*i] > 0.0)) {
        return Err(Error::pre(Module::Solver, format!("nonpositive diagonal {} at row {i}", diag[i])));
    }
    for i in 0..n {
        if !fixed.is_some_and(|m| m[i]) {
            u[i] = u[i].max(lower[i]);
        }
    }
    let mut history: Vec<f64> = Vec::new();
    let mut start: Option<usize> = None;
    let mut sweeps = 0;
    let relax = |u: &mut [f64], i: usize| {
        if fixed.is_some_and(|m| m[i]) {
            return;
        }
        let g = op.row_dot(i, u) - rhs[i];
        u[i] = (u[i] - opts.omega * g / diag[i]).max(lower[i]);
    };
    loop {
        let res = complementarity_residual(op, u, lower, rhs, fixed, opts.scale);
        if !res.is_finite() {
            return Err(Error::NoConvergence {
                iterations: sweeps,
                residual: res,
                tol: opts.tol,
            });
        }
        if res <= opts.tol {
            let active = (0..n)
                .filter(|i| !fixed.is_some_and(|m| m[*i]) && u[*i] <= lower[*i])
                .count();
            return Ok(LcpReport {
                iterations: sweeps,
                residual: res,
                active,
            });
        }
        if sweeps >= opts.max_iter {
            return Err(Error::NoConvergence {
                iterations: sweeps,
                residual: res,
                tol: opts.tol,
            });
        }
        let w = opts.stagnation_window;
        // over-relaxed sweeps first raise the residual; the window starts
        // once it falls below its initial value, or after ten windows
        if start.is_none() && (history.first().is_some_and(|r0| res < *r0) || history.len() >= 10 * w) {
            start = Some(history.len());
        }
        if w > 0 && start.is_some_and(|k| history.len() >= k + w) {
            let old = history[history.len() - w];
            if res.min(history[history.len() - 1]) > (1.0 - 1e-3) * old {
                return Err(Error::Stagnation {
                    iterations: sweeps,
                    residual: res,
                });
            }
        }
        // best-so-far, since over-relaxation is not monotone
        history.push(history.last().map_or(res, |b: &f64| b.min(res)));
        for i in 0..n {
            relax(u, i);
        }
        for i in (0..n).rev() {
            relax(u, i);
        }
        sweeps += 2;
    }
}

/// [`solve_lcp_masked`] without fixed nodes, started from `max(φ, 0)` clipped
/// to finite values.
pub fn solve_lcp(op: &dyn RowOperator, obstacle: &[f64], rhs: &[f64], opts: &LcpOptions) -> Result<(Vec<f64>, LcpReport)> {
    let mut u: Vec<f64> = obstacle.iter().map(|p| if p.is_finite() { *p } else { 0.0 }).collect();
    let rep = solve_lcp_masked(op, obstacle, rhs, &mut u, None, opts)?;
    Ok((u, rep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_node_closed_form() {
        let m = DenseMatrix::new(1, vec![2.0]).unwrap();
        let (u, _) = solve_lcp(&m, &[1.0], &[4.0], &LcpOptions::default()).unwrap();
        assert!((u[0] - 2.0).abs() < 1e-14);
        let (u, _) = solve_lcp(&m, &[3.0], &[4.0], &LcpOptions::default()).unwrap();
        assert_eq!(u[0], 3.0);
    }

    #[test]
    fn unconstrained_system() {
        let m = DenseMatrix::new(2, vec![4.0, -1.0, -1.0, 3.0]).unwrap();
        let (u, rep) = solve_lcp(&m, &[-1e300, -1e300], &[1.0, 2.0], &LcpOptions::default()).unwrap();
        assert!((4.0 * u[0] - u[1] - 1.0).abs() < 1e-9);
        assert!((-u[0] + 3.0 * u[1] - 2.0).abs() < 1e-9);
        assert_eq!(rep.active, 0);
    }

    #[test]
    fn stagnation_is_reported() {
        // singular, inconsistent system: the residual cannot decrease
        let m = DenseMatrix::new(2, vec![1.0, -1.0, -1.0, 1.0]).unwrap();
        let err = solve_lcp(&m, &[f64::NEG_INFINITY; 2], &[1.0, 1.0], &LcpOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Stagnation { .. }), "{err}");
    }
}

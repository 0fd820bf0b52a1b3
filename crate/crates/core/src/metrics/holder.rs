use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};
use crate::operator::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HolderMode {
    /// Pairs at equal times only.
    Spatial,
    /// `|x - y|^β + |t - τ|^{β/2s}` in the denominator.
    #[default]
    Parabolic,
}

/// Axis-aligned sub-box of a grid, optionally with a time window. Bounds
/// are inclusive; `None` means the whole grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub t: Option<(f64, f64)>,
}

impl Region {
    pub fn all() -> Self {
        Region::default()
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Region {
            lo: Some(lo),
            hi: Some(hi),
            t: None,
        }
    }

    pub fn with_times(mut self, t1: f64, t2: f64) -> Self {
        self.t = Some((t1, t2));
        self
    }

    /// Flat space-time indices of the grid nodes inside the region.
    pub fn nodes(&self, w: &GridFunction) -> Result<Vec<usize>> {
        let d = w.dim();
        for b in [&self.lo, &self.hi].into_iter().flatten() {
            if b.len() != d {
                return Err(Error::invalid(Module::Metrics, "region bounds have the wrong dimension"));
            }
        }
        let n = w.space_len();
        let tol = 1e-9 * w.h;
        let mut x = vec![0.0; d];
        let spatial: Vec<usize> = (0..n)
            .filter(|i| {
                w.coords_into(*i, &mut x);
                (0..d).all(|a| {
                    self.lo.as_ref().is_none_or(|lo| x[a] >= lo[a] - tol)
                        && self.hi.as_ref().is_none_or(|hi| x[a] <= hi[a] + tol)
                })
            })
            .collect();
        let dt = w.dt.unwrap_or(1.0);
        let mut out = Vec::new();
        for k in 0..w.time_len() {
            let t = w.time(k);
            if let Some((t1, t2)) = self.t {
                if w.is_space_time() && (t < t1 - 1e-9 * dt || t > t2 + 1e-9 * dt) {
                    continue;
                }
            }
            out.extend(spatial.iter().map(|i| k * n + i));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub beta: f64,
    pub mode: HolderMode,
    pub value: f64,
    /// Flat indices of the maximizing pair.
    pub pair: Option<(usize, usize)>,
    pub nodes: usize,
    /// All pairs were examined.
    pub exact: bool,
    pub pairs_examined: u64,
    pub seed: u64,
}

/// Node count up to which every pair is examined.
pub const EXACT_NODE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchOptions {
    /// Random pairs drawn when the search is not exhaustive.
    pub pair_budget: u64,
    pub seed: u64,
    /// Skip the exhaustive path even for small regions.
    pub force_sampled: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            pair_budget: 1_000_000,
            seed: 0,
            force_sampled: false,
        }
    }
}

/// A vector field on the nodes of a grid, for the pair search.
struct Field<'a> {
    grid: &'a GridFunction,
    comps: Vec<&'a [f64]>,
    beta: f64,
    mode: HolderMode,
    /// Spatial coordinates of every spatial node, row-major.
    xs: Vec<f64>,
}

impl<'a> Field<'a> {
    fn new(grid: &'a GridFunction, comps: Vec<&'a [f64]>, beta: f64, mode: HolderMode) -> Self {
        let d = grid.dim();
        let mut xs = vec![0.0; grid.space_len() * d];
        for (i, x) in xs.chunks_mut(d).enumerate() {
            grid.coords_into(i, x);
        }
        Field {
            grid,
            comps,
            beta,
            mode,
            xs,
        }
    }
}

impl Field<'_> {
    fn quotient(&self, i: usize, j: usize) -> f64 {
        let g = self.grid;
        let n = g.space_len();
        let (ki, kj) = (i / n, j / n);
        if self.mode == HolderMode::Spatial && ki != kj {
            return 0.0;
        }
        let d = g.dim();
        let (xi, xj) = (&self.xs[(i % n) * d..(i % n + 1) * d], &self.xs[(j % n) * d..(j % n + 1) * d]);
        let d2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
        let dt = (g.time(ki) - g.time(kj)).abs();
        let denom = d2.sqrt().powf(self.beta) + dt.powf(self.beta / (2.0 * g.s));
        if denom == 0.0 {
            return 0.0;
        }
        let num: f64 = self.comps.iter().map(|c| (c[i] - c[j]) * (c[i] - c[j])).sum::<f64>().sqrt();
        num / denom
    }
}

fn better(a: (f64, usize, usize), b: (f64, usize, usize)) -> (f64, usize, usize) {
    // deterministic under any reduction order
    if a.0 > b.0 || (a.0 == b.0 && (a.1, a.2) < (b.1, b.2)) {
        a
    } else {
        b
    }
}

fn search(f: &Field, nodes: &[usize], opts: &SearchOptions) -> (f64, Option<(usize, usize)>, bool, u64) {
    let m = nodes.len();
    if m < 2 {
        return (0.0, None, true, 0);
    }
    let none = (0.0, usize::MAX, usize::MAX);
    if m <= EXACT_NODE_LIMIT && !opts.force_sampled {
        let best = (0..m)
            .into_par_iter()
            .map(|a| {
                let mut b = none;
                for c in a + 1..m {
                    b = better(b, (f.quotient(nodes[a], nodes[c]), nodes[a], nodes[c]));
                }
                b
            })
            .reduce(|| none, better);
        let pair = (best.1 != usize::MAX).then_some((best.1, best.2));
        return (best.0, pair, true, (m * (m - 1) / 2) as u64);
    }
    let g = f.grid;
    let n = g.space_len();
    let pos: std::collections::HashMap<usize, usize> = nodes.iter().enumerate().map(|(a, i)| (*i, a)).collect();
    // neighbours of a node in the region along each space-time axis
    let step = |i: usize, axis: usize, dir: i64| -> Option<usize> {
        let k = (i / n) as i64;
        let mut idx = g.multi_index(i % n);
        let j = if axis == g.dim() {
            let k2 = k + dir;
            if k2 < 0 || k2 >= g.time_len() as i64 {
                return None;
            }
            k2 as usize * n + i % n
        } else {
            let v = idx[axis] as i64 + dir;
            if v < 0 || v >= g.dims[axis] as i64 {
                return None;
            }
            idx[axis] = v as usize;
            k as usize * n + g.flat_index(&idx)
        };
        pos.contains_key(&j).then_some(j)
    };
    let axes = g.dim() + usize::from(g.is_space_time());
    // every pair of adjacent nodes
    let mut best = (0..m)
        .into_par_iter()
        .map(|a| {
            let mut b = none;
            for axis in 0..axes {
                if let Some(j) = step(nodes[a], axis, 1) {
                    b = better(b, (f.quotient(nodes[a], j), nodes[a].min(j), nodes[a].max(j)));
                }
            }
            b
        })
        .reduce(|| none, better);
    let mut examined = 0u64;
    // random pairs in fixed chunks, each chunk seeded from the master seed
    let chunk = 4096u64;
    let chunks = opts.pair_budget.div_ceil(chunk);
    let mut candidates: Vec<(f64, usize, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(c);
            let count = chunk.min(opts.pair_budget - c * chunk);
            let mut top = none;
            for _ in 0..count {
                let a = nodes[rng.gen_range(0..m)];
                let b = nodes[rng.gen_range(0..m)];
                if a != b {
                    top = better(top, (f.quotient(a, b), a.min(b), a.max(b)));
                }
            }
            top
        })
        .collect();
    examined += opts.pair_budget;
    candidates.push(best);
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    candidates.truncate(16);
    // coordinate ascent from the best candidates, moving one endpoint a node at a time
    for cand in candidates {
        if cand.1 == usize::MAX {
            continue;
        }
        let mut cur = cand;
        loop {
            let mut next = cur;
            for end in 0..2 {
                for axis in 0..axes {
                    for dir in [-1i64, 1] {
                        let moved = if end == 0 { step(cur.1, axis, dir) } else { step(cur.2, axis, dir) };
                        if let Some(j) = moved {
                            let (a, b) = if end == 0 { (j, cur.2) } else { (cur.1, j) };
                            if a != b {
                                examined += 1;
                                next = better(next, (f.quotient(a, b), a.min(b), a.max(b)));
                            }
                        }
                    }
                }
            }
            if next.0 > cur.0 {
                cur = next;
            } else {
                break;
            }
        }
        best = better(best, cur);
    }
    let pair = (best.1 != usize::MAX).then_some((best.1, best.2));
    (best.0, pair, false, examined)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(Module::Metrics, format!("Hölder exponent {beta} outside (0, 1)")));
    }
    Ok(())
}

/// `sup |w(x,t) - w(y,τ)| / (|x - y|^β + |t - τ|^{β/2s})` over node pairs of
/// the region. Exhaustive up to [`EXACT_NODE_LIMIT`] nodes; above that,
/// adjacent pairs plus seeded random pairs refined by local ascent, which
/// can only under-estimate.
pub fn parabolic_holder_seminorm(
    w: &GridFunction,
    beta: f64,
    mode: HolderMode,
    region: &Region,
    opts: &SearchOptions,
) -> Result<HolderReport> {
    check_beta(beta)?;
    let nodes = region.nodes(w)?;
    if nodes.is_empty() {
        return Err(Error::pre(Module::Metrics, "region contains no grid nodes"));
    }
    let field = Field::new(w, vec![&w.values], beta, mode);
    let (value, pair, exact, pairs_examined) = search(&field, &nodes, opts);
    Ok(HolderReport {
        beta,
        mode,
        value,
        pair,
        nodes: nodes.len(),
        exact,
        pairs_examined,
        seed: opts.seed,
    })
}

/// Centered-difference gradient of every time level, one-sided at box faces.
pub fn gradient(u: &GridFunction) -> Vec<Vec<f64>> {
    let d = u.dim();
    let n = u.space_len();
    let mut stride = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        stride[a] = stride[a + 1] * u.dims[a + 1];
    }
    (0..d)
        .map(|a| {
            (0..u.values.len())
                .map(|f| {
                    let i = f % n;
                    let j = u.multi_index(i)[a];
                    let (lo, hi) = (if j > 0 { f - stride[a] } else { f }, if j + 1 < u.dims[a] { f + stride[a] } else { f });
                    let span = (hi - lo) / stride[a];
                    if span == 0 {
                        0.0
                    } else {
                        (u.values[hi] - u.values[lo]) / (span as f64 * u.h)
                    }
                })
                .collect()
        })
        .collect()
}

/// Spatial `C^β` seminorm of `∇u` on the region, at each time level.
pub fn global_gradient_holder(u: &GridFunction, beta: f64, region: &Region, opts: &SearchOptions) -> Result<HolderReport> {
    check_beta(beta)?;
    let nodes = region.nodes(u)?;
    if nodes.is_empty() {
        return Err(Error::pre(Module::Metrics, "region contains no grid nodes"));
    }
    let grad = gradient(u);
    let field = Field::new(u, grad.iter().map(|g| g.as_slice()).collect(), beta, HolderMode::Spatial);
    let (value, pair, exact, pairs_examined) = search(&field, &nodes, opts);
    Ok(HolderReport {
        beta,
        mode: HolderMode::Spatial,
        value,
        pair,
        nodes: nodes.len(),
        exact,
        pairs_examined,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_zero() {
        let w = GridFunction::from_fn(&[9, 9], 0.1, &[0.0, 0.0], 0.5, |_| 3.0);
        let r = parabolic_holder_seminorm(&w, 0.5, HolderMode::Parabolic, &Region::all(), &SearchOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn single_pair() {
        let d = 0.3;
        let w = GridFunction::from_fn(&[2], d, &[0.0], 0.5, |x| x[0]);
        let r = parabolic_holder_seminorm(&w, 0.4, HolderMode::Spatial, &Region::all(), &SearchOptions::default()).unwrap();
        assert!((r.value - d.powf(0.6)).abs() < 1e-15);
        assert_eq!(r.pair, Some((0, 1)));
    }

    #[test]
    fn gradient_of_quadratic_is_exact_inside() {
        let u = GridFunction::from_fn(&[11], 0.1, &[0.0], 0.5, |x| x[0] * x[0]);
        let g = gradient(&u);
        assert!((g[0][5] - 1.0).abs() < 1e-12);
    }
}

//! Free-boundary extraction, growth exponents, blow-ups and classification.

mod blowup;
mod growth;
mod normal;

use serde::Serialize;

pub use blowup::{blow_up_rescale, fit_1d_profile, lip_distance, NormMode, ProfileFit};
pub use growth::{
    analyze_point, classify_point, fit_growth_exponent, radii_ladder, Classification, ClassifyThresholds,
    FreeBoundaryPoint, GrowthFit,
};
pub use normal::{estimate_normal_speed, symmetric_eigen, NormalEstimate};

use crate::error::{Error, Module, Result};
use crate::operator::GridFunction;

/// A point of the discrete free boundary in space-time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub x: Vec<f64>,
    pub t: f64,
}

/// `u - φ`, with a spatial obstacle broadcast over the time levels of `u`.
pub fn gap(u: &GridFunction, phi: &GridFunction) -> Result<GridFunction> {
    if u.dims != phi.dims || (u.h - phi.h).abs() > 1e-15 * u.h || u.origin != phi.origin {
        return Err(Error::invalid(Module::FreeBoundary, "solution and obstacle grids differ"));
    }
    let n = u.space_len();
    let mut w = u.clone();
    for k in 0..u.time_len() {
        let p = if phi.is_space_time() { phi.slice(k) } else { phi.slice(0) };
        for (wi, pi) in w.values[k * n..(k + 1) * n].iter_mut().zip(p) {
            *wi -= pi;
        }
    }
    Ok(w)
}

/// Nodes where `u - φ ≤ gap_tol·(1 + |φ|)`.
pub fn contact_set(u: &GridFunction, phi: &GridFunction, gap_tol: f64) -> Result<Vec<bool>> {
    let w = gap(u, phi)?;
    let n = u.space_len();
    Ok(w.values
        .iter()
        .enumerate()
        .map(|(i, wi)| {
            let p = if phi.is_space_time() { phi.values[i] } else { phi.values[i % n] };
            *wi <= gap_tol * (1.0 + p.abs())
        })
        .collect())
}

/// Sub-grid boundary locations on every spatial grid edge joining a contact
/// node to a non-contact node.
///
/// Along the edge, `w^{1/p}` is extrapolated linearly from the first two
/// positive nodes, which is exact for `w = c·d^p`; `p = 1` is plain linear
/// interpolation of `w`.
pub fn extract_boundary(mask: &[bool], w: &GridFunction, p: f64) -> Result<Vec<BoundaryPoint>> {
    if mask.len() != w.values.len() {
        return Err(Error::invalid(Module::FreeBoundary, "mask and grid sizes differ"));
    }
    let count = mask.iter().filter(|m| **m).count();
    if count == 0 || count == mask.len() {
        return Err(Error::pre(Module::FreeBoundary, "contact mask is empty or full"));
    }
    if !(p > 0.0) {
        return Err(Error::invalid(Module::FreeBoundary, "interpolation power must be positive"));
    }
    let n = w.space_len();
    let d = w.dim();
    let mut stride = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        stride[a] = stride[a + 1] * w.dims[a + 1];
    }
    let mut out = Vec::new();
    for k in 0..w.time_len() {
        let base = k * n;
        for i in 0..n {
            if !mask[base + i] {
                continue;
            }
            let idx = w.multi_index(i);
            for a in 0..d {
                for dir in [-1i64, 1] {
                    let j1 = idx[a] as i64 + dir;
                    if j1 < 0 || j1 >= w.dims[a] as i64 {
                        continue;
                    }
                    let i1 = (i as i64 + dir * stride[a] as i64) as usize;
                    if mask[base + i1] {
                        continue;
                    }
                    let q1 = w.values[base + i1].max(0.0).powf(1.0 / p);
                    let j2 = j1 + dir;
                    let frac = if j2 >= 0 && j2 < w.dims[a] as i64 {
                        let i2 = (i1 as i64 + dir * stride[a] as i64) as usize;
                        let q2 = w.values[base + i2].max(0.0).powf(1.0 / p);
                        if q2 > q1 && !mask[base + i2] {
                            // distance from node i1 back toward i, in cells
                            (q1 / (q2 - q1)).clamp(0.0, 1.0)
                        } else {
                            0.5
                        }
                    } else {
                        0.5
                    };
                    let mut x = w.coords(i1);
                    x[a] -= dir as f64 * frac * w.h;
                    out.push(BoundaryPoint { x, t: w.time(k) });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_profile_boundary_is_recovered() {
        let a = 0.3137;
        let w = GridFunction::from_fn(&[101], 0.02, &[-1.0], 0.5, |x| (x[0] - a).max(0.0).powf(1.5));
        let mask: Vec<bool> = w.values.iter().map(|v| *v <= 0.0).collect();
        let pts = extract_boundary(&mask, &w, 1.5).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].x[0] - a).abs() < 1e-10);
    }

    #[test]
    fn empty_and_full_masks_rejected() {
        let w = GridFunction::zeros(&[5], 0.1, &[0.0], 0.5);
        assert!(extract_boundary(&[true; 5], &w, 1.0).is_err());
        assert!(extract_boundary(&[false; 5], &w, 1.0).is_err());
    }
}

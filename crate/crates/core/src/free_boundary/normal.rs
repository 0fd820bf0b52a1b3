use serde::Serialize;

use super::BoundaryPoint;
use crate::error::{Error, Module, Result};
use crate::operator::GridFunction;

/// Eigenvalues (ascending) and unit eigenvectors of a small symmetric matrix
/// given row-major, by cyclic Jacobi rotations.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let total: f64 = m.iter().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| m[a * n + a].total_cmp(&m[b * n + b]));
    let vals = order.iter().map(|i| m[i * n + i]).collect();
    let vecs = order.iter().map(|j| (0..n).map(|k| v[k * n + j]).collect()).collect();
    (vals, vecs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalEstimate {
    /// Spatial part of the unit space-time normal, pointing into `{u > φ}`.
    pub nu_x: Vec<f64>,
    pub nu_t: f64,
    /// `ν_t / |ν_x|`; infinite when the boundary is horizontal in time.
    pub speed: f64,
    pub points_used: usize,
}

impl NormalEstimate {
    /// `ν_x / |ν_x|`.
    pub fn direction(&self) -> Vec<f64> {
        let n = self.nu_x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.nu_x.iter().map(|v| v / n).collect()
    }
}

/// Total-least-squares hyperplane through the boundary points within
/// `radius` of `center` (Euclidean in space-time), oriented by the sign of
/// `w = u - φ` on either side.
pub fn estimate_normal_speed(
    points: &[BoundaryPoint],
    center: &BoundaryPoint,
    radius: f64,
    w: &GridFunction,
) -> Result<NormalEstimate> {
    let d = center.x.len();
    let timed = w.is_space_time();
    let dist = |p: &BoundaryPoint| -> f64 {
        let mut s: f64 = p.x.iter().zip(&center.x).map(|(a, b)| (a - b) * (a - b)).sum();
        if timed {
            s += (p.t - center.t) * (p.t - center.t);
        }
        s.sqrt()
    };
    let near: Vec<&BoundaryPoint> = points.iter().filter(|p| dist(p) <= radius).collect();
    let unresolved = |msg: String| Error::Unresolved {
        module: Module::FreeBoundary,
        msg,
    };
    let mut normal = if !timed && d == 1 {
        vec![1.0]
    } else {
        let m = if timed { d + 1 } else { d };
        if near.len() < d + 2 {
            return Err(unresolved(format!("{} boundary points near the probe, need {}", near.len(), d + 2)));
        }
        let coords: Vec<Vec<f64>> = near
            .iter()
            .map(|p| {
                let mut c = p.x.clone();
                if timed {
                    c.push(p.t);
                }
                c
            })
            .collect();
        let mean: Vec<f64> = (0..m).map(|a| coords.iter().map(|c| c[a]).sum::<f64>() / coords.len() as f64).collect();
        let mut cov = vec![0.0; m * m];
        for c in &coords {
            for a in 0..m {
                for b in 0..m {
                    cov[a * m + b] += (c[a] - mean[a]) * (c[b] - mean[b]);
                }
            }
        }
        let (vals, vecs) = symmetric_eigen(&cov, m);
        let top = vals[m - 1].max(0.0);
        if top == 0.0 || vals[1] <= 1e-12 * top {
            return Err(unresolved("boundary points near the probe are rank deficient".into()));
        }
        vecs[0].clone()
    };
    // orient into the positivity set
    let side = |sign: f64, delta: f64| -> Option<f64> {
        let x: Vec<f64> = center.x.iter().zip(&normal).map(|(c, n)| c + sign * delta * n).collect();
        let t = if timed { center.t + sign * delta * normal[d] } else { center.t };
        w.sample(&x, t)
    };
    let mut oriented = false;
    for k in 0..6 {
        let delta = 2.0 * w.h / 2f64.powi(k);
        if let (Some(plus), Some(minus)) = (side(1.0, delta), side(-1.0, delta)) {
            if plus != minus {
                if plus < minus {
                    normal.iter_mut().for_each(|v| *v = -*v);
                }
                oriented = true;
                break;
            }
        }
    }
    if !oriented {
        return Err(unresolved("cannot orient the normal: u - φ is flat across the boundary".into()));
    }
    let nu_x: Vec<f64> = normal[..d].to_vec();
    let nu_t = if timed { normal[d] } else { 0.0 };
    let nx = nu_x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let speed = if nx < 1e-8 { f64::INFINITY } else { nu_t / nx };
    Ok(NormalEstimate {
        nu_x,
        nu_t,
        speed,
        points_used: near.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalizes() {
        let a = [2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0];
        let (vals, vecs) = symmetric_eigen(&a, 3);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12 && (vals[2] - 5.0).abs() < 1e-12);
        assert!((vecs[0][0] + vecs[0][1]).abs() < 1e-12);
    }

    #[test]
    fn traveling_boundary_speed() {
        // w = (x + t)_+^{1.75}: boundary x = -t, positivity to the right
        let w = GridFunction::from_space_time_fn(&[81], 0.025, &[-1.0], 41, 0.025, 0.0, 0.5, |x, t| {
            (x[0] + t).max(0.0).powf(1.75)
        });
        let pts: Vec<BoundaryPoint> = (0..41)
            .map(|k| BoundaryPoint {
                x: vec![-(k as f64) * 0.025],
                t: k as f64 * 0.025,
            })
            .collect();
        let est = estimate_normal_speed(&pts, &pts[20], 0.3, &w).unwrap();
        assert!(est.nu_x[0] > 0.0);
        assert!((est.speed - 1.0).abs() < 1e-9);
        assert!(estimate_normal_speed(&pts[..2], &pts[0], 0.3, &w).is_err());
    }
}

//! Lattice discretization of a homogeneous kernel.
//!
//! `ℒu(x) ≈ Σ_j T_j u(x + jh) + ∫_{|y|∞ > L} u(x+y) K(y) dy`, where the taps
//! `T_j` collect the cell masses `w_j = ∫_{cell_j} K`, a second-order Taylor
//! correction for the cells near the origin, the first-moment correction of
//! the odd part of the kernel, and the drift.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use super::kernel::{direction, KernelSpec};
use super::quad;

/// How `b·∇u` is differenced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftScheme {
    Centered,
    Upwind,
    /// Centered unless that makes an off-diagonal tap negative.
    #[default]
    Auto,
}

/// Cell masses in units `h = 1`; entry for offset `j` at `index(j)`.
#[derive(Debug)]
pub(crate) struct LatticeWeights {
    #[allow(dead_code)]
    pub dim: usize,
    pub m: usize,
    pub w: Vec<f64>,
}

impl LatticeWeights {
    pub fn side(&self) -> usize {
        2 * self.m + 1
    }
}

fn cache() -> &'static Mutex<HashMap<String, Arc<LatticeWeights>>> {
    static C: OnceLock<Mutex<HashMap<String, Arc<LatticeWeights>>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

pub(crate) fn lattice_weights(k: &KernelSpec, m: usize) -> Arc<LatticeWeights> {
    let key = format!("{}|{:?}|{:?}|{}", k.dim, k.s, k.density, m);
    if let Some(w) = cache().lock().unwrap().get(&key) {
        return w.clone();
    }
    let w = Arc::new(match k.dim {
        1 => weights_1d(k, m),
        2 => weights_2d(k, m),
        _ => weights_nd(k, m),
    });
    let mut c = cache().lock().unwrap();
    if c.len() > 64 {
        c.clear();
    }
    c.insert(key, w.clone());
    w
}

fn weights_1d(k: &KernelSpec, m: usize) -> LatticeWeights {
    let s = k.s;
    let c = k.norm_const();
    let (ap, am) = (k.density.at_angle(0.0), k.density.at_angle(PI));
    let mut w = vec![0.0; 2 * m + 1];
    for j in 1..=m {
        let jf = j as f64;
        let mass = c * ((jf - 0.5).powf(-2.0 * s) - (jf + 0.5).powf(-2.0 * s)) / (2.0 * s);
        w[m + j] = ap * mass;
        w[m - j] = am * mass;
    }
    LatticeWeights { dim: 1, m, w }
}

/// `∫_{cell} K_even` and `∫_{cell} K_odd` over the unit cell centred at `j`.
fn cell_masses_2d(k: &KernelSpec, c: f64, j: (i64, i64)) -> (f64, f64) {
    let d = ((j.0 * j.0 + j.1 * j.1) as f64).sqrt();
    let q = if d < 16.0 {
        6
    } else if d < 64.0 {
        4
    } else if d < 256.0 {
        3
    } else {
        2
    };
    let sub = if d < 8.0 { (8.0 / d).ceil() as usize } else { 1 };
    let (xs, ws) = quad::gauss_legendre(q);
    let e = -2.0 - 2.0 * k.s;
    let size = 1.0 / sub as f64;
    let (mut even, mut odd) = (0.0, 0.0);
    for a in 0..sub {
        for b in 0..sub {
            let x0 = j.0 as f64 - 0.5 + (a as f64 + 0.5) * size;
            let y0 = j.1 as f64 - 0.5 + (b as f64 + 0.5) * size;
            for (xi, wi) in xs.iter().zip(&ws) {
                for (yi, wj) in xs.iter().zip(&ws) {
                    let x = x0 + 0.5 * size * xi;
                    let y = y0 + 0.5 * size * yi;
                    let r2 = x * x + y * y;
                    let phi = y.atan2(x);
                    let weight = wi * wj * 0.25 * size * size * c * r2.powf(0.5 * e);
                    even += weight * k.density.even_at_angle(phi);
                    odd += weight * k.density.odd_at_angle(phi);
                }
            }
        }
    }
    (even, odd)
}

fn weights_2d(k: &KernelSpec, m: usize) -> LatticeWeights {
    let side = 2 * m + 1;
    let c = k.norm_const();
    let mi = m as i64;
    // one representative per ± pair: j1 > 0, or j1 = 0 and j2 > 0
    let rows: Vec<Vec<(i64, i64, f64, f64)>> = (0..=mi)
        .into_par_iter()
        .map(|j1| {
            let start = if j1 == 0 { 1 } else { -mi };
            (start..=mi)
                .map(|j2| {
                    let (e, o) = cell_masses_2d(k, c, (j1, j2));
                    (j1, j2, e, o)
                })
                .collect()
        })
        .collect();
    let mut w = vec![0.0; side * side];
    let idx = |a: i64, b: i64| ((a + mi) as usize) * side + (b + mi) as usize;
    for row in rows {
        for (a, b, e, o) in row {
            w[idx(a, b)] = e + o;
            w[idx(-a, -b)] = e - o;
        }
    }
    LatticeWeights { dim: 2, m, w }
}

/// Isotropic kernels only in three dimensions (tensor Gauss on each cell).
fn weights_nd(k: &KernelSpec, m: usize) -> LatticeWeights {
    let side = 2 * m + 1;
    let c = k.norm_const() * k.density.mean;
    let e = -(k.dim as f64) - 2.0 * k.s;
    let (xs, ws) = quad::gauss_legendre(4);
    let mi = m as i64;
    let mut w = vec![0.0; side.pow(3)];
    for a in -mi..=mi {
        for b in -mi..=mi {
            for cc in -mi..=mi {
                if a == 0 && b == 0 && cc == 0 {
                    continue;
                }
                let d = ((a * a + b * b + cc * cc) as f64).sqrt();
                let sub = if d < 4.0 { 4 } else { 1 };
                let size = 1.0 / sub as f64;
                let mut acc = 0.0;
                for p in 0..sub * sub * sub {
                    let o = [
                        a as f64 - 0.5 + ((p / (sub * sub)) as f64 + 0.5) * size,
                        b as f64 - 0.5 + ((p / sub % sub) as f64 + 0.5) * size,
                        cc as f64 - 0.5 + ((p % sub) as f64 + 0.5) * size,
                    ];
                    for (x1, w1) in xs.iter().zip(&ws) {
                        for (x2, w2) in xs.iter().zip(&ws) {
                            for (x3, w3) in xs.iter().zip(&ws) {
                                let y = [o[0] + 0.5 * size * x1, o[1] + 0.5 * size * x2, o[2] + 0.5 * size * x3];
                                let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
                                acc += w1 * w2 * w3 * r2.powf(0.5 * e);
                            }
                        }
                    }
                }
                let idx = (((a + mi) as usize) * side + (b + mi) as usize) * side + (cc + mi) as usize;
                w[idx] = c * acc * (0.5 * size).powi(3);
            }
        }
    }
    LatticeWeights { dim: 3, m, w }
}

/// Angular quadrature `(φ, weight)` adapted to the square `|y|∞ = const`
/// (Gauss–Legendre on each octant, where the radius is smooth).
pub(crate) fn octant_nodes(per_octant: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = quad::gauss_legendre(per_octant);
    let mut out = Vec::with_capacity(8 * per_octant);
    for k in 0..8 {
        let a = k as f64 * PI / 4.0;
        for (x, w) in xs.iter().zip(&ws) {
            out.push((a + PI / 8.0 * (1.0 + x), w * PI / 8.0));
        }
    }
    out
}

/// Distance from the origin to the square `|y|∞ = half` along angle `φ`
/// (in one dimension the angle is 0 or π).
pub(crate) fn box_radius(dim: usize, half: f64, phi: f64) -> f64 {
    match dim {
        1 => half,
        _ => half / phi.cos().abs().max(phi.sin().abs()),
    }
}

/// Nodes for spherical integrals in the given dimension: the two points of
/// `S^0`, or the octant rule on `S^1`.
pub(crate) fn box_sphere_nodes(dim: usize) -> Vec<(f64, f64)> {
    match dim {
        1 => vec![(0.0, 1.0), (PI, 1.0)],
        _ => octant_nodes(24),
    }
}

/// Moments of the kernel over the box `|y|∞ ≤ half` (units `h = 1`).
#[derive(Debug, Clone, Copy)]
pub(crate) struct BoxMoments {
    /// `∫_{|y|∞ > half} K`.
    pub far_mass: f64,
    /// `∫_{|y|∞ ≤ half} y⊗y K`.
    pub second: [[f64; 2]; 2],
    /// First moment used by the gradient correction: the box moment for
    /// `s < 1/2` (principal value at `s = 1/2`), the exterior moment for `s > 1/2`.
    pub first: [f64; 2],
}

pub(crate) fn box_moments(k: &KernelSpec, half: f64) -> BoxMoments {
    let s = k.s;
    let c = k.norm_const();
    let d = k.dim;
    if d >= 3 {
        // isotropic: far mass over the cube by a fine angular average is not
        // needed at this dimension; use the ball of equal volume as a proxy
        let rad = half * (8.0 / quad::sphere_area(3) * 3.0).powf(1.0 / 3.0);
        let mass = c * k.density.mean * quad::sphere_area(3) * rad.powf(-2.0 * s) / (2.0 * s);
        return BoxMoments {
            far_mass: mass,
            second: [[0.0; 2]; 2],
            first: [0.0; 2],
        };
    }
    let mut out = BoxMoments {
        far_mass: 0.0,
        second: [[0.0; 2]; 2],
        first: [0.0; 2],
    };
    for (phi, wt) in box_sphere_nodes(d) {
        let a = k.density.at_angle(phi);
        let r = box_radius(d, half, phi);
        let th = direction(d, phi);
        out.far_mass += wt * c * a * r.powf(-2.0 * s) / (2.0 * s);
        let r2 = r.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
        for p in 0..d {
            for q in 0..d {
                out.second[p][q] += wt * c * a * th[p] * th[q] * r2;
            }
        }
        if !k.symmetric {
            let r1 = if (s - 0.5).abs() < 1e-14 {
                r.ln()
            } else if s < 0.5 {
                r.powf(1.0 - 2.0 * s) / (1.0 - 2.0 * s)
            } else {
                r.powf(1.0 - 2.0 * s) / (2.0 * s - 1.0)
            };
            for p in 0..d {
                out.first[p] += wt * c * a * th[p] * r1;
            }
        }
    }
    out
}

/// A translation-invariant discrete operator on the lattice `hZ^n`,
/// truncated to `|j|∞ ≤ m`, plus the exterior mass of the kernel.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub dim: usize,
    pub h: f64,
    pub m: usize,
    /// Taps indexed like the lattice weights, center included.
    pub taps: Vec<f64>,
    /// `∫_{|y|∞ > L} K(y) dy` with `L = (m + 1/2) h`.
    pub far_mass: f64,
    pub half_width: f64,
    pub compensated: bool,
    pub scheme: DriftScheme,
}

impl Stencil {
    pub fn new(k: &KernelSpec, h: f64, m: usize, scheme: DriftScheme) -> Self {
        assert!(m >= 1 && k.dim <= 3);
        let d = k.dim;
        let lw = lattice_weights(k, m);
        let side = lw.side();
        let s = k.s;
        let scale = h.powf(-2.0 * s);
        let mut taps: Vec<f64> = lw.w.iter().map(|w| w * scale).collect();
        let center = lw.w.len() / 2;
        let mom = box_moments(k, m as f64 + 0.5);

        // lattice moments (unit spacing)
        let mut lat1 = [0.0; 2];
        let mut lat2 = [[0.0; 2]; 2];
        let mut total = 0.0;
        if d <= 2 {
            for (i, w) in lw.w.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let j = offset_of(d, lw.m, i);
                total += w;
                for p in 0..d {
                    lat1[p] += w * j[p] as f64;
                    for q in 0..d {
                        lat2[p][q] += w * (j[p] * j[q]) as f64;
                    }
                }
            }
        } else {
            total = lw.w.iter().sum();
        }
        taps[center] = -(total + mom.far_mass) * scale;

        let idx = |j: &[i64]| -> usize {
            j.iter().fold(0usize, |acc, v| acc * side + (v + lw.m as i64) as usize)
        };
        let unit = |p: usize, sgn: i64| -> Vec<i64> {
            let mut v = vec![0i64; d];
            v[p] = sgn;
            v
        };
        if d <= 2 {
            // ½ M : D²u with M = (box second moment − lattice second moment) h^{2-2s}
            let mscale = h.powf(2.0 - 2.0 * s) / (h * h);
            for p in 0..d {
                for q in 0..d {
                    let mpq = 0.5 * (mom.second[p][q] - lat2[p][q]) * mscale;
                    if p == q {
                        taps[idx(&unit(p, 1))] += mpq;
                        taps[idx(&unit(p, -1))] += mpq;
                        taps[center] -= 2.0 * mpq;
                    } else {
                        // symmetric mixed difference, each (p,q) ordering contributes half
                        let mut pp = vec![0i64; d];
                        for (sp, sq, sign) in [(1, 1, 1.0), (-1, -1, 1.0), (1, -1, -1.0), (-1, 1, -1.0)] {
                            pp[p] = sp;
                            pp[q] = sq;
                            taps[idx(&pp)] += sign * mpq / 4.0;
                        }
                    }
                }
            }
            // first-moment correction of the odd part
            if !k.symmetric {
                let gscale = h.powf(1.0 - 2.0 * s) / (2.0 * h);
                for p in 0..d {
                    let g = if s <= 0.5 + 1e-14 {
                        mom.first[p] - lat1[p]
                    } else {
                        -lat1[p] - mom.first[p]
                    };
                    taps[idx(&unit(p, 1))] += g * gscale;
                    taps[idx(&unit(p, -1))] -= g * gscale;
                }
            }
        }
        // drift
        let mut scheme_used = scheme;
        if k.has_drift() {
            let centered = |taps: &mut Vec<f64>| {
                for p in 0..d {
                    taps[idx(&unit(p, 1))] += k.drift[p] / (2.0 * h);
                    taps[idx(&unit(p, -1))] -= k.drift[p] / (2.0 * h);
                }
            };
            let upwind = |taps: &mut Vec<f64>| {
                for p in 0..d {
                    let b = k.drift[p];
                    if b >= 0.0 {
                        taps[idx(&unit(p, 1))] += b / h;
                    } else {
                        taps[idx(&unit(p, -1))] -= b / h;
                    }
                    taps[center] -= b.abs() / h;
                }
            };
            match scheme {
                DriftScheme::Centered => centered(&mut taps),
                DriftScheme::Upwind => upwind(&mut taps),
                DriftScheme::Auto => {
                    let mut trial = taps.clone();
                    centered(&mut trial);
                    if trial.iter().enumerate().all(|(i, t)| i == center || *t >= 0.0) {
                        taps = trial;
                        scheme_used = DriftScheme::Centered;
                    } else {
                        upwind(&mut taps);
                        scheme_used = DriftScheme::Upwind;
                    }
                }
            }
        }
        Stencil {
            dim: d,
            h,
            m,
            taps,
            far_mass: mom.far_mass * scale,
            half_width: (m as f64 + 0.5) * h,
            compensated: s > 0.5 && !k.symmetric,
            scheme: scheme_used,
        }
    }

    pub fn side(&self) -> usize {
        2 * self.m + 1
    }

    pub fn center(&self) -> usize {
        self.taps.len() / 2
    }

    pub fn offset(&self, i: usize) -> Vec<i64> {
        offset_of(self.dim, self.m, i)
    }

    pub fn tap(&self, j: &[i64]) -> f64 {
        let side = self.side();
        let i = j
            .iter()
            .fold(0usize, |acc, v| acc * side + (v + self.m as i64) as usize);
        self.taps[i]
    }

    /// Smallest off-diagonal tap (nonnegative for a monotone scheme).
    pub fn min_off_diagonal(&self) -> f64 {
        let c = self.center();
        self.taps
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != c)
            .map(|(_, t)| *t)
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn offset_of(dim: usize, m: usize, mut i: usize) -> Vec<i64> {
    let side = 2 * m + 1;
    let mut j = vec![0i64; dim];
    for a in (0..dim).rev() {
        j[a] = (i % side) as i64 - m as i64;
        i /= side;
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::kernel::{make_kernel, SphericalDensity};

    #[test]
    fn one_dimensional_cell_masses_are_exact() {
        let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
        let w = lattice_weights(&k, 3);
        // c = 1/π, ∫_{1/2}^{3/2} r^{-2} dr = 4/3
        assert!((w.w[4] - 4.0 / (3.0 * PI)).abs() < 1e-15);
        assert_eq!(w.w[3], 0.0);
    }

    #[test]
    fn two_dimensional_cell_masses_match_far_mass_balance() {
        // Σ_{0<|j|∞≤m} w_j + far(m) = far(1/2)
        let k = KernelSpec::fractional_laplacian(2, 0.75).unwrap();
        let w = lattice_weights(&k, 6);
        let inner = box_moments(&k, 0.5).far_mass;
        let outer = box_moments(&k, 6.5).far_mass;
        let sum: f64 = w.w.iter().sum();
        assert!(((sum + outer) - inner).abs() < 1e-10 * inner, "{} {}", sum + outer, inner);
    }

    #[test]
    fn taps_annihilate_constants_and_are_monotone() {
        for s in [0.3, 0.5, 0.75, 0.9] {
            for d in [1, 2] {
                let k = KernelSpec::fractional_laplacian(d, s).unwrap();
                let st = Stencil::new(&k, 0.1, 8, DriftScheme::Auto);
                let sum: f64 = st.taps.iter().sum::<f64>() + st.far_mass;
                assert!(sum.abs() < 1e-9 * st.taps[st.center()].abs(), "s={s} d={d} {sum}");
                assert!(st.min_off_diagonal() >= 0.0, "s={s} d={d}");
            }
        }
    }

    #[test]
    fn nonsymmetric_weights_split_into_even_and_odd_parts() {
        let d = SphericalDensity::from_fn(|p| 1.0 + 0.3 * p.cos() + 0.1 * (2.0 * p).sin(), 16);
        let k = make_kernel(0.75, 0.5, 1.5, d, vec![], 2).unwrap();
        let w = lattice_weights(&k, 4);
        let side = 9;
        let a = w.w[(4 + 2) * side + 4 + 1];
        let b = w.w[(4 - 2) * side + 4 - 1];
        assert!((a - b).abs() > 1e-4);
        let sym = KernelSpec::fractional_laplacian(2, 0.75).unwrap();
        let ws = lattice_weights(&sym, 4);
        assert_eq!(ws.w[(4 + 2) * side + 5], ws.w[(4 - 2) * side + 3]);
    }
}

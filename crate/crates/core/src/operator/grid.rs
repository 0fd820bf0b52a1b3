use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Module, Result};

const MAGIC: &[u8; 5] = b"FBRG1";

/// Samples of a function on a uniform spatial or space-time grid.
///
/// Layout is row-major with time (when present) as the outermost axis and the
/// last spatial axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    /// Spatial extents.
    pub dims: Vec<usize>,
    /// Number of time levels, `None` for purely spatial grids.
    pub steps: Option<usize>,
    pub h: f64,
    pub dt: Option<f64>,
    /// Physical coordinates of spatial index 0.
    pub origin: Vec<f64>,
    pub t0: f64,
    /// Order governing the parabolic scaling `t ~ r^{2s}`.
    pub s: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(dims: &[usize], h: f64, origin: &[f64], s: f64) -> Self {
        let n = dims.iter().product();
        GridFunction {
            dims: dims.to_vec(),
            steps: None,
            h,
            dt: None,
            origin: origin.to_vec(),
            t0: 0.0,
            s,
            values: vec![0.0; n],
        }
    }

    pub fn space_time_zeros(
        dims: &[usize],
        h: f64,
        origin: &[f64],
        steps: usize,
        dt: f64,
        t0: f64,
        s: f64,
    ) -> Self {
        let n: usize = dims.iter().product();
        GridFunction {
            dims: dims.to_vec(),
            steps: Some(steps),
            h,
            dt: Some(dt),
            origin: origin.to_vec(),
            t0,
            s,
            values: vec![0.0; n * steps],
        }
    }

    /// Sample `f(x)` at every spatial node.
    pub fn from_fn(dims: &[usize], h: f64, origin: &[f64], s: f64, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut g = Self::zeros(dims, h, origin, s);
        let mut x = vec![0.0; dims.len()];
        for i in 0..g.values.len() {
            g.coords_into(i, &mut x);
            g.values[i] = f(&x);
        }
        g
    }

    /// Sample `f(x, t)` at every space-time node.
    #[allow(clippy::too_many_arguments)]
    pub fn from_space_time_fn(
        dims: &[usize],
        h: f64,
        origin: &[f64],
        steps: usize,
        dt: f64,
        t0: f64,
        s: f64,
        f: impl Fn(&[f64], f64) -> f64,
    ) -> Self {
        let mut g = Self::space_time_zeros(dims, h, origin, steps, dt, t0, s);
        let n = g.space_len();
        let mut x = vec![0.0; dims.len()];
        for k in 0..steps {
            let t = t0 + k as f64 * dt;
            for i in 0..n {
                g.coords_into(i, &mut x);
                g.values[k * n + i] = f(&x, t);
            }
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn space_len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn time_len(&self) -> usize {
        self.steps.unwrap_or(1)
    }

    pub fn is_space_time(&self) -> bool {
        self.steps.is_some()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt.unwrap_or(0.0)
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.space_len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.space_len();
        &mut self.values[k * n..(k + 1) * n]
    }

    /// Spatial grid at time level `k`.
    pub fn time_slice(&self, k: usize) -> GridFunction {
        GridFunction {
            dims: self.dims.clone(),
            steps: None,
            h: self.h,
            dt: None,
            origin: self.origin.clone(),
            t0: self.time(k),
            s: self.s,
            values: self.slice(k).to_vec(),
        }
    }

    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for a in (0..self.dims.len()).rev() {
            idx[a] = i % self.dims[a];
            i /= self.dims[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (i, n)| acc * n + i)
    }

    pub fn coords_into(&self, i: usize, x: &mut [f64]) {
        let mut rem = i;
        for a in (0..self.dims.len()).rev() {
            x[a] = self.origin[a] + (rem % self.dims[a]) as f64 * self.h;
            rem /= self.dims[a];
        }
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dims.len()];
        self.coords_into(i, &mut x);
        x
    }

    /// Upper corner of the box.
    pub fn upper(&self) -> Vec<f64> {
        self.origin
            .iter()
            .zip(&self.dims)
            .map(|(o, n)| o + (*n as f64 - 1.0) * self.h)
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let up = self.upper();
        x.iter()
            .zip(self.origin.iter().zip(&up))
            .all(|(xi, (lo, hi))| *xi >= lo - 1e-12 * self.h && *xi <= hi + 1e-12 * self.h)
    }

    /// Flat space-time indices of the nodes in the parabolic cylinder
    /// `B_r(x0) × (t0 - r^{2s}, t0 + r^{2s}]`. For spatial grids only the ball.
    pub fn cylinder(&self, x0: &[f64], t0: f64, r: f64) -> Vec<usize> {
        let n = self.space_len();
        let mut out = Vec::new();
        let mut x = vec![0.0; self.dim()];
        let tau = r.powf(2.0 * self.s);
        let levels: Vec<usize> = match self.steps {
            None => vec![0],
            Some(nt) => {
                // compare in index units so nodes on the cylinder's time faces
                // are classified without roundoff
                let dt = self.dt.unwrap_or(1.0);
                let lo = (t0 - tau - self.t0) / dt;
                let hi = (t0 + tau - self.t0) / dt;
                (0..nt)
                    .filter(|k| (*k as f64) > lo + 1e-9 && (*k as f64) <= hi + 1e-9)
                    .collect()
            }
        };
        // restrict the spatial scan to the bounding box of the ball
        let ranges: Vec<(usize, usize)> = (0..self.dim())
            .map(|a| {
                let lo = ((x0[a] - r - self.origin[a]) / self.h).floor().max(0.0) as usize;
                let hi = (((x0[a] + r - self.origin[a]) / self.h).ceil().max(-1.0) + 1.0)
                    .min(self.dims[a] as f64) as usize;
                (lo.min(self.dims[a]), hi)
            })
            .collect();
        let mut spatial = Vec::new();
        for i in 0..n {
            let idx = self.multi_index(i);
            if idx
                .iter()
                .zip(&ranges)
                .any(|(j, (lo, hi))| *j < *lo || *j >= *hi)
            {
                continue;
            }
            self.coords_into(i, &mut x);
            let d2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2.sqrt() < r - 1e-9 * self.h {
                spatial.push(i);
            }
        }
        for k in levels {
            out.extend(spatial.iter().map(|i| k * n + i));
        }
        out
    }

    /// Multilinear interpolation at spatial point `x` and time `t`; `None`
    /// outside the grid.
    pub fn sample(&self, x: &[f64], t: f64) -> Option<f64> {
        let n = self.space_len();
        let (k0, wt) = match (self.steps, self.dt) {
            (Some(nt), Some(dt)) if nt > 1 => {
                let q = (t - self.t0) / dt;
                if q < -1e-9 || q > (nt - 1) as f64 + 1e-9 {
                    return None;
                }
                let k = (q.floor().max(0.0) as usize).min(nt - 2);
                (k, (q - k as f64).clamp(0.0, 1.0))
            }
            _ => (0, 0.0),
        };
        let d = self.dim();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let q = (x[a] - self.origin[a]) / self.h;
            if q < -1e-9 || q > (self.dims[a] - 1) as f64 + 1e-9 {
                return None;
            }
            let i = if self.dims[a] == 1 {
                0
            } else {
                (q.floor().max(0.0) as usize).min(self.dims[a] - 2)
            };
            base[a] = i;
            frac[a] = (q - i as f64).clamp(0.0, 1.0);
        }
        let corner_value = |k: usize| -> f64 {
            let mut v = 0.0;
            for mask in 0..(1usize << d) {
                let mut w = 1.0;
                let mut idx = base.clone();
                for a in 0..d {
                    if mask >> a & 1 == 1 {
                        if self.dims[a] == 1 {
                            w = 0.0;
                            break;
                        }
                        idx[a] += 1;
                        w *= frac[a];
                    } else {
                        w *= 1.0 - frac[a];
                    }
                }
                if w != 0.0 {
                    v += w * self.values[k * n + self.flat_index(&idx)];
                }
            }
            v
        };
        let v0 = corner_value(k0);
        if wt > 0.0 {
            Some((1.0 - wt) * v0 + wt * corner_value(k0 + 1))
        } else {
            Some(v0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let expect = self.space_len() * self.time_len();
        if self.values.len() != expect {
            return Err(Error::Format(format!(
                "value count {} does not match extents ({expect})",
                self.values.len()
            )));
        }
        if self.origin.len() != self.dims.len() {
            return Err(Error::Format("origin and extents differ in length".into()));
        }
        if !(self.h > 0.0) || self.dt.is_some_and(|d| !(d > 0.0)) {
            return Err(Error::Format("spacings must be positive".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(Module::Operator, "grid values must be finite"));
        }
        Ok(())
    }

    /// Serialize as: magic `FBRG1`, `u8` spatial dimension count, `u8` time
    /// flag, `u64` extents (time first when present), `f64` h, `f64` dt (time
    /// grids only), `f64` origin per spatial axis then `t0` (time grids only),
    /// `f64` s, then the values. Everything little-endian.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        self.validate()?;
        w.write_all(MAGIC)?;
        w.write_all(&[self.dims.len() as u8, self.steps.is_some() as u8])?;
        if let Some(nt) = self.steps {
            w.write_all(&(nt as u64).to_le_bytes())?;
        }
        for n in &self.dims {
            w.write_all(&(*n as u64).to_le_bytes())?;
        }
        w.write_all(&self.h.to_le_bytes())?;
        if let Some(dt) = self.dt {
            w.write_all(&dt.to_le_bytes())?;
        }
        for o in &self.origin {
            w.write_all(&o.to_le_bytes())?;
        }
        if self.steps.is_some() {
            w.write_all(&self.t0.to_le_bytes())?;
        }
        w.write_all(&self.s.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut head = [0u8; 2];
        r.read_exact(&mut head)?;
        let (d, timed) = (head[0] as usize, head[1]);
        if d == 0 || d > 3 || timed > 1 {
            return Err(Error::Format(format!("bad header ({d} dims, time flag {timed})")));
        }
        let timed = timed == 1;
        let u64s = |r: &mut dyn Read| -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let steps = if timed {
            Some(u64s(&mut r)? as usize)
        } else {
            None
        };
        let mut dims = Vec::with_capacity(d);
        for _ in 0..d {
            dims.push(u64s(&mut r)? as usize);
        }
        let f64s = |r: &mut dyn Read| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let h = f64s(&mut r)?;
        let dt = if timed { Some(f64s(&mut r)?) } else { None };
        let mut origin = Vec::with_capacity(d);
        for _ in 0..d {
            origin.push(f64s(&mut r)?);
        }
        let t0 = if timed { f64s(&mut r)? } else { 0.0 };
        let s = f64s(&mut r)?;
        let count = dims
            .iter()
            .chain(steps.iter())
            .try_fold(1usize, |acc, n| acc.checked_mul(*n))
            .filter(|n| *n <= (1 << 32))
            .ok_or_else(|| Error::Format("extents overflow".into()))?;
        let mut bytes = vec![0u8; count * 8];
        r.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let g = GridFunction {
            dims,
            steps,
            h,
            dt,
            origin,
            t0,
            s,
            values,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_space_time() {
        let g = GridFunction::from_space_time_fn(&[3, 4], 0.5, &[-1.0, 0.0], 5, 0.1, 0.2, 0.5, |x, t| {
            x[0] * 10.0 + x[1] + t
        });
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..5], b"FBRG1");
        assert_eq!(buf.len(), 5 + 2 + 3 * 8 + 2 * 8 + 3 * 8 + 8 + 60 * 8);
        let back = GridFunction::read_from(&buf[..]).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let g = GridFunction::zeros(&[4], 1.0, &[0.0], 0.5);
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        assert!(GridFunction::read_from(&buf[..buf.len() - 3]).is_err());
        buf[0] = b'X';
        assert!(matches!(GridFunction::read_from(&buf[..]), Err(Error::Format(_))));
    }

    #[test]
    fn cylinder_uses_parabolic_time_scale() {
        let g = GridFunction::space_time_zeros(&[21], 0.1, &[-1.0], 21, 0.05, 0.0, 0.5);
        // r = 0.25: spatial nodes with |x| < 0.25 are -0.2..0.2 (5 nodes),
        // times in (0.25, 0.75] are k = 6..15 (10 levels)
        let idx = g.cylinder(&[0.0], 0.5, 0.25);
        assert_eq!(idx.len(), 50);
    }

    #[test]
    fn interpolation_is_exact_for_multilinear_functions() {
        let g = GridFunction::from_space_time_fn(&[5, 6], 0.25, &[0.0, 1.0], 4, 0.5, 0.0, 0.75, |x, t| {
            1.0 + 2.0 * x[0] - x[1] + 3.0 * x[0] * x[1] + t * x[0]
        });
        let v = g.sample(&[0.33, 1.71], 0.8).unwrap();
        let exact = 1.0 + 0.66 - 1.71 + 3.0 * 0.33 * 1.71 + 0.8 * 0.33;
        assert!((v - exact).abs() < 1e-12);
        assert!(g.sample(&[2.0, 1.0], 0.0).is_none());
    }
}

//! Periodic scalar grids over a rectangle, with bilinear sampling and a small
//! binary file format.
//!
//! Layout: the 8-byte magic `HFGRID01`, `nx` and `ny` as little-endian u64,
//! the bounds `x0 x1 y0 y1` as little-endian f64, then `nx * ny` f64 values in
//! row-major order (row index along y). Node `(i, j)` sits at
//! `(x0 + i hx, y0 + j hy)` with `hx = (x1 - x0) / nx`; the rectangle is a
//! period cell, so the node at `x1` coincides with the one at `x0`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"HFGRID01";

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    bounds: [f64; 4],
    data: Vec<f64>,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, bounds: [f64; 4], data: Vec<f64>) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::GridFormat(format!("grid {nx}x{ny} too small")));
        }
        if data.len() != nx * ny {
            return Err(Error::GridFormat(format!(
                "expected {} values, got {}",
                nx * ny,
                data.len()
            )));
        }
        if !(bounds[1] > bounds[0] && bounds[3] > bounds[2]) {
            return Err(Error::GridFormat("empty bounding box".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::GridFormat("non-finite sample".into()));
        }
        Ok(Self {
            nx,
            ny,
            bounds,
            data,
        })
    }

    /// Samples `f` on the nodes of an `nx` by `ny` grid.
    pub fn from_fn(nx: usize, ny: usize, bounds: [f64; 4], f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let hx = (bounds[1] - bounds[0]) / nx as f64;
        let hy = (bounds[3] - bounds[2]) / ny as f64;
        let mut data = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                data.push(f(bounds[0] + i as f64 * hx, bounds[2] + j as f64 * hy));
            }
        }
        Self::new(nx, ny, bounds, data)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn bounds(&self) -> [f64; 4] {
        self.bounds
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn spacing(&self) -> (f64, f64) {
        (
            (self.bounds[1] - self.bounds[0]) / self.nx as f64,
            (self.bounds[3] - self.bounds[2]) / self.ny as f64,
        )
    }

    fn at(&self, i: isize, j: isize) -> f64 {
        let i = i.rem_euclid(self.nx as isize) as usize;
        let j = j.rem_euclid(self.ny as isize) as usize;
        self.data[j * self.nx + i]
    }

    /// Periodic bilinear interpolation.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let (hx, hy) = self.spacing();
        let u = (x - self.bounds[0]) / hx;
        let v = (y - self.bounds[2]) / hy;
        let i = u.floor();
        let j = v.floor();
        let (fu, fv) = (u - i, v - j);
        let (i, j) = (i as isize, j as isize);
        (1.0 - fu) * (1.0 - fv) * self.at(i, j)
            + fu * (1.0 - fv) * self.at(i + 1, j)
            + (1.0 - fu) * fv * self.at(i, j + 1)
            + fu * fv * self.at(i + 1, j + 1)
    }

    fn map_nodes(&self, f: impl Fn(isize, isize) -> f64) -> Grid {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.ny as isize {
            for i in 0..self.nx as isize {
                data.push(f(i, j));
            }
        }
        Grid {
            data,
            ..self.clone()
        }
    }

    /// Fourth-order centred first derivatives `(d/dx, d/dy)` on the nodes.
    pub fn fd4_gradient(&self) -> (Grid, Grid) {
        let (hx, hy) = self.spacing();
        let d = |a: f64, b: f64, c: f64, e: f64, h: f64| (-e + 8.0 * c - 8.0 * b + a) / (12.0 * h);
        let gx = self.map_nodes(|i, j| {
            d(self.at(i - 2, j), self.at(i - 1, j), self.at(i + 1, j), self.at(i + 2, j), hx)
        });
        let gy = self.map_nodes(|i, j| {
            d(self.at(i, j - 2), self.at(i, j - 1), self.at(i, j + 1), self.at(i, j + 2), hy)
        });
        (gx, gy)
    }

    /// Fourth-order centred Laplacian on the nodes.
    pub fn fd4_laplacian(&self) -> Grid {
        let (hx, hy) = self.spacing();
        let d2 = |m2: f64, m1: f64, c: f64, p1: f64, p2: f64, h: f64| {
            (-p2 + 16.0 * p1 - 30.0 * c + 16.0 * m1 - m2) / (12.0 * h * h)
        };
        self.map_nodes(|i, j| {
            let c = self.at(i, j);
            d2(self.at(i - 2, j), self.at(i - 1, j), c, self.at(i + 1, j), self.at(i + 2, j), hx)
                + d2(self.at(i, j - 2), self.at(i, j - 1), c, self.at(i, j + 1), self.at(i, j + 2), hy)
        })
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.nx as u64).to_le_bytes())?;
        w.write_all(&(self.ny as u64).to_le_bytes())?;
        for b in self.bounds {
            w.write_all(&b.to_le_bytes())?;
        }
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::GridFormat("bad magic".into()));
        }
        let mut b8 = [0u8; 8];
        let mut next_u64 = |r: &mut dyn Read| -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let nx = next_u64(r)? as usize;
        let ny = next_u64(r)? as usize;
        if nx.checked_mul(ny).is_none_or(|n| n > 1 << 28) {
            return Err(Error::GridFormat(format!("implausible dimensions {nx}x{ny}")));
        }
        let mut bounds = [0.0; 4];
        for b in &mut bounds {
            *b = f64::from_bits(next_u64(r)?);
        }
        let mut data = Vec::with_capacity(nx * ny);
        for _ in 0..nx * ny {
            data.push(f64::from_bits(next_u64(r)?));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::GridFormat("trailing bytes".into()));
        }
        Self::new(nx, ny, bounds, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn wave() -> Grid {
        Grid::from_fn(64, 48, [0.0, TAU, 0.0, TAU], |x, y| (x).sin() * (2.0 * y).cos()).unwrap()
    }

    #[test]
    fn round_trip_bytes() {
        let g = wave();
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 16 + 32 + 8 * 64 * 48);
        let back = Grid::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn rejects_corrupt_input() {
        let g = wave();
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(Grid::read_from(&mut bad.as_slice()).is_err());
        assert!(Grid::read_from(&mut &buf[..buf.len() - 3]).is_err());
        buf.push(0);
        assert!(Grid::read_from(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn bilinear_is_exact_on_nodes_and_periodic() {
        let g = wave();
        let (hx, hy) = g.spacing();
        assert_eq!(g.sample(3.0 * hx, 5.0 * hy), g.data()[5 * 64 + 3]);
        assert!((g.sample(0.3 + TAU, 0.4) - g.sample(0.3, 0.4 - TAU)).abs() < 1e-12);
    }

    #[test]
    fn fd4_derivatives_are_fourth_order() {
        let err = |n: usize| {
            let g = Grid::from_fn(n, n, [0.0, TAU, 0.0, TAU], |x, y| x.sin() * (2.0 * y).cos()).unwrap();
            let lap = g.fd4_laplacian();
            let h = TAU / n as f64;
            let (i, j) = (n / 8, n / 4);
            let (x, y) = (i as f64 * h, j as f64 * h);
            (lap.data()[j * n + i] + 5.0 * x.sin() * (2.0 * y).cos()).abs()
        };
        let ratio = err(32) / err(64);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }
}

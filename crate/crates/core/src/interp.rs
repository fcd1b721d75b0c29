//! Tricubic Lagrange interpolation in index coordinates.
//!
//! Periodic in x and y. In z the four-point stencil is clamped to the grid so
//! points near a wall use a one-sided stencil.

use crate::fields::{Grid, ScalarField};

fn weights(t: f64) -> [f64; 4] {
    // nodes at -1, 0, 1, 2 relative to the base index
    let a = t + 1.0;
    let b = t;
    let c = t - 1.0;
    let d = t - 2.0;
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

/// Stencil start and weights along a periodic axis.
fn periodic(f: f64, n: usize) -> ([usize; 4], [f64; 4]) {
    let fl = f.floor();
    let t = f - fl;
    let n = n as i64;
    let mut base = (fl as i64 - 1) % n;
    if base < 0 {
        base += n;
    }
    let mut idx = [0usize; 4];
    for (k, v) in idx.iter_mut().enumerate() {
        let i = base + k as i64;
        *v = if i >= n { i - n } else { i } as usize;
    }
    (idx, weights(t))
}

fn clamped(f: f64, n: usize) -> (usize, [f64; 4]) {
    let f = f.clamp(0.0, (n - 1) as f64);
    let fl = f.floor();
    let start = (fl as i64 - 1).clamp(0, n as i64 - 4) as usize;
    // position relative to node start + 1
    let t = f - (start + 1) as f64;
    (start, weights(t))
}

/// Interpolation stencil at one point, reusable across fields on the same grid.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    bases: [[usize; 4]; 4],
    wx: [f64; 4],
    wy: [f64; 4],
    wz: [f64; 4],
}

impl Stencil {
    pub fn new(g: Grid, fx: f64, fy: f64, fz: f64) -> Self {
        let (ix, wx) = periodic(fx, g.nx);
        let (iy, wy) = periodic(fy, g.ny);
        let (z0, wz) = clamped(fz, g.nz);
        let mut bases = [[0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                bases[a][b] = (ix[a] * g.ny + iy[b]) * g.nz + z0;
            }
        }
        Stencil { bases, wx, wy, wz }
    }

    pub fn apply(&self, f: &ScalarField) -> f64 {
        let v = f.values();
        let wz = &self.wz;
        let mut acc = 0.0;
        for a in 0..4 {
            let mut sy = 0.0;
            for b in 0..4 {
                let base = self.bases[a][b];
                let col = &v[base..base + 4];
                let sz = wz[0] * col[0] + wz[1] * col[1] + wz[2] * col[2] + wz[3] * col[3];
                sy += self.wy[b] * sz;
            }
            acc += self.wx[a] * sy;
        }
        acc
    }
}

/// Value of `f` at index-space position `(fx, fy, fz)`.
pub fn tricubic(f: &ScalarField, fx: f64, fy: f64, fz: f64) -> f64 {
    Stencil::new(f.grid(), fx, fy, fz).apply(f)
}

/// Physical coordinates to index coordinates.
pub fn to_index(g: Grid, x: f64, y: f64, z: f64) -> (f64, f64, f64) {
    (x / g.dx(), y / g.dy(), z / g.dz())
}

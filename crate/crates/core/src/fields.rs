//! Grid, field storage and the prognostic state.
//!
//! The domain is the channel `[0,2) x [0,2) x [0,1]`, periodic in x and y.
//! Values are stored flat with z varying fastest: `(ix * ny + iy) * nz + iz`.
//! Vertical nodes are uniform, `z_m = m / (nz - 1)`, which are exactly the
//! extrema of the highest cosine mode, so both walls are grid points.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Horizontal period in both directions.
pub const PERIOD: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

pub fn make_grid(nx: usize, ny: usize, nz: usize) -> Result<Grid> {
    Grid::new(nx, ny, nz)
}

impl Grid {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::Grid(format!("nx, ny must be >= 4, got {nx} x {ny}")));
        }
        if !nx.is_multiple_of(2) || !ny.is_multiple_of(2) {
            return Err(Error::Grid(format!("nx, ny must be even, got {nx} x {ny}")));
        }
        if nz < 4 {
            return Err(Error::Grid(format!("nz must be >= 4, got {nz}")));
        }
        Ok(Grid { nx, ny, nz })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn columns(&self) -> usize {
        self.nx * self.ny
    }

    pub fn dx(&self) -> f64 {
        PERIOD / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        PERIOD / self.ny as f64
    }

    /// Vertical spacing.
    pub fn dz(&self) -> f64 {
        1.0 / (self.nz - 1) as f64
    }

    pub fn x(&self, ix: usize) -> f64 {
        ix as f64 * self.dx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        iy as f64 * self.dy()
    }

    pub fn z(&self, iz: usize) -> f64 {
        iz as f64 / (self.nz - 1) as f64
    }

    pub fn z_nodes(&self) -> Vec<f64> {
        (0..self.nz).map(|m| self.z(m)).collect()
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.ny + iy) * self.nz + iz
    }

    /// Inverse of [`Grid::idx`].
    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize, usize) {
        let iz = i % self.nz;
        let c = i / self.nz;
        (c / self.ny, c % self.ny, iz)
    }

    /// Signed integer wavenumber of FFT slot `i` for a transform of length `n`.
    /// The physical wavenumber is `pi * k`.
    #[inline]
    pub fn wavenumber(i: usize, n: usize) -> i64 {
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn volume(&self) -> f64 {
        PERIOD * PERIOD
    }

    /// Trapezoid weights in z (they integrate every resolved cosine mode exactly).
    pub fn z_weights(&self) -> Vec<f64> {
        let h = self.dz();
        let mut w = vec![h; self.nz];
        w[0] = 0.5 * h;
        w[self.nz - 1] = 0.5 * h;
        w
    }

    pub fn check(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(*self, *other))
        }
    }
}

/// Real field sampled at the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            data: vec![c; grid.len()],
        }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field of length {} does not fit grid {:?}",
                data.len(),
                grid
            )));
        }
        Ok(ScalarField { grid, data })
    }

    /// Sample `f(x, y, z)` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx {
            let x = grid.x(ix);
            for iy in 0..grid.ny {
                let y = grid.y(iy);
                for iz in 0..grid.nz {
                    data.push(f(x, y, grid.z(iz)));
                }
            }
        }
        ScalarField { grid, data }
    }

    /// A field depending on z only, given by its nodal profile.
    pub fn from_profile(grid: Grid, profile: &[f64]) -> Self {
        assert_eq!(profile.len(), grid.nz);
        let mut data = Vec::with_capacity(grid.len());
        for _ in 0..grid.columns() {
            data.extend_from_slice(profile);
        }
        ScalarField { grid, data }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.data[self.grid.idx(ix, iy, iz)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.grid.check(&other.grid)?;
        Ok(ScalarField {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Multiply every node by a function of its vertical index.
    pub fn scale_by_profile(&self, profile: &[f64]) -> ScalarField {
        let nz = self.grid.nz;
        let mut out = self.clone();
        for col in out.data.chunks_mut(nz) {
            for (v, p) in col.iter_mut().zip(profile) {
                *v *= p;
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> ScalarField {
        self.map(|v| a * v)
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        assert_eq!(self.grid, other.grid);
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|v| !v.is_finite())
    }

    /// Domain integral: rectangle rule horizontally, trapezoid vertically.
    pub fn integral(&self) -> f64 {
        let w = self.grid.z_weights();
        let area = self.grid.dx() * self.grid.dy();
        let mut total = 0.0;
        for col in self.data.chunks(self.grid.nz) {
            let mut s = 0.0;
            for (v, wz) in col.iter().zip(&w) {
                s += v * wz;
            }
            total += s;
        }
        total * area
    }

    pub fn dot(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.grid, other.grid);
        let w = self.grid.z_weights();
        let area = self.grid.dx() * self.grid.dy();
        let nz = self.grid.nz;
        let mut total = 0.0;
        for (a, b) in self.data.chunks(nz).zip(other.data.chunks(nz)) {
            let mut s = 0.0;
            for m in 0..nz {
                s += a[m] * b[m] * w[m];
            }
            total += s;
        }
        total * area
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).max(0.0).sqrt()
    }

    /// Domain mean.
    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.volume()
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b).expect("grid mismatch in add")
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b).expect("grid mismatch in sub")
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b).expect("grid mismatch in mul")
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|v| -v)
    }
}

/// `f+ = (|f| + f) / 2`
pub fn positive_part(f: &ScalarField) -> ScalarField {
    f.map(|v| 0.5 * (v.abs() + v))
}

/// `f- = (|f| - f) / 2`
pub fn negative_part(f: &ScalarField) -> ScalarField {
    f.map(|v| 0.5 * (v.abs() - v))
}

/// Velocity `(v1, v2, w)`. Horizontal components satisfy stress-free walls,
/// `w` vanishes at the walls.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub v1: ScalarField,
    pub v2: ScalarField,
    pub w: ScalarField,
}

impl VectorField {
    pub fn new(v1: ScalarField, v2: ScalarField, w: ScalarField) -> Result<Self> {
        v1.grid().check(&v2.grid())?;
        v1.grid().check(&w.grid())?;
        Ok(VectorField { v1, v2, w })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            v1: ScalarField::zeros(grid),
            v2: ScalarField::zeros(grid),
            w: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> Grid {
        self.v1.grid()
    }

    pub fn components(&self) -> [&ScalarField; 3] {
        [&self.v1, &self.v2, &self.w]
    }

    pub fn components_mut(&mut self) -> [&mut ScalarField; 3] {
        [&mut self.v1, &mut self.v2, &mut self.w]
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> VectorField {
        VectorField {
            v1: f(&self.v1),
            v2: f(&self.v2),
            w: f(&self.w),
        }
    }

    pub fn dot(&self, other: &VectorField) -> f64 {
        self.v1.dot(&other.v1) + self.v2.dot(&other.v2) + self.w.dot(&other.w)
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.v1.max_abs().max(self.v2.max_abs()).max(self.w.max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.v1.is_finite() && self.v2.is_finite() && self.w.is_finite()
    }
}

/// Water species, indexing the moisture arrays.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Species {
    Vapor = 0,
    Cloud = 1,
    Rain = 2,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::Vapor, Species::Cloud, Species::Rain];

    pub fn name(self) -> &'static str {
        match self {
            Species::Vapor => "q_v",
            Species::Cloud => "q_c",
            Species::Rain => "q_r",
        }
    }
}

/// Prognostic fields at one time level. Temperature and mixing ratios are
/// stored in homogenized form (see [`crate::boundary`]).
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub log_rho_d: ScalarField,
    pub u: VectorField,
    pub frak_t: ScalarField,
    /// Indexed by [`Species`].
    pub frak_q: [ScalarField; 3],
    pub time: f64,
}

impl State {
    pub fn grid(&self) -> Grid {
        self.log_rho_d.grid()
    }

    pub fn frak_q_v(&self) -> &ScalarField {
        &self.frak_q[0]
    }

    pub fn frak_q_c(&self) -> &ScalarField {
        &self.frak_q[1]
    }

    pub fn frak_q_r(&self) -> &ScalarField {
        &self.frak_q[2]
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.grid();
        for f in self.named_fields() {
            g.check(&f.1.grid())?;
            if let Some(i) = f.1.first_non_finite() {
                return Err(Error::StateCorruption(format!(
                    "{} is not finite at flat index {i}",
                    f.0
                )));
            }
        }
        if !(self.time >= 0.0) {
            return Err(Error::StateCorruption(format!("time = {}", self.time)));
        }
        Ok(())
    }

    /// Fields in snapshot order with their file names.
    pub fn named_fields(&self) -> [(&'static str, &ScalarField); 8] {
        [
            ("log_rho_d", &self.log_rho_d),
            ("v1", &self.u.v1),
            ("v2", &self.u.v2),
            ("w", &self.u.w),
            ("frak_T", &self.frak_t),
            ("frak_q_v", &self.frak_q[0]),
            ("frak_q_c", &self.frak_q[1]),
            ("frak_q_r", &self.frak_q[2]),
        ]
    }

    pub const FIELD_NAMES: [&'static str; 8] = [
        "log_rho_d", "v1", "v2", "w", "frak_T", "frak_q_v", "frak_q_c", "frak_q_r",
    ];

    pub fn from_named(mut fields: Vec<ScalarField>, time: f64) -> Result<State> {
        if fields.len() != 8 {
            return Err(Error::InvalidArgument(format!(
                "state needs 8 fields, got {}",
                fields.len()
            )));
        }
        let mut it = fields.drain(..);
        let mut next = || it.next().unwrap();
        let log_rho_d = next();
        let u = VectorField::new(next(), next(), next())?;
        let frak_t = next();
        let frak_q = [next(), next(), next()];
        let s = State {
            log_rho_d,
            u,
            frak_t,
            frak_q,
            time,
        };
        s.validate()?;
        Ok(s)
    }
}

/// Dry-air density `exp(log_rho_d)`.
pub fn rho_d(state: &State) -> Result<ScalarField> {
    if let Some(i) = state.log_rho_d.first_non_finite() {
        return Err(Error::StateCorruption(format!(
            "log_rho_d is not finite at flat index {i}"
        )));
    }
    Ok(state.log_rho_d.map(f64::exp))
}

//! Fourier (x, y) times cosine/sine (z) transforms and the operators built on them.
//!
//! A Neumann field is represented as `sum c_kj e^{i pi k.x} cos(j pi z)`,
//! `j = 0..nz-1`; a Dirichlet field as `sum s_kj e^{i pi k.x} sin(j pi z)`,
//! `j = 1..nz-2`. Both are exact interpolants on the uniform vertical nodes, so
//! forward and inverse transforms are inverse to machine precision.
//!
//! Fields whose wall derivative is neither zero nor tied to a Dirichlet
//! condition (pressure, log density, dehomogenized temperature) are
//! differentiated with [`Spectral::dz_free`], which removes a quadratic lift
//! fitted to one-sided wall slopes before the cosine derivative.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Neumann,
    Dirichlet,
}

impl BasisKind {
    pub fn flipped(self) -> Self {
        match self {
            BasisKind::Neumann => BasisKind::Dirichlet,
            BasisKind::Dirichlet => BasisKind::Neumann,
        }
    }
}

/// Laplacian eigenvalues of one vertical basis on a grid.
#[derive(Clone, Debug)]
pub struct Basis {
    pub kind: BasisKind,
    grid: Grid,
}

impl Basis {
    pub fn new(kind: BasisKind, grid: Grid) -> Self {
        Basis { kind, grid }
    }

    /// Vertical mode indices carried by this basis.
    pub fn modes(&self) -> std::ops::Range<usize> {
        match self.kind {
            BasisKind::Neumann => 0..self.grid.nz,
            BasisKind::Dirichlet => 1..self.grid.nz - 1,
        }
    }

    /// `(j pi)^2`
    pub fn vertical_eigenvalue(&self, j: usize) -> f64 {
        let k = j as f64 * std::f64::consts::PI;
        k * k
    }

    /// `pi^2 |k|^2 + (j pi)^2` for horizontal integer wavenumber `(kx, ky)`.
    pub fn eigenvalue(&self, kx: i64, ky: i64, j: usize) -> f64 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        pi2 * (kx * kx + ky * ky) as f64 + self.vertical_eigenvalue(j)
    }
}

/// Modal coefficients; same flat layout as fields with `j` in place of `iz`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    kind: BasisKind,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: Grid, kind: BasisKind) -> Self {
        Spectrum {
            grid,
            kind,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.data
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn coeff(&self, ix: usize, iy: usize, j: usize) -> Complex64 {
        self.data[self.grid.idx(ix, iy, j)]
    }

    pub fn axpy(&mut self, a: f64, other: &Spectrum) {
        assert_eq!(self.kind, other.kind);
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn sub(&self, other: &Spectrum) -> Spectrum {
        assert_eq!(self.kind, other.kind);
        let mut out = self.clone();
        for (s, o) in out.data.iter_mut().zip(&other.data) {
            *s -= o;
        }
        out
    }
}

/// Transform plans and wavenumber tables for one grid. Immutable and shareable.
pub struct Spectral {
    grid: Grid,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
    /// length `2 (nz - 1)`, for the vertical cosine and sine transforms
    fft_z: Arc<dyn Fft<f64>>,
    /// `pi k` with the Nyquist slot zeroed (first derivatives).
    kx_d: Vec<f64>,
    ky_d: Vec<f64>,
    /// `(pi k)^2`, Nyquist kept (second derivatives).
    kx2: Vec<f64>,
    ky2: Vec<f64>,
    /// `j pi`
    kz: Vec<f64>,
    keep_x: Vec<bool>,
    keep_y: Vec<bool>,
    keep_z: Vec<bool>,
    lift_bottom: Vec<f64>,
    lift_top: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

const PI: f64 = std::f64::consts::PI;

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut fp = FftPlanner::new();
        let wn = |n: usize, nyq_zero: bool| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    if nyq_zero && i == n / 2 {
                        0.0
                    } else {
                        PI * Grid::wavenumber(i, n) as f64
                    }
                })
                .collect()
        };
        let sq = |v: Vec<f64>| v.into_iter().map(|k| k * k).collect::<Vec<_>>();
        let keep_h = |n: usize| -> Vec<bool> {
            (0..n)
                .map(|i| Grid::wavenumber(i, n).unsigned_abs() as usize * 3 <= n)
                .collect()
        };
        let nz = grid.nz;
        let keep_z = (0..nz).map(|j| 3 * j <= 2 * (nz - 1)).collect();
        let npts = nz.min(7);
        let zs: Vec<f64> = (0..npts).map(|m| grid.z(m)).collect();
        let lift_bottom = fd_weights(0.0, &zs);
        let zt: Vec<f64> = (0..npts).map(|m| grid.z(nz - 1 - m)).collect();
        let lift_top = fd_weights(1.0, &zt);
        Spectral {
            grid,
            fft_x: fp.plan_fft_forward(grid.nx),
            ifft_x: fp.plan_fft_inverse(grid.nx),
            fft_y: fp.plan_fft_forward(grid.ny),
            ifft_y: fp.plan_fft_inverse(grid.ny),
            fft_z: fp.plan_fft_forward(2 * (nz - 1)),
            kx_d: wn(grid.nx, true),
            ky_d: wn(grid.ny, true),
            kx2: sq(wn(grid.nx, false)),
            ky2: sq(wn(grid.ny, false)),
            kz: (0..nz).map(|j| j as f64 * PI).collect(),
            keep_x: keep_h(grid.nx),
            keep_y: keep_h(grid.ny),
            keep_z,
            lift_bottom,
            lift_top,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn basis(&self, kind: BasisKind) -> Basis {
        Basis::new(kind, self.grid)
    }

    // ---- horizontal FFT on a z-fastest complex array -------------------------

    fn horizontal(&self, buf: &mut [Complex64], inverse: bool) {
        let g = self.grid;
        let (nx, ny, nz) = (g.nx, g.ny, g.nz);
        let plane = nx * ny;
        let mut lv = vec![Complex64::new(0.0, 0.0); g.len()];
        for c in 0..plane {
            let col = &buf[c * nz..(c + 1) * nz];
            for (iz, v) in col.iter().enumerate() {
                lv[iz * plane + c] = *v;
            }
        }
        let (fy, fx) = if inverse {
            (&self.ifft_y, &self.ifft_x)
        } else {
            (&self.fft_y, &self.fft_x)
        };
        let scratch_len = fy
            .get_inplace_scratch_len()
            .max(fx.get_inplace_scratch_len());
        let scale = if inverse { 1.0 } else { 1.0 / plane as f64 };
        lv.par_chunks_mut(plane).for_each_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); scratch_len],
                    vec![Complex64::new(0.0, 0.0); plane],
                )
            },
            |(scratch, tmp), p| {
                fy.process_with_scratch(p, scratch);
                for ix in 0..nx {
                    for iy in 0..ny {
                        tmp[iy * nx + ix] = p[ix * ny + iy];
                    }
                }
                fx.process_with_scratch(tmp, scratch);
                for ix in 0..nx {
                    for iy in 0..ny {
                        p[ix * ny + iy] = tmp[iy * nx + ix] * scale;
                    }
                }
            },
        );
        for c in 0..plane {
            let col = &mut buf[c * nz..(c + 1) * nz];
            for (iz, v) in col.iter_mut().enumerate() {
                *v = lv[iz * plane + c];
            }
        }
    }

    /// 2D FFT of one horizontal plane (`ix * ny + iy` layout), normalized so
    /// that `h(x) = sum_k beta_k e^{i pi k.x}`.
    pub fn plane_forward(&self, plane: &[f64]) -> Vec<Complex64> {
        let g = self.grid;
        assert_eq!(plane.len(), g.columns());
        let mut p: Vec<Complex64> = plane.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.plane_fft(&mut p, false);
        p
    }

    /// Inverse of [`Spectral::plane_forward`], real part.
    pub fn plane_inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut p = coeffs.to_vec();
        self.plane_fft(&mut p, true);
        p.into_iter().map(|c| c.re).collect()
    }

    fn plane_fft(&self, p: &mut [Complex64], inverse: bool) {
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (fy, fx) = if inverse {
            (&self.ifft_y, &self.ifft_x)
        } else {
            (&self.fft_y, &self.fft_x)
        };
        fy.process(p);
        let mut tmp = vec![Complex64::new(0.0, 0.0); nx * ny];
        for ix in 0..nx {
            for iy in 0..ny {
                tmp[iy * nx + ix] = p[ix * ny + iy];
            }
        }
        fx.process(&mut tmp);
        let scale = if inverse { 1.0 } else { 1.0 / (nx * ny) as f64 };
        for ix in 0..nx {
            for iy in 0..ny {
                p[ix * ny + iy] = tmp[iy * nx + ix] * scale;
            }
        }
    }

    // ---- vertical transforms -----------------------------------------------

    /// Unnormalized DCT-I of every column (Neumann), or DST-I of every
    /// column interior with zero end slots (Dirichlet). Two real columns
    /// share one complex FFT of the even or odd extension.
    fn vertical(&self, real: &mut [f64], kind: BasisKind) {
        let nz = self.grid.nz;
        let m = 2 * (nz - 1);
        let fft = &self.fft_z;
        let scratch_len = fft.get_inplace_scratch_len();
        real.par_chunks_mut(2 * nz * 32).for_each_init(
            || (vec![Complex64::new(0.0, 0.0); scratch_len], Vec::new()),
            |(scratch, buf), block| {
                let pairs = block.len() / (2 * nz);
                buf.clear();
                buf.resize(pairs * m, Complex64::new(0.0, 0.0));
                for p in 0..pairs {
                    let (a, b) = block[2 * p * nz..(2 * p + 2) * nz].split_at(nz);
                    let e = &mut buf[p * m..(p + 1) * m];
                    match kind {
                        BasisKind::Neumann => {
                            for n in 0..nz {
                                e[n] = Complex64::new(a[n], b[n]);
                            }
                            for n in 1..nz - 1 {
                                e[m - n] = e[n];
                            }
                        }
                        BasisKind::Dirichlet => {
                            for n in 1..nz - 1 {
                                e[n] = Complex64::new(a[n], b[n]);
                                e[m - n] = -e[n];
                            }
                        }
                    }
                }
                fft.process_with_scratch(buf, scratch);
                for p in 0..pairs {
                    let e = &buf[p * m..(p + 1) * m];
                    let (a, b) = block[2 * p * nz..(2 * p + 2) * nz].split_at_mut(nz);
                    match kind {
                        BasisKind::Neumann => {
                            for k in 0..nz {
                                a[k] = 0.5 * e[k].re;
                                b[k] = 0.5 * e[k].im;
                            }
                        }
                        BasisKind::Dirichlet => {
                            for k in 1..nz - 1 {
                                a[k] = -0.5 * e[k].im;
                                b[k] = 0.5 * e[k].re;
                            }
                            a[0] = 0.0;
                            b[0] = 0.0;
                            a[nz - 1] = 0.0;
                            b[nz - 1] = 0.0;
                        }
                    }
                }
            },
        );
    }

    // ---- full transforms ---------------------------------------------------

    pub fn forward(&self, f: &ScalarField, kind: BasisKind) -> Spectrum {
        let g = self.grid;
        assert_eq!(f.grid(), g, "field grid does not match transform grid");
        let nz = g.nz;
        let mut real = f.values().to_vec();
        let norm = 2.0 / (nz - 1) as f64;
        match kind {
            BasisKind::Neumann => {
                self.vertical(&mut real, BasisKind::Neumann);
                real.par_chunks_mut(nz).for_each(|col| {
                    for v in col.iter_mut() {
                        *v *= norm;
                    }
                    col[0] *= 0.5;
                    col[nz - 1] *= 0.5;
                });
            }
            BasisKind::Dirichlet => {
                self.vertical(&mut real, BasisKind::Dirichlet);
                for v in real.iter_mut() {
                    *v *= norm;
                }
            }
        }
        let mut data: Vec<Complex64> = real.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        self.horizontal(&mut data, false);
        Spectrum { grid: g, kind, data }
    }

    pub fn inverse(&self, s: &Spectrum) -> ScalarField {
        let g = self.grid;
        assert_eq!(s.grid, g);
        let nz = g.nz;
        let mut data = s.data.clone();
        self.horizontal(&mut data, true);
        let mut real: Vec<f64> = data.into_iter().map(|c| c.re).collect();
        if s.kind == BasisKind::Neumann {
            for col in real.chunks_mut(nz) {
                col[0] *= 2.0;
                col[nz - 1] *= 2.0;
            }
        }
        self.vertical(&mut real, s.kind);
        ScalarField::from_vec(g, real).expect("grid length")
    }

    // ---- modal operators --------------------------------------------------

    fn map_modes(&self, s: &Spectrum, kind: BasisKind, f: impl Fn(usize, usize, usize, Complex64) -> Complex64 + Sync) -> Spectrum {
        let g = self.grid;
        let ny = g.ny;
        let nz = g.nz;
        let mut out = Spectrum::zeros(g, kind);
        out.data
            .par_chunks_mut(nz)
            .zip(s.data.par_chunks(nz))
            .enumerate()
            .for_each(|(c, (o, i))| {
                let (ix, iy) = (c / ny, c % ny);
                for j in 0..nz {
                    o[j] = f(ix, iy, j, i[j]);
                }
            });
        out
    }

    pub fn spec_dx(&self, s: &Spectrum) -> Spectrum {
        self.map_modes(s, s.kind, |ix, _, _, c| Complex64::new(0.0, self.kx_d[ix]) * c)
    }

    pub fn spec_dy(&self, s: &Spectrum) -> Spectrum {
        self.map_modes(s, s.kind, |_, iy, _, c| Complex64::new(0.0, self.ky_d[iy]) * c)
    }

    /// Vertical derivative; maps cosine series to sine series and back.
    pub fn spec_dz(&self, s: &Spectrum) -> Spectrum {
        let nz = self.grid.nz;
        match s.kind {
            BasisKind::Neumann => self.map_modes(s, BasisKind::Dirichlet, |_, _, j, c| {
                if j == 0 || j == nz - 1 {
                    Complex64::new(0.0, 0.0)
                } else {
                    -self.kz[j] * c
                }
            }),
            BasisKind::Dirichlet => self.map_modes(s, BasisKind::Neumann, |_, _, j, c| {
                if j == 0 || j == nz - 1 {
                    Complex64::new(0.0, 0.0)
                } else {
                    self.kz[j] * c
                }
            }),
        }
    }

    fn eig(&self, ix: usize, iy: usize, j: usize) -> f64 {
        self.kx2[ix] + self.ky2[iy] + self.kz[j] * self.kz[j]
    }

    pub fn spec_laplacian(&self, s: &Spectrum) -> Spectrum {
        self.map_modes(s, s.kind, |ix, iy, j, c| -self.eig(ix, iy, j) * c)
    }

    /// Solve `(I - a Lap) f = g` mode by mode.
    pub fn spec_helmholtz(&self, s: &Spectrum, a: f64) -> Spectrum {
        self.map_modes(s, s.kind, |ix, iy, j, c| c / (1.0 + a * self.eig(ix, iy, j)))
    }

    /// Zero the modes removed by the 2/3 rule.
    pub fn spec_dealias(&self, s: &mut Spectrum) {
        let g = self.grid;
        let (ny, nz) = (g.ny, g.nz);
        s.data.par_chunks_mut(nz).enumerate().for_each(|(c, col)| {
            let (ix, iy) = (c / ny, c % ny);
            let keep_h = self.keep_x[ix] && self.keep_y[iy];
            for (j, v) in col.iter_mut().enumerate() {
                if !(keep_h && self.keep_z[j]) {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
        });
    }

    /// Squared L2 norm from the coefficients (discrete Parseval).
    pub fn spec_l2_sq(&self, s: &Spectrum) -> f64 {
        let nz = self.grid.nz;
        let w = |j: usize| -> f64 {
            match s.kind {
                BasisKind::Neumann if j == 0 || j == nz - 1 => 1.0,
                BasisKind::Dirichlet if j == 0 || j == nz - 1 => 0.0,
                _ => 0.5,
            }
        };
        let mut total = 0.0;
        for col in s.data.chunks(nz) {
            for (j, c) in col.iter().enumerate() {
                total += w(j) * c.norm_sqr();
            }
        }
        total * self.grid.volume()
    }

    /// Squared L2 norm of the gradient from the coefficients.
    pub fn spec_grad_sq(&self, s: &Spectrum) -> f64 {
        let g = self.grid;
        let (ny, nz) = (g.ny, g.nz);
        let mut total = 0.0;
        for (c, col) in s.data.chunks(nz).enumerate() {
            let (ix, iy) = (c / ny, c % ny);
            let kh = self.kx_d[ix] * self.kx_d[ix] + self.ky_d[iy] * self.ky_d[iy];
            for (j, v) in col.iter().enumerate() {
                let a = v.norm_sqr();
                let edge = j == 0 || j == nz - 1;
                let wh = match s.kind {
                    BasisKind::Neumann if edge => 1.0,
                    BasisKind::Dirichlet if edge => 0.0,
                    _ => 0.5,
                };
                let wz = if edge { 0.0 } else { 0.5 };
                total += a * (wh * kh + wz * self.kz[j] * self.kz[j]);
            }
        }
        total * g.volume()
    }

    // ---- physical-space operators ---------------------------------------

    /// Gradient of a Neumann field; the vertical component is a Dirichlet field.
    pub fn grad(&self, f: &ScalarField) -> VectorField {
        let s = self.forward(f, BasisKind::Neumann);
        VectorField {
            v1: self.inverse(&self.spec_dx(&s)),
            v2: self.inverse(&self.spec_dy(&s)),
            w: self.inverse(&self.spec_dz(&s)),
        }
    }

    pub fn div(&self, u: &VectorField) -> ScalarField {
        self.inverse(&self.spec_div(u))
    }

    pub fn spec_div(&self, u: &VectorField) -> Spectrum {
        let a = self.forward(&u.v1, BasisKind::Neumann);
        let b = self.forward(&u.v2, BasisKind::Neumann);
        let c = self.forward(&u.w, BasisKind::Dirichlet);
        let mut d = self.spec_dx(&a);
        d.axpy(1.0, &self.spec_dy(&b));
        d.axpy(1.0, &self.spec_dz(&c));
        d
    }

    pub fn laplacian(&self, f: &ScalarField, kind: BasisKind) -> ScalarField {
        self.inverse(&self.spec_laplacian(&self.forward(f, kind)))
    }

    /// Vertical derivative of a field in `kind`; the result is in the other basis.
    pub fn dz(&self, f: &ScalarField, kind: BasisKind) -> ScalarField {
        self.inverse(&self.spec_dz(&self.forward(f, kind)))
    }

    /// As [`Spectral::dz`], failing if the requested output basis is not the
    /// one the derivative lands in.
    pub fn dz_into(&self, f: &ScalarField, input: BasisKind, output: BasisKind) -> Result<ScalarField> {
        if output == input {
            return Err(Error::InvalidArgument(format!(
                "dz maps {input:?} series to {:?} series, not {output:?}",
                input.flipped()
            )));
        }
        Ok(self.dz(f, input))
    }

    pub fn dx(&self, f: &ScalarField) -> ScalarField {
        self.inverse(&self.spec_dx(&self.forward(f, BasisKind::Neumann)))
    }

    pub fn dy(&self, f: &ScalarField) -> ScalarField {
        self.inverse(&self.spec_dy(&self.forward(f, BasisKind::Neumann)))
    }

    /// `u . grad f` for a Neumann field `f`, with the product dealiased.
    pub fn advect(&self, u: &VectorField, f: &ScalarField) -> Result<ScalarField> {
        u.grid().check(&f.grid())?;
        let gf = self.grad(f);
        let n = f.grid().len();
        let mut prod = vec![0.0; n];
        for i in 0..n {
            prod[i] = u.v1.values()[i] * gf.v1.values()[i]
                + u.v2.values()[i] * gf.v2.values()[i]
                + u.w.values()[i] * gf.w.values()[i];
        }
        let p = ScalarField::from_vec(f.grid(), prod)?;
        let mut s = self.forward(&p, BasisKind::Neumann);
        self.spec_dealias(&mut s);
        Ok(self.inverse(&s))
    }

    /// Solve `(I - a Lap) f = g` with `f` in `kind`.
    pub fn helmholtz_solve(&self, g: &ScalarField, a: f64, kind: BasisKind) -> Result<ScalarField> {
        if !(a >= 0.0) {
            return Err(Error::InvalidArgument(format!("Helmholtz coefficient {a} < 0")));
        }
        Ok(self.inverse(&self.spec_helmholtz(&self.forward(g, kind), a)))
    }

    /// Forward vector operator `(I - a_mu Lap - a_mulam grad div) u`.
    pub fn vector_helmholtz_apply(&self, u: &VectorField, a_mu: f64, a_mulam: f64) -> VectorField {
        let d = self.spec_div(u);
        let gd = VectorField {
            v1: self.inverse(&self.spec_dx(&d)),
            v2: self.inverse(&self.spec_dy(&d)),
            w: self.inverse(&self.spec_dz(&d)),
        };
        let l1 = self.laplacian(&u.v1, BasisKind::Neumann);
        let l2 = self.laplacian(&u.v2, BasisKind::Neumann);
        let l3 = self.laplacian(&u.w, BasisKind::Dirichlet);
        let comb = |u: &ScalarField, l: &ScalarField, g: &ScalarField| {
            let mut out = u.clone();
            out.axpy(-a_mu, l);
            out.axpy(-a_mulam, g);
            out
        };
        VectorField {
            v1: comb(&u.v1, &l1, &gd.v1),
            v2: comb(&u.v2, &l2, &gd.v2),
            w: comb(&u.w, &l3, &gd.w),
        }
    }

    /// Solve `(I - a_mu Lap - a_mulam grad div) u = G` in spectral form.
    ///
    /// Per mode the operator is `s I + a_mulam conj(b) b^T` with
    /// `b = (i kx, i ky, j pi)` the divergence symbol, inverted by
    /// Sherman-Morrison.
    pub fn spec_vector_helmholtz(
        &self,
        g: [&Spectrum; 3],
        a_mu: f64,
        a_mulam: f64,
    ) -> Result<[Spectrum; 3]> {
        if !(a_mu >= 0.0) || !(a_mu + a_mulam >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ill-posed vector Helmholtz coefficients a_mu = {a_mu}, a_mulam = {a_mulam}"
            )));
        }
        assert_eq!(g[0].kind, BasisKind::Neumann);
        assert_eq!(g[1].kind, BasisKind::Neumann);
        assert_eq!(g[2].kind, BasisKind::Dirichlet);
        let grid = self.grid;
        let (ny, nz) = (grid.ny, grid.nz);
        let mut out = [
            Spectrum::zeros(grid, BasisKind::Neumann),
            Spectrum::zeros(grid, BasisKind::Neumann),
            Spectrum::zeros(grid, BasisKind::Dirichlet),
        ];
        let [o1, o2, o3] = &mut out;
        let i = Complex64::new(0.0, 1.0);
        o1.data
            .par_chunks_mut(nz)
            .zip(o2.data.par_chunks_mut(nz))
            .zip(o3.data.par_chunks_mut(nz))
            .enumerate()
            .for_each(|(c, ((c1, c2), c3))| {
                let (ix, iy) = (c / ny, c % ny);
                let base = c * nz;
                for j in 0..nz {
                    let has_w = j != 0 && j != nz - 1;
                    let b = [
                        i * self.kx_d[ix],
                        i * self.ky_d[iy],
                        Complex64::new(if has_w { self.kz[j] } else { 0.0 }, 0.0),
                    ];
                    let gv = [g[0].data[base + j], g[1].data[base + j], g[2].data[base + j]];
                    let s = 1.0 + a_mu * self.eig(ix, iy, j);
                    let bb: f64 = b.iter().map(|v| v.norm_sqr()).sum();
                    let bg = b[0] * gv[0] + b[1] * gv[1] + b[2] * gv[2];
                    let f = a_mulam * bg / (s + a_mulam * bb);
                    c1[j] = (gv[0] - b[0].conj() * f) / s;
                    c2[j] = (gv[1] - b[1].conj() * f) / s;
                    c3[j] = if has_w {
                        (gv[2] - b[2].conj() * f) / s
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                }
            });
        Ok(out)
    }

    pub fn vector_helmholtz_solve(&self, g: &VectorField, a_mu: f64, a_mulam: f64) -> Result<VectorField> {
        let s = [
            self.forward(&g.v1, BasisKind::Neumann),
            self.forward(&g.v2, BasisKind::Neumann),
            self.forward(&g.w, BasisKind::Dirichlet),
        ];
        let [a, b, c] = self.spec_vector_helmholtz([&s[0], &s[1], &s[2]], a_mu, a_mulam)?;
        Ok(VectorField {
            v1: self.inverse(&a),
            v2: self.inverse(&b),
            w: self.inverse(&c),
        })
    }

    // ---- fields without a vertical boundary condition --------------------

    /// One-sided estimates of `df/dz` at both walls, per column.
    pub fn wall_slopes(&self, f: &ScalarField) -> (Vec<f64>, Vec<f64>) {
        let nz = self.grid.nz;
        let n = self.lift_bottom.len();
        let mut s0 = Vec::with_capacity(self.grid.columns());
        let mut s1 = Vec::with_capacity(self.grid.columns());
        for col in f.values().chunks(nz) {
            let mut a = 0.0;
            let mut b = 0.0;
            for m in 0..n {
                a += self.lift_bottom[m] * col[m];
                b += self.lift_top[m] * col[nz - 1 - m];
            }
            s0.push(a);
            s1.push(b);
        }
        (s0, s1)
    }

    /// Vertical derivative of a field with no vertical boundary condition.
    ///
    /// Subtracts `l(z) = s0 (z - z^2/2) + s1 z^2/2`, whose wall slopes match
    /// the one-sided estimates, differentiates the remainder as a cosine
    /// series and adds `l'` back.
    pub fn dz_free(&self, f: &ScalarField) -> ScalarField {
        let g = self.grid;
        let nz = g.nz;
        let z = g.z_nodes();
        let (s0, s1) = self.wall_slopes(f);
        let mut rem = f.clone();
        for (c, col) in rem.values_mut().chunks_mut(nz).enumerate() {
            for m in 0..nz {
                col[m] -= s0[c] * (z[m] - 0.5 * z[m] * z[m]) + s1[c] * 0.5 * z[m] * z[m];
            }
        }
        let mut d = self.dz(&rem, BasisKind::Neumann);
        for (c, col) in d.values_mut().chunks_mut(nz).enumerate() {
            for m in 0..nz {
                col[m] += s0[c] * (1.0 - z[m]) + s1[c] * z[m];
            }
        }
        d
    }
}

/// Finite difference weights for the first derivative at `x0` (Fornberg).
pub fn fd_weights(x0: f64, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = 1;
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - x0;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|r| r[1]).collect()
}

//! Robin boundary conditions and their reduction to homogeneous Neumann form.
//!
//! For a variable `F` with `dF/dz = alpha (F^b - F)` at a wall, the profile
//! `A(z) = -(alpha_b/2)(1-z)^2 + (alpha_t/2) z^2` satisfies `A'(0) = alpha_b`,
//! `A'(1) = alpha_t`, so `d(B F)/dz = alpha B F^b` at the walls with `B = e^A`.
//! Subtracting an extension `psi` of that wall data gives a field
//! `frak_F = B F - psi` with zero normal derivative.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::spectral::Spectral;

const PI: f64 = std::f64::consts::PI;

/// The four variables carrying Robin conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryVar {
    T,
    V,
    C,
    R,
}

impl BoundaryVar {
    pub const ALL: [BoundaryVar; 4] = [BoundaryVar::T, BoundaryVar::V, BoundaryVar::C, BoundaryVar::R];

    /// Key used in config files.
    pub fn key(self) -> &'static str {
        match self {
            BoundaryVar::T => "T",
            BoundaryVar::V => "v",
            BoundaryVar::C => "c",
            BoundaryVar::R => "r",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

pub fn validate_signs(var: BoundaryVar, alpha_bottom: f64, alpha_top: f64) -> Result<()> {
    if !alpha_bottom.is_finite() || alpha_bottom > 0.0 {
        return Err(Error::BoundarySign {
            variable: var.key(),
            face: "bottom",
            alpha: alpha_bottom,
        });
    }
    if !alpha_top.is_finite() || alpha_top < 0.0 {
        return Err(Error::BoundarySign {
            variable: var.key(),
            face: "top",
            alpha: alpha_top,
        });
    }
    Ok(())
}

/// The quadratic `A(z)` and its exponential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobinProfile {
    pub alpha_bottom: f64,
    pub alpha_top: f64,
}

impl RobinProfile {
    pub fn a(&self, z: f64) -> f64 {
        -0.5 * self.alpha_bottom * (1.0 - z).powi(2) + 0.5 * self.alpha_top * z * z
    }

    pub fn da(&self, z: f64) -> f64 {
        self.alpha_bottom * (1.0 - z) + self.alpha_top * z
    }

    pub fn dda(&self) -> f64 {
        self.alpha_top - self.alpha_bottom
    }

    pub fn b(&self, z: f64) -> f64 {
        self.a(z).exp()
    }
}

/// Build the profile after checking the sign condition for `var`.
pub fn robin_profile(var: BoundaryVar, alpha_bottom: f64, alpha_top: f64) -> Result<RobinProfile> {
    validate_signs(var, alpha_bottom, alpha_top)?;
    Ok(RobinProfile {
        alpha_bottom,
        alpha_top,
    })
}

fn phi(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

fn phi_d(s: f64) -> f64 {
    if s > 0.0 {
        phi(s) / (s * s)
    } else {
        0.0
    }
}

fn phi_dd(s: f64) -> f64 {
    if s > 0.0 {
        phi(s) * (1.0 / s.powi(4) - 2.0 / s.powi(3))
    } else {
        0.0
    }
}

/// Cutoff equal to 1 below `z = 1/4`, 0 above `z = 3/4`.
pub fn cutoff_chi0(z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::InvalidArgument(format!("cutoff evaluated at z = {z} outside [0, 1]")));
    }
    Ok(chi_derivs(z).0)
}

/// `(chi0, chi0', chi0'')` at `z`.
pub fn chi_derivs(z: f64) -> (f64, f64, f64) {
    let b = 1.5 - 2.0 * z;
    if b >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    if b <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let n = phi(b);
    let n1 = phi_d(b);
    let n2 = phi_dd(b);
    let d = n + phi(1.0 - b);
    let d1 = n1 - phi_d(1.0 - b);
    let d2 = n2 + phi_dd(1.0 - b);
    let s = n / d;
    let s1 = (n1 * d - n * d1) / (d * d);
    let s2 = (n2 * d - n * d2) / (d * d) - 2.0 * d1 * (n1 * d - n * d1) / (d * d * d);
    (s, -2.0 * s1, 4.0 * s2)
}

/// One horizontal mode `a cos(pi k.x) + b sin(pi k.x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeTerm {
    pub kx: i64,
    pub ky: i64,
    pub a: f64,
    pub b: f64,
}

pub type SurfaceFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Boundary values `F^b` on one face.
#[derive(Clone)]
pub enum BoundaryData {
    Constant(f64),
    Modes(Vec<ModeTerm>),
    /// `f(x, y, t)`, optionally with its exact time derivative.
    TimeDependent { f: SurfaceFn, rate: Option<SurfaceFn> },
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Constant(c) => write!(f, "Constant({c})"),
            BoundaryData::Modes(m) => write!(f, "Modes({m:?})"),
            BoundaryData::TimeDependent { rate, .. } => {
                write!(f, "TimeDependent(analytic rate: {})", rate.is_some())
            }
        }
    }
}

impl Default for BoundaryData {
    fn default() -> Self {
        BoundaryData::Constant(0.0)
    }
}

impl BoundaryData {
    pub fn is_time_dependent(&self) -> bool {
        matches!(self, BoundaryData::TimeDependent { .. })
    }

    /// Values on the horizontal grid (`ix * ny + iy` layout).
    pub fn evaluate(&self, grid: Grid, t: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.columns());
        for ix in 0..grid.nx {
            for iy in 0..grid.ny {
                let (x, y) = (grid.x(ix), grid.y(iy));
                out.push(self.at(grid, x, y, t));
            }
        }
        out
    }

    fn at(&self, grid: Grid, x: f64, y: f64, t: f64) -> f64 {
        match self {
            BoundaryData::Constant(c) => *c,
            BoundaryData::Modes(m) => m
                .iter()
                .filter(|m| resolved(grid, m))
                .map(|m| {
                    let th = PI * (m.kx as f64 * x + m.ky as f64 * y);
                    m.a * th.cos() + m.b * th.sin()
                })
                .sum(),
            BoundaryData::TimeDependent { f, .. } => f(x, y, t),
        }
    }

    /// Exact time derivative when known; `None` for time-dependent data
    /// without a registered rate.
    pub fn rate(&self, grid: Grid, t: f64) -> Option<Vec<f64>> {
        match self {
            BoundaryData::Constant(_) | BoundaryData::Modes(_) => Some(vec![0.0; grid.columns()]),
            BoundaryData::TimeDependent { rate: Some(r), .. } => {
                let mut out = Vec::with_capacity(grid.columns());
                for ix in 0..grid.nx {
                    for iy in 0..grid.ny {
                        out.push(r(grid.x(ix), grid.y(iy), t));
                    }
                }
                Some(out)
            }
            BoundaryData::TimeDependent { rate: None, .. } => None,
        }
    }

    pub fn warn_truncation(&self, grid: Grid) {
        if let BoundaryData::Modes(m) = self {
            for t in m.iter().filter(|m| !resolved(grid, m)) {
                log::warn!("boundary mode ({}, {}) not resolved on {:?}; dropped", t.kx, t.ky, grid);
            }
        }
    }
}

fn resolved(grid: Grid, m: &ModeTerm) -> bool {
    (m.kx.unsigned_abs() as usize) < grid.nx / 2 && (m.ky.unsigned_abs() as usize) < grid.ny / 2
}

#[derive(Clone, Debug, Default)]
pub struct VariableBoundary {
    pub alpha_bottom: f64,
    pub alpha_top: f64,
    pub bottom: BoundaryData,
    pub top: BoundaryData,
}

/// Robin data for `T, q_v, q_c, q_r`.
#[derive(Clone, Debug, Default)]
pub struct BoundarySpec {
    pub vars: [VariableBoundary; 4],
    /// Skip the sign check (experiments only).
    pub waive_sign_check: bool,
}

impl BoundarySpec {
    pub fn get(&self, v: BoundaryVar) -> &VariableBoundary {
        &self.vars[v.index()]
    }

    pub fn get_mut(&mut self, v: BoundaryVar) -> &mut VariableBoundary {
        &mut self.vars[v.index()]
    }

    /// Same coefficients for every variable, zero data.
    pub fn uniform(alpha_bottom: f64, alpha_top: f64) -> Self {
        let vb = VariableBoundary {
            alpha_bottom,
            alpha_top,
            ..Default::default()
        };
        BoundarySpec {
            vars: [vb.clone(), vb.clone(), vb.clone(), vb],
            waive_sign_check: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in BoundaryVar::ALL {
            let b = self.get(v);
            if !self.waive_sign_check {
                validate_signs(v, b.alpha_bottom, b.alpha_top)?;
            } else if !b.alpha_bottom.is_finite() || !b.alpha_top.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite Robin coefficient for {}", v.key())));
            }
        }
        Ok(())
    }

    pub fn is_time_dependent(&self) -> bool {
        self.vars.iter().any(|v| v.bottom.is_time_dependent() || v.top.is_time_dependent())
    }
}

/// `psi` and the derivatives used by the homogenized equations.
#[derive(Clone, Debug)]
pub struct Extension {
    pub psi: ScalarField,
    pub dx_psi: ScalarField,
    pub dy_psi: ScalarField,
    pub dz_psi: ScalarField,
    pub dzz_psi: ScalarField,
    pub lap_psi: ScalarField,
}

/// Vertical profile of mode `k` with wall slopes `b0`, `b1`.
#[derive(Clone, Copy, Debug)]
struct ModeProfile {
    kabs: f64,
    b0: Complex64,
    b1: Complex64,
}

impl ModeProfile {
    /// `(P, P', P'')` at `z`.
    fn eval(&self, z: f64) -> (Complex64, Complex64, Complex64) {
        let (c, c1, c2) = chi_derivs(z);
        let (p0, d0, dd0, p1, d1, dd1);
        if self.kabs == 0.0 {
            p0 = self.b0 * z;
            d0 = self.b0;
            dd0 = Complex64::new(0.0, 0.0);
            p1 = self.b1 * z;
            d1 = self.b1;
            dd1 = Complex64::new(0.0, 0.0);
        } else {
            let e0 = (-self.kabs * z).exp();
            let e1 = (-self.kabs * (1.0 - z)).exp();
            p0 = -self.b0 / self.kabs * e0;
            d0 = self.b0 * e0;
            dd0 = -self.kabs * self.b0 * e0;
            p1 = self.b1 / self.kabs * e1;
            d1 = self.b1 * e1;
            dd1 = self.kabs * self.b1 * e1;
        }
        let p = c * p0 + (1.0 - c) * p1;
        let dp = c1 * (p0 - p1) + c * d0 + (1.0 - c) * d1;
        let ddp = c2 * (p0 - p1) + 2.0 * c1 * (d0 - d1) + c * dd0 + (1.0 - c) * dd1;
        (p, dp, ddp)
    }
}

fn mode_profiles(grid: Grid, h_bottom: &[Complex64], h_top: &[Complex64]) -> Vec<ModeProfile> {
    assert_eq!(h_bottom.len(), grid.columns());
    assert_eq!(h_top.len(), grid.columns());
    let mut out = Vec::with_capacity(grid.columns());
    for ix in 0..grid.nx {
        for iy in 0..grid.ny {
            let kx = Grid::wavenumber(ix, grid.nx) as f64;
            let ky = Grid::wavenumber(iy, grid.ny) as f64;
            let c = ix * grid.ny + iy;
            out.push(ModeProfile {
                kabs: (kx * kx + ky * ky).sqrt(),
                b0: h_bottom[c],
                b1: h_top[c],
            });
        }
    }
    out
}

/// Extension of wall slopes given by horizontal Fourier coefficients
/// (as produced by [`Spectral::plane_forward`]).
pub fn extend(sp: &Spectral, h_bottom: &[Complex64], h_top: &[Complex64]) -> Extension {
    let grid = sp.grid();
    let modes = mode_profiles(grid, h_bottom, h_top);
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    let plane = nx * ny;
    let zero = Complex64::new(0.0, 0.0);
    let mut levels = vec![[vec![zero; plane], vec![zero; plane], vec![zero; plane], vec![zero; plane], vec![zero; plane], vec![zero; plane]]; nz];
    let i = Complex64::new(0.0, 1.0);
    for (c, m) in modes.iter().enumerate() {
        let (ix, iy) = (c / ny, c % ny);
        let kx = if ix == nx / 2 { 0.0 } else { PI * Grid::wavenumber(ix, nx) as f64 };
        let ky = if iy == ny / 2 { 0.0 } else { PI * Grid::wavenumber(iy, ny) as f64 };
        let k2 = PI * PI * m.kabs * m.kabs;
        for (iz, lv) in levels.iter_mut().enumerate() {
            let (p, dp, ddp) = m.eval(grid.z(iz));
            lv[0][c] = p;
            lv[1][c] = i * kx * p;
            lv[2][c] = i * ky * p;
            lv[3][c] = dp;
            lv[4][c] = ddp;
            lv[5][c] = ddp - k2 * p;
        }
    }
    let mut out: Vec<Vec<f64>> = vec![vec![0.0; grid.len()]; 6];
    for (iz, lv) in levels.iter().enumerate() {
        for (q, coeffs) in lv.iter().enumerate() {
            let vals = sp.plane_inverse(coeffs);
            for (c, v) in vals.into_iter().enumerate() {
                out[q][c * nz + iz] = v;
            }
        }
    }
    let mut it = out.into_iter().map(|v| ScalarField::from_vec(grid, v).expect("grid length"));
    Extension {
        psi: it.next().unwrap(),
        dx_psi: it.next().unwrap(),
        dy_psi: it.next().unwrap(),
        dz_psi: it.next().unwrap(),
        dzz_psi: it.next().unwrap(),
        lap_psi: it.next().unwrap(),
    }
}

/// Pointwise `psi(x, y, z)` for the same coefficients; used as an
/// independent check of [`extend`].
pub fn extend_at(grid: Grid, h_bottom: &[Complex64], h_top: &[Complex64], x: f64, y: f64, z: f64) -> f64 {
    let modes = mode_profiles(grid, h_bottom, h_top);
    let mut s = Complex64::new(0.0, 0.0);
    for (c, m) in modes.iter().enumerate() {
        let (ix, iy) = (c / grid.ny, c % grid.ny);
        let kx = Grid::wavenumber(ix, grid.nx) as f64;
        let ky = Grid::wavenumber(iy, grid.ny) as f64;
        let (p, _, _) = m.eval(z);
        let ph = PI * (kx * x + ky * y);
        s += p * Complex64::new(ph.cos(), ph.sin());
    }
    s.re
}

/// Per-variable profiles and extension.
#[derive(Clone, Debug)]
pub struct VariableFactors {
    pub profile: RobinProfile,
    pub b: Vec<f64>,
    pub binv: Vec<f64>,
    /// `A'(z)`, i.e. `d log B / dz`
    pub da: Vec<f64>,
    /// `B d^2(B^{-1})/dz^2 = A'^2 - A''`
    pub dzz_binv_b: Vec<f64>,
    pub ext: Extension,
    pub dt_psi: ScalarField,
    /// Fourier coefficients of the wall slopes fed to the extension.
    pub h_bottom: Vec<Complex64>,
    pub h_top: Vec<Complex64>,
}

impl VariableFactors {
    pub fn psi(&self) -> &ScalarField {
        &self.ext.psi
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum PsiRate {
    /// Use the registered analytic rate, falling back to differences.
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Clone, Debug)]
pub struct HomogenizationFactors {
    pub vars: Vec<VariableFactors>,
    pub time: f64,
}

impl HomogenizationFactors {
    pub fn get(&self, v: BoundaryVar) -> &VariableFactors {
        &self.vars[v.index()]
    }

    /// Trivial factors: `B = 1`, `psi = 0`.
    pub fn trivial(sp: &Spectral) -> Self {
        let spec = BoundarySpec {
            waive_sign_check: true,
            ..Default::default()
        };
        build_factors(sp, &spec, 0.0, &PsiRate::Analytic).expect("trivial factors")
    }
}

fn wall_slopes(
    sp: &Spectral,
    prof: &RobinProfile,
    data_b: &[f64],
    data_t: &[f64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let sb = prof.alpha_bottom * prof.b(0.0);
    let st = prof.alpha_top * prof.b(1.0);
    let hb: Vec<f64> = data_b.iter().map(|v| sb * v).collect();
    let ht: Vec<f64> = data_t.iter().map(|v| st * v).collect();
    (sp.plane_forward(&hb), sp.plane_forward(&ht))
}

fn variable_factors(sp: &Spectral, vb: &VariableBoundary, t: f64, rate: &PsiRate) -> VariableFactors {
    let grid = sp.grid();
    let prof = RobinProfile {
        alpha_bottom: vb.alpha_bottom,
        alpha_top: vb.alpha_top,
    };
    vb.bottom.warn_truncation(grid);
    vb.top.warn_truncation(grid);
    let z = grid.z_nodes();
    let b: Vec<f64> = z.iter().map(|&z| prof.b(z)).collect();
    let binv = b.iter().map(|v| 1.0 / v).collect();
    let da: Vec<f64> = z.iter().map(|&z| prof.da(z)).collect();
    let dzz_binv_b = da.iter().map(|a| a * a - prof.dda()).collect();
    let (hb, ht) = wall_slopes(sp, &prof, &vb.bottom.evaluate(grid, t), &vb.top.evaluate(grid, t));
    let ext = extend(sp, &hb, &ht);
    let analytic = match rate {
        PsiRate::Analytic => vb.bottom.rate(grid, t).zip(vb.top.rate(grid, t)),
        PsiRate::FiniteDifference => {
            if vb.is_steady() {
                Some((vec![0.0; grid.columns()], vec![0.0; grid.columns()]))
            } else {
                None
            }
        }
    };
    let dt_psi = match analytic {
        Some((rb, rt)) => {
            if rb.iter().chain(&rt).all(|v| *v == 0.0) {
                ScalarField::zeros(grid)
            } else {
                let (db, dt) = wall_slopes(sp, &prof, &rb, &rt);
                extend(sp, &db, &dt).psi
            }
        }
        None => {
            let eps = 1e-4 * t.abs().max(1.0);
            let e = |s: f64| {
                let (hb, ht) = wall_slopes(sp, &prof, &vb.bottom.evaluate(grid, s), &vb.top.evaluate(grid, s));
                extend(sp, &hb, &ht).psi
            };
            let mut d = e(t + eps);
            d.axpy(-1.0, &e(t - eps));
            d.scale(0.5 / eps)
        }
    };
    VariableFactors {
        profile: prof,
        b,
        binv,
        da,
        dzz_binv_b,
        ext,
        dt_psi,
        h_bottom: hb,
        h_top: ht,
    }
}

impl VariableBoundary {
    fn is_steady(&self) -> bool {
        !self.bottom.is_time_dependent() && !self.top.is_time_dependent()
    }
}

pub fn build_factors(sp: &Spectral, spec: &BoundarySpec, t: f64, rate: &PsiRate) -> Result<HomogenizationFactors> {
    spec.validate()?;
    let vars = BoundaryVar::ALL
        .iter()
        .map(|&v| variable_factors(sp, spec.get(v), t, rate))
        .collect();
    Ok(HomogenizationFactors { vars, time: t })
}

/// `B F - psi`
pub fn homogenize(f: &ScalarField, vf: &VariableFactors) -> Result<ScalarField> {
    f.grid().check(&vf.ext.psi.grid())?;
    let mut out = f.scale_by_profile(&vf.b);
    out.axpy(-1.0, &vf.ext.psi);
    Ok(out)
}

/// `B^{-1}(frak_F + psi)`
pub fn dehomogenize(frak: &ScalarField, vf: &VariableFactors) -> Result<ScalarField> {
    frak.grid().check(&vf.ext.psi.grid())?;
    let mut g = frak.clone();
    g.axpy(1.0, &vf.ext.psi);
    Ok(g.scale_by_profile(&vf.binv))
}

/// Empirical trace constants `||psi||_{H^{s+3/2}} / ||h||_{H^s}` for `s = 0, 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceReport {
    pub psi_norm: [f64; 2],
    pub data_norm: [f64; 2],
    pub ratio: [f64; 2],
}

/// Norms from the modal profiles: horizontal weights `(1 + pi^2|k|^2)^{r-m}`
/// on `||d^m P_k/dz^m||^2`, `m = 0..2`, vertical integrals by the trapezoid
/// rule on the grid nodes.
pub fn trace_norm_check(grid: Grid, h_bottom: &[Complex64], h_top: &[Complex64]) -> TraceReport {
    let modes = mode_profiles(grid, h_bottom, h_top);
    let w = grid.z_weights();
    let mut psi_norm = [0.0; 2];
    let mut data_norm = [0.0; 2];
    for m in &modes {
        let lam = 1.0 + PI * PI * m.kabs * m.kabs;
        let mut ints = [0.0; 3];
        for (iz, wz) in w.iter().enumerate() {
            let (p, dp, ddp) = m.eval(grid.z(iz));
            ints[0] += wz * p.norm_sqr();
            ints[1] += wz * dp.norm_sqr();
            ints[2] += wz * ddp.norm_sqr();
        }
        let hb = m.b0.norm_sqr() + m.b1.norm_sqr();
        for s in 0..2 {
            let r = s as f64 + 1.5;
            for (k, v) in ints.iter().enumerate() {
                psi_norm[s] += lam.powf(r - k as f64) * v;
            }
            data_norm[s] += lam.powi(s as i32) * hb;
        }
    }
    let area = grid.volume();
    let mut ratio = [0.0; 2];
    for s in 0..2 {
        psi_norm[s] = (area * psi_norm[s]).sqrt();
        data_norm[s] = (area * data_norm[s]).sqrt();
        ratio[s] = if data_norm[s] == 0.0 { 0.0 } else { psi_norm[s] / data_norm[s] };
    }
    TraceReport {
        psi_norm,
        data_norm,
        ratio,
    }
}

//! Manufactured-solution harness for the implicit-diffusion / explicit-reaction
//! splitting used by the linear step.
//!
//! The scalar problem is `dF/dt = D Lap F - k F^2 + f` with exact solution
//! `F = e^{-t} g`, `g = exp(0.5 cos pi x + 0.4 cos pi z) (1 + 0.3 sin pi y)`,
//! which has zero wall slope and is not band-limited.

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::spectral::{BasisKind, Spectral};

const PI: f64 = std::f64::consts::PI;

fn g_and_lap(x: f64, y: f64, z: f64) -> (f64, f64) {
    let (ax, az) = (0.5, 0.4);
    let ex = (ax * (PI * x).cos()).exp();
    let ez = (az * (PI * z).cos()).exp();
    let yy = 1.0 + 0.3 * (PI * y).sin();
    let g = ex * ez * yy;
    let exp_ratio = |a: f64, s: f64| -a * PI * PI * (PI * s).cos() + a * a * PI * PI * (PI * s).sin().powi(2);
    let lap = g * (exp_ratio(ax, x) + exp_ratio(az, z) + (-0.3 * PI * PI * (PI * y).sin()) / yy);
    (g, lap)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmsCase {
    pub diffusivity: f64,
    pub reaction: f64,
    pub t_end: f64,
}

impl Default for MmsCase {
    fn default() -> Self {
        MmsCase {
            diffusivity: 0.05,
            reaction: 0.5,
            t_end: 0.5,
        }
    }
}

impl MmsCase {
    pub fn exact(&self, grid: Grid, t: f64) -> ScalarField {
        ScalarField::from_fn(grid, |x, y, z| (-t).exp() * g_and_lap(x, y, z).0)
    }

    fn forcing(&self, grid: Grid, t: f64) -> ScalarField {
        let (d, k) = (self.diffusivity, self.reaction);
        ScalarField::from_fn(grid, |x, y, z| {
            let (g, lap) = g_and_lap(x, y, z);
            let e = (-t).exp();
            -e * g - d * e * lap + k * e * e * g * g
        })
    }

    /// Max-norm error at `t_end` after stepping with `dt`.
    pub fn temporal_error(&self, grid: Grid, dt: f64) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        let sp = Spectral::new(grid);
        let n = (self.t_end / dt).round() as usize;
        let mut f = self.exact(grid, 0.0);
        for s in 0..n {
            let t1 = (s + 1) as f64 * dt;
            let forcing = self.forcing(grid, t1);
            let mut rhs = f.clone();
            let reaction = f.map(|v| -self.reaction * v * v);
            rhs.axpy(dt, &reaction);
            rhs.axpy(dt, &forcing);
            f = sp.helmholtz_solve(&rhs, dt * self.diffusivity, BasisKind::Neumann)?;
        }
        let exact = self.exact(grid, n as f64 * dt);
        Ok((&f - &exact).max_abs())
    }

    /// Max-norm error of the steady problem `(I - a Lap) F = g - a Lap g`,
    /// which isolates the spatial discretization.
    pub fn spatial_error(&self, grid: Grid) -> Result<f64> {
        let sp = Spectral::new(grid);
        let a = self.diffusivity;
        let rhs = ScalarField::from_fn(grid, |x, y, z| {
            let (g, lap) = g_and_lap(x, y, z);
            g - a * lap
        });
        let exact = ScalarField::from_fn(grid, |x, y, z| g_and_lap(x, y, z).0);
        let f = sp.helmholtz_solve(&rhs, a, BasisKind::Neumann)?;
        Ok((&f - &exact).max_abs())
    }
}

/// `log2(e_i / e_{i+1})` for successive halvings.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_grid;

    #[test]
    fn laplacian_matches_spectral() {
        let g = make_grid(32, 32, 33).unwrap();
        let sp = Spectral::new(g);
        let f = ScalarField::from_fn(g, |x, y, z| g_and_lap(x, y, z).0);
        let lap = ScalarField::from_fn(g, |x, y, z| g_and_lap(x, y, z).1);
        let num = sp.laplacian(&f, BasisKind::Neumann);
        assert!((&num - &lap).max_abs() < 1e-8 * lap.max_abs());
    }

    #[test]
    fn first_order_in_time() {
        let g = make_grid(8, 8, 9).unwrap();
        let c = MmsCase::default();
        let e: Vec<f64> = [0.05, 0.025].iter().map(|&dt| c.temporal_error(g, dt).unwrap()).collect();
        let p = observed_orders(&e)[0];
        assert!((p - 1.0).abs() < 0.2, "{p}");
    }
}

//! Semi-Lagrangian transport of `log rho_d`.

use rayon::prelude::*;

use crate::error::Result;
use crate::fields::{ScalarField, VectorField};
use crate::interp::Stencil;
use crate::spectral::Spectral;

/// `log rho(x, t + dt) = log rho(x_d, t) - dt div u(x_m)`, where `x_m` is the
/// midpoint of the characteristic ending at `x` and `x_d = 2 x_m - x` its foot.
pub fn density_step(sp: &Spectral, log_rho: &ScalarField, u: &VectorField, dt: f64) -> Result<ScalarField> {
    let g = log_rho.grid();
    g.check(&u.grid())?;
    let div = sp.div(u);
    let ux = u.v1.scale(1.0 / g.dx());
    let uy = u.v2.scale(1.0 / g.dy());
    let uz = u.w.scale(1.0 / g.dz());
    let (ny, nz) = (g.ny, g.nz);
    let top = (nz - 1) as f64;
    let wmax = u.w.max_abs();
    let mut out = vec![0.0; g.len()];
    let overshoot = out
        .par_chunks_mut(nz)
        .enumerate()
        .map(|(c, col)| {
            let (ix, iy) = (c / ny, c % ny);
            let mut worst: f64 = 0.0;
            for (iz, o) in col.iter_mut().enumerate() {
                let p = (ix as f64, iy as f64, iz as f64);
                let i = g.idx(ix, iy, iz);
                let mut m = (
                    p.0 - 0.5 * dt * ux.values()[i],
                    p.1 - 0.5 * dt * uy.values()[i],
                    p.2 - 0.5 * dt * uz.values()[i],
                );
                for _ in 0..2 {
                    let st = Stencil::new(g, m.0, m.1, m.2.clamp(0.0, top));
                    m = (
                        p.0 - 0.5 * dt * st.apply(&ux),
                        p.1 - 0.5 * dt * st.apply(&uy),
                        p.2 - 0.5 * dt * st.apply(&uz),
                    );
                }
                let d = (2.0 * m.0 - p.0, 2.0 * m.1 - p.1, 2.0 * m.2 - p.2);
                let over = (-d.2).max(d.2 - top).max(0.0) * g.dz();
                worst = worst.max(over);
                let dz = d.2.clamp(0.0, top);
                let mz = m.2.clamp(0.0, top);
                *o = Stencil::new(g, d.0, d.1, dz).apply(log_rho) - dt * Stencil::new(g, m.0, m.1, mz).apply(&div);
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    if overshoot > dt * wmax && overshoot > 0.0 {
        log::warn!("characteristic foot left the vertical domain by {overshoot:e}; clamped");
    }
    ScalarField::from_vec(g, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_grid;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn rest_is_identity() {
        let g = make_grid(8, 8, 9).unwrap();
        let sp = Spectral::new(g);
        let lr = ScalarField::from_fn(g, |x, y, z| 0.1 * (PI * x).sin() * y - z);
        let out = density_step(&sp, &lr, &VectorField::zeros(g), 1e-3).unwrap();
        assert_eq!(out, lr);
    }

    #[test]
    fn uniform_translation() {
        let g = make_grid(32, 4, 5).unwrap();
        let sp = Spectral::new(g);
        let lr = ScalarField::from_fn(g, |x, _, _| (PI * x).sin());
        let u = VectorField {
            v1: ScalarField::constant(g, 1.0),
            v2: ScalarField::zeros(g),
            w: ScalarField::zeros(g),
        };
        let dt = 0.01;
        let out = density_step(&sp, &lr, &u, dt).unwrap();
        let want = ScalarField::from_fn(g, |x, _, _| (PI * (x - dt)).sin());
        let e = (&out - &want).max_abs();
        // cubic interpolation error at offset 0.16 cells
        assert!(e < 3e-5, "{e}");
    }
}

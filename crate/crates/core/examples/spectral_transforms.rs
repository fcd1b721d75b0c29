//! Cosine/sine transforms, spectral derivatives and the Helmholtz solve.

use moistflow::spectral::{BasisKind, Spectral};
use moistflow::{make_grid, ScalarField};

const PI: f64 = std::f64::consts::PI;

fn main() -> moistflow::Result<()> {
    let g = make_grid(16, 16, 17)?;
    let sp = Spectral::new(g);

    // zero wall slope, so the cosine basis applies
    let f = ScalarField::from_fn(g, |x, y, z| (PI * x).sin() * (PI * y).cos() * (2.0 * PI * z).cos());
    let back = sp.inverse(&sp.forward(&f, BasisKind::Neumann));
    println!("round trip error      {:.2e}", (&back - &f).max_abs());

    let lap = sp.laplacian(&f, BasisKind::Neumann);
    let exact = f.scale(-6.0 * PI * PI);
    println!("laplacian error       {:.2e}", (&lap - &exact).max_abs());

    // (I - a Lap) u = g
    let a = 0.01;
    let rhs = ScalarField::from_fn(g, |x, y, z| (1.0 + 6.0 * PI * PI * a) * (PI * x).sin() * (PI * y).cos() * (2.0 * PI * z).cos());
    let u = sp.helmholtz_solve(&rhs, a, BasisKind::Neumann)?;
    println!("helmholtz error       {:.2e}", (&u - &f).max_abs());

    // a field with nonzero wall slope needs the lifted derivative
    let h = ScalarField::from_fn(g, |_, _, z| z * z * z);
    let dz = sp.dz_free(&h);
    let want = ScalarField::from_fn(g, |_, _, z| 3.0 * z * z);
    println!("dz_free error (z^3)   {:.2e}", (&dz - &want).max_abs());
    Ok(())
}

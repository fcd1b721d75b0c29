//! Robin boundary data, the extension lift and the change of variables to
//! homogeneous Neumann form.

use moistflow::boundary::{
    build_factors, dehomogenize, homogenize, BoundaryData, BoundarySpec, BoundaryVar, ModeTerm, PsiRate,
};
use moistflow::spectral::Spectral;
use moistflow::{make_grid, ScalarField};

const PI: f64 = std::f64::consts::PI;

fn main() -> moistflow::Result<()> {
    let g = make_grid(16, 16, 33)?;
    let sp = Spectral::new(g);
    let (ab, at) = (-1.0, 0.5);
    let mut spec = BoundarySpec::uniform(ab, at);
    let t = spec.get_mut(BoundaryVar::T);
    t.bottom = BoundaryData::Modes(vec![
        ModeTerm { kx: 0, ky: 0, a: 1.1, b: 0.0 },
        ModeTerm { kx: 1, ky: 0, a: 0.05, b: 0.0 },
    ]);
    t.top = BoundaryData::Constant(0.9);
    let factors = build_factors(&sp, &spec, 0.0, &PsiRate::Analytic)?;
    let vf = factors.get(BoundaryVar::T);

    // a field obeying dF/dz = alpha (F^b - F) at both walls
    let f = ScalarField::from_fn(g, |x, _, z| 1.0 + 0.1 * z * z + 0.02 * (PI * x).cos() * (PI * z).cos());
    let frak = homogenize(&f, vf)?;
    let back = dehomogenize(&frak, vf)?;
    println!("round trip error {:.2e}", (&back - &f).max_abs());

    // wall slopes of the homogenized field
    let (sb, st) = sp.wall_slopes(&frak);
    let s = sb.iter().chain(&st).fold(0.0f64, |m, v| m.max(v.abs()));
    println!("max wall slope of frak_T {s:.2e} (nonzero: this F does not satisfy the Robin data)");
    println!("B(0) = {:.4}, B(1) = {:.4}", vf.b[0], vf.b[g.nz - 1]);
    println!("max |psi| = {:.4}", vf.psi().max_abs());
    Ok(())
}

//! Warm-rain source terms and the water-exchange closure.

use moistflow::microphysics::{saturation_q_vs, sources, water_exchange_residual, Clipping, Saturation};
use moistflow::{make_grid, PhysConstants, ScalarField};

fn main() -> moistflow::Result<()> {
    let c = PhysConstants::nondimensional();
    let g = make_grid(4, 4, 9)?;
    let sat = Saturation::default_for(&c);
    let t = ScalarField::from_fn(g, |_, _, z| 1.0 - 0.2 * z);
    let p = ScalarField::from_fn(g, |_, _, z| (-z).exp());
    let qvs = saturation_q_vs(&p, &t, &sat)?;
    // supersaturated vapor below, subsaturated above
    let ratio = ScalarField::from_fn(g, |_, _, z| 1.3 - 0.6 * z);
    let qv = qvs.zip_map(&ratio, |s, r| s * r)?;
    let qc = ScalarField::constant(g, 1e-3);
    let qr = ScalarField::constant(g, 2e-4);
    let src = sources(&c, &t, &qv, &qc, &qr, &qvs, true, Clipping::Literal)?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "z", "S_ev", "S_cd", "S_ac", "S_cr");
    for iz in 0..g.nz {
        let i = g.idx(0, 0, iz);
        println!(
            "{:>6.3} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            g.z(iz),
            src.s_ev.values()[i],
            src.s_cd.values()[i],
            src.s_ac.values()[i],
            src.s_cr.values()[i]
        );
    }
    let r = water_exchange_residual(&src);
    println!("max |vapor + cloud + rain tendency| = {:e}", r.max_abs());
    Ok(())
}

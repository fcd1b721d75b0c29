//! Closure relations and the Q-factors of the temperature equation.

use moistflow::thermo::{pointwise, q1_from_closures};
use moistflow::PhysConstants;

fn main() {
    for (name, c) in [
        ("nondimensional", PhysConstants::nondimensional()),
        ("atmospheric", PhysConstants::atmospheric()),
    ] {
        println!("{name} constants");
        let (qv, qc, qr, t, rho) = (0.01, 1e-3, 2e-4, c.t_ref, 1.0);
        let sigma = pointwise::mixed_gas_constant(&c, qv, qc, qr);
        let cnu = pointwise::mixed_heat_capacity(&c, qv, qc, qr);
        println!("  sigma = {sigma:.6}  c_nu = {cnu:.6}  gamma = {:.4}", c.gamma());
        println!("  Q_m = {:.6}", pointwise::q_m(qv, qc, qr));
        println!("  Q_th = {:.6}", pointwise::q_th(&c, qv, qc, qr));
        println!("  Q_cp = {:.6}", pointwise::q_cp(&c, qv));
        println!("  Q_1 = {:.6} (from closures {:.6})", c.q1(), q1_from_closures(&c, qv, qc, qr));
        let p = pointwise::pressure(&c, rho, qv, t);
        println!("  p = {p:.6}  theta = {:.6}", pointwise::potential_temperature(&c, t, p));
        println!("  latent heat = {:.6}", pointwise::latent_heat(&c, t));
    }
}

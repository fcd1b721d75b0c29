//! The hydrostatic rest state is a fixed point of the step map.

use moistflow::config::RunConfig;
use moistflow::solver::picard_solve;

fn main() -> moistflow::Result<()> {
    let mut cfg = RunConfig::default();
    (cfg.nx, cfg.ny, cfg.nz) = (8, 8, 9);
    let (model, state) = cfg.build()?;
    let mut s = state.clone();
    for k in 0..10 {
        let (next, rep) = picard_solve(&model, &s, model.solver.dt)?;
        println!("step {:>2}: {} iteration(s), increment {:e}", k + 1, rep.iterations, rep.increments[0]);
        s = next;
    }
    println!("max |T change| = {:e}", (&s.frak_t - &state.frak_t).max_abs());
    println!("max |u| = {:e}", s.u.max_abs());
    Ok(())
}

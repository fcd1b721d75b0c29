//! Growth of the difference between two runs with nearby initial data.

use moistflow::config::RunConfig;
use moistflow::diagnostics::stability_probe;
use moistflow::presets::Preset;
use moistflow::solver::{step, Mode};
use moistflow::State;

fn trajectory(perturbation: f64, steps: usize) -> moistflow::Result<(moistflow::solver::Model, Vec<State>)> {
    let mut cfg = RunConfig::default();
    cfg.initial.preset = Preset::ThermalBubble;
    cfg.initial.perturbation = perturbation;
    cfg.initial.seed = 7;
    cfg.solver.mode = Mode::Direct;
    let (model, mut s) = cfg.build()?;
    let mut out = vec![s.clone()];
    for k in 0..steps {
        s = step(&model, &s, k)?.0;
        if (k + 1) % 10 == 0 {
            out.push(s.clone());
        }
    }
    Ok((model, out))
}

fn main() -> moistflow::Result<()> {
    let (model, base) = trajectory(0.0, 100)?;
    let (_, pert) = trajectory(1e-6, 100)?;
    let rep = stability_probe(&model.sp, &base, &pert)?;
    for (t, (dr, ds)) in rep.times.iter().zip(rep.d_rho.iter().zip(&rep.d_state)) {
        println!("t = {t:.3}: |d rho| = {dr:.3e}  |d state| = {ds:.3e}");
    }
    println!("fitted rate C = {:.3}, prefactor {:.3}, within envelope: {}", rep.growth_rate, rep.prefactor, rep.within_envelope);
    Ok(())
}

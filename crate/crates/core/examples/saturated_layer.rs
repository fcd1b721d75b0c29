//! Phase changes in a near-saturated layer and the negativity monitor.

use moistflow::config::RunConfig;
use moistflow::diagnostics::{negativity_monitor, physical_fields};
use moistflow::presets::Preset;
use moistflow::solver::{step, Mode};

fn main() -> moistflow::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.initial.preset = Preset::SaturatedLayer;
    cfg.solver.mode = Mode::Direct;
    for b in cfg.boundary.iter_mut() {
        (b.alpha_bottom, b.alpha_top) = (-1.0, 1.0);
    }
    let (model, mut state) = cfg.build()?;
    let mass0 = state.log_rho_d.map(f64::exp).integral();
    for k in 0..50 {
        let (next, _) = step(&model, &state, k)?;
        state = next;
        if (k + 1) % 10 == 0 {
            let f = model.factors(state.time)?;
            let p = physical_fields(&state, &f)?;
            let neg = negativity_monitor(&state, &f)?;
            let mass = state.log_rho_d.map(f64::exp).integral();
            println!(
                "step {:>3}: min q_v {:.3e} q_c {:.3e} q_r {:.3e}  |neg| {:.1e}  mass drift {:.1e}",
                k + 1,
                p[1].min(),
                p[2].min(),
                p[3].min(),
                neg.iter().cloned().fold(0.0, f64::max),
                (mass - mass0) / mass0
            );
        }
    }
    Ok(())
}

//! Contraction ratios of the fixed-point iteration across a step-size sweep.

use moistflow::config::RunConfig;
use moistflow::presets::Preset;
use moistflow::solver::picard_solve;

fn main() -> moistflow::Result<()> {
    for dt in [4e-3, 2e-3, 1e-3, 5e-4] {
        let mut cfg = RunConfig::default();
        cfg.initial.preset = Preset::ThermalBubble;
        cfg.solver.dt = dt;
        let (model, mut state) = cfg.build()?;
        let mut ratios = Vec::new();
        for _ in 0..5 {
            let (next, rep) = picard_solve(&model, &state, dt)?;
            ratios.extend(rep.ratios);
            state = next;
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        println!("dt = {dt:.1e}: mean ratio {mean:.4}");
    }
    Ok(())
}

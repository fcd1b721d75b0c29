//! A warm bubble with Robin walls, writing the diagnostics CSV to stdout.

use moistflow::config::RunConfig;
use moistflow::diagnostics::{CsvEmitter, DiagnosticsObserver};
use moistflow::presets::Preset;
use moistflow::solver::run;

fn main() -> moistflow::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.initial.preset = Preset::ThermalBubble;
    cfg.initial.amplitude = 0.05;
    cfg.solver.t_end = 0.02;
    for b in cfg.boundary.iter_mut() {
        (b.alpha_bottom, b.alpha_top) = (-1.0, 1.0);
    }
    let (model, state) = cfg.build()?;
    let mut obs = DiagnosticsObserver::new(CsvEmitter::new(std::io::stdout()));
    let summary = run(&model, state, &mut obs)?;
    obs.finish()?;
    eprintln!("{} steps, max |u| = {:e}", summary.steps, summary.final_state.u.max_abs());
    Ok(())
}

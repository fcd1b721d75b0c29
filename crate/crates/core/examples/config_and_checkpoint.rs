//! Parse a config, echo it, run a few steps and restart from a checkpoint.

use moistflow::config::parse_str;
use moistflow::snapshot::{read_checkpoint, write_checkpoint};
use moistflow::solver::{run_from, step, NullObserver};

const CONFIG: &str = "
# small saturated layer
grid.nx = 8
grid.ny = 8
grid.nz = 9
initial.preset = saturated_layer
solver.mode = direct
solver.t_end = 0.01
boundary.v.alpha_bottom = -0.5
boundary.v.alpha_top = 0.5
";

fn main() -> moistflow::Result<()> {
    let parsed = parse_str(CONFIG, "inline")?;
    let cfg = parsed.config;
    println!("echo has {} keys, hash {}", cfg.echo().lines().count(), &cfg.hash()[..16]);

    let (model, mut state) = cfg.build()?;
    for k in 0..5 {
        state = step(&model, &state, k)?.0;
    }
    let dir = std::env::temp_dir().join(format!("moistflow-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.echo"), cfg.echo())?;
    let meta = write_checkpoint(&dir, &state, 5, &cfg.physics_hash(), "config.echo".as_ref())?;
    println!("checkpoint {}", meta.display());

    let (m, restored) = read_checkpoint(&meta)?;
    let resumed = run_from(&model, restored, m.step, &mut NullObserver)?.final_state;
    let straight = run_from(&model, state, 5, &mut NullObserver)?.final_state;
    println!("resumed == uninterrupted: {}", resumed.frak_t == straight.frak_t && resumed.u == straight.u);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

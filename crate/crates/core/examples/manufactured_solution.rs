//! Observed temporal order and spatial accuracy on a manufactured problem.

use moistflow::make_grid;
use moistflow::verification::{observed_orders, MmsCase};

fn main() -> moistflow::Result<()> {
    let case = MmsCase::default();
    let g = make_grid(16, 16, 17)?;
    let dts = [0.04, 0.02, 0.01, 0.005];
    let errs: Vec<f64> = dts.iter().map(|&dt| case.temporal_error(g, dt)).collect::<Result<_, _>>()?;
    for (dt, e) in dts.iter().zip(&errs) {
        println!("dt = {dt:<6} error {e:.3e}");
    }
    println!("observed orders {:?}", observed_orders(&errs));
    for n in [8, 12, 16, 24, 32] {
        let g = make_grid(n, n, n + 1)?;
        println!("n = {n:>2}: steady error {:.3e}", case.spatial_error(g)?);
    }
    Ok(())
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::Instant;

use moistflow::boundary::{build_factors, extend, homogenize, dehomogenize, BoundaryData, BoundarySpec, BoundaryVar, ModeTerm, PsiRate};
use moistflow::config::RunConfig;
use moistflow::constants::PhysConstants;
use moistflow::diagnostics::{physical_fields, stability_probe};
use moistflow::fields::rho_d;
use moistflow::microphysics::{sources, water_exchange_residual, Clipping};
use moistflow::presets::Preset;
use moistflow::solver::{picard_solve, run, step, Mode, Model, StepInfo};
use moistflow::spectral::Spectral;
use moistflow::thermo::{pointwise, q1_from_closures};
use moistflow::verification::{observed_orders, MmsCase};
use moistflow::{make_grid, ScalarField, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PI: f64 = std::f64::consts::PI;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ulp(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let next = f64::from_bits(x.to_bits() + 1);
    next - x
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn robin_config(preset: Preset, n: usize) -> RunConfig {
    let mut cfg = RunConfig::default();
    (cfg.nx, cfg.ny, cfg.nz) = (n, n, n + 1);
    cfg.initial.preset = preset;
    for b in cfg.boundary.iter_mut() {
        (b.alpha_bottom, b.alpha_top) = (-1.0, 1.0);
    }
    cfg
}

/// Criteria 1 and 2 share one saturated-layer run.
fn saturated_run() -> moistflow::Result<(Outcome, Outcome)> {
    let mut cfg = robin_config(Preset::SaturatedLayer, 32);
    cfg.solver.dt = 1e-3;
    cfg.solver.t_end = 1.0;
    cfg.solver.mode = Mode::Direct;
    let (model, state) = cfg.build()?;
    let p0 = physical_fields(&state, &*model.factors(0.0)?)?;
    let max0: Vec<f64> = p0.iter().map(ScalarField::max).collect();
    let mut mins: Vec<f64> = p0.iter().map(ScalarField::min).collect();
    let mass0 = rho_d(&state)?.integral();
    let mut drift: f64 = 0.0;
    let start = Instant::now();
    let mut obs = |m: &Model, _: &StepInfo, s: &State| -> moistflow::Result<()> {
        let p = physical_fields(s, &*m.factors(s.time)?)?;
        for (lo, f) in mins.iter_mut().zip(&p) {
            *lo = lo.min(f.min());
        }
        drift = drift.max((rho_d(s)?.integral() - mass0).abs() / mass0);
        Ok(())
    };
    let summary = run(&model, state, &mut obs)?;
    let secs = start.elapsed().as_secs_f64();
    let names = ["T", "q_v", "q_c", "q_r"];
    let worst = (0..4)
        .map(|i| mins[i] / max0[i])
        .fold(f64::INFINITY, f64::min);
    let ok1 = summary.steps == 1000 && (0..4).all(|i| mins[i] >= -1e-8 * max0[i]);
    let detail1 = format!(
        "{} steps in {secs:.0} s; min/max0 {}; worst {worst:.3e}",
        summary.steps,
        names
            .iter()
            .zip(mins.iter().zip(&max0))
            .map(|(n, (m, x))| format!("{n} {:.3e}", m / x))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let ok2 = summary.steps == 1000 && drift <= 1e-6;
    Ok((outcome(ok1, detail1), outcome(ok2, format!("max relative drift {drift:.3e}"))))
}

fn water_closure() -> moistflow::Result<Outcome> {
    let c = PhysConstants::nondimensional();
    let g = make_grid(26, 26, 17)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for clipped in [false, true] {
        let lo = if clipped { -0.02 } else { 0.0 };
        let mut gen = |a: f64, b: f64| ScalarField::from_vec(g, (0..g.len()).map(|_| rng.gen_range(a..b)).collect()).unwrap();
        let t = gen(0.2, 2.0);
        let qv = gen(lo, 0.05);
        let qc = gen(lo, 0.01);
        let qr = gen(lo, 0.01);
        let qvs = gen(0.0, 0.05);
        let b = sources(&c, &t, &qv, &qc, &qr, &qvs, clipped, Clipping::Literal)?;
        let res = water_exchange_residual(&b);
        for i in 0..g.len() {
            let scale = [&b.s_ev, &b.s_cd, &b.s_ac, &b.s_cr]
                .iter()
                .map(|f| f.values()[i].abs())
                .fold(0.0, f64::max);
            worst = worst.max(res.values()[i].abs() / ulp(scale));
            count += 1;
        }
    }
    Ok(outcome(worst <= 4.0, format!("{count} bundles, worst residual {worst:.2} ulp")))
}

fn picard_sweep() -> moistflow::Result<Outcome> {
    let horizon = 0.02;
    let mut means = Vec::new();
    for dt in [4e-3, 2e-3, 1e-3, 5e-4] {
        let mut cfg = robin_config(Preset::ThermalBubble, 16);
        cfg.initial.amplitude = 0.05;
        cfg.solver.dt = dt;
        let (model, mut state) = cfg.build()?;
        let mut ratios = Vec::new();
        for _ in 0..(horizon / dt).round() as usize {
            let (next, rep) = picard_solve(&model, &state, dt)?;
            ratios.extend(rep.ratios);
            state = next;
        }
        let mean = if ratios.is_empty() { f64::NAN } else { ratios.iter().sum::<f64>() / ratios.len() as f64 };
        means.push(mean);
    }
    let finite = means.iter().all(|m| m.is_finite());
    let below_one = means[2] < 1.0 && means[3] < 1.0;
    let monotone = means.windows(2).all(|w| w[1] <= w[0]);
    let smallest = means[3];
    let ok = finite && below_one && monotone && smallest < 0.9;
    Ok(outcome(
        ok,
        format!(
            "mean ratios {:?}; smallest dt {} the 1/2 factor",
            means.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>(),
            if smallest <= 0.5 { "meets" } else { "exceeds" }
        ),
    ))
}

fn random_plane(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> Vec<f64> {
    let kmax = (nx.min(ny) / 3) as i32;
    let terms: Vec<(i32, i32, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(0..=kmax),
                rng.gen_range(-kmax..=kmax),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let mut out = vec![0.0; nx * ny];
    for ix in 0..nx {
        for iy in 0..ny {
            let (x, y) = (2.0 * ix as f64 / nx as f64, 2.0 * iy as f64 / ny as f64);
            out[ix * ny + iy] = terms
                .iter()
                .map(|&(kx, ky, a, ph)| a * (PI * (kx as f64 * x + ky as f64 * y) + ph).cos())
                .sum();
        }
    }
    out
}

fn wall_extension() -> moistflow::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for nz in [17, 33] {
        let g = make_grid(16, 16, nz)?;
        let sp = Spectral::new(g);
        for _ in 0..100 {
            let hb = random_plane(&mut rng, g.nx, g.ny);
            let ht = random_plane(&mut rng, g.nx, g.ny);
            let e = extend(&sp, &sp.plane_forward(&hb), &sp.plane_forward(&ht));
            let d = e.dz_psi.values();
            let (mut num, mut den) = (0.0, 0.0);
            for c in 0..g.columns() {
                num += (d[c * nz] - hb[c]).powi(2) + (d[c * nz + nz - 1] - ht[c]).powi(2);
                den += hb[c].powi(2) + ht[c].powi(2);
            }
            worst = worst.max((num / den).sqrt());
        }
    }
    Ok(outcome(worst <= 1e-10, format!("200 data pairs, worst relative residual {worst:.2e}")))
}

fn homogenization() -> moistflow::Result<Outcome> {
    let g = make_grid(16, 16, 33)?;
    let sp = Spectral::new(g);
    let (ab, at) = (-1.0, 1.0);
    let mut spec = BoundarySpec::uniform(ab, at);
    let vb = spec.get_mut(BoundaryVar::T);
    vb.bottom = BoundaryData::Modes(vec![ModeTerm { kx: 0, ky: 0, a: 1.1, b: 0.0 }]);
    vb.top = BoundaryData::Constant(0.9);
    let factors = build_factors(&sp, &spec, 0.0, &PsiRate::Analytic)?;
    let vf = factors.get(BoundaryVar::T);

    // F = F0(z) + 0.05 cos(pi x) cos(pi y) r(z) with
    // F0' = alpha (F^b - F0) and r' = -alpha r at both walls.
    let f0 = |z: f64| 1.0 - 0.1 * z + z * z / 30.0;
    let r = |z: f64| 1.0 + z - z * z;
    let f = ScalarField::from_fn(g, |x, y, z| f0(z) + 0.05 * (PI * x).cos() * (PI * y).cos() * r(z));
    let frak = homogenize(&f, vf)?;
    let back = dehomogenize(&frak, vf)?;
    let trip = (&back - &f).max_abs() / f.max_abs();

    // exact d(B F)/dz = B (F' + A' F) at the walls minus the extension slope
    let df0 = |z: f64| -0.1 + z / 15.0;
    let dr = |z: f64| 1.0 - 2.0 * z;
    let nz = g.nz;
    let (mut slope, mut scale) = (0.0f64, 0.0f64);
    for ix in 0..g.nx {
        for iy in 0..g.ny {
            let h = 0.05 * (PI * g.x(ix)).cos() * (PI * g.y(iy)).cos();
            for iz in [0, nz - 1] {
                let z = g.z(iz);
                let i = g.idx(ix, iy, iz);
                let dbf = vf.b[iz] * (df0(z) + h * dr(z) + vf.da[iz] * f.values()[i]);
                slope = slope.max((dbf - vf.ext.dz_psi.values()[i]).abs());
                scale = scale.max(dbf.abs());
            }
        }
    }
    let wall = slope / scale;
    let (sb, st) = sp.wall_slopes(&frak);
    let stencil = sb.iter().chain(&st).fold(0.0f64, |m, v| m.max(v.abs())) / scale;
    Ok(outcome(
        trip <= 1e-13 && wall <= 1e-9,
        format!("round trip {trip:.2e}, wall derivative {wall:.2e} relative (one-sided stencil reads {stencil:.1e})"),
    ))
}

fn thermo_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for c in [PhysConstants::nondimensional(), PhysConstants::atmospheric()] {
        let g = c.gamma();
        for _ in 0..10_000 {
            let qv = rng.gen_range(0.0..0.1);
            let qc = rng.gen_range(0.0..0.05);
            let qr = rng.gen_range(0.0..0.05);
            let sigma = pointwise::mixed_gas_constant(&c, qv, qc, qr);
            let cnu = pointwise::mixed_heat_capacity(&c, qv, qc, qr);
            worst = worst
                .max(rel(pointwise::q_cp(&c, qv), sigma - (c.r_d / c.c_pd) * cnu))
                .max(rel(pointwise::q_th(&c, qv, qc, qr), cnu / g + sigma))
                .max(rel(q1_from_closures(&c, qv, qc, qr), c.c_pv - c.c_l - c.r_v))
                .max(rel(c.q1(), c.c_pv - c.c_l - c.r_v));
        }
    }
    outcome(worst <= 1e-12, format!("2 x 10^4 inputs, worst relative error {worst:.2e}"))
}

fn manufactured() -> moistflow::Result<Outcome> {
    let case = MmsCase::default();
    let g = make_grid(16, 16, 17)?;
    let errs = [0.04, 0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| case.temporal_error(g, dt))
        .collect::<moistflow::Result<Vec<_>>>()?;
    let orders = observed_orders(&errs);
    let floor = case.spatial_error(make_grid(24, 24, 25)?)?;
    let ok = orders.iter().all(|p| (p - 1.0).abs() <= 0.15) && floor <= 1e-8;
    Ok(outcome(
        ok,
        format!(
            "orders {:?}, spatial floor {floor:.2e}",
            orders.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>()
        ),
    ))
}

fn bubble_trajectory(perturbation: f64, steps: usize, every: usize) -> moistflow::Result<(Model, Vec<State>)> {
    let mut cfg = robin_config(Preset::ThermalBubble, 16);
    cfg.initial.perturbation = perturbation;
    cfg.initial.seed = 7;
    cfg.solver.mode = Mode::Direct;
    let (model, mut s) = cfg.build()?;
    let mut out = vec![s.clone()];
    for k in 0..steps {
        s = step(&model, &s, k)?.0;
        if (k + 1) % every == 0 {
            out.push(s.clone());
        }
    }
    Ok((model, out))
}

fn continuous_dependence() -> moistflow::Result<Outcome> {
    let (model, base) = bubble_trajectory(0.0, 500, 10)?;
    let (_, full) = bubble_trajectory(1e-6, 500, 10)?;
    let (_, half) = bubble_trajectory(5e-7, 50, 10)?;
    let rep = stability_probe(&model.sp, &base, &full)?;
    let rep_half = stability_probe(&model.sp, &base[..half.len()], &half)?;
    let early = 1..half.len();
    let scale = early
        .clone()
        .map(|i| (rep_half.d_state[i] + rep_half.d_rho[i]) / (rep.d_state[i] + rep.d_rho[i]))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let halves = (scale.0 - 0.5).abs() <= 0.1 && (scale.1 - 0.5).abs() <= 0.1;
    let ok = rep.growth_rate.is_finite() && rep.within_envelope && halves;
    Ok(outcome(
        ok,
        format!(
            "C = {:.3}, within envelope {}, half-perturbation ratio in [{:.3}, {:.3}]",
            rep.growth_rate, rep.within_envelope, scale.0, scale.1
        ),
    ))
}

fn determinism() -> moistflow::Result<Outcome> {
    let tmp = tempfile::tempdir()?;
    let mut runs = Vec::new();
    for k in 0..2 {
        let dir = tmp.path().join(format!("run{k}"));
        let cfg_path = tmp.path().join(format!("run{k}.cfg"));
        std::fs::write(
            &cfg_path,
            format!(
                "initial.preset = thermal_bubble\ninitial.perturbation = 1e-4\nsolver.t_end = 0.05\nthreads = 1\noutput.dir = \"{}\"\n",
                dir.display()
            ),
        )?;
        moistflow::cli::cmd_run(&cfg_path)?;
        runs.push(std::fs::read(dir.join(moistflow::cli::DIAGNOSTICS_FILE))?);
    }
    let same = runs[0] == runs[1];
    let rows = runs[0].iter().filter(|&&b| b == b'\n').count();
    Ok(outcome(same && rows > 1, format!("{rows} CSV lines, identical: {same}")))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, o: moistflow::Result<Outcome>| {
        let o = o.unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !o.pass {
            failed += 1;
        }
        println!("{} {n:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    match saturated_run() {
        Ok((a, b)) => {
            report(1, "non-negativity", Ok(a));
            report(2, "dry-air mass conservation", Ok(b));
        }
        Err(e) => {
            report(1, "non-negativity", Err(e));
            report(2, "dry-air mass conservation", Ok(outcome(false, "run failed".into())));
        }
    }
    report(3, "water-exchange closure", water_closure());
    report(4, "Picard contraction", picard_sweep());
    report(5, "wall extension", wall_extension());
    report(6, "homogenization equivalence", homogenization());
    report(7, "thermodynamic identities", Ok(thermo_identities()));
    report(8, "manufactured-solution convergence", manufactured());
    report(9, "continuous dependence", continuous_dependence());
    report(10, "determinism", determinism());
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

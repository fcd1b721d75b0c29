use moistflow::config::{RunConfig, SaturationKind};
use moistflow::diagnostics::{compute_row, CsvEmitter, DiagnosticsObserver};
use moistflow::fields::rho_d;
use moistflow::presets::Preset;
use moistflow::solver::picard::{apply_map, state_spectra, step_distance, step_norm};
use moistflow::solver::{
    assemble_rhs, density_step, direct_step, picard_solve, run, step, Mode, Model, NullObserver, StepInfo,
};
use moistflow::spectral::BasisKind;
use moistflow::{make_grid, ScalarField, State, VectorField};

const PI: f64 = std::f64::consts::PI;

fn bubble(amplitude: f64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.initial.preset = Preset::ThermalBubble;
    cfg.initial.amplitude = amplitude;
    cfg
}

fn robin(mut cfg: RunConfig) -> RunConfig {
    for b in cfg.boundary.iter_mut() {
        (b.alpha_bottom, b.alpha_top) = (-1.0, 1.0);
    }
    cfg
}

fn distance(a: &State, b: &State) -> f64 {
    let mut s = (&a.frak_t - &b.frak_t).l2_norm().powi(2) + (&a.log_rho_d - &b.log_rho_d).l2_norm().powi(2);
    for (x, y) in a.u.components().iter().zip(b.u.components()) {
        s += (*x - y).l2_norm().powi(2);
    }
    for (x, y) in a.frak_q.iter().zip(&b.frak_q) {
        s += (x - y).l2_norm().powi(2);
    }
    s.sqrt()
}

fn drift_case(n: usize, dt: f64) -> f64 {
    let g = make_grid(n, n, 2 * n + 1).unwrap();
    let sp = moistflow::spectral::Spectral::new(g);
    let u = VectorField::new(
        ScalarField::from_fn(g, |x, y, z| 0.5 * (PI * x).sin() * (PI * y).cos() * (PI * z).cos()),
        ScalarField::from_fn(g, |x, y, _| 0.3 * (PI * (x + y)).cos()),
        ScalarField::from_fn(g, |x, _, z| 0.4 * (PI * x).cos() * (PI * z).sin()),
    )
    .unwrap();
    let lr = ScalarField::from_fn(g, |x, _, z| -0.5 * z + 0.1 * (PI * x).cos());
    let m0 = lr.map(f64::exp).integral();
    (density_step(&sp, &lr, &u, dt).unwrap().map(f64::exp).integral() - m0).abs() / m0
}

// The per-step mass error is dominated by interpolation at the departure
// points, so it shrinks with both dt and h.
#[test]
fn density_mass_error_shrinks_under_refinement() {
    let coarse: Vec<f64> = [2e-2, 1e-2, 5e-3].iter().map(|&dt| drift_case(16, dt)).collect();
    assert!(coarse[0] < 1e-6, "{coarse:?}");
    assert!(coarse[0] > coarse[1] && coarse[1] > coarse[2], "{coarse:?}");
    let fine = drift_case(32, 1e-2);
    assert!(fine < 0.5 * coarse[1], "{fine} vs {}", coarse[1]);
}

#[test]
fn rhs_terms_recompose() {
    let (model, state) = robin(bubble(0.05)).build().unwrap();
    let next = direct_step(&model, &state, model.solver.dt).unwrap();
    let f = model.factors(next.time).unwrap();
    let rhs = assemble_rhs(&model, &next, &next.log_rho_d, &f).unwrap();
    let check = |terms: &[moistflow::solver::Term], total: &ScalarField| {
        let mut s = ScalarField::zeros(total.grid());
        for t in terms.iter().rev() {
            s = &s + &t.field;
        }
        let scale = terms.iter().map(|t| t.field.max_abs()).fold(0.0, f64::max);
        assert!((&s - total).max_abs() <= 1e-14 * scale.max(1e-300));
    };
    for k in 0..3 {
        check(&rhs.momentum[k], &rhs.momentum_total(k));
        check(&rhs.moisture[k], &rhs.moisture_total(k));
    }
    check(&rhs.temperature, &rhs.temperature_total());
    assert!(rhs.term("T", "compression").is_some());
    assert!(rhs.term("q_r", "sedimentation").is_some());
    assert!(rhs.term("nope", "advection").is_none());
}

#[test]
fn rest_rhs_has_no_transport_terms() {
    let mut cfg = RunConfig::default();
    cfg.initial.preset = Preset::Equilibrium;
    let (model, state) = cfg.build().unwrap();
    let f = model.factors(0.0).unwrap();
    let rhs = assemble_rhs(&model, &state, &state.log_rho_d, &f).unwrap();
    for k in 0..3 {
        for name in ["advection", "drag"] {
            assert_eq!(rhs.momentum[k].iter().find(|t| t.name == name).unwrap().field.max_abs(), 0.0);
        }
        // hydrostatic balance of the reference state
        assert!(rhs.momentum_total(k).max_abs() < 1e-12);
        assert!(rhs.term(["q_v", "q_c", "q_r"][k], "sedimentation").is_none_or(|s| s.max_abs() == 0.0));
    }
}

#[test]
fn direct_equals_single_picard_iteration() {
    let mut cfg = robin(bubble(0.05));
    cfg.initial.preset = Preset::SaturatedLayer;
    let (model, state) = cfg.clone().build().unwrap();
    let a = direct_step(&model, &state, model.solver.dt).unwrap();
    cfg.solver.picard_max_iters = 1;
    let (model1, _) = cfg.build().unwrap();
    let (b, rep) = picard_solve(&model1, &state, model1.solver.dt).unwrap();
    assert_eq!(rep.iterations, 1);
    for ((_, x), (_, y)) in a.named_fields().iter().zip(b.named_fields().iter()) {
        assert!(x.values().iter().zip(y.values()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn converged_iterate_is_a_fixed_point() {
    let (model, state) = robin(bubble(0.05)).build().unwrap();
    let dt = model.solver.dt;
    let (x, rep) = picard_solve(&model, &state, dt).unwrap();
    assert!(rep.converged);
    let f = model.factors(state.time + dt).unwrap();
    let mx = apply_map(&model, &state, &x, &f, dt).unwrap();
    let sx = state_spectra(&model.sp, &x);
    let gap = step_distance(&model.sp, &mx.spectra, &sx, dt);
    assert!(gap <= 2.0 * model.solver.picard_tol * step_norm(&model.sp, &sx, dt), "{gap}");
}

#[test]
fn equilibrium_converges_in_one_iteration() {
    let (model, state) = RunConfig::default().build().unwrap();
    let (next, rep) = picard_solve(&model, &state, model.solver.dt).unwrap();
    assert_eq!(rep.iterations, 1);
    assert_eq!(rep.increments, vec![0.0]);
    assert_eq!(distance(&next, &state), 0.0);
}

#[test]
fn contraction_ratio_shrinks_with_dt() {
    let mut means = Vec::new();
    for dt in [1e-3, 5e-4, 2.5e-4] {
        let mut cfg = bubble(0.0);
        cfg.initial.perturbation = 1e-2;
        cfg.solver.dt = dt;
        let (model, state) = cfg.build().unwrap();
        let (_, rep) = picard_solve(&model, &state, dt).unwrap();
        means.push(rep.mean_ratio().unwrap());
    }
    for w in means.windows(2) {
        assert!(w[0] < 1.0);
        let r = w[0] / w[1];
        assert!((1.2..3.0).contains(&r), "{means:?}");
    }
}

#[test]
fn oversized_step_is_retried_at_half() {
    let mut cfg = bubble(0.05);
    cfg.solver.dt = 1.0;
    cfg.solver.t_end = 1.0;
    cfg.solver.picard_max_iters = 10;
    let (model, state) = cfg.clone().build().unwrap();
    assert!(matches!(
        picard_solve(&model, &state, 1.0),
        Err(moistflow::Error::NonConvergence { .. })
    ));
    let (_, info) = step(&model, &state, 0).unwrap();
    assert_eq!(info.retries, 1);
    assert_eq!(info.time, 1.0);
    cfg.solver.max_retries = 0;
    let (model0, _) = cfg.build().unwrap();
    assert!(step(&model0, &state, 0).is_err());
}

/// A cloud-water perturbation `eps cos(pi z)` with no saturation and no rain
/// only diffuses, with unit diffusivity, to first order in `eps`.
fn cloud_decay(dt: f64, t_end: f64) -> f64 {
    let mut cfg = RunConfig::default();
    cfg.saturation = SaturationKind::Constant;
    cfg.q_vs_value = 0.0;
    cfg.solver.mode = Mode::Direct;
    let (model, mut state) = cfg.build().unwrap();
    let eps = 1e-6;
    state.frak_q[1] = ScalarField::from_fn(model.grid, |_, _, z| eps * (PI * z).cos());
    let n = (t_end / dt).round() as usize;
    for _ in 0..n {
        state = direct_step(&model, &state, dt).unwrap();
    }
    model.sp.forward(&state.frak_q[1], BasisKind::Neumann).coeff(0, 0, 1).re / eps
}

#[test]
fn pure_diffusion_decay() {
    let dt = 1e-3;
    let one = cloud_decay(dt, dt);
    assert!((one - 1.0 / (1.0 + PI * PI * dt)).abs() < 1e-6, "{one}");
    let t = 0.05;
    let exact = (-PI * PI * t).exp();
    let e1 = (cloud_decay(4e-3, t) - exact).abs();
    let e2 = (cloud_decay(2e-3, t) - exact).abs();
    let e3 = (cloud_decay(1e-3, t) - exact).abs();
    for r in [e1 / e2, e2 / e3] {
        assert!((1.7..2.3).contains(&r), "{e1} {e2} {e3}");
    }
}

#[test]
fn step_halving_is_first_order() {
    let mut cfg = robin(bubble(0.05));
    cfg.solver.mode = Mode::Direct;
    let (model, state) = cfg.build().unwrap();
    let t = 8e-3;
    let advance = |dt: f64| {
        let mut s = state.clone();
        for _ in 0..(t / dt).round() as usize {
            s = direct_step(&model, &s, dt).unwrap();
        }
        s
    };
    let (a, b, c) = (advance(4e-3), advance(2e-3), advance(1e-3));
    let r = distance(&a, &b) / distance(&b, &c);
    assert!((1.6..2.5).contains(&r), "{r}");
}

#[test]
fn zero_horizon_emits_initial_row() {
    let mut cfg = RunConfig::default();
    cfg.solver.t_end = 0.0;
    let (model, state) = cfg.build().unwrap();
    let mut obs = DiagnosticsObserver::new(CsvEmitter::new(Vec::new()));
    obs.keep_rows = true;
    let s = run(&model, state.clone(), &mut obs).unwrap();
    assert_eq!(s.steps, 0);
    assert_eq!(obs.rows.len(), 1);
    assert_eq!(distance(&s.final_state, &state), 0.0);
}

#[test]
fn equilibrium_run_is_stationary() {
    let mut cfg = RunConfig::default();
    cfg.solver.t_end = 10.0 * cfg.solver.dt;
    let (model, state) = cfg.build().unwrap();
    let first = compute_row(&model, &state, 0, None).unwrap();
    let mut worst: f64 = 0.0;
    let mut obs = |m: &Model, info: &StepInfo, s: &State| -> moistflow::Result<()> {
        let row = compute_row(m, s, info.step, Some(info))?;
        for (a, b) in row.norms.iter().flatten().zip(first.norms.iter().flatten()) {
            worst = worst.max((a - b).abs());
        }
        worst = worst.max((row.dry_mass - first.dry_mass).abs());
        Ok(())
    };
    let s = run(&model, state, &mut obs).unwrap();
    assert_eq!(s.steps, 10);
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn smoke_run_conserves_dry_mass() {
    let mut cfg = robin(bubble(0.05));
    cfg.solver.mode = Mode::Direct;
    cfg.solver.t_end = 100.0 * cfg.solver.dt;
    let (model, state) = cfg.build().unwrap();
    let m0 = rho_d(&state).unwrap().integral();
    let mut worst: f64 = 0.0;
    let mut obs = |_: &Model, _: &StepInfo, s: &State| -> moistflow::Result<()> {
        worst = worst.max((rho_d(s)?.integral() - m0).abs() / m0);
        assert!(s.log_rho_d.is_finite());
        Ok(())
    };
    let s = run(&model, state, &mut obs).unwrap();
    assert_eq!(s.steps, 100);
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn norms_stay_bounded_on_perturbed_equilibrium() {
    let delta = 1e-2;
    let mut cfg = RunConfig::default();
    cfg.initial.perturbation = delta;
    cfg.solver.mode = Mode::Direct;
    cfg.solver.t_end = 200.0 * cfg.solver.dt;
    let (model, state) = cfg.build().unwrap();
    let first = compute_row(&model, &state, 0, None).unwrap();
    let mut u_h2 = Vec::new();
    let mut obs = |m: &Model, info: &StepInfo, s: &State| -> moistflow::Result<()> {
        let row = compute_row(m, s, info.step, Some(info))?;
        for (a, b) in row.norms.iter().flatten().zip(first.norms.iter().flatten()) {
            assert!(a.is_finite() && *a <= b + delta, "{a} vs {b}");
        }
        assert!(row.mins[4] > 0.0);
        u_h2.push(row.norms[0][2]);
        Ok(())
    };
    run(&model, state, &mut obs).unwrap();
    assert!(u_h2[199] < u_h2[49], "{} vs {}", u_h2[199], u_h2[49]);
}

// With Robin walls the rest state is a fixed point only up to how well the
// grid resolves the wall extension.
#[test]
fn robin_rest_tendency_shrinks_with_nz() {
    let change: Vec<f64> = [17, 33, 65]
        .iter()
        .map(|&nz| {
            let mut cfg = robin(RunConfig::default());
            (cfg.nx, cfg.ny, cfg.nz) = (4, 4, nz);
            cfg.solver.mode = Mode::Direct;
            let (model, s) = cfg.build().unwrap();
            let next = step(&model, &s, 0).unwrap().0;
            (&next.frak_t - &s.frak_t).max_abs()
        })
        .collect();
    assert!(change[1] < 0.5 * change[0] && change[2] < 0.5 * change[1], "{change:?}");
}

#[test]
fn null_observer_runs() {
    let mut cfg = bubble(0.05);
    cfg.solver.t_end = 3.0 * cfg.solver.dt;
    let (model, state) = cfg.build().unwrap();
    assert_eq!(run(&model, state, &mut NullObserver).unwrap().steps, 3);
}

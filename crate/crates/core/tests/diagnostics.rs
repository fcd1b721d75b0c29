use moistflow::config::RunConfig;
use moistflow::diagnostics::{
    compute_row, negativity_monitor, sobolev_norm, sobolev_norms, stability_probe, CsvEmitter, DiagnosticsRow,
};
use moistflow::solver::{run, Mode, Model, StepInfo};
use moistflow::spectral::Spectral;
use moistflow::{make_grid, ScalarField, State};

const PI: f64 = std::f64::consts::PI;

// f = cos(pi x) (1 + z^2) on [0,2]^2 x [0,1], integrals done by hand:
// |f|^2 = 56/15, |f_x|^2 = 56 pi^2/15, |f_z|^2 = 8/3,
// |f_xx|^2 = 56 pi^4/15, |f_zz|^2 = 8, |f_xz|^2 = 8 pi^2/3.
fn poly_case(nz: usize) -> Vec<f64> {
    let g = make_grid(8, 4, nz).unwrap();
    let sp = Spectral::new(g);
    let f = ScalarField::from_fn(g, |x, _, z| (PI * x).cos() * (1.0 + z * z));
    sobolev_norms(&sp, &f, 2).unwrap()
}

#[test]
fn sobolev_norms_match_hand_integrals() {
    let p2 = PI * PI;
    let l2 = 56.0 / 15.0;
    let h1 = l2 + 56.0 * p2 / 15.0 + 8.0 / 3.0;
    let h2 = h1 + 56.0 * p2 * p2 / 15.0 + 8.0 + 8.0 * p2 / 3.0;
    let exact = [l2.sqrt(), h1.sqrt(), h2.sqrt()];
    let err = |nz| {
        let n = poly_case(nz);
        (0..3).map(|k| (n[k] - exact[k]).abs() / exact[k]).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(33), err(65));
    assert!(e2 < 1e-3, "{e2}");
    assert!(e1 / e2 > 3.0, "{e1} {e2}");
}

#[test]
fn sobolev_order_above_two_is_rejected() {
    let g = make_grid(4, 4, 5).unwrap();
    let sp = Spectral::new(g);
    assert!(sobolev_norm(&sp, &ScalarField::zeros(g), 3).is_err());
}

fn rest() -> (Model, State) {
    let mut cfg = RunConfig::default();
    (cfg.nx, cfg.ny, cfg.nz) = (16, 8, 9);
    cfg.build().unwrap()
}

#[test]
fn nonnegative_state_has_no_negative_part() {
    let (model, s) = rest();
    let f = model.factors(0.0).unwrap();
    assert_eq!(negativity_monitor(&s, &f).unwrap(), [0.0; 4]);
}

#[test]
fn uniform_negative_temperature() {
    let (model, mut s) = rest();
    s.frak_t = ScalarField::constant(model.grid, -1.0);
    let f = model.factors(0.0).unwrap();
    let n = negativity_monitor(&s, &f).unwrap();
    assert!((n[0] - 2.0).abs() < 1e-14, "{}", n[0]);
    assert_eq!(&n[1..], &[0.0; 3]);
}

#[test]
fn mixed_sign_matches_parts() {
    let (model, mut s) = rest();
    s.frak_t = ScalarField::from_fn(model.grid, |x, _, _| (PI * x).sin());
    s.frak_q[1] = ScalarField::from_fn(model.grid, |x, y, z| (PI * x).cos() * (PI * y).sin() - 0.2 * z);
    let f = model.factors(0.0).unwrap();
    let n = negativity_monitor(&s, &f).unwrap();
    // half of the sin^2 mass on a symmetric periodic grid
    assert!((n[0] - 1.0).abs() < 1e-13, "{}", n[0]);
    let neg = s.frak_q[1].map(|v| v.min(0.0));
    assert!((n[2] - neg.l2_norm()).abs() <= 1e-14 * neg.l2_norm());
}

fn trajectory(cfg: &RunConfig, every: usize) -> (Model, Vec<State>) {
    let (model, state) = cfg.build().unwrap();
    let mut out = vec![state.clone()];
    let mut obs = |_: &Model, info: &StepInfo, s: &State| -> moistflow::Result<()> {
        if info.step.is_multiple_of(every) {
            out.push(s.clone());
        }
        Ok(())
    };
    run(&model, state, &mut obs).unwrap();
    (model, out)
}

fn small_cfg() -> RunConfig {
    let mut cfg = RunConfig::default();
    (cfg.nx, cfg.ny, cfg.nz) = (8, 8, 9);
    cfg.solver.mode = Mode::Direct;
    cfg.solver.t_end = 40.0 * cfg.solver.dt;
    cfg
}

#[test]
fn identical_trajectories_have_zero_difference() {
    let mut cfg = small_cfg();
    cfg.initial.perturbation = 0.05;
    let (model, a) = trajectory(&cfg, 5);
    let rep = stability_probe(&model.sp, &a, &a).unwrap();
    assert!(rep.d_state.iter().chain(&rep.d_rho).all(|&d| d <= 1e-13));
    assert!(rep.within_envelope);
}

#[test]
fn perturbed_equilibrium_stays_in_envelope() {
    let cfg = small_cfg();
    let mut pert = cfg.clone();
    pert.initial.perturbation = 1e-6;
    let (model, a) = trajectory(&cfg, 5);
    let (_, b) = trajectory(&pert, 5);
    let rep = stability_probe(&model.sp, &a, &b).unwrap();
    assert!(rep.delta0 > 0.0);
    assert!(rep.within_envelope, "{rep:?}");
    assert!(rep.d_state.iter().all(|&d| d <= 10.0 * rep.delta0));
    assert!(rep.cumulative_h1.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn mismatched_trajectories_rejected() {
    let (model, a) = trajectory(&small_cfg(), 10);
    assert!(stability_probe(&model.sp, &a, &a[1..]).is_err());
}

#[test]
fn thousand_rows_reparse_strictly() {
    let (model, s) = rest();
    let base = compute_row(&model, &s, 0, None).unwrap();
    let mut em = CsvEmitter::new(Vec::new());
    for k in 0..1000 {
        let mut row = base.clone();
        row.step = k;
        row.time = k as f64 * 1e-3;
        row.picard_iterations = k % 5;
        row.picard_ratio = (k % 3 != 0).then_some(0.01 * k as f64);
        em.emit(&row).unwrap();
    }
    let bytes = em.into_inner().unwrap();
    let text = String::from_utf8(bytes).unwrap();
    let header = DiagnosticsRow::header();
    assert_eq!(text.matches(&header.join(",")).count(), 1);
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), header);
    let mut n = 0;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.unwrap();
        assert_eq!(rec.len(), header.len());
        assert_eq!(rec[1].parse::<usize>().unwrap(), k);
        for v in rec.iter().filter(|v| !v.is_empty()) {
            assert!(v.parse::<f64>().unwrap().is_finite(), "{v}");
        }
        assert_eq!(rec[header.len() - 1].is_empty(), k % 3 == 0);
        n += 1;
    }
    assert_eq!(n, 1000);
}

#[test]
fn continuing_emitter_skips_header() {
    let (model, s) = rest();
    let row = compute_row(&model, &s, 3, None).unwrap();
    let mut em = CsvEmitter::continuing(Vec::new());
    em.emit(&row).unwrap();
    let text = String::from_utf8(em.into_inner().unwrap()).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with(&format!("{:e},3,", row.time)));
}

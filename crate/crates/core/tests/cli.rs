use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::Command;

use moistflow::config::parse_str;
use moistflow::presets::Preset;
use moistflow::snapshot::field_path;
use moistflow::solver::{assemble_rhs, picard_solve, Mode};
use moistflow::Error;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_moistflow"));
    c.env_remove(moistflow::cli::OUT_ENV);
    c
}

fn echo_keys(echo: &str) -> Vec<String> {
    echo.lines()
        .filter_map(|l| l.split_once('=').map(|(k, _)| k.trim().to_string()))
        .collect()
}

#[test]
fn empty_config_gives_defaults() {
    let p = parse_str("", "empty.cfg").unwrap();
    let d = moistflow::config::RunConfig::default();
    assert_eq!(p.config.echo(), d.echo());
    let keys = echo_keys(&p.config.echo());
    let unique: HashSet<_> = keys.iter().collect();
    assert_eq!(unique.len(), keys.len());
    for k in ["grid.nx", "solver.dt", "boundary.T.alpha_bottom", "constants.set", "seed", "threads"] {
        assert!(keys.iter().any(|e| e == k), "{k}");
    }
}

#[test]
fn positive_bottom_alpha_rejected_with_line() {
    let err = parse_str("# walls\n\nboundary.T.alpha_bottom = 0.5\n", "walls.cfg").unwrap_err();
    match &err {
        Error::Config { path, line, .. } => {
            assert_eq!(path, "walls.cfg");
            assert_eq!(*line, 3);
        }
        other => panic!("{other:?}"),
    }
    assert!(err.is_usage());
}

#[test]
fn unknown_and_duplicate_keys_rejected() {
    let e = parse_str("grid.nx = 8\ngrid.nxx = 8\n", "a.cfg").unwrap_err();
    assert!(matches!(e, Error::Config { line: 2, .. }), "{e:?}");
    assert!(e.to_string().contains("grid.nxx"));
    let e = parse_str("seed = 1\nseed = 2\n", "b.cfg").unwrap_err();
    assert!(matches!(e, Error::Config { line: 2, .. }), "{e:?}");
    let e = parse_str("grid.nx = eight\n", "c.cfg").unwrap_err();
    assert!(matches!(e, Error::Config { line: 1, .. }), "{e:?}");
}

#[test]
fn echo_reparses_to_same_config() {
    let text = "initial.preset = saturated_layer\nconstants.c_cd = 2.5\nboundary.v.alpha_top = 0.7\n\
                boundary.T.value_top = 0.9\nsolver.mode = direct\nseed = 42\n";
    let a = parse_str(text, "x.cfg").unwrap().config;
    let b = parse_str(&a.echo(), "echo").unwrap().config;
    assert_eq!(a.echo(), b.echo());
    assert_eq!(a.hash(), b.hash());
    let c = parse_str(&b.echo(), "echo2").unwrap().config;
    assert_eq!(b.echo(), c.echo());
}

#[test]
fn every_consumed_key_is_echoed() {
    let text = "grid.nx = 8\nconstants.c_ac = 1.5\nboundary.c.alpha_bottom = -0.25\nboundary.dpsi_dt = finite_difference\n\
                microphysics.clipping = symmetric\nsolver.picard_tol = 1e-8\ninitial.width = 0.2\n\
                output.snapshot_every = 7\nthreads = 1\n";
    let cfg = parse_str(text, "k.cfg").unwrap().config;
    let echo = cfg.echo();
    for line in text.lines() {
        let (k, v) = line.split_once('=').unwrap();
        let hit = echo.lines().find(|l| l.split_once('=').map(|(e, _)| e.trim()) == Some(k.trim()));
        let hit = hit.unwrap_or_else(|| panic!("{k} missing from echo"));
        let n = |s: &str| s.trim().trim_matches('"').to_string();
        let (ev, iv) = (n(hit.split_once('=').unwrap().1), n(v));
        let same = ev == iv || matches!((ev.parse::<f64>(), iv.parse::<f64>()), (Ok(a), Ok(b)) if a == b);
        assert!(same, "{k}: {ev} vs {iv}");
    }
    // each echoed key is accepted on its own
    for line in echo.lines() {
        parse_str(line, "one.cfg").unwrap_or_else(|e| panic!("{line}: {e}"));
    }
}

#[test]
fn physics_hash_ignores_output_settings() {
    let a = parse_str("output.dir = a\nthreads = 1\n", "a").unwrap().config;
    let b = parse_str("output.dir = b\nthreads = 2\nsolver.t_end = 3\n", "b").unwrap().config;
    assert_eq!(a.physics_hash(), b.physics_hash());
    assert_ne!(a.hash(), b.hash());
    let c = parse_str("solver.dt = 2e-3\n", "c").unwrap().config;
    assert_ne!(a.physics_hash(), c.physics_hash());
}

#[test]
fn check_succeeds_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("ok.cfg");
    fs::write(&cfg, "grid.nx = 8\ngrid.ny = 8\ngrid.nz = 9\noutput.dir = out\n").unwrap();
    let out = bin().current_dir(tmp.path()).args(["check", "ok.cfg"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let entries: Vec<_> = fs::read_dir(tmp.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn bad_config_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "boundary.T.alpha_bottom = 0.5\n").unwrap();
    let out = bin().arg("check").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.cfg"));
}

#[test]
fn unknown_subcommand_exits_two_with_usage() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("usage"));
}

fn small_run_config(dir: &Path) -> String {
    format!(
        "grid.nx = 8\ngrid.ny = 8\ngrid.nz = 9\ninitial.preset = thermal_bubble\ninitial.perturbation = 1e-3\n\
         solver.t_end = 0.02\nsolver.checkpoint_every = 10\nthreads = 1\noutput.dir = \"{}\"\n",
        dir.display()
    )
}

#[test]
fn resume_matches_uninterrupted_run() {
    let tmp = tempfile::tempdir().unwrap();
    let full = tmp.path().join("full");
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, small_run_config(&full)).unwrap();
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = full.join("checkpoint_00000010.meta");
    assert!(meta.exists());

    let resumed = tmp.path().join("resumed");
    let out = bin()
        .env(moistflow::cli::OUT_ENV, &resumed)
        .arg("resume")
        .arg(&meta)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in moistflow::State::FIELD_NAMES {
        let file = |d: &Path| fs::read(field_path(&d.join(moistflow::cli::FINAL_SNAPSHOT), name)).unwrap();
        assert!(file(&full) == file(&resumed), "final {name} differs");
    }
    let da = fs::read(full.join(moistflow::cli::DIAGNOSTICS_FILE)).unwrap();
    let db = fs::read(resumed.join(moistflow::cli::DIAGNOSTICS_FILE)).unwrap();
    assert!(da == db, "diagnostics differ");
}

#[test]
fn output_env_overrides_config_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_dir = tmp.path().join("from_config");
    let env_dir = tmp.path().join("from_env");
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, small_run_config(&cfg_dir).replace("t_end = 0.02", "t_end = 0.003")).unwrap();
    let out = bin().env(moistflow::cli::OUT_ENV, &env_dir).arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(env_dir.join(moistflow::cli::DIAGNOSTICS_FILE).exists());
    assert!(env_dir.join(moistflow::cli::ECHO_FILE).exists());
    assert!(!cfg_dir.exists());
}

#[test]
fn export_plot_is_long_format() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("o");
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, small_run_config(&dir).replace("t_end = 0.02", "t_end = 0.004")).unwrap();
    assert_eq!(bin().arg("run").arg(&cfg).output().unwrap().status.code(), Some(0));
    let out = bin().arg("export-plot").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let mut wide = csv::Reader::from_path(dir.join(moistflow::cli::DIAGNOSTICS_FILE)).unwrap();
    let header = wide.headers().unwrap().clone();
    let mut expected = 0;
    let mut rows = 0;
    for rec in wide.records() {
        let rec = rec.unwrap();
        expected += rec.iter().skip(2).filter(|v| !v.is_empty()).count();
        rows += 1;
    }
    assert_eq!(rows, 5);
    let mut long = csv::Reader::from_path(dir.join(moistflow::cli::PLOT_FILE)).unwrap();
    assert_eq!(long.headers().unwrap().iter().collect::<Vec<_>>(), ["step", "time", "variable", "value"]);
    let recs: Vec<_> = long.records().map(|r| r.unwrap()).collect();
    assert_eq!(recs.len(), expected);
    let names: HashSet<&str> = header.iter().skip(2).collect();
    assert!(recs.iter().all(|r| names.contains(&r[2]) && r[3].parse::<f64>().is_ok()));
}

#[test]
fn equilibrium_preset_is_a_fixed_point() {
    let mut cfg = parse_str("grid.nx = 8\ngrid.ny = 8\ngrid.nz = 9\n", "eq").unwrap().config;
    cfg.solver.mode = Mode::Picard;
    let (model, state) = cfg.build().unwrap();
    let (_, report) = picard_solve(&model, &state, model.solver.dt).unwrap();
    assert_eq!(report.iterations, 1);
}

#[test]
fn zero_amplitude_bubble_equals_equilibrium() {
    let eq = parse_str("grid.nz = 9\n", "a").unwrap().config;
    let mut bubble = eq.clone();
    bubble.initial.preset = Preset::ThermalBubble;
    bubble.initial.amplitude = 0.0;
    let (_, a) = eq.build().unwrap();
    let (_, b) = bubble.build().unwrap();
    for ((n, x), (_, y)) in a.named_fields().iter().zip(b.named_fields().iter()) {
        assert!(x.values().iter().zip(y.values()).all(|(p, q)| p.to_bits() == q.to_bits()), "{n}");
    }
}

#[test]
fn saturated_layer_condenses_at_start() {
    let cfg = parse_str("initial.preset = saturated_layer\ngrid.nz = 17\n", "s").unwrap().config;
    let (model, state) = cfg.build().unwrap();
    let f = model.factors(0.0).unwrap();
    let rhs = assemble_rhs(&model, &state, &state.log_rho_d, &f).unwrap();
    assert!(rhs.sources.s_cd.values().iter().any(|&v| v > 0.0));
}

#[test]
fn unknown_preset_rejected() {
    let e = parse_str("initial.preset = tornado\n", "p").unwrap_err();
    assert!(matches!(e, Error::Config { line: 1, .. }), "{e:?}");
}

//! Command-line front end: `run`, `check`, `resume`, `export-plot`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
//! `MOISTFLOW_OUT` overrides the output directory.

use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{parse_config, RunConfig};
use crate::diagnostics::{CsvEmitter, DiagnosticsObserver};
use crate::error::{Error, Result};
use crate::fields::State;
use crate::snapshot::{read_checkpoint, write_checkpoint, write_snapshot};
use crate::solver::{run_from, Model, Observer, RunSummary, StepInfo};

pub const OUT_ENV: &str = "MOISTFLOW_OUT";
pub const ECHO_FILE: &str = "config.echo";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const PLOT_FILE: &str = "plot.csv";
/// Prefix of the end-of-run snapshot files.
pub const FINAL_SNAPSHOT: &str = "final";

#[derive(Debug, Parser)]
#[command(name = "moistflow", version, about = "Pseudo-spectral moist atmosphere simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation from a config file.
    Run { config: PathBuf },
    /// Validate a config file without writing anything.
    Check { config: PathBuf },
    /// Continue a run from a checkpoint `.meta` file.
    Resume { checkpoint: PathBuf },
    /// Convert `diagnostics.csv` in a directory to long format (`plot.csv`).
    ExportPlot { csvdir: PathBuf },
}

/// Run the CLI on `args` (including the program name); returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config).map(|s| {
            println!("completed {} steps, {} retries", s.steps, s.total_retries);
        }),
        Command::Check { config } => cmd_check(&config).map(|c| {
            println!(
                "ok: {}x{}x{} grid, preset {}, {} steps",
                c.nx,
                c.ny,
                c.nz,
                c.initial.preset,
                c.solver.n_steps()
            );
        }),
        Command::Resume { checkpoint } => cmd_resume(&checkpoint).map(|s| {
            println!("completed {} steps, {} retries", s.steps, s.total_retries);
        }),
        Command::ExportPlot { csvdir } => cmd_export_plot(&csvdir).map(|p| {
            println!("wrote {}", p.display());
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

fn output_dir(cfg: &RunConfig) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cfg.output_dir.clone(),
    }
}

/// Parse and fully validate, including closure audits and model assembly.
pub fn cmd_check(config: &Path) -> Result<RunConfig> {
    let parsed = parse_config(config)?;
    parsed.config.build()?;
    Ok(parsed.config)
}

/// Writes diagnostics every step plus snapshots and checkpoints on schedule.
struct RunObserver {
    diag: DiagnosticsObserver<File>,
    dir: PathBuf,
    snapshot_every: usize,
    checkpoint_every: usize,
    hash: String,
    skip_initial: bool,
}

impl Observer for RunObserver {
    fn initial(&mut self, model: &Model, state: &State, step: usize) -> Result<()> {
        if self.skip_initial {
            return Ok(());
        }
        self.diag.initial(model, state, step)
    }

    fn step(&mut self, model: &Model, info: &StepInfo, state: &State) -> Result<()> {
        self.diag.step(model, info, state)?;
        if self.snapshot_every > 0 && info.step.is_multiple_of(self.snapshot_every) {
            write_snapshot(&self.dir.join(format!("snapshot_{:08}", info.step)), state)?;
        }
        if self.checkpoint_every > 0 && info.step.is_multiple_of(self.checkpoint_every) {
            self.diag.finish()?;
            write_checkpoint(&self.dir, state, info.step, &self.hash, Path::new(ECHO_FILE))?;
        }
        Ok(())
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn execute(cfg: &RunConfig, dir: &Path, start: Option<(usize, State)>) -> Result<RunSummary> {
    let (model, initial) = cfg.build()?;
    let resuming = start.is_some();
    let (step0, state) = match start {
        Some((k, s)) => (k, s),
        None => (0, initial),
    };
    let diag_path = dir.join(DIAGNOSTICS_FILE);
    let timing_path = dir.join(TIMING_FILE);
    let (emitter, timing) = if resuming {
        truncate_rows(&diag_path, 1, step0)?;
        truncate_rows(&timing_path, 0, step0)?;
        let f = OpenOptions::new().append(true).open(&diag_path)?;
        let t = OpenOptions::new().append(true).open(&timing_path)?;
        (
            CsvEmitter::continuing(f),
            Some(csv::WriterBuilder::new().has_headers(false).from_writer(t)),
        )
    } else {
        let mut w = csv::Writer::from_path(&timing_path)?;
        w.write_record(["step", "time", "wall_seconds", "retries"])?;
        (CsvEmitter::create(&diag_path)?, Some(w))
    };
    let mut diag = DiagnosticsObserver::new(emitter);
    diag.timing = timing;
    let mut obs = RunObserver {
        diag,
        dir: dir.to_path_buf(),
        snapshot_every: cfg.snapshot_every,
        checkpoint_every: cfg.solver.checkpoint_every,
        hash: cfg.physics_hash(),
        skip_initial: resuming,
    };
    let summary = run_from(&model, state, step0, &mut obs)?;
    obs.diag.finish()?;
    write_snapshot(&dir.join(FINAL_SNAPSHOT), &summary.final_state)?;
    Ok(summary)
}

/// Keep the header and the rows whose step column is `<= step`.
fn truncate_rows(path: &Path, step_col: usize, step: usize) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut keep = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let ok = i == 0
            || rec
                .get(step_col)
                .and_then(|s| s.parse::<usize>().ok())
                .is_some_and(|s| s <= step);
        if ok {
            keep.push(rec);
        }
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for r in keep {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_run(config: &Path) -> Result<RunSummary> {
    let parsed = parse_config(config)?;
    let cfg = parsed.config;
    let dir = output_dir(&cfg);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(ECHO_FILE), cfg.echo())?;
    with_threads(cfg.threads, || execute(&cfg, &dir, None))
}

pub fn cmd_resume(meta_path: &Path) -> Result<RunSummary> {
    let (meta, state) = read_checkpoint(meta_path)?;
    let base = meta_path.parent().unwrap_or(Path::new("."));
    let cfg = parse_config(&base.join(&meta.config))?.config;
    if cfg.physics_hash() != meta.config_hash {
        return Err(Error::Snapshot {
            path: meta_path.to_path_buf(),
            msg: "config hash does not match the checkpoint".into(),
        });
    }
    let dir = match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => base.to_path_buf(),
    };
    if dir != base {
        fs::create_dir_all(&dir)?;
        for f in [DIAGNOSTICS_FILE, TIMING_FILE, ECHO_FILE] {
            if base.join(f).exists() {
                fs::copy(base.join(f), dir.join(f))?;
            }
        }
    }
    with_threads(cfg.threads, || execute(&cfg, &dir, Some((meta.step, state))))
}

/// Long-format `step,time,variable,value` rows from a diagnostics CSV.
pub fn cmd_export_plot(csvdir: &Path) -> Result<PathBuf> {
    let src = csvdir.join(DIAGNOSTICS_FILE);
    let mut rdr = csv::Reader::from_path(&src)?;
    let header = rdr.headers()?.clone();
    let out_path = csvdir.join(PLOT_FILE);
    let mut w = csv::Writer::from_writer(File::create(&out_path)?);
    w.write_record(["step", "time", "variable", "value"])?;
    for rec in rdr.records() {
        let rec = rec?;
        let (time, step) = (&rec[0], &rec[1]);
        for (name, v) in header.iter().zip(rec.iter()).skip(2) {
            if !v.is_empty() {
                w.write_record([step, time, name, v])?;
            }
        }
    }
    w.flush()?;
    Ok(out_path)
}

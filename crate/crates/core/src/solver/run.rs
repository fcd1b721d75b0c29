//! Step loop with the retry policy.

use std::time::Instant;

use crate::boundary::{dehomogenize, homogenize, BoundaryVar};
use crate::error::{Error, Result};
use crate::fields::State;

use super::picard::{direct_step, picard_solve, PicardReport};
use super::{Mode, Model};

#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    /// Map applications, summed over substeps.
    pub picard_iterations: usize,
    /// Mean contraction ratio over the step's iterations, if any were measured.
    pub picard_ratio: Option<f64>,
    /// Number of halvings used.
    pub retries: usize,
    pub wall_seconds: f64,
}

/// Receives the state after every step.
pub trait Observer {
    fn initial(&mut self, _model: &Model, _state: &State, _step: usize) -> Result<()> {
        Ok(())
    }
    fn step(&mut self, model: &Model, info: &StepInfo, state: &State) -> Result<()>;
}

pub struct NullObserver;

impl Observer for NullObserver {
    fn step(&mut self, _: &Model, _: &StepInfo, _: &State) -> Result<()> {
        Ok(())
    }
}

impl<F: FnMut(&Model, &StepInfo, &State) -> Result<()>> Observer for F {
    fn step(&mut self, model: &Model, info: &StepInfo, state: &State) -> Result<()> {
        self(model, info, state)
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub steps: usize,
    pub final_state: State,
    pub total_retries: usize,
    pub reports: Vec<StepInfo>,
}

struct Stats {
    iterations: usize,
    ratios: Vec<f64>,
    retries: usize,
}

fn single(model: &Model, state: &State, dt: f64) -> Result<(State, PicardReport)> {
    match model.solver.mode {
        Mode::Picard => picard_solve(model, state, dt),
        Mode::Direct => {
            let s = direct_step(model, state, dt)?;
            Ok((
                s,
                PicardReport {
                    increments: Vec::new(),
                    ratios: Vec::new(),
                    converged: true,
                    iterations: 1,
                },
            ))
        }
    }
}

fn advance(model: &Model, state: &State, dt: f64, depth: usize, stats: &mut Stats) -> Result<State> {
    match single(model, state, dt) {
        Ok((s, rep)) => {
            stats.iterations += rep.iterations;
            stats.ratios.extend(rep.ratios);
            Ok(s)
        }
        Err(e @ (Error::NonConvergence { .. } | Error::NonFinite(_))) if depth < model.solver.max_retries => {
            log::warn!("step at t = {} rejected ({e}); retrying with dt = {}", state.time, dt / 2.0);
            stats.retries += 1;
            let half = advance(model, state, dt / 2.0, depth + 1, stats)?;
            advance(model, &half, dt / 2.0, depth + 1, stats)
        }
        Err(e) => Err(e),
    }
}

/// One full step of size `model.solver.dt`, with retries and the optional
/// positivity fixer. Returns the new state and its step record.
pub fn step(model: &Model, state: &State, step_index: usize) -> Result<(State, StepInfo)> {
    let dt = model.solver.dt;
    let start = Instant::now();
    let mut stats = Stats {
        iterations: 0,
        ratios: Vec::new(),
        retries: 0,
    };
    let mut next = advance(model, state, dt, 0, &mut stats)?;
    next.time = (step_index + 1) as f64 * dt;
    if model.solver.strict_positivity {
        positivity_fix(model, &mut next)?;
    }
    let info = StepInfo {
        step: step_index + 1,
        time: next.time,
        dt,
        picard_iterations: stats.iterations,
        picard_ratio: if stats.ratios.is_empty() {
            None
        } else {
            Some(stats.ratios.iter().sum::<f64>() / stats.ratios.len() as f64)
        },
        retries: stats.retries,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((next, info))
}

/// Advance from step `start_step` to `solver.n_steps()`.
pub fn run_from(model: &Model, initial: State, start_step: usize, observer: &mut dyn Observer) -> Result<RunSummary> {
    initial.validate()?;
    initial.grid().check(&model.grid)?;
    observer.initial(model, &initial, start_step)?;
    let n = model.solver.n_steps();
    let mut state = initial;
    let mut reports = Vec::new();
    let mut total_retries = 0;
    for k in start_step..n {
        let (next, info) = step(model, &state, k)?;
        total_retries += info.retries;
        observer.step(model, &info, &next)?;
        reports.push(info);
        state = next;
    }
    Ok(RunSummary {
        steps: n.saturating_sub(start_step),
        final_state: state,
        total_retries,
        reports,
    })
}

pub fn run(model: &Model, initial: State, observer: &mut dyn Observer) -> Result<RunSummary> {
    run_from(model, initial, 0, observer)
}

/// Clip negative mixing ratios and rescale the remainder so that each
/// species keeps its dry-density weighted integral.
pub fn positivity_fix(model: &Model, state: &mut State) -> Result<bool> {
    let factors = model.factors(state.time)?;
    let rho = state.log_rho_d.map(f64::exp);
    let vars = [BoundaryVar::V, BoundaryVar::C, BoundaryVar::R];
    let mut touched = false;
    for (j, v) in vars.iter().enumerate() {
        let vf = factors.get(*v);
        let q = dehomogenize(&state.frak_q[j], vf)?;
        if q.min() >= 0.0 {
            continue;
        }
        let before = (&rho * &q).integral();
        let mut qp = q.map(|x| x.max(0.0));
        let after = (&rho * &qp).integral();
        if after > 0.0 && before >= 0.0 {
            qp = qp.scale(before / after);
        }
        log::info!("positivity fixer active for {} (min {:e})", v.key(), q.min());
        state.frak_q[j] = homogenize(&qp, vf)?;
        touched = true;
    }
    Ok(touched)
}

//! Fixed-point iteration of the step map.

use crate::boundary::HomogenizationFactors;
use crate::error::{Error, Result};
use crate::fields::State;
use crate::spectral::{BasisKind, Spectral, Spectrum};

use super::density::density_step;
use super::linear::{linear_step, LinearOutput};
use super::rhs::assemble_rhs;
use super::Model;

/// Increments below this multiple of the iterate norm count as roundoff.
const NOISE: f64 = 1e-14;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PicardReport {
    /// `||x^m - x^{m-1}||` in the step metric, `m = 1..`
    pub increments: Vec<f64>,
    /// `||x^{m+1} - x^m|| / ||x^m - x^{m-1}||`, where the denominator is
    /// above roundoff.
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl PicardReport {
    pub fn final_ratio(&self) -> Option<f64> {
        self.ratios.last().copied()
    }

    pub fn mean_ratio(&self) -> Option<f64> {
        if self.ratios.is_empty() {
            None
        } else {
            Some(self.ratios.iter().sum::<f64>() / self.ratios.len() as f64)
        }
    }
}

/// One application of the map with `frozen` as the coefficient iterate.
pub fn apply_map(
    model: &Model,
    current: &State,
    frozen: &State,
    factors: &HomogenizationFactors,
    dt: f64,
) -> Result<LinearOutput> {
    let log_rho = density_step(&model.sp, &current.log_rho_d, &frozen.u, dt)?;
    let rhs = assemble_rhs(model, frozen, &log_rho, factors)?;
    linear_step(model, current, &rhs, log_rho, dt)
}

/// Spectra of the prognostic fields of `s` in the order used by [`LinearOutput`].
pub fn state_spectra(sp: &Spectral, s: &State) -> Vec<Spectrum> {
    vec![
        sp.forward(&s.u.v1, BasisKind::Neumann),
        sp.forward(&s.u.v2, BasisKind::Neumann),
        sp.forward(&s.u.w, BasisKind::Dirichlet),
        sp.forward(&s.frak_t, BasisKind::Neumann),
        sp.forward(&s.frak_q[0], BasisKind::Neumann),
        sp.forward(&s.frak_q[1], BasisKind::Neumann),
        sp.forward(&s.frak_q[2], BasisKind::Neumann),
    ]
}

/// `sqrt(sum ||f||^2 + dt sum ||f||_{H^1}^2)` over `(u, frak_T, frak_q)`.
pub fn step_norm(sp: &Spectral, spectra: &[Spectrum], dt: f64) -> f64 {
    let mut total = 0.0;
    for s in spectra {
        let l2 = sp.spec_l2_sq(s);
        total += l2 + dt * (l2 + sp.spec_grad_sq(s));
    }
    total.sqrt()
}

pub fn step_distance(sp: &Spectral, a: &[Spectrum], b: &[Spectrum], dt: f64) -> f64 {
    let d: Vec<Spectrum> = a.iter().zip(b).map(|(x, y)| x.sub(y)).collect();
    step_norm(sp, &d, dt)
}

/// Iterate the map from `current` until the increment drops below
/// `picard_tol` times the first increment.
///
/// With `picard_max_iters = 1` this is a single application and never fails
/// to converge.
pub fn picard_solve(model: &Model, current: &State, dt: f64) -> Result<(State, PicardReport)> {
    let factors = model.factors(current.time + dt)?;
    let sp = &model.sp;
    let cfg = &model.solver;
    let mut report = PicardReport::default();
    let mut prev_state = current.clone();
    let mut prev_spec = state_spectra(sp, current);
    for m in 1..=cfg.picard_max_iters {
        let out = apply_map(model, current, &prev_state, &factors, dt)?;
        let inc = step_distance(sp, &out.spectra, &prev_spec, dt);
        let norm = step_norm(sp, &out.spectra, dt);
        let floor = NOISE * norm;
        if let Some(&last) = report.increments.last() {
            if last > floor {
                report.ratios.push(inc / last);
            }
        }
        report.increments.push(inc);
        report.iterations = m;
        let first = report.increments[0];
        let converged = inc <= floor || (m >= 2 && inc <= cfg.picard_tol * first);
        prev_state = out.state;
        prev_spec = out.spectra;
        if converged {
            report.converged = true;
            break;
        }
    }
    if !report.converged && cfg.picard_max_iters > 1 {
        return Err(Error::NonConvergence {
            iterations: report.iterations,
            last: *report.increments.last().unwrap(),
            first: report.increments[0],
        });
    }
    Ok((prev_state, report))
}

/// Single application of the map (IMEX step).
pub fn direct_step(model: &Model, current: &State, dt: f64) -> Result<State> {
    let factors = model.factors(current.time + dt)?;
    Ok(apply_map(model, current, current, &factors, dt)?.state)
}

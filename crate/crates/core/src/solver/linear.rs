//! Implicit diffusion with constant coefficients, explicit everything else.
//!
//! Variable mass factors are split: the implicit operator uses the domain
//! mean of the local diffusivity (`kappa / Q_th`, `mu / (rho_d Q_m)`), and the
//! deviation from the mean acts on the frozen field explicitly.

use crate::error::{Error, Result};
use crate::fields::{ScalarField, State, VectorField};
use crate::spectral::{BasisKind, Spectrum};

use super::rhs::RhsTerms;
use super::Model;

/// New state and the spectra of its prognostic fields, in the order
/// `v1, v2, w, frak_T, frak_q_v, frak_q_c, frak_q_r`.
#[derive(Clone, Debug)]
pub struct LinearOutput {
    pub state: State,
    pub spectra: Vec<Spectrum>,
}

/// Advance the parabolic equations by `dt` from `current`, with right-hand
/// sides evaluated on the frozen iterate and `log_rho` already advanced.
pub fn linear_step(
    model: &Model,
    current: &State,
    rhs: &RhsTerms,
    log_rho: ScalarField,
    dt: f64,
) -> Result<LinearOutput> {
    let sp = &model.sp;
    let c = &model.constants;
    let grid = current.grid();
    grid.check(&log_rho.grid())?;
    let n = grid.len();
    let dealias = model.solver.dealias;
    let finish = |mut s: Spectrum| -> (ScalarField, Spectrum) {
        if dealias {
            sp.spec_dealias(&mut s);
        }
        (sp.inverse(&s), s)
    };

    // temperature
    let diff: Vec<f64> = rhs.q_th.values().iter().map(|q| c.kappa / q).collect();
    let dbar = diff.iter().sum::<f64>() / n as f64;
    let it = rhs.temperature_total();
    let lap = rhs.frozen.lap_t.values();
    let q_th = rhs.q_th.values();
    let tn = current.frak_t.values();
    let g_t: Vec<f64> = (0..n)
        .map(|i| tn[i] + dt * (it.values()[i] / q_th[i] + (diff[i] - dbar) * lap[i]))
        .collect();
    let g_t = ScalarField::from_vec(grid, g_t)?;
    let (frak_t, s_t) = finish(sp.spec_helmholtz(&sp.forward(&g_t, BasisKind::Neumann), dt * dbar));

    // moisture
    let mut frak_q = Vec::with_capacity(3);
    let mut s_q = Vec::with_capacity(3);
    for j in 0..3 {
        let mut g = current.frak_q[j].clone();
        g.axpy(dt, &rhs.moisture_total(j));
        let (f, s) = finish(sp.spec_helmholtz(&sp.forward(&g, BasisKind::Neumann), dt));
        frak_q.push(f);
        s_q.push(s);
    }

    // momentum
    let m = rhs.mass.values();
    let d_mu: Vec<f64> = m.iter().map(|m| c.mu / m).collect();
    let d_ml: Vec<f64> = m.iter().map(|m| (c.mu + c.lambda) / m).collect();
    let dm = d_mu.iter().sum::<f64>() / n as f64;
    let dl = d_ml.iter().sum::<f64>() / n as f64;
    let lap_u = rhs.frozen.lap_u.components();
    let gd_u = rhs.frozen.grad_div_u.components();
    let un = current.u.components();
    let mut gs = Vec::with_capacity(3);
    for k in 0..3 {
        let f = rhs.momentum_total(k);
        let (lv, gv) = (lap_u[k].values(), gd_u[k].values());
        let data: Vec<f64> = (0..n)
            .map(|i| {
                un[k].values()[i]
                    + dt * (f.values()[i] / m[i] + (d_mu[i] - dm) * lv[i] + (d_ml[i] - dl) * gv[i])
            })
            .collect();
        gs.push(ScalarField::from_vec(grid, data)?);
    }
    let spec_g = [
        sp.forward(&gs[0], BasisKind::Neumann),
        sp.forward(&gs[1], BasisKind::Neumann),
        sp.forward(&gs[2], BasisKind::Dirichlet),
    ];
    let [a, b, w] = sp.spec_vector_helmholtz([&spec_g[0], &spec_g[1], &spec_g[2]], dt * dm, dt * dl)?;
    let (v1, a) = finish(a);
    let (v2, b) = finish(b);
    let (w, w_s) = finish(w);

    let [q0, q1, q2]: [ScalarField; 3] = frak_q.try_into().expect("three species");
    let state = State {
        log_rho_d: log_rho,
        u: VectorField { v1, v2, w },
        frak_t,
        frak_q: [q0, q1, q2],
        time: current.time + dt,
    };
    for (name, f) in state.named_fields() {
        if let Some(i) = f.first_non_finite() {
            return Err(Error::NonFinite(format!("linear step output {name} at flat index {i}")));
        }
    }
    let mut spectra = vec![a, b, w_s, s_t];
    spectra.extend(s_q);
    Ok(LinearOutput { state, spectra })
}


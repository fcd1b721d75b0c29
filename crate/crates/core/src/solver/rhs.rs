//! Explicit right-hand sides evaluated on a frozen iterate.
//!
//! With `G = frak_F + psi_F` (so the physical variable is `B^{-1} G`) the
//! temperature equation reads `Q_th d(frak_T)/dt - kappa Lap(frak_T) = I_T`,
//! the moisture equations `d(frak_q)/dt - Lap(frak_q) = I_q`, and momentum
//! `rho_d Q_m du/dt - mu Lap u - (mu + lambda) grad div u = I_u`. Each `I` is
//! kept as a list of named terms.

use crate::boundary::{BoundaryVar, HomogenizationFactors, VariableFactors};
use crate::error::{Error, Result};
use crate::fields::{ScalarField, State, VectorField};
use crate::microphysics::{saturation_q_vs, sources, SourceBundle};
use crate::spectral::{BasisKind, Spectral, Spectrum};
use crate::thermo::{pointwise, q_factors};

use super::Model;

#[derive(Clone, Debug)]
pub struct Term {
    pub name: &'static str,
    pub field: ScalarField,
}

/// Operators of the frozen fields needed by the lagged-coefficient split.
#[derive(Clone, Debug)]
pub struct FrozenOps {
    pub lap_t: ScalarField,
    pub lap_u: VectorField,
    pub grad_div_u: VectorField,
}

#[derive(Clone, Debug)]
pub struct RhsTerms {
    pub momentum: [Vec<Term>; 3],
    pub temperature: Vec<Term>,
    pub moisture: [Vec<Term>; 3],
    /// `rho_d Q_m^+`
    pub mass: ScalarField,
    pub q_th: ScalarField,
    pub sources: SourceBundle,
    pub frozen: FrozenOps,
}

fn total(terms: &[Term]) -> ScalarField {
    let mut out = ScalarField::zeros(terms[0].field.grid());
    for t in terms {
        out.axpy(1.0, &t.field);
    }
    out
}

impl RhsTerms {
    pub fn momentum_total(&self, i: usize) -> ScalarField {
        total(&self.momentum[i])
    }

    pub fn temperature_total(&self) -> ScalarField {
        total(&self.temperature)
    }

    pub fn moisture_total(&self, j: usize) -> ScalarField {
        total(&self.moisture[j])
    }

    pub fn term(&self, equation: &str, name: &str) -> Option<&ScalarField> {
        let list: &[Term] = match equation {
            "v1" => &self.momentum[0],
            "v2" => &self.momentum[1],
            "w" => &self.momentum[2],
            "T" => &self.temperature,
            "q_v" => &self.moisture[0],
            "q_c" => &self.moisture[1],
            "q_r" => &self.moisture[2],
            _ => return None,
        };
        list.iter().find(|t| t.name == name).map(|t| &t.field)
    }

    fn check_finite(&self) -> Result<()> {
        let eqs: [(&str, &[Term]); 7] = [
            ("v1", &self.momentum[0]),
            ("v2", &self.momentum[1]),
            ("w", &self.momentum[2]),
            ("T", &self.temperature),
            ("q_v", &self.moisture[0]),
            ("q_c", &self.moisture[1]),
            ("q_r", &self.moisture[2]),
        ];
        for (eq, terms) in eqs {
            for t in terms {
                if !t.field.is_finite() {
                    return Err(Error::NonFinite(format!("right-hand side term {eq}.{}", t.name)));
                }
            }
        }
        Ok(())
    }
}

/// Spectrum and physical gradient of `f` in `kind`.
pub(crate) fn grad_in(sp: &Spectral, f: &ScalarField, kind: BasisKind) -> (Spectrum, [ScalarField; 3]) {
    let s = sp.forward(f, kind);
    let g = [
        sp.inverse(&sp.spec_dx(&s)),
        sp.inverse(&sp.spec_dy(&s)),
        sp.inverse(&sp.spec_dz(&s)),
    ];
    (s, g)
}

/// `u . grad` of a field given its gradient; the product is projected on
/// `kind` and optionally dealiased.
fn transport(sp: &Spectral, u: &VectorField, grad: &[ScalarField; 3], kind: BasisKind, dealias: bool) -> ScalarField {
    let n = u.grid().len();
    let (a, b, c) = (u.v1.values(), u.v2.values(), u.w.values());
    let (gx, gy, gz) = (grad[0].values(), grad[1].values(), grad[2].values());
    let prod: Vec<f64> = (0..n).map(|i| a[i] * gx[i] + b[i] * gy[i] + c[i] * gz[i]).collect();
    let p = ScalarField::from_vec(u.grid(), prod).expect("grid length");
    if !dealias {
        return p;
    }
    let mut s = sp.forward(&p, kind);
    sp.spec_dealias(&mut s);
    sp.inverse(&s)
}

fn field(g: crate::fields::Grid, f: impl Fn(usize, usize) -> f64) -> ScalarField {
    let nz = g.nz;
    ScalarField::from_vec(g, (0..g.len()).map(|i| f(i, i % nz)).collect()).expect("grid length")
}

struct Homogenized<'a> {
    vf: &'a VariableFactors,
    g_field: ScalarField,
    /// spectral gradient of frak_F
    grad_frak: [ScalarField; 3],
    spec: Spectrum,
    /// d(G)/dz
    dz_g: ScalarField,
}

fn homogenized<'a>(sp: &Spectral, frak: &ScalarField, vf: &'a VariableFactors) -> Homogenized<'a> {
    let (spec, grad_frak) = grad_in(sp, frak, BasisKind::Neumann);
    let mut g_field = frak.clone();
    g_field.axpy(1.0, &vf.ext.psi);
    let mut dz_g = grad_frak[2].clone();
    dz_g.axpy(1.0, &vf.ext.dz_psi);
    Homogenized {
        vf,
        g_field,
        grad_frak,
        spec,
        dz_g,
    }
}

impl Homogenized<'_> {
    /// `u . grad G` with the frak part dealiased and the psi part exact.
    fn advection(&self, sp: &Spectral, u: &VectorField, dealias: bool) -> ScalarField {
        let mut a = transport(sp, u, &self.grad_frak, BasisKind::Neumann, dealias);
        let e = &self.vf.ext;
        let (ux, uy, uz) = (u.v1.values(), u.v2.values(), u.w.values());
        for (i, v) in a.values_mut().iter_mut().enumerate() {
            *v += ux[i] * e.dx_psi.values()[i] + uy[i] * e.dy_psi.values()[i] + uz[i] * e.dz_psi.values()[i];
        }
        a
    }

    /// `-2 A' dG/dz + (A'^2 - A'') G + Lap psi`
    fn robin_diffusion(&self) -> ScalarField {
        let g = self.g_field.grid();
        let vf = self.vf;
        field(g, |i, iz| {
            -2.0 * vf.da[iz] * self.dz_g.values()[i]
                + vf.dzz_binv_b[iz] * self.g_field.values()[i]
                + vf.ext.lap_psi.values()[i]
        })
    }

    fn physical(&self) -> ScalarField {
        self.g_field.scale_by_profile(&self.vf.binv)
    }
}

/// Evaluate all explicit terms on `frozen` with dry density `log_rho`.
pub fn assemble_rhs(
    model: &Model,
    frozen: &State,
    log_rho: &ScalarField,
    factors: &HomogenizationFactors,
) -> Result<RhsTerms> {
    let sp = &model.sp;
    let c = &model.constants;
    let grid = frozen.grid();
    grid.check(&log_rho.grid())?;
    let dealias = model.solver.dealias;
    let u = &frozen.u;

    let ht = homogenized(sp, &frozen.frak_t, factors.get(BoundaryVar::T));
    let hq = [
        homogenized(sp, &frozen.frak_q[0], factors.get(BoundaryVar::V)),
        homogenized(sp, &frozen.frak_q[1], factors.get(BoundaryVar::C)),
        homogenized(sp, &frozen.frak_q[2], factors.get(BoundaryVar::R)),
    ];
    let t_phys = ht.physical();
    let q_phys = [hq[0].physical(), hq[1].physical(), hq[2].physical()];
    let rho_d = log_rho.map(f64::exp);

    let qf = q_factors(c, &q_phys[0], &q_phys[1], &q_phys[2], model.clipped)?;
    let mass = &rho_d * &qf.q_m;
    let p = field(grid, |i, _| {
        pointwise::pressure(c, rho_d.values()[i], q_phys[0].values()[i], t_phys.values()[i])
    });
    let (rho_h, p_h) = model.reference_profiles();
    let p_pert = field(grid, |i, iz| p.values()[i] - p_h[iz]);
    let qvs = saturation_q_vs(&p, &t_phys, &model.saturation)?;
    let src = sources(
        c,
        &t_phys,
        &q_phys[0],
        &q_phys[1],
        &q_phys[2],
        &qvs,
        model.clipped,
        model.clipping,
    )?;
    let (vr, dvr) = model.v_r_profile();

    // velocity spectra and derivatives
    let kinds = [BasisKind::Neumann, BasisKind::Neumann, BasisKind::Dirichlet];
    let comps = u.components();
    let mut u_spec = Vec::with_capacity(3);
    let mut u_grad = Vec::with_capacity(3);
    for k in 0..3 {
        let (s, g) = grad_in(sp, comps[k], kinds[k]);
        u_spec.push(s);
        u_grad.push(g);
    }
    let mut div_spec = sp.spec_dx(&u_spec[0]);
    div_spec.axpy(1.0, &sp.spec_dy(&u_spec[1]));
    div_spec.axpy(1.0, &sp.spec_dz(&u_spec[2]));
    let div_u = sp.inverse(&div_spec);
    let grad_div_u = VectorField {
        v1: sp.inverse(&sp.spec_dx(&div_spec)),
        v2: sp.inverse(&sp.spec_dy(&div_spec)),
        w: sp.inverse(&sp.spec_dz(&div_spec)),
    };
    let lap_u = VectorField {
        v1: sp.inverse(&sp.spec_laplacian(&u_spec[0])),
        v2: sp.inverse(&sp.spec_laplacian(&u_spec[1])),
        w: sp.inverse(&sp.spec_laplacian(&u_spec[2])),
    };

    // momentum
    let ps = sp.forward(&p_pert, BasisKind::Neumann);
    let grad_p = [
        sp.inverse(&sp.spec_dx(&ps)),
        sp.inverse(&sp.spec_dy(&ps)),
        sp.dz_free(&p_pert),
    ];
    let q_r = &q_phys[2];
    let g = c.g;
    let mut momentum: [Vec<Term>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for k in 0..3 {
        let pressure = if k == 2 {
            field(grid, |i, iz| -grad_p[2].values()[i] + rho_h[iz] * g)
        } else {
            grad_p[k].scale(-1.0)
        };
        let gravity = if k == 2 {
            field(grid, |i, _| -mass.values()[i] * g)
        } else {
            ScalarField::zeros(grid)
        };
        let adv = transport(sp, u, &u_grad[k], kinds[k], dealias);
        let advection = field(grid, |i, _| -mass.values()[i] * adv.values()[i]);
        let dzu = &u_grad[k][2];
        let drag = field(grid, |i, iz| rho_d.values()[i] * q_r.values()[i] * vr[iz] * dzu.values()[i]);
        momentum[k] = vec![
            Term { name: "pressure", field: pressure },
            Term { name: "gravity", field: gravity },
            Term { name: "advection", field: advection },
            Term { name: "drag", field: drag },
        ];
    }

    // temperature
    let vt = ht.vf;
    let gt = &ht.g_field;
    let qth = &qf.q_th;
    let adv_t = ht.advection(sp, u, dealias);
    let w = &u.w;
    let s_phase = &src.s_ev - &src.s_cd;
    let kappa = c.kappa;
    let temperature = vec![
        Term {
            name: "advection",
            field: field(grid, |i, _| -qth.values()[i] * adv_t.values()[i]),
        },
        Term {
            name: "boundary_advection",
            field: field(grid, |i, iz| qth.values()[i] * w.values()[i] * vt.da[iz] * gt.values()[i]),
        },
        Term {
            name: "rain_heat",
            field: field(grid, |i, iz| {
                c.c_l * q_r.values()[i] * vr[iz] * (ht.dz_g.values()[i] - vt.da[iz] * gt.values()[i])
            }),
        },
        Term {
            name: "robin_diffusion",
            field: ht.robin_diffusion().scale(kappa),
        },
        Term {
            name: "compression",
            field: field(grid, |i, _| qf.q_cp.values()[i] * gt.values()[i] * div_u.values()[i]),
        },
        Term {
            name: "phase",
            field: field(grid, |i, iz| {
                -(qf.q_1 * gt.values()[i] + qf.q_2 * vt.b[iz]) * s_phase.values()[i]
            }),
        },
        Term {
            name: "psi_rate",
            field: field(grid, |i, _| -qth.values()[i] * vt.dt_psi.values()[i]),
        },
    ];
    let lap_t = sp.inverse(&sp.spec_laplacian(&ht.spec));

    // moisture
    let tendency = [
        &src.s_ev - &src.s_cd,
        field(grid, |i, _| src.s_cd.values()[i] - (src.s_ac.values()[i] + src.s_cr.values()[i])),
        field(grid, |i, _| (src.s_ac.values()[i] + src.s_cr.values()[i]) - src.s_ev.values()[i]),
    ];
    let dz_log_rho = if q_phys[2].max_abs() > 0.0 || factors.get(BoundaryVar::R).ext.psi.max_abs() > 0.0 {
        Some(sp.dz_free(log_rho))
    } else {
        None
    };
    let mut moisture: [Vec<Term>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for j in 0..3 {
        let h = &hq[j];
        let vf = h.vf;
        let gj = &h.g_field;
        let adv = h.advection(sp, u, dealias);
        let mut terms = vec![
            Term {
                name: "advection",
                field: adv.scale(-1.0),
            },
            Term {
                name: "boundary_advection",
                field: field(grid, |i, iz| w.values()[i] * vf.da[iz] * gj.values()[i]),
            },
            Term {
                name: "robin_diffusion",
                field: h.robin_diffusion(),
            },
            Term {
                name: "source",
                field: tendency[j].scale_by_profile(&vf.b),
            },
            Term {
                name: "psi_rate",
                field: vf.dt_psi.scale(-1.0),
            },
        ];
        if j == 2 {
            let sed = match &dz_log_rho {
                Some(dlr) => field(grid, |i, iz| {
                    vr[iz] * (h.dz_g.values()[i] - vf.da[iz] * gj.values()[i])
                        + gj.values()[i] * (dvr[iz] + vr[iz] * dlr.values()[i])
                }),
                None => ScalarField::zeros(grid),
            };
            terms.push(Term {
                name: "sedimentation",
                field: sed,
            });
        }
        moisture[j] = terms;
    }

    let out = RhsTerms {
        momentum,
        temperature,
        moisture,
        mass,
        q_th: qf.q_th,
        sources: src,
        frozen: FrozenOps {
            lap_t,
            lap_u,
            grad_div_u,
        },
    };
    out.check_finite()?;
    Ok(out)
}

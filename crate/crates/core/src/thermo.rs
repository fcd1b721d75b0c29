//! Thermodynamic closures and the Q-factors.
//!
//! Field operations check grids and forward to the scalar kernels in
//! [`pointwise`], which the solver calls directly inside its node loops.

use crate::constants::PhysConstants;
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};

pub mod pointwise {
    use crate::constants::PhysConstants;

    #[inline]
    pub fn pos(x: f64) -> f64 {
        0.5 * (x.abs() + x)
    }

    /// `c_nu = c_pd + c_pv q_v + c_l (q_c + q_r)`
    #[inline]
    pub fn mixed_heat_capacity(c: &PhysConstants, qv: f64, qc: f64, qr: f64) -> f64 {
        c.c_pd + c.c_pv * qv + c.c_l * (qc + qr)
    }

    #[inline]
    pub fn mixed_gas_constant(c: &PhysConstants, qv: f64, qc: f64, qr: f64) -> f64 {
        ((c.c_pv / c.c_pd) * c.r_d - c.r_v) * qv + (c.c_l / c.c_pd) * c.r_d * (qc + qr)
    }

    #[inline]
    pub fn latent_heat(c: &PhysConstants, t: f64) -> f64 {
        c.l_ref + (c.c_pv - c.c_l) * (t - c.t_ref)
    }

    #[inline]
    pub fn pressure(c: &PhysConstants, rho_d: f64, qv: f64, t: f64) -> f64 {
        rho_d * (c.r_d + c.r_v * qv) * t
    }

    #[inline]
    pub fn potential_temperature(c: &PhysConstants, t: f64, p: f64) -> f64 {
        let g = c.gamma();
        t * (c.p_ref / p).powf((g - 1.0) / g)
    }

    #[inline]
    pub fn moist_density(rho_d: f64, qv: f64, qc: f64, qr: f64) -> f64 {
        rho_d * (1.0 + qv + qc + qr)
    }

    #[inline]
    pub fn q_m(qv: f64, qc: f64, qr: f64) -> f64 {
        1.0 + qv + qc + qr
    }

    /// Coefficient form `c_pd/g + (c_pv/g + c_pv R_d/c_pd - R_v) q_v + (c_l/g + c_l R_d/c_pd)(q_c+q_r)`.
    #[inline]
    pub fn q_th(c: &PhysConstants, qv: f64, qc: f64, qr: f64) -> f64 {
        let g = c.gamma();
        c.c_pd / g
            + (c.c_pv / g + (c.c_pv / c.c_pd) * c.r_d - c.r_v) * qv
            + (c.c_l / g + (c.c_l / c.c_pd) * c.r_d) * (qc + qr)
    }

    /// `Q_cp = -R_d - R_v q_v`, the collapsed form of `sigma - (R_d/c_pd) c_nu`.
    #[inline]
    pub fn q_cp(c: &PhysConstants, qv: f64) -> f64 {
        -c.r_d - c.r_v * qv
    }
}

pub fn mixed_heat_capacity(
    c: &PhysConstants,
    qv: &ScalarField,
    qc: &ScalarField,
    qr: &ScalarField,
) -> Result<ScalarField> {
    map3(qv, qc, qr, |a, b, d| pointwise::mixed_heat_capacity(c, a, b, d))
}

pub fn mixed_gas_constant(
    c: &PhysConstants,
    qv: &ScalarField,
    qc: &ScalarField,
    qr: &ScalarField,
) -> Result<ScalarField> {
    map3(qv, qc, qr, |a, b, d| pointwise::mixed_gas_constant(c, a, b, d))
}

pub fn latent_heat(c: &PhysConstants, t: &ScalarField) -> ScalarField {
    t.map(|v| pointwise::latent_heat(c, v))
}

pub fn pressure(
    c: &PhysConstants,
    rho_d: &ScalarField,
    qv: &ScalarField,
    t: &ScalarField,
) -> Result<ScalarField> {
    if let Some((i, &v)) = rho_d.values().iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositive {
            quantity: "rho_d",
            index: i,
            value: v,
        });
    }
    map3(rho_d, qv, t, |r, q, tt| pointwise::pressure(c, r, q, tt))
}

pub fn potential_temperature(c: &PhysConstants, t: &ScalarField, p: &ScalarField) -> Result<ScalarField> {
    if let Some((i, &v)) = p.values().iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositive {
            quantity: "pressure",
            index: i,
            value: v,
        });
    }
    t.zip_map(p, |tt, pp| pointwise::potential_temperature(c, tt, pp))
}

pub fn moist_density(
    rho_d: &ScalarField,
    qv: &ScalarField,
    qc: &ScalarField,
    qr: &ScalarField,
) -> Result<ScalarField> {
    rho_d.grid().check(&qv.grid())?;
    let qsum = map3(qv, qc, qr, pointwise::q_m)?;
    rho_d.zip_map(&qsum, |r, s| r * s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QFactors {
    pub q_m: ScalarField,
    pub q_th: ScalarField,
    pub q_cp: ScalarField,
    pub q_1: f64,
    pub q_2: f64,
    pub clipped: bool,
}

/// Q-factors of the raw system, or of the clipped system when `clipped`.
/// `Q_cp` is never clipped.
pub fn q_factors(
    c: &PhysConstants,
    qv: &ScalarField,
    qc: &ScalarField,
    qr: &ScalarField,
    clipped: bool,
) -> Result<QFactors> {
    use pointwise::pos;
    let f = |x: f64| if clipped { pos(x) } else { x };
    Ok(QFactors {
        q_m: map3(qv, qc, qr, |a, b, d| pointwise::q_m(f(a), f(b), f(d)))?,
        q_th: map3(qv, qc, qr, |a, b, d| pointwise::q_th(c, f(a), f(b), f(d)))?,
        q_cp: qv.map(|a| pointwise::q_cp(c, a)),
        q_1: c.q1(),
        q_2: c.q2(),
        clipped,
    })
}

/// `Q_1` from its defining expression `R_v/(R_d + R_v q_v) Q_cp + c_pv - c_l`,
/// with `Q_cp = sigma - (R_d/c_pd) c_nu` evaluated from the closures.
pub fn q1_from_closures(c: &PhysConstants, qv: f64, qc: f64, qr: f64) -> f64 {
    let sigma = pointwise::mixed_gas_constant(c, qv, qc, qr);
    let cnu = pointwise::mixed_heat_capacity(c, qv, qc, qr);
    let qcp = sigma - (c.r_d / c.c_pd) * cnu;
    c.r_v / (c.r_d + c.r_v * qv) * qcp + c.c_pv - c.c_l
}

fn map3(
    a: &ScalarField,
    b: &ScalarField,
    d: &ScalarField,
    f: impl Fn(f64, f64, f64) -> f64,
) -> Result<ScalarField> {
    let g: Grid = a.grid();
    g.check(&b.grid())?;
    g.check(&d.grid())?;
    let data = a
        .values()
        .iter()
        .zip(b.values())
        .zip(d.values())
        .map(|((&x, &y), &z)| f(x, y, z))
        .collect();
    ScalarField::from_vec(g, data)
}

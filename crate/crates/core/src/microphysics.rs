//! Warm-rain source terms and the saturation mixing ratio closure.

use std::fmt::Debug;
use std::sync::Arc;

use crate::constants::PhysConstants;
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::thermo::pointwise::pos;

/// Saturation mixing ratio `q_vs(p, T)`.
///
/// Implementations must be nonnegative, bounded by `q_vs_star`, zero for
/// `T <= 0` and Lipschitz. [`Saturation::register`] audits these on a lattice.
pub trait SaturationClosure: Send + Sync + Debug {
    fn q_vs(&self, p: f64, t: f64) -> f64;
    fn name(&self) -> &str;
}

/// `q_vs = q_vs_star * s(T) * p_ref / (p_ref + p+)` with
/// `s(T) = min(1, 2 T^2 / (T^2 + T_ref^2))` for `T > 0` and `s = 0` otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefaultSaturation {
    pub q_vs_star: f64,
    pub p_ref: f64,
    pub t_ref: f64,
}

impl DefaultSaturation {
    pub fn from_constants(c: &PhysConstants) -> Self {
        DefaultSaturation {
            q_vs_star: c.q_vs_star,
            p_ref: c.p_ref,
            t_ref: c.t_ref,
        }
    }

    /// `(L_T, L_p)` with `|q_vs(p,T) - q_vs(p',T')| <= L_T |T-T'| + L_p |p-p'|`.
    ///
    /// `s'` peaks at `T = T_ref / sqrt(3)` with value `3 sqrt(3) / (4 T_ref)`.
    pub fn lipschitz(&self) -> (f64, f64) {
        let lt = self.q_vs_star * 3.0 * 3f64.sqrt() / (4.0 * self.t_ref);
        let lp = self.q_vs_star / self.p_ref;
        (lt, lp)
    }
}

impl SaturationClosure for DefaultSaturation {
    fn q_vs(&self, p: f64, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let t2 = t * t;
        let s = (2.0 * t2 / (t2 + self.t_ref * self.t_ref)).min(1.0);
        self.q_vs_star * s * self.p_ref / (self.p_ref + pos(p))
    }

    fn name(&self) -> &str {
        "default"
    }
}

/// `q_vs = value` for `T > 0`, zero otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantSaturation {
    pub value: f64,
}

impl SaturationClosure for ConstantSaturation {
    fn q_vs(&self, _p: f64, t: f64) -> f64 {
        if t > 0.0 {
            self.value
        } else {
            0.0
        }
    }

    fn name(&self) -> &str {
        "constant"
    }
}

/// An audited closure.
#[derive(Clone, Debug)]
pub struct Saturation {
    closure: Arc<dyn SaturationClosure>,
}

impl Saturation {
    pub fn default_for(c: &PhysConstants) -> Self {
        Saturation {
            closure: Arc::new(DefaultSaturation::from_constants(c)),
        }
    }

    /// Accept a closure after sampling it on a `(p, T)` lattice.
    pub fn register(closure: Arc<dyn SaturationClosure>, c: &PhysConstants) -> Result<Self> {
        let n = 64;
        for i in 0..=n {
            let p = c.p_ref * 10.0 * i as f64 / n as f64;
            for j in 0..=n {
                let t = c.t_ref * (-2.0 + 5.0 * j as f64 / n as f64);
                let q = closure.q_vs(p, t);
                if !q.is_finite() || q < 0.0 || q > c.q_vs_star {
                    return Err(Error::Closure(format!(
                        "{}: q_vs({p}, {t}) = {q} outside [0, {}]",
                        closure.name(),
                        c.q_vs_star
                    )));
                }
                if t <= 0.0 && q != 0.0 {
                    return Err(Error::Closure(format!(
                        "{}: q_vs({p}, {t}) = {q} but must vanish for T <= 0",
                        closure.name()
                    )));
                }
            }
        }
        Ok(Saturation { closure })
    }

    #[inline]
    pub fn q_vs(&self, p: f64, t: f64) -> f64 {
        self.closure.q_vs(p, t)
    }

    pub fn name(&self) -> &str {
        self.closure.name()
    }
}

pub fn saturation_q_vs(p: &ScalarField, t: &ScalarField, closure: &Saturation) -> Result<ScalarField> {
    p.zip_map(t, |pp, tt| closure.q_vs(pp, tt))
}

/// Which arguments of the clipped condensation and auto-conversion rates
/// are clipped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Clipping {
    /// Nucleation term of `S_cd` and `S_ac` take the unclipped `q_v`, `q_c`.
    #[default]
    Literal,
    /// Every occurrence is clipped.
    Symmetric,
}

/// Rates at a single node.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Rates {
    pub s_ev: f64,
    pub s_cd: f64,
    pub s_ac: f64,
    pub s_cr: f64,
}

impl Rates {
    /// Tendencies of `(q_v, q_c, q_r)`; the auto-conversion plus collection
    /// sum is formed once and shared so that the three telescope.
    #[inline]
    pub fn tendencies(&self) -> [f64; 3] {
        let conversion = self.s_ac + self.s_cr;
        [self.s_ev - self.s_cd, self.s_cd - conversion, conversion - self.s_ev]
    }
}

/// Raw rates. `None` if the denominator `1 + q_v + q_c + q_r` is not positive.
#[inline]
pub fn raw_rates(c: &PhysConstants, t: f64, qv: f64, qc: f64, qr: f64, qvs: f64) -> Option<Rates> {
    let den = 1.0 + qv + qc + qr;
    if !(den > 0.0) {
        return None;
    }
    Some(Rates {
        s_ev: c.c_ev * t * ((c.r_d + c.r_v * qv) / den) * pos(qvs - qv) * qr,
        s_cd: c.c_cd * (qv - qvs) * qc + c.c_cn * pos(qv - qvs) * c.q_cn,
        s_ac: c.c_ac * pos(qc - c.q_ac),
        s_cr: c.c_cr * qc * qr,
    })
}

#[inline]
pub fn clipped_rates(
    c: &PhysConstants,
    t: f64,
    qv: f64,
    qc: f64,
    qr: f64,
    qvs: f64,
    clipping: Clipping,
) -> Rates {
    let (tp, qvp, qcp, qrp) = (pos(t), pos(qv), pos(qc), pos(qr));
    let (qv_cn, qc_ac) = match clipping {
        Clipping::Literal => (qv, qc),
        Clipping::Symmetric => (qvp, qcp),
    };
    Rates {
        s_ev: c.c_ev * tp * ((c.r_d + c.r_v * qvp) / (1.0 + qvp + qcp + qrp)) * pos(qvs - qvp) * qrp,
        s_cd: c.c_cd * (qvp - qvs) * qcp + c.c_cn * pos(qv_cn - qvs) * c.q_cn,
        s_ac: c.c_ac * pos(qc_ac - c.q_ac),
        s_cr: c.c_cr * qcp * qrp,
    }
}

/// Constant `C` with `|S| <= C (1 + M^2)` for every clipped rate, where
/// `M = max(|T|, |q_v|, |q_c|, |q_r|)`.
pub fn source_growth_constant(c: &PhysConstants) -> f64 {
    let ev = c.c_ev * c.r_d.max(c.r_v) * c.q_vs_star;
    let cd = c.c_cd * (1.0 + c.q_vs_star) + c.c_cn * c.q_cn;
    ev.max(cd).max(c.c_ac).max(c.c_cr)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceBundle {
    pub s_ev: ScalarField,
    pub s_cd: ScalarField,
    pub s_ac: ScalarField,
    pub s_cr: ScalarField,
    pub clipped: bool,
    pub q_vs_used: ScalarField,
}

/// Evaluate all four rates. `clipping` is ignored when `clipped` is false.
pub fn sources(
    c: &PhysConstants,
    t: &ScalarField,
    qv: &ScalarField,
    qc: &ScalarField,
    qr: &ScalarField,
    qvs: &ScalarField,
    clipped: bool,
    clipping: Clipping,
) -> Result<SourceBundle> {
    let g: Grid = t.grid();
    for f in [qv, qc, qr, qvs] {
        g.check(&f.grid())?;
    }
    let n = g.len();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let (tt, a, b, d, s) = (
            t.values()[i],
            qv.values()[i],
            qc.values()[i],
            qr.values()[i],
            qvs.values()[i],
        );
        let r = if clipped {
            clipped_rates(c, tt, a, b, d, s, clipping)
        } else {
            raw_rates(c, tt, a, b, d, s).ok_or_else(|| Error::NonPositive {
                quantity: "1 + q_v + q_c + q_r",
                index: i,
                value: 1.0 + a + b + d,
            })?
        };
        out[0][i] = r.s_ev;
        out[1][i] = r.s_cd;
        out[2][i] = r.s_ac;
        out[3][i] = r.s_cr;
    }
    let [ev, cd, ac, cr] = out;
    Ok(SourceBundle {
        s_ev: ScalarField::from_vec(g, ev)?,
        s_cd: ScalarField::from_vec(g, cd)?,
        s_ac: ScalarField::from_vec(g, ac)?,
        s_cr: ScalarField::from_vec(g, cr)?,
        clipped,
        q_vs_used: qvs.clone(),
    })
}

/// Sum of the vapor, cloud and rain tendencies (telescopes to zero).
///
/// The three tendencies are formed exactly as the solver forms them and then
/// summed with error-free transformations, so the result is the true sum of
/// the rounded tendencies.
pub fn water_exchange_residual(b: &SourceBundle) -> ScalarField {
    let g = b.s_ev.grid();
    let data = (0..g.len())
        .map(|i| {
            let r = Rates {
                s_ev: b.s_ev.values()[i],
                s_cd: b.s_cd.values()[i],
                s_ac: b.s_ac.values()[i],
                s_cr: b.s_cr.values()[i],
            };
            exact_sum3(r.tendencies())
        })
        .collect();
    ScalarField::from_vec(g, data).expect("bundle grid")
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn exact_sum3(v: [f64; 3]) -> f64 {
    let (s1, e1) = two_sum(v[0], v[1]);
    let (s2, e2) = two_sum(s1, v[2]);
    s2 + (e1 + e2)
}

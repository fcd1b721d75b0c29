//! Model constants.
//!
//! Two sets ship: [`PhysConstants::atmospheric`] uses SI magnitudes and
//! [`PhysConstants::nondimensional`] rescales them by `R_d`, `T_ref` and
//! `p_ref`. The workspace's scenarios run on the nondimensional set because
//! sound speed is then O(1) and `dt = 1e-3` is well inside the explicit
//! acoustic limit.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysConstants {
    pub r_d: f64,
    pub r_v: f64,
    pub c_pd: f64,
    pub c_pv: f64,
    pub c_l: f64,
    pub c_ev: f64,
    pub c_cd: f64,
    pub c_cn: f64,
    pub c_ac: f64,
    pub c_cr: f64,
    pub p_ref: f64,
    pub l_ref: f64,
    pub t_ref: f64,
    pub q_vs_star: f64,
    pub q_ac: f64,
    pub q_cn: f64,
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub g: f64,
}

impl Default for PhysConstants {
    fn default() -> Self {
        Self::atmospheric()
    }
}

impl PhysConstants {
    pub fn atmospheric() -> Self {
        PhysConstants {
            r_d: 287.0,
            r_v: 461.5,
            c_pd: 1004.0,
            c_pv: 1885.0,
            c_l: 4186.0,
            c_ev: 1.0,
            c_cd: 1.0,
            c_cn: 1.0,
            c_ac: 1.0,
            c_cr: 1.0,
            p_ref: 1e5,
            l_ref: 2.5e6,
            t_ref: 273.15,
            q_vs_star: 0.04,
            q_ac: 1e-3,
            q_cn: 1e-3,
            mu: 1.0,
            lambda: 0.0,
            kappa: 1.0,
            g: 9.81,
        }
    }

    /// Gas constants and heat capacities in units of `R_d`, temperatures in
    /// units of `T_ref`, pressure in units of `p_ref`. Gravity corresponds to
    /// a 1 km tall box.
    pub fn nondimensional() -> Self {
        let a = Self::atmospheric();
        let rt = a.r_d * a.t_ref;
        PhysConstants {
            r_d: 1.0,
            r_v: a.r_v / a.r_d,
            c_pd: a.c_pd / a.r_d,
            c_pv: a.c_pv / a.r_d,
            c_l: a.c_l / a.r_d,
            p_ref: 1.0,
            l_ref: a.l_ref / rt,
            t_ref: 1.0,
            g: a.g * 1000.0 / rt,
            ..a
        }
    }

    pub fn gamma(&self) -> f64 {
        self.c_pd / (self.c_pd - self.r_d)
    }

    /// `Q_1 = c_pv - c_l - R_v`
    pub fn q1(&self) -> f64 {
        self.c_pv - self.c_l - self.r_v
    }

    /// `Q_2 = L_ref - (c_pv - c_l) T_ref`
    pub fn q2(&self) -> f64 {
        self.l_ref - (self.c_pv - self.c_l) * self.t_ref
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("R_d", self.r_d),
            ("R_v", self.r_v),
            ("c_pd", self.c_pd),
            ("c_pv", self.c_pv),
            ("c_l", self.c_l),
            ("c_ev", self.c_ev),
            ("c_cd", self.c_cd),
            ("c_cn", self.c_cn),
            ("c_ac", self.c_ac),
            ("c_cr", self.c_cr),
            ("p_ref", self.p_ref),
            ("L_ref", self.l_ref),
            ("T_ref", self.t_ref),
            ("q_vs_star", self.q_vs_star),
            ("q_ac", self.q_ac),
            ("q_cn", self.q_cn),
            ("mu", self.mu),
            ("lambda", self.lambda),
            ("kappa", self.kappa),
            ("g", self.g),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(Error::Constants(format!("{name} is not finite")));
            }
        }
        for (name, v) in [
            ("c_ev", self.c_ev),
            ("c_cd", self.c_cd),
            ("c_cn", self.c_cn),
            ("c_ac", self.c_ac),
            ("c_cr", self.c_cr),
            ("R_d", self.r_d),
            ("R_v", self.r_v),
            ("p_ref", self.p_ref),
            ("T_ref", self.t_ref),
        ] {
            if v <= 0.0 {
                return Err(Error::Constants(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.c_pd <= self.r_d {
            return Err(Error::Constants(format!(
                "c_pd = {} must exceed R_d = {}",
                self.c_pd, self.r_d
            )));
        }
        if self.mu <= 0.0 {
            return Err(Error::Constants(format!("mu must be > 0, got {}", self.mu)));
        }
        if 2.0 * self.mu + 3.0 * self.lambda <= 0.0 {
            return Err(Error::Constants("2 mu + 3 lambda must be > 0".into()));
        }
        if self.kappa <= 0.0 {
            return Err(Error::Constants(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if self.q_vs_star < 0.0 {
            return Err(Error::Constants("q_vs_star must be >= 0".into()));
        }
        Ok(())
    }

    /// Names and mutable slots, in the order used by the config echo.
    pub fn entries_mut(&mut self) -> [(&'static str, &mut f64); 20] {
        [
            ("R_d", &mut self.r_d),
            ("R_v", &mut self.r_v),
            ("c_pd", &mut self.c_pd),
            ("c_pv", &mut self.c_pv),
            ("c_l", &mut self.c_l),
            ("c_ev", &mut self.c_ev),
            ("c_cd", &mut self.c_cd),
            ("c_cn", &mut self.c_cn),
            ("c_ac", &mut self.c_ac),
            ("c_cr", &mut self.c_cr),
            ("p_ref", &mut self.p_ref),
            ("L_ref", &mut self.l_ref),
            ("T_ref", &mut self.t_ref),
            ("q_vs_star", &mut self.q_vs_star),
            ("q_ac", &mut self.q_ac),
            ("q_cn", &mut self.q_cn),
            ("mu", &mut self.mu),
            ("lambda", &mut self.lambda),
            ("kappa", &mut self.kappa),
            ("g", &mut self.g),
        ]
    }
}

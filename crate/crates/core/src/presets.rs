//! Initial conditions.
//!
//! Every preset has zero wall slope in `v`, `T`, `q_j`, vanishing `w` at the
//! walls and horizontally uniform wall values, so constant boundary data equal
//! to the wall values satisfy the Robin conditions for any coefficients.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::{homogenize, BoundaryData, BoundarySpec, BoundaryVar};
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, State, VectorField};
use crate::solver::{Model, Reference};

const PI: f64 = std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Preset {
    #[default]
    Equilibrium,
    ThermalBubble,
    SaturatedLayer,
    Manufactured,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Equilibrium,
        Preset::ThermalBubble,
        Preset::SaturatedLayer,
        Preset::Manufactured,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Equilibrium => "equilibrium",
            Preset::ThermalBubble => "thermal_bubble",
            Preset::SaturatedLayer => "saturated_layer",
            Preset::Manufactured => "manufactured",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialConfig {
    pub preset: Preset,
    pub t0: f64,
    pub rho0: f64,
    /// Bubble temperature excess, or supersaturation excess of the layer.
    pub amplitude: f64,
    /// Bubble radius, or half-width of the layer.
    pub width: f64,
    /// Amplitude of a seeded random perturbation of `frak_T`.
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            preset: Preset::Equilibrium,
            t0: 1.0,
            rho0: 1.0,
            amplitude: 0.01,
            width: 0.25,
            perturbation: 0.0,
            seed: 0,
        }
    }
}

impl InitialConfig {
    pub fn reference(&self) -> Reference {
        Reference {
            t0: self.t0,
            rho0: self.rho0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0) || !(self.rho0 > 0.0) {
            return Err(Error::InvalidArgument("initial T0 and rho0 must be > 0".into()));
        }
        if !(self.width > 0.0) {
            return Err(Error::InvalidArgument("initial width must be > 0".into()));
        }
        if !self.amplitude.is_finite() || !self.perturbation.is_finite() {
            return Err(Error::InvalidArgument("initial amplitude must be finite".into()));
        }
        Ok(())
    }
}

/// Physical initial fields before homogenization.
#[derive(Clone, Debug)]
pub struct PhysicalInit {
    pub log_rho_d: ScalarField,
    pub u: VectorField,
    pub t: ScalarField,
    pub q: [ScalarField; 3],
}

fn sin4(z: f64) -> f64 {
    (PI * z).sin().powi(4)
}

pub fn physical_fields(model: &Model, ic: &InitialConfig) -> Result<PhysicalInit> {
    ic.validate()?;
    let g = model.grid;
    let c = &model.constants;
    let r = ic.reference();
    let log_rho_d = ScalarField::from_fn(g, |_, _, z| r.log_rho(c, z));
    let zero = ScalarField::zeros(g);
    let mut out = PhysicalInit {
        log_rho_d,
        u: VectorField::zeros(g),
        t: ScalarField::constant(g, ic.t0),
        q: [zero.clone(), zero.clone(), zero],
    };
    match ic.preset {
        Preset::Equilibrium => {}
        Preset::ThermalBubble => {
            let k = 1.0 / (PI * PI * ic.width * ic.width);
            out.t = ScalarField::from_fn(g, |x, y, z| {
                let h = (PI * (x - 1.0)).cos() + (PI * (y - 1.0)).cos() - 2.0;
                ic.t0 + ic.amplitude * (k * h).exp() * sin4(z)
            });
        }
        Preset::SaturatedLayer => {
            let mid = model.saturation.q_vs(r.pressure(c, 0.5), ic.t0);
            let (bg, peak) = (0.5, 1.0 + ic.amplitude.max(0.0) + 0.05);
            let band = |z: f64| -> f64 {
                let s = ((z - 0.5) / ic.width).clamp(-1.0, 1.0);
                // C^2 bump with zero slope at the walls
                (1.0 - s * s).powi(3) * sin4(z).sqrt()
            };
            out.q[0] = ScalarField::from_fn(g, |_, _, z| mid * (bg + (peak - bg) * band(z)));
            out.q[1] = ScalarField::from_fn(g, |x, y, z| {
                1e-4 + 1.5e-3 * band(z) * (1.0 + 0.5 * (PI * x).cos() * (PI * y).cos())
            });
            out.q[2] = ScalarField::from_fn(g, |x, _, z| 1e-5 + 2e-4 * band(z) * (1.0 + 0.5 * (PI * x).sin()));
        }
        Preset::Manufactured => {
            let e = ic.amplitude;
            out.u = VectorField {
                v1: ScalarField::from_fn(g, |x, y, z| e * (PI * x).sin() * (PI * y).cos() * (PI * z).cos()),
                v2: ScalarField::from_fn(g, |x, y, z| -e * (PI * x).cos() * (PI * y).sin() * (PI * z).cos()),
                w: ScalarField::from_fn(g, |x, _, z| 0.5 * e * (PI * x).cos() * (PI * z).sin()),
            };
            out.t = ScalarField::from_fn(g, |x, y, z| {
                ic.t0 + e * ((PI * x).cos() * (2.0 * PI * z).cos() + 0.5 * (PI * y).sin())
            });
            out.q[0] = ScalarField::from_fn(g, |x, _, z| 0.01 * (1.0 + 0.5 * (PI * x).cos() * (PI * z).cos()));
            out.q[1] = ScalarField::from_fn(g, |_, y, z| 1e-3 * (1.0 + 0.5 * (PI * y).cos() * (2.0 * PI * z).cos()));
            out.q[2] = ScalarField::from_fn(g, |x, y, _| 1e-4 * (1.0 + 0.5 * (PI * (x + y)).sin()));
        }
    }
    Ok(out)
}

fn wall_mean(f: &ScalarField, iz: usize) -> f64 {
    let g = f.grid();
    let mut s = 0.0;
    for c in 0..g.columns() {
        s += f.values()[c * g.nz + iz];
    }
    s / g.columns() as f64
}

/// Boundary values equal to the preset's wall values, with the given
/// Robin coefficients for every variable.
pub fn default_boundary(init: &PhysicalInit, alpha_bottom: f64, alpha_top: f64) -> BoundarySpec {
    let mut spec = BoundarySpec::uniform(alpha_bottom, alpha_top);
    let top = init.t.grid().nz - 1;
    let fields = [&init.t, &init.q[0], &init.q[1], &init.q[2]];
    for (v, f) in BoundaryVar::ALL.iter().zip(fields) {
        let b = spec.get_mut(*v);
        b.bottom = BoundaryData::Constant(wall_mean(f, 0));
        b.top = BoundaryData::Constant(wall_mean(f, top));
    }
    spec
}

/// Homogenize the preset with the model's boundary factors at `t = 0`.
pub fn preset_initial(model: &Model, ic: &InitialConfig) -> Result<State> {
    let init = physical_fields(model, ic)?;
    let f = model.factors(0.0)?;
    let mut state = State {
        log_rho_d: init.log_rho_d,
        u: init.u,
        frak_t: homogenize(&init.t, f.get(BoundaryVar::T))?,
        frak_q: [
            homogenize(&init.q[0], f.get(BoundaryVar::V))?,
            homogenize(&init.q[1], f.get(BoundaryVar::C))?,
            homogenize(&init.q[2], f.get(BoundaryVar::R))?,
        ],
        time: 0.0,
    };
    if ic.perturbation != 0.0 {
        let p = random_perturbation(model.grid, ic.seed);
        state.frak_t.axpy(ic.perturbation, &p);
    }
    state.validate()?;
    Ok(state)
}

/// Smooth field with unit maximum built from a few low cosine modes with
/// seeded random coefficients; zero wall slope.
pub fn random_perturbation(g: Grid, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for kx in 0..=2i32 {
        for ky in 0..=2i32 {
            for j in 0..=2i32 {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let ph: f64 = rng.gen_range(0.0..2.0 * PI);
                terms.push((kx, ky, j, a, ph));
            }
        }
    }
    let f = ScalarField::from_fn(g, |x, y, z| {
        terms
            .iter()
            .map(|&(kx, ky, j, a, ph)| a * (PI * (kx as f64 * x + ky as f64 * y) + ph).cos() * (j as f64 * PI * z).cos())
            .sum()
    });
    let m = f.max_abs();
    f.scale(1.0 / m)
}

//! Time integration.
//!
//! One step applies the map `M(x) = linear(rhs(x), density(x))` to a frozen
//! iterate `x`: the frozen velocity transports `log rho_d` semi-Lagrangially,
//! the explicit right-hand sides are evaluated on the frozen fields, and the
//! parabolic equations are advanced with a constant-coefficient implicit
//! solve. Picard mode iterates `M` to a fixed point; direct mode applies it
//! once.

pub mod density;
pub mod linear;
pub mod picard;
pub mod rhs;
pub mod run;

use std::sync::{Arc, OnceLock};

use crate::boundary::{build_factors, BoundarySpec, HomogenizationFactors, PsiRate};
use crate::constants::PhysConstants;
use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::microphysics::{Clipping, Saturation};
use crate::spectral::Spectral;

pub use density::density_step;
pub use linear::{linear_step, LinearOutput};
pub use picard::{direct_step, picard_solve, PicardReport};
pub use rhs::{assemble_rhs, RhsTerms, Term};
pub use run::{positivity_fix, run, run_from, step, NullObserver, Observer, RunSummary, StepInfo};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Picard,
    Direct,
}

/// Terminal fall speed of rain as a function of height.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VrProfile {
    Constant(f64),
    /// `1 + z^2 (1 - z)^2`
    Bump,
}

impl Default for VrProfile {
    fn default() -> Self {
        VrProfile::Constant(1.0)
    }
}

impl VrProfile {
    pub fn value(&self, z: f64) -> f64 {
        match self {
            VrProfile::Constant(v) => *v,
            VrProfile::Bump => 1.0 + z * z * (1.0 - z) * (1.0 - z),
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            VrProfile::Constant(_) => 0.0,
            VrProfile::Bump => 2.0 * z * (1.0 - z) * (1.0 - 2.0 * z),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub mode: Mode,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub dealias: bool,
    pub v_r: VrProfile,
    /// 0 disables checkpoints.
    pub checkpoint_every: usize,
    /// Number of times a rejected step may be retried at half the step size.
    pub max_retries: usize,
    pub strict_positivity: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            t_end: 1e-2,
            mode: Mode::Picard,
            picard_tol: 1e-6,
            picard_max_iters: 20,
            dealias: true,
            v_r: VrProfile::default(),
            checkpoint_every: 0,
            max_retries: 3,
            strict_positivity: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidArgument(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "picard_tol must be > 0, got {}",
                self.picard_tol
            )));
        }
        if self.picard_max_iters == 0 {
            return Err(Error::InvalidArgument("picard_max_iters must be >= 1".into()));
        }
        if let VrProfile::Constant(v) = self.v_r {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("V_r must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Isothermal hydrostatic profile subtracted from the pressure so that the
/// rest state is an exact discrete balance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reference {
    pub t0: f64,
    pub rho0: f64,
}

impl Reference {
    pub fn log_rho(&self, c: &PhysConstants, z: f64) -> f64 {
        self.rho0.ln() - c.g * z / (c.r_d * self.t0)
    }

    pub fn pressure(&self, c: &PhysConstants, z: f64) -> f64 {
        self.log_rho(c, z).exp() * c.r_d * self.t0
    }
}

/// Everything a step needs besides the state. Immutable during a run except
/// for the boundary factor cache.
pub struct Model {
    pub grid: Grid,
    pub sp: Spectral,
    pub constants: PhysConstants,
    pub saturation: Saturation,
    pub clipping: Clipping,
    /// Evaluate sources and Q-factors with clipped arguments.
    pub clipped: bool,
    pub boundary: BoundarySpec,
    pub psi_rate: PsiRate,
    pub solver: SolverConfig,
    pub reference: Reference,
    steady_factors: OnceLock<Arc<HomogenizationFactors>>,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("grid", &self.grid)
            .field("constants", &self.constants)
            .field("saturation", &self.saturation)
            .field("boundary", &self.boundary)
            .field("solver", &self.solver)
            .finish()
    }
}

impl Model {
    pub fn new(
        grid: Grid,
        constants: PhysConstants,
        boundary: BoundarySpec,
        solver: SolverConfig,
        reference: Reference,
    ) -> Result<Self> {
        constants.validate()?;
        boundary.validate()?;
        solver.validate()?;
        if !(reference.t0 > 0.0) || !(reference.rho0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reference T0 = {}, rho0 = {} must be > 0",
                reference.t0, reference.rho0
            )));
        }
        Ok(Model {
            grid,
            sp: Spectral::new(grid),
            saturation: Saturation::default_for(&constants),
            constants,
            clipping: Clipping::default(),
            clipped: true,
            boundary,
            psi_rate: PsiRate::default(),
            solver,
            reference,
            steady_factors: OnceLock::new(),
        })
    }

    pub fn with_saturation(mut self, s: Saturation) -> Self {
        self.saturation = s;
        self
    }

    /// Boundary factors at time `t`, cached when the data are steady.
    pub fn factors(&self, t: f64) -> Result<Arc<HomogenizationFactors>> {
        if self.boundary.is_time_dependent() {
            return Ok(Arc::new(build_factors(&self.sp, &self.boundary, t, &self.psi_rate)?));
        }
        if let Some(f) = self.steady_factors.get() {
            return Ok(f.clone());
        }
        let f = Arc::new(build_factors(&self.sp, &self.boundary, t, &self.psi_rate)?);
        Ok(self.steady_factors.get_or_init(|| f).clone())
    }

    pub fn v_r_profile(&self) -> (Vec<f64>, Vec<f64>) {
        let z = self.grid.z_nodes();
        (
            z.iter().map(|&z| self.solver.v_r.value(z)).collect(),
            z.iter().map(|&z| self.solver.v_r.derivative(z)).collect(),
        )
    }

    pub fn reference_profiles(&self) -> (Vec<f64>, Vec<f64>) {
        let z = self.grid.z_nodes();
        let c = &self.constants;
        (
            z.iter().map(|&z| self.reference.log_rho(c, z).exp()).collect(),
            z.iter().map(|&z| self.reference.pressure(c, z)).collect(),
        )
    }
}

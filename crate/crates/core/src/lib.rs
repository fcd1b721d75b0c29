//! Pseudo-spectral simulator for a compressible moist atmosphere with
//! warm-rain microphysics in a periodic channel.

pub mod boundary;
pub mod cli;
pub mod config;
pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod interp;
pub mod microphysics;
pub mod presets;
pub mod snapshot;
pub mod solver;
pub mod spectral;
pub mod thermo;
pub mod verification;

pub use constants::PhysConstants;
pub use error::{Error, Result};
pub use fields::{make_grid, Grid, ScalarField, Species, State, VectorField};

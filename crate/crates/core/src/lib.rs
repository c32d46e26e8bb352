//! Spectral simulation of the defocusing quintic NLS
//! `iu_t = −½Δu + Vu + |u|⁴u` on radial data in three dimensions, with
//! `V ∈ {0, +½|x|², −½|x|²}`, and audits of its conserved and monotone quantities.

pub mod checkpoint;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod profiles;
pub mod propagator;
pub mod runner;
pub mod scattering;

pub use error::{Error, Result, Trip};
pub use evolution::{Nonlinearity, StepPolicy, Trajectory};
pub use grid::{Grid, RadialField};
pub use propagator::PotentialKind;

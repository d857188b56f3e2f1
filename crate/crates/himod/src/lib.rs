//! Hierarchical model reduction (HiMod) for parametrized advection-diffusion-reaction and
//! Stokes problems on fiber-bundle domains, with two second-level reductions on top:
//! POD of HiMod snapshots (HiPOD) and a greedy reduced basis driven by a residual
//! estimator (HiRB).
//!
//! The pipeline is: [`geometry`] and [`bases`] define the HiMod space, [`adr`] and
//! [`stokes`] assemble affine-in-μ systems, and [`rom`] builds and queries reduced models.

pub mod adr;
pub mod affine;
pub mod bases;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod par;
pub mod rom;
pub mod space;
pub mod stokes;

pub use error::{Error, Result};
pub use par::Execution;

//! Axial finite element spaces and transverse modal bases.

pub mod fem1d;
pub mod modal;

pub use fem1d::Fem1DSpace;
pub use modal::{BoundaryTag, ModalBasis, DEFAULT_RESOLUTION};

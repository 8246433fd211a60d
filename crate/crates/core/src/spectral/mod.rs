//! Neumann eigenbasis on intervals and boxes.
//!
//! States are coefficient vectors over the first K eigenfunctions of the
//! Neumann Laplacian, sorted by eigenvalue (ties by multi-index).

mod domain;
mod field;
mod modes;
mod stepping;

pub use domain::{Domain, DomainKind, Point};
pub use field::{project_function, Norm, QuadratureSpec, SpectralField};
pub use modes::{enumerate_modes, Mode, ModeTable};
pub use stepping::{heat_step_forced, ForcedStepper};

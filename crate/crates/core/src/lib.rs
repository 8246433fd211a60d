//! Heat tracking with point actuators on Neumann boxes, realized through a
//! discrete thermo-plasmonic actuation model.

// `!(x > 0.0)` is used on purpose so NaN fails validation too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod linalg;
pub mod placement;
pub mod plasmonic;
pub mod restriction;
pub mod signal;
pub mod spectral;

pub use error::{Error, Result};

//! Actuator locations and the sampling matrices they induce.

mod actuators;
mod design;
mod sampling;

pub use actuators::{dct_grid_box, dct_nodes_1d, dct_nodes_interval, ActuatorSet};
pub use design::{genericity_monte_carlo, genericity_monte_carlo_with, greedy_placement, GENERICITY_THRESHOLD};
pub use sampling::{min_norm_feedforward, sampling_matrix, SamplingMatrices};

pub use crate::linalg::{pseudo_inverse, PseudoInverse};

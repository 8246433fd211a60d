//! Regularized point observation, gain feedback with feedforward, closed-loop
//! integration, bias matrix and fixed-point pre-compensation.

mod bias;
mod closed_loop;
mod decay;
mod diagnostics;

pub use bias::{assemble_bias_matrix, fixed_point_reference, tail_mismatch_report, BiasMatrix, FixedPoint, NormFactors, PicardTrace, TailReport};
pub use closed_loop::{observe, ClosedLoopSystem, FeedbackConfig, TrajectoryRecord};
pub use decay::{decay_rate_fit, fit_log_decay, gain_doubling_search, DecayFit, GainSearch, GAIN_CAP};
pub use diagnostics::{contraction_diagnostics, mechanism_a_bound, ContractionReport};

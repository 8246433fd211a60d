//! Discrete thermo-plasmonic actuation: heat kernel, Volterra amplitude
//! system, illumination dictionary, calibration of K₀ and its inversion.

mod calibration;
mod config;
mod kernel;
mod nnls;
mod pipeline;
mod volterra;

pub use calibration::{calibrate_k0, invert_actuation, ActuationMap, Inversion, InversionMode};
pub use config::{seeded_perturbation, PlasmonicConfig};
pub use kernel::{free_space_kernel, free_space_kernel_1d, heat_kernel_dt, kernel_cell_integral, kernel_time_derivative};
pub use nnls::nnls;
pub use pipeline::{
    forcing_from_intensities, heat_inputs_from_sigma, profile_intensities, realized_remainder, resonance_gain, run_pipeline, PipelineOutput, Remainder,
};
pub use volterra::{volterra_march, volterra_solve, VolterraSolution};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::field::SpectralField;
use super::modes::ModeTable;
use crate::error::{invalid, Result};
use crate::linalg::phi1;
use crate::placement::ActuatorSet;

/// Exact Duhamel step for Dirac inputs held constant over `dt`.
#[derive(Debug, Clone)]
pub struct ForcedStepper {
    modes: Arc<ModeTable>,
    dt: f64,
    decay: DVector<f64>,
    phi1: DVector<f64>,
    input: DMatrix<f64>,
}

impl ForcedStepper {
    pub fn new(modes: Arc<ModeTable>, actuators: &ActuatorSet, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("step dt must be > 0, got {dt}")));
        }
        let input = modes.sample_matrix(actuators.points())?;
        let lam = modes.eigenvalues();
        let decay = DVector::from_iterator(lam.len(), lam.iter().map(|l| (-l * dt).exp()));
        let phi1 = DVector::from_iterator(lam.len(), lam.iter().map(|&l| phi1(l, dt)));
        Ok(Self { modes, dt, decay, phi1, input })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn modes(&self) -> &Arc<ModeTable> {
        &self.modes
    }

    /// K×M matrix E with E_kj = φ_k(x_j).
    pub fn input_matrix(&self) -> &DMatrix<f64> {
        &self.input
    }

    pub fn step_coeffs(&self, alpha: &DVector<f64>, u: &[f64]) -> Result<DVector<f64>> {
        if u.len() != self.input.ncols() {
            return Err(invalid(format!("{} inputs for {} actuators", u.len(), self.input.ncols())));
        }
        let b = &self.input * DVector::from_column_slice(u);
        Ok(alpha.component_mul(&self.decay) + b.component_mul(&self.phi1))
    }

    pub fn step(&self, z: &SpectralField, u: &[f64]) -> Result<SpectralField> {
        let next = self.step_coeffs(z.coeffs(), u)?;
        SpectralField::new(z.modes().clone(), next)
    }
}

/// One exact step of ẏ = A₀y + Σ_j u_j δ_{x_j} with `u` held constant.
pub fn heat_step_forced(z: &SpectralField, actuators: &ActuatorSet, u: &[f64], dt: f64) -> Result<SpectralField> {
    ForcedStepper::new(z.modes().clone(), actuators, dt)?.step(z, u)
}

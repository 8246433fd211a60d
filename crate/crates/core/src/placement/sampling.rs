use nalgebra::{DMatrix, DVector};

use super::actuators::ActuatorSet;
use crate::error::{invalid, Error, Result};
use crate::linalg::{pseudo_inverse, singular_values, RANK_RTOL};
use crate::spectral::{ModeTable, SpectralField};

#[derive(Debug, Clone)]
pub struct SamplingMatrices {
    /// zero-based mode indices of the rows of `phi`
    pub rows: Vec<usize>,
    /// entries φ_k(x_j), one row per selected mode
    pub phi: DMatrix<f64>,
    /// M×K entries φ_k(x_j) / (1 + λ_k) over the whole table
    pub d: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl SamplingMatrices {
    /// Sampling restricted to an arbitrary list of modes.
    pub fn for_modes(actuators: &ActuatorSet, modes: &ModeTable, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&k| k >= modes.len()) {
            return Err(invalid(format!("mode {bad} exceeds the table size {}", modes.len())));
        }
        let e = modes.sample_matrix(actuators.points())?;
        let lam = modes.eigenvalues();
        let phi = DMatrix::from_fn(rows.len(), actuators.len(), |r, j| e[(rows[r], j)]);
        let d = DMatrix::from_fn(actuators.len(), modes.len(), |j, k| e[(k, j)] / (1.0 + lam[k]));
        let s = singular_values(&phi);
        let (sigma_min, sigma_max) = if s.is_empty() { (0.0, 0.0) } else { (s.min(), s.max()) };
        Ok(Self { rows: rows.to_vec(), phi, d, eigenvalues: rows.iter().map(|&k| lam[k]).collect(), sigma_min, sigma_max })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn m(&self) -> usize {
        self.phi.ncols()
    }

    /// Full row rank under the crate-wide relative threshold.
    pub fn has_full_row_rank(&self) -> bool {
        self.m() >= self.n() && self.sigma_min > RANK_RTOL * self.sigma_max
    }

    /// U_N: the M×N matrix taking reference coefficients to the minimum-norm feedforward.
    pub fn feedforward_matrix(&self) -> Result<DMatrix<f64>> {
        if !self.has_full_row_rank() {
            return Err(Error::RankDeficient { context: "sampling matrix".into(), sigma_min: self.sigma_min });
        }
        let pinv = pseudo_inverse(&self.phi).pinv;
        Ok(pinv * DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues)))
    }
}

/// Φ_{N,M} over the first N modes.
pub fn sampling_matrix(actuators: &ActuatorSet, modes: &ModeTable, n: usize) -> Result<SamplingMatrices> {
    if n > modes.len() {
        return Err(invalid(format!("N = {n} exceeds K = {}", modes.len())));
    }
    SamplingMatrices::for_modes(actuators, modes, &(0..n).collect::<Vec<_>>())
}

/// Minimum-norm u_r with Σ_j u_j φ_k(x_j) = λ_k α_k for the sampled modes.
/// Coefficients of `y_ref` outside the sampled rows are ignored.
pub fn min_norm_feedforward(y_ref: &SpectralField, mats: &SamplingMatrices) -> Result<DVector<f64>> {
    if let Some(&bad) = mats.rows.iter().find(|&&k| k >= y_ref.len()) {
        return Err(invalid(format!("reference has no coefficient for mode {bad}")));
    }
    let rhs = DVector::from_iterator(mats.n(), mats.rows.iter().zip(&mats.eigenvalues).map(|(&k, l)| l * y_ref.coeffs()[k]));
    if !mats.has_full_row_rank() {
        return Err(Error::RankDeficient { context: "sampling matrix".into(), sigma_min: mats.sigma_min });
    }
    Ok(pseudo_inverse(&mats.phi).pinv * rhs)
}

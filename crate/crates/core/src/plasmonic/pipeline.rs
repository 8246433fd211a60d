use nalgebra::{DMatrix, DVector};

use super::config::PlasmonicConfig;
use super::volterra::{volterra_solve, VolterraSolution};
use crate::error::{invalid, Result};
use crate::signal::Signal;

/// F = L_δ p on the nodal grid; `p` is P×(Q+1).
pub fn forcing_from_intensities(config: &PlasmonicConfig, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if p.nrows() != config.p() || p.ncols() != config.grid.steps() + 1 {
        return Err(invalid(format!("intensities must be {}x{}, got {}x{}", config.p(), config.grid.steps() + 1, p.nrows(), p.ncols())));
    }
    Ok(config.effective_dictionary() * p)
}

/// G_i = (α_i / c_m) σ_i, nodal.
pub fn heat_inputs_from_sigma(solution: &VolterraSolution, config: &PlasmonicConfig) -> DMatrix<f64> {
    let mut g = solution.sigma.clone();
    for (i, mut row) in g.row_iter_mut().enumerate() {
        row *= config.contrasts[i] / config.heat_capacity;
    }
    g
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub forcing: DMatrix<f64>,
    pub solution: VolterraSolution,
    pub heat_nodal: DMatrix<f64>,
    /// cell-averaged heat inputs driving the PDE
    pub heat: Signal,
}

/// Intensities → forcing → Volterra amplitudes → effective heat inputs.
pub fn run_pipeline(config: &PlasmonicConfig, p: &DMatrix<f64>) -> Result<PipelineOutput> {
    let forcing = forcing_from_intensities(config, p)?;
    let solution = volterra_solve(config, &forcing)?;
    let heat_nodal = heat_inputs_from_sigma(&solution, config);
    let heat = Signal::from_nodal(&heat_nodal, config.grid.dt())?;
    Ok(PipelineOutput { forcing, solution, heat_nodal, heat })
}

/// Nodal intensities p_ℓ(t) = coeffs_ℓ φ(t).
pub fn profile_intensities(config: &PlasmonicConfig, coeffs: &DVector<f64>) -> DMatrix<f64> {
    let phi = config.profile.nodal(&config.grid);
    DMatrix::from_fn(coeffs.len(), phi.len(), |l, q| coeffs[l] * phi[q])
}

/// Absorbed-power scaling Im ε · δ^{3−2h} · 𝔄 · |E|², valid for h ∈ [0, 3/2).
pub fn resonance_gain(delta: f64, h: f64, im_eps: f64, shape: f64, e_magnitude: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(0.0..1.5).contains(&h) {
        return Err(invalid(format!("resonance exponent h = {h} outside [0, 3/2)")));
    }
    Ok(im_eps * delta.powf(3.0 - 2.0 * h) * shape * e_magnitude * e_magnitude)
}

#[derive(Debug, Clone)]
pub struct Remainder {
    pub rho: Signal,
    pub norm: f64,
}

/// ρ = G_δ − G₀: output of the δ-perturbed pipeline minus the leading
/// (δ = 0) pipeline for the same intensities.
pub fn realized_remainder(config: &PlasmonicConfig, p: &DMatrix<f64>) -> Result<Remainder> {
    let full = run_pipeline(config, p)?;
    let lead = run_pipeline(&config.with_delta(0.0), p)?;
    let rho = full.heat.sub(&lead.heat)?;
    let norm = rho.l2_norm();
    Ok(Remainder { rho, norm })
}

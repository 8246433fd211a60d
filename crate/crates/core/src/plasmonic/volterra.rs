use nalgebra::{DMatrix, DVector};

use super::config::PlasmonicConfig;
use super::kernel::heat_kernel_dt;
use crate::error::{invalid, Error, Result};
use crate::linalg::sigma_min;
use crate::signal::TimeGrid;

#[derive(Debug, Clone)]
pub struct VolterraSolution {
    pub grid: TimeGrid,
    /// σ_i(t_q), M×(Q+1)
    pub sigma: DMatrix<f64>,
}

/// Trapezoidal product integration of
/// σ_i(t) + Σ_{j≠i} β_ij ∫₀ᵗ k_ij(t − τ) σ_j(τ) dτ = F_i(t)
/// on a uniform grid. `kernel(i, j, s)` is evaluated at the lags s = n·dt.
pub fn volterra_march(grid: &TimeGrid, coupling: &DMatrix<f64>, kernel: impl Fn(usize, usize, f64) -> f64, forcing: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = forcing.nrows();
    let q_max = grid.steps();
    if forcing.ncols() != q_max + 1 {
        return Err(invalid(format!("forcing has {} samples, grid needs {}", forcing.ncols(), q_max + 1)));
    }
    if coupling.shape() != (m, m) {
        return Err(invalid(format!("coupling must be {m}x{m}")));
    }
    let h = grid.dt();
    // weighted kernel table: lag n, then row-major (i, j)
    let mut table = vec![0.0; (q_max + 1) * m * m];
    for n in 0..=q_max {
        let s = n as f64 * h;
        for i in 0..m {
            for j in 0..m {
                if i != j && coupling[(i, j)] != 0.0 {
                    table[(n * m + i) * m + j] = coupling[(i, j)] * kernel(i, j, s);
                }
            }
        }
    }
    let step = DMatrix::from_fn(m, m, |i, j| f64::from(u8::from(i == j)) + 0.5 * h * table[i * m + j]);
    let lu = step.clone().lu();
    if !lu.is_invertible() || sigma_min(&step) <= 1e-14 * step.norm() {
        return Err(Error::Singular { context: "Volterra step 1".into(), estimate: sigma_min(&step) });
    }
    let mut sigma = DMatrix::zeros(m, q_max + 1);
    sigma.column_mut(0).copy_from(&forcing.column(0));
    let mut rhs = DVector::zeros(m);
    for q in 1..=q_max {
        for i in 0..m {
            let mut acc = 0.0;
            for p in 0..q {
                let w = if p == 0 { 0.5 } else { 1.0 };
                let row = &table[((q - p) * m + i) * m..((q - p) * m + i + 1) * m];
                let mut s = 0.0;
                for (j, k) in row.iter().enumerate() {
                    s += k * sigma[(j, p)];
                }
                acc += w * s;
            }
            rhs[i] = forcing[(i, q)] - h * acc;
        }
        let x = lu.solve(&rhs).ok_or_else(|| Error::Singular { context: format!("Volterra step {q}"), estimate: 0.0 })?;
        sigma.column_mut(q).copy_from(&x);
    }
    Ok(sigma)
}

/// Solves the particle amplitude system with the heat-kernel time derivative as kernel.
pub fn volterra_solve(config: &PlasmonicConfig, forcing: &DMatrix<f64>) -> Result<VolterraSolution> {
    if forcing.nrows() != config.m() {
        return Err(invalid(format!("forcing has {} rows for {} particles", forcing.nrows(), config.m())));
    }
    let m = config.m();
    let r = DMatrix::from_fn(m, m, |i, j| config.centers[i].iter().zip(&config.centers[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt());
    let kappa = config.diffusivity;
    let sigma = volterra_march(&config.grid, &config.effective_coupling(), |i, j, s| heat_kernel_dt(r[(i, j)], s, kappa), forcing)?;
    Ok(VolterraSolution { grid: config.grid, sigma })
}

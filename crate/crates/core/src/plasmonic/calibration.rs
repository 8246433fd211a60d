use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::config::PlasmonicConfig;
use super::nnls::nnls;
use super::pipeline::{profile_intensities, run_pipeline};
use crate::error::{invalid, Error, Result};
use crate::linalg::{pseudo_inverse, RANK_RTOL};
use crate::signal::project_onto_profile;

#[derive(Debug, Clone)]
pub struct ActuationMap {
    /// K₀, M×P
    pub k0: DMatrix<f64>,
    pub pinv: DMatrix<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub rank: usize,
    pub column_norms: Vec<f64>,
    /// ‖(I − P_{Y₀}) G‖ for each probing pattern
    pub projection_residuals: Vec<f64>,
}

impl ActuationMap {
    pub fn from_matrix(k0: DMatrix<f64>) -> Self {
        let pi = pseudo_inverse(&k0);
        let column_norms = k0.column_iter().map(|c| c.norm()).collect();
        let p = k0.ncols();
        Self { pinv: pi.pinv, sigma_min: pi.sigma_min, sigma_max: pi.sigma_max, rank: pi.rank, column_norms, projection_residuals: vec![0.0; p], k0 }
    }

    pub fn full_rank(&self) -> bool {
        self.rank == self.k0.nrows() && self.sigma_min > RANK_RTOL * self.sigma_max
    }
}

/// Probes the pipeline of `config` with p = e_ℓ φ(t) for every pattern ℓ and
/// takes the Y₀ coefficients of the resulting heat inputs as column ℓ.
pub fn calibrate_k0(config: &PlasmonicConfig) -> Result<ActuationMap> {
    config.validate()?;
    let (m, p) = (config.m(), config.p());
    let phi_cells = config.profile.cells(&config.grid);
    let columns: Vec<(DVector<f64>, f64)> = (0..p)
        .into_par_iter()
        .map(|l| {
            let mut e = DVector::zeros(p);
            e[l] = 1.0;
            let out = run_pipeline(config, &profile_intensities(config, &e))?;
            let proj = project_onto_profile(&out.heat, &phi_cells)?;
            Ok((proj.coeffs, proj.residual))
        })
        .collect::<Result<_>>()?;
    let k0 = DMatrix::from_fn(m, p, |i, l| columns[l].0[i]);
    let mut map = ActuationMap::from_matrix(k0);
    map.projection_residuals = columns.iter().map(|c| c.1).collect();
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversionMode {
    Signed,
    Nonnegative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub p: DVector<f64>,
    /// ‖K₀ p − u_des‖
    pub residual: f64,
}

pub fn invert_actuation(map: &ActuationMap, u_des: &DVector<f64>, mode: InversionMode) -> Result<Inversion> {
    if u_des.len() != map.k0.nrows() {
        return Err(invalid(format!("u_des has {} entries for {} channels", u_des.len(), map.k0.nrows())));
    }
    match mode {
        InversionMode::Signed => {
            if !map.full_rank() {
                return Err(Error::RankDeficient { context: "actuation map K0".into(), sigma_min: map.sigma_min });
            }
            let p = &map.pinv * u_des;
            let residual = (&map.k0 * &p - u_des).norm();
            if residual > 1e-9 * u_des.norm().max(1.0) {
                return Err(Error::Numeric(format!("right inverse residual {residual:e}")));
            }
            Ok(Inversion { p, residual })
        }
        InversionMode::Nonnegative => {
            let (p, residual) = nnls(&map.k0, u_des, 100 + 10 * map.k0.ncols())?;
            Ok(Inversion { p, residual })
        }
    }
}

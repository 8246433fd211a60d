//! Nullspace coercivity: inf ‖w‖²_{D(𝒜)} / ‖w‖²_{H¹} over spectral functions
//! vanishing at every node.

use nalgebra::{DMatrix, DVector};
use plasmotrack::linalg::{nullspace, rank, sym_eigen};
use plasmotrack::spectral::{enumerate_modes, Domain};

use crate::error::{HarnessError, Result, StageExt};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coercivity {
    pub xi: f64,
    /// largest gap between consecutive nodes
    pub h: f64,
    pub nodes: usize,
    pub modes: usize,
}

/// Vertices j·L/cells, j = 0..=cells, boundary points included.
pub fn uniform_mesh_nodes(length: f64, cells: usize) -> Vec<f64> {
    (0..=cells).map(|j| j as f64 * length / cells as f64).collect()
}

pub fn coercivity_constant(domain: &Domain, nodes: &[f64], k: usize) -> Result<Coercivity> {
    if domain.dim() != 1 {
        return Err(HarnessError::Config("coercivity runs on an interval".into()));
    }
    let m = nodes.len();
    if k <= m {
        return Err(HarnessError::Config(format!("need more modes than nodes, got K = {k}, M = {m}")));
    }
    let modes = enumerate_modes(domain, k).stage("coercivity")?;
    let lam = modes.eigenvalues();
    let mu: Vec<f64> = modes.modes().iter().map(|md| md.laplacian).collect();
    // rescale α = D^{-1/2} c with D = diag(1 + μ) so the H¹ Gram becomes I
    let inv_sqrt: Vec<f64> = mu.iter().map(|v| (1.0 + v).powf(-0.5)).collect();
    let z = if m == 0 {
        DMatrix::identity(k, k)
    } else {
        let pts: Vec<[f64; 3]> = nodes.iter().map(|&x| [x, 0.0, 0.0]).collect();
        let c = modes.sample_matrix(&pts).stage("coercivity")?.transpose();
        if rank(&c) < m {
            return Err(HarnessError::Stage {
                stage: "coercivity",
                source: plasmotrack::Error::RankDeficient { context: "degenerate nodes".into(), sigma_min: plasmotrack::linalg::sigma_min(&c) },
            });
        }
        let scaled = DMatrix::from_fn(m, k, |i, j| c[(i, j)] * inv_sqrt[j]);
        nullspace(&scaled)
    };
    let weight = DVector::from_fn(k, |i, _| (1.0 + lam[i]).powi(2) / (1.0 + mu[i]));
    let reduced = z.transpose() * DMatrix::from_diagonal(&weight) * &z;
    let (eig, _) = sym_eigen(&(&reduced + reduced.transpose()).scale(0.5));
    let mut sorted = nodes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(Coercivity { xi: eig[0], h, nodes: m, modes: k })
}

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{rank, sigma_min};
use crate::signal::{TemporalProfile, TimeGrid};
use crate::spectral::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct PlasmonicConfig {
    pub centers: Vec<Point>,
    /// α_i = γ_{p,i} − γ_m
    pub contrasts: Vec<f64>,
    /// c_m
    pub heat_capacity: f64,
    /// κ_m used by the interaction kernel
    pub diffusivity: f64,
    /// β_ij; the diagonal is ignored
    pub coupling: DMatrix<f64>,
    pub delta: f64,
    pub mu: f64,
    /// L₀, M×P
    pub dictionary: DMatrix<f64>,
    /// Π, M×P with unit Frobenius norm
    pub perturbation: DMatrix<f64>,
    /// c in β_ij (1 + c δ^μ)
    pub interaction_perturbation: f64,
    pub grid: TimeGrid,
    pub profile: TemporalProfile,
}

/// Uniform entries in [−1, 1] from ChaCha stream 0 of `seed`, scaled to unit Frobenius norm.
pub fn seeded_perturbation(m: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(m, p, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let n = raw.norm();
    if n > 0.0 {
        raw / n
    } else {
        raw
    }
}

impl PlasmonicConfig {
    pub fn m(&self) -> usize {
        self.centers.len()
    }

    pub fn p(&self) -> usize {
        self.dictionary.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        if m == 0 {
            return Err(invalid("need at least one particle"));
        }
        if self.contrasts.len() != m {
            return Err(invalid(format!("{} contrasts for {m} particles", self.contrasts.len())));
        }
        for i in 0..m {
            for j in 0..i {
                let r: f64 = self.centers[i].iter().zip(&self.centers[j]).map(|(a, b)| (a - b).powi(2)).sum();
                if r <= 0.0 {
                    return Err(invalid(format!("particles {j} and {i} coincide")));
                }
            }
        }
        if !(self.heat_capacity > 0.0) || !(self.diffusivity > 0.0) {
            return Err(invalid("heat capacity and diffusivity must be > 0"));
        }
        if self.coupling.shape() != (m, m) {
            return Err(invalid(format!("coupling must be {m}x{m}")));
        }
        if !(0.0..=1.0).contains(&self.delta) || !(self.mu > 0.0) {
            return Err(invalid(format!("need delta in [0, 1] and mu > 0, got {} and {}", self.delta, self.mu)));
        }
        if self.dictionary.nrows() != m || self.perturbation.shape() != self.dictionary.shape() {
            return Err(invalid("dictionary and perturbation must be M x P"));
        }
        if rank(&self.dictionary) < m {
            return Err(Error::RankDeficient { context: "dictionary L0".into(), sigma_min: sigma_min(&self.dictionary) });
        }
        if self.profile.nodal(&self.grid).iter().all(|v| *v == 0.0) {
            return Err(invalid("temporal profile vanishes on the grid"));
        }
        if self.grid.steps() < 2 {
            return Err(invalid("Volterra grid needs Q >= 2"));
        }
        Ok(())
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..self.clone() }
    }

    pub fn delta_power(&self) -> f64 {
        if self.delta == 0.0 {
            0.0
        } else {
            self.delta.powf(self.mu)
        }
    }

    /// L_δ = L₀ + δ^μ Π.
    pub fn effective_dictionary(&self) -> DMatrix<f64> {
        &self.dictionary + &self.perturbation * self.delta_power()
    }

    /// β_ij (1 + c δ^μ) with zero diagonal.
    pub fn effective_coupling(&self) -> DMatrix<f64> {
        let s = 1.0 + self.interaction_perturbation * self.delta_power();
        let mut b = &self.coupling * s;
        b.fill_diagonal(0.0);
        b
    }
}

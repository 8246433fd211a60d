use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::domain::{Domain, DomainKind, Point};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub index: [usize; 3],
    /// eigenvalue of -A0, diffusivity included
    pub eigenvalue: f64,
    /// eigenvalue of the bare Neumann Laplacian
    pub laplacian: f64,
    pub norm_const: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeTable {
    domain: Domain,
    modes: Vec<Mode>,
}

/// First `k` Neumann modes of `domain`, sorted by eigenvalue with ties broken
/// by lexicographic multi-index.
pub fn enumerate_modes(domain: &Domain, k: usize) -> Result<Arc<ModeTable>> {
    ModeTable::new(domain, k).map(Arc::new)
}

fn axis_const(n: usize, l: f64) -> f64 {
    if n == 0 {
        1.0 / l.sqrt()
    } else {
        (2.0 / l).sqrt()
    }
}

/// Σ (n_ℓ / L_ℓ)², summed in ascending order so permuted indices on equal
/// sides produce bit-identical keys.
fn scaled_sum(index: &[usize], lengths: &[f64]) -> f64 {
    let mut terms: Vec<f64> = index.iter().zip(lengths).map(|(&n, &l)| (n as f64 / l).powi(2)).collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

impl ModeTable {
    pub fn new(domain: &Domain, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("mode count K must be >= 1"));
        }
        let lengths = domain.lengths();
        let dim = domain.dim();
        let lmax = lengths.iter().copied().fold(0.0, f64::max);
        // radius in the scaled index space; grown until the box of candidates
        // provably contains the first k modes
        let mut r = match domain.kind() {
            DomainKind::Interval => k as f64 / lengths[0],
            DomainKind::Box3 => (k as f64 * 6.0 / (PI * domain.volume())).cbrt() + 1.0 / lmax,
        };
        loop {
            let caps: Vec<usize> = lengths.iter().map(|&l| (r * l).ceil() as usize).collect();
            let mut cand: Vec<([usize; 3], f64)> = Vec::new();
            let total: usize = caps.iter().map(|c| c + 1).product();
            cand.reserve(total);
            let mut idx = [0usize; 3];
            loop {
                cand.push((idx, scaled_sum(&idx[..dim], lengths)));
                let mut axis = dim;
                let mut done = true;
                while axis > 0 {
                    axis -= 1;
                    if idx[axis] < caps[axis] {
                        idx[axis] += 1;
                        for a in idx.iter_mut().take(dim).skip(axis + 1) {
                            *a = 0;
                        }
                        done = false;
                        break;
                    }
                }
                if done {
                    break;
                }
            }
            if cand.len() >= k {
                cand.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                let s_k = cand[k - 1].1;
                // any index outside the candidate box has some axis term above this bound
                let outside = caps.iter().zip(lengths).map(|(&c, &l)| ((c + 1) as f64 / l).powi(2)).fold(f64::INFINITY, f64::min);
                if outside > s_k {
                    let kappa = domain.diffusivity();
                    let modes = cand
                        .into_iter()
                        .take(k)
                        .map(|(index, s)| Mode {
                            index,
                            eigenvalue: kappa * PI * PI * s,
                            laplacian: PI * PI * s,
                            norm_const: index[..dim].iter().zip(lengths).map(|(&n, &l)| axis_const(n, l)).product(),
                        })
                        .collect();
                    return Ok(Self { domain: domain.clone(), modes });
                }
            }
            r *= 1.5;
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode(&self, k: usize) -> &Mode {
        &self.modes[k]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    /// φ_k(x) for a zero-based mode index; `x` must lie in the closed domain.
    pub fn eval(&self, k: usize, x: &Point) -> Result<f64> {
        self.domain.check_point(x)?;
        Ok(self.eval_unchecked(k, x))
    }

    pub fn eval_unchecked(&self, k: usize, x: &Point) -> f64 {
        let m = &self.modes[k];
        let lengths = self.domain.lengths();
        let mut v = m.norm_const;
        for (a, &l) in lengths.iter().enumerate() {
            if m.index[a] != 0 {
                v *= (m.index[a] as f64 * PI * x[a] / l).cos();
            }
        }
        v
    }

    /// K×M matrix with entries φ_k(x_j).
    pub fn sample_matrix(&self, points: &[Point]) -> Result<DMatrix<f64>> {
        for p in points {
            self.domain.check_point(p)?;
        }
        Ok(DMatrix::from_fn(self.len(), points.len(), |k, j| self.eval_unchecked(k, &points[j])))
    }

    /// Same domain, `k` modes.
    pub fn resized(&self, k: usize) -> Result<Arc<ModeTable>> {
        enumerate_modes(&self.domain, k)
    }
}

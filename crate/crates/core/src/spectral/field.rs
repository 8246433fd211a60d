use std::sync::Arc;

use nalgebra::DVector;

use super::domain::Point;
use super::modes::ModeTable;
use crate::error::{invalid, Result};
use crate::linalg::composite_rule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    /// ℓ² of the coefficients
    H,
    /// ℓ² of α_k / (1 + λ_k), i.e. ‖𝒜⁻¹z‖_H
    Vdual,
    /// ℓ² of (1 + λ_k) α_k
    Graph,
}

#[derive(Debug, Clone)]
pub struct SpectralField {
    modes: Arc<ModeTable>,
    coeffs: DVector<f64>,
}

impl SpectralField {
    pub fn new(modes: Arc<ModeTable>, coeffs: DVector<f64>) -> Result<Self> {
        if coeffs.len() != modes.len() {
            return Err(invalid(format!("{} coefficients for a table of {} modes", coeffs.len(), modes.len())));
        }
        Ok(Self { modes, coeffs })
    }

    pub fn zeros(modes: Arc<ModeTable>) -> Self {
        let n = modes.len();
        Self { modes, coeffs: DVector::zeros(n) }
    }

    /// The field φ_k (zero-based k).
    pub fn unit(modes: Arc<ModeTable>, k: usize) -> Result<Self> {
        if k >= modes.len() {
            return Err(invalid(format!("mode {k} out of range")));
        }
        let mut f = Self::zeros(modes);
        f.coeffs[k] = 1.0;
        Ok(f)
    }

    /// Embed leading coefficients, padding with zeros.
    pub fn from_leading(modes: Arc<ModeTable>, leading: &[f64]) -> Result<Self> {
        if leading.len() > modes.len() {
            return Err(invalid(format!("{} coefficients exceed {} modes", leading.len(), modes.len())));
        }
        let mut f = Self::zeros(modes);
        f.coeffs.rows_mut(0, leading.len()).copy_from_slice(leading);
        Ok(f)
    }

    pub fn modes(&self) -> &Arc<ModeTable> {
        &self.modes
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut DVector<f64> {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> DVector<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn same_table(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.modes, &other.modes) || *self.modes == *other.modes {
            Ok(())
        } else {
            Err(invalid("fields live on different mode tables"))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_table(other)?;
        Ok(Self { modes: self.modes.clone(), coeffs: &self.coeffs + &other.coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_table(other)?;
        Ok(Self { modes: self.modes.clone(), coeffs: &self.coeffs - &other.coeffs })
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { modes: self.modes.clone(), coeffs: &self.coeffs * a }
    }

    fn map_modes(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let lam = self.modes.modes();
        let coeffs = DVector::from_iterator(self.len(), self.coeffs.iter().zip(lam).map(|(&a, m)| f(a, m.eigenvalue)));
        Self { modes: self.modes.clone(), coeffs }
    }

    /// 𝒜⁻¹ z with 𝒜 = I − A₀.
    pub fn resolvent_apply(&self) -> Self {
        self.map_modes(|a, l| a / (1.0 + l))
    }

    /// 𝒜 z.
    pub fn elliptic_apply(&self) -> Self {
        self.map_modes(|a, l| a * (1.0 + l))
    }

    pub fn semigroup_apply(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(invalid(format!("semigroup time must be >= 0, got {t}")));
        }
        Ok(self.map_modes(|a, l| a * (-l * t).exp()))
    }

    pub fn norm(&self, which: Norm) -> f64 {
        let lam = self.modes.modes();
        match which {
            Norm::H => self.coeffs.norm(),
            Norm::Vdual => self.coeffs.iter().zip(lam).map(|(a, m)| (a / (1.0 + m.eigenvalue)).powi(2)).sum::<f64>().sqrt(),
            Norm::Graph => self.coeffs.iter().zip(lam).map(|(a, m)| (a * (1.0 + m.eigenvalue)).powi(2)).sum::<f64>().sqrt(),
        }
    }

    /// P_N: keep the first `n` coefficients.
    pub fn low(&self, n: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.rows_mut(n.min(c.len()), c.len() - n.min(c.len())).fill(0.0);
        Self { modes: self.modes.clone(), coeffs: c }
    }

    /// (I − P_N).
    pub fn tail(&self, n: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.rows_mut(0, n.min(c.len())).fill(0.0);
        Self { modes: self.modes.clone(), coeffs: c }
    }

    /// Pointwise synthesis Σ α_k φ_k(x).
    pub fn evaluate(&self, x: &Point) -> Result<f64> {
        self.modes.domain().check_point(x)?;
        Ok(self.coeffs.iter().enumerate().map(|(k, a)| a * self.modes.eval_unchecked(k, x)).sum())
    }
}

/// Tensorized composite Gauss–Legendre rule: `panels` subintervals per axis,
/// `order` points per subinterval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    pub order: usize,
    pub panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { order: 16, panels: 8 }
    }
}

/// α_k = ⟨f, φ_k⟩ by tensorized Gauss–Legendre quadrature.
pub fn project_function(f: impl Fn(&Point) -> f64, modes: Arc<ModeTable>, quad: QuadratureSpec) -> Result<SpectralField> {
    if quad.order == 0 || quad.panels == 0 {
        return Err(invalid("quadrature order and panel count must be >= 1"));
    }
    let domain = modes.domain().clone();
    let rules: Vec<(Vec<f64>, Vec<f64>)> = domain.lengths().iter().map(|&l| composite_rule(0.0, l, quad.panels, quad.order)).collect();
    let k = modes.len();
    let mut acc = vec![0.0; k];
    let mut add_point = |x: Point, w: f64| {
        let fx = f(&x) * w;
        for (kk, a) in acc.iter_mut().enumerate() {
            *a += fx * modes.eval_unchecked(kk, &x);
        }
    };
    match rules.len() {
        1 => {
            for (x, w) in rules[0].0.iter().zip(&rules[0].1) {
                add_point([*x, 0.0, 0.0], *w);
            }
        }
        _ => {
            for (x, wx) in rules[0].0.iter().zip(&rules[0].1) {
                for (y, wy) in rules[1].0.iter().zip(&rules[1].1) {
                    for (z, wz) in rules[2].0.iter().zip(&rules[2].1) {
                        add_point([*x, *y, *z], wx * wy * wz);
                    }
                }
            }
        }
    }
    SpectralField::new(modes.clone(), DVector::from_vec(acc))
}

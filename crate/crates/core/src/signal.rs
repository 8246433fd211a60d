//! Piecewise-constant time signals on a uniform grid.
//!
//! Cell q covers [q·dt, (q+1)·dt). Inner products are exact L²(0,T) integrals
//! of the piecewise-constant functions.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) || steps == 0 {
            return Err(invalid(format!("time grid needs T > 0 and Q >= 1, got T = {horizon}, Q = {steps}")));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node(&self, q: usize) -> f64 {
        q as f64 * self.dt()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|q| self.node(q)).collect()
    }
}

/// Temporal profile φ spanning Y₀ and U₀; both variants vanish at t = 0 and t = T.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemporalProfile {
    /// sin²(πt/T)
    #[default]
    Sin2,
    /// sin(πt/T)
    Sine,
}

impl TemporalProfile {
    pub fn eval(&self, t: f64, horizon: f64) -> f64 {
        let s = (std::f64::consts::PI * t / horizon).sin();
        match self {
            Self::Sin2 => s * s,
            Self::Sine => s,
        }
    }

    pub fn nodal(&self, grid: &TimeGrid) -> Vec<f64> {
        grid.nodes().iter().map(|&t| self.eval(t, grid.horizon())).collect()
    }

    /// Trapezoidal cell averages of the nodal samples.
    pub fn cells(&self, grid: &TimeGrid) -> Vec<f64> {
        self.nodal(grid).windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    dt: f64,
    values: DMatrix<f64>,
}

impl Signal {
    /// `values` is channels × cells.
    pub fn new(dt: f64, values: DMatrix<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(invalid("signal dt must be > 0"));
        }
        Ok(Self { dt, values })
    }

    pub fn zeros(channels: usize, cells: usize, dt: f64) -> Self {
        Self { dt, values: DMatrix::zeros(channels, cells) }
    }

    /// Cell values as averages of neighbouring nodal samples.
    pub fn from_nodal(nodal: &DMatrix<f64>, dt: f64) -> Result<Self> {
        if nodal.ncols() < 2 {
            return Err(invalid("need at least two nodal samples"));
        }
        let q = nodal.ncols() - 1;
        Self::new(dt, DMatrix::from_fn(nodal.nrows(), q, |i, c| 0.5 * (nodal[(i, c)] + nodal[(i, c + 1)])))
    }

    /// Channel j equals coeffs[j] · profile.
    pub fn from_profile(coeffs: &DVector<f64>, profile_cells: &[f64], dt: f64) -> Result<Self> {
        Self::new(dt, DMatrix::from_fn(coeffs.len(), profile_cells.len(), |i, c| coeffs[i] * profile_cells[c]))
    }

    /// One vector per cell.
    pub fn from_cells(cells: &[DVector<f64>], dt: f64) -> Result<Self> {
        let m = cells.first().map_or(0, DVector::len);
        if cells.iter().any(|c| c.len() != m) {
            return Err(invalid("cells have inconsistent channel counts"));
        }
        Self::new(dt, DMatrix::from_fn(m, cells.len(), |i, c| cells[c][i]))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn channels(&self) -> usize {
        self.values.nrows()
    }

    pub fn cells(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn cell(&self, q: usize) -> Vec<f64> {
        self.values.column(q).iter().copied().collect()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.dt * self.values.norm_squared()).sqrt()
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.values.shape() != other.values.shape() || (self.dt - other.dt).abs() > 1e-12 * self.dt {
            return Err(invalid("signals live on different grids"));
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        Ok(Self { dt: self.dt, values: &self.values - &other.values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        Ok(Self { dt: self.dt, values: &self.values + &other.values })
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { dt: self.dt, values: &self.values * a }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub coeffs: DVector<f64>,
    /// ‖(I − P)u‖ in L²(0,T; ℝ^M)
    pub residual: f64,
}

/// Per-channel least-squares coefficients β_j = ⟨u_j, φ⟩ / ⟨φ, φ⟩.
pub fn project_onto_profile(u: &Signal, profile_cells: &[f64]) -> Result<Projection> {
    if profile_cells.len() != u.cells() {
        return Err(invalid(format!("profile has {} cells, signal has {}", profile_cells.len(), u.cells())));
    }
    let phi = DVector::from_column_slice(profile_cells);
    let pp = phi.norm_squared();
    if pp == 0.0 {
        return Err(invalid("profile is identically zero"));
    }
    let coeffs = u.values() * &phi / pp;
    let rest = u.values() - &coeffs * phi.transpose();
    Ok(Projection { coeffs, residual: (u.dt() * rest.norm_squared()).sqrt() })
}

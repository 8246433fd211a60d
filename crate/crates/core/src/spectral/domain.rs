use crate::error::{invalid, Result};

/// Points always carry three coordinates; on an interval only the first is used.
pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Interval,
    Box3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    lengths: [f64; 3],
    diffusivity: f64,
}

impl Domain {
    pub fn interval(length: f64, diffusivity: f64) -> Result<Self> {
        Self::new(DomainKind::Interval, &[length], diffusivity)
    }

    pub fn box3(lengths: [f64; 3], diffusivity: f64) -> Result<Self> {
        Self::new(DomainKind::Box3, &lengths, diffusivity)
    }

    pub fn new(kind: DomainKind, lengths: &[f64], diffusivity: f64) -> Result<Self> {
        let dim = match kind {
            DomainKind::Interval => 1,
            DomainKind::Box3 => 3,
        };
        if lengths.len() != dim {
            return Err(invalid(format!("{kind:?} needs {dim} lengths, got {}", lengths.len())));
        }
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(invalid("domain lengths must be positive"));
        }
        if !(diffusivity.is_finite() && diffusivity > 0.0) {
            return Err(invalid("diffusivity must be positive"));
        }
        let mut l = [0.0; 3];
        l[..dim].copy_from_slice(lengths);
        Ok(Self { kind, lengths: l, diffusivity })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval => 1,
            DomainKind::Box3 => 3,
        }
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim()]
    }

    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }

    pub fn with_diffusivity(&self, diffusivity: f64) -> Result<Self> {
        Self::new(self.kind, self.lengths(), diffusivity)
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    /// Closed-domain membership with a tiny relative slack for round-off.
    pub fn contains(&self, x: &Point) -> bool {
        self.lengths().iter().zip(x).all(|(&l, &xi)| {
            let slack = 1e-12 * l;
            xi.is_finite() && xi >= -slack && xi <= l + slack
        })
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(invalid(format!("point {:?} lies outside the domain {:?}", &x[..self.dim()], self.lengths())))
        }
    }

    /// Distance from an interior point to the boundary.
    pub fn boundary_distance(&self, x: &Point) -> f64 {
        self.lengths().iter().zip(x).map(|(&l, &xi)| xi.min(l - xi)).fold(f64::INFINITY, f64::min)
    }

    /// Euclidean distance using the active coordinates only.
    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        (0..self.dim()).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
    }
}

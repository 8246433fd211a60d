use crate::error::{invalid, Result};
use crate::spectral::{Domain, DomainKind, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorSet {
    domain: Domain,
    points: Vec<Point>,
}

impl ActuatorSet {
    /// Points must lie in the closed domain and be pairwise distinct. An empty
    /// set is allowed (no actuation).
    pub fn new(domain: &Domain, points: Vec<Point>) -> Result<Self> {
        for p in &points {
            domain.check_point(p)?;
        }
        let diam: f64 = domain.lengths().iter().map(|l| l * l).sum::<f64>().sqrt();
        for i in 0..points.len() {
            for j in 0..i {
                if domain.distance(&points[i], &points[j]) <= 1e-14 * diam {
                    return Err(invalid(format!("actuators {j} and {i} coincide")));
                }
            }
        }
        Ok(Self { domain: domain.clone(), points })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Midpoint nodes x_j = (2j − 1) L / (2M), j = 1..M.
pub fn dct_nodes_1d(m: usize, length: f64) -> Vec<f64> {
    (1..=m).map(|j| (2 * j - 1) as f64 * length / (2 * m) as f64).collect()
}

pub fn dct_nodes_interval(domain: &Domain, m: usize) -> Result<ActuatorSet> {
    if domain.kind() != DomainKind::Interval {
        return Err(invalid("dct_nodes_interval needs an interval domain"));
    }
    if m == 0 {
        return Err(invalid("need at least one node"));
    }
    let pts = dct_nodes_1d(m, domain.lengths()[0]).into_iter().map(|x| [x, 0.0, 0.0]).collect();
    ActuatorSet::new(domain, pts)
}

/// Tensor grid with N_ℓ + 1 midpoint nodes along axis ℓ, ordered with the
/// last axis fastest.
pub fn dct_grid_box(domain: &Domain, counts: [usize; 3]) -> Result<ActuatorSet> {
    if domain.kind() != DomainKind::Box3 {
        return Err(invalid("dct_grid_box needs a box domain"));
    }
    let l = domain.lengths();
    let axes: Vec<Vec<f64>> = (0..3).map(|a| dct_nodes_1d(counts[a] + 1, l[a])).collect();
    let mut pts = Vec::with_capacity(axes.iter().map(Vec::len).product());
    for &x in &axes[0] {
        for &y in &axes[1] {
            for &z in &axes[2] {
                pts.push([x, y, z]);
            }
        }
    }
    ActuatorSet::new(domain, pts)
}

//! Whole-space versus Neumann-box solutions driven by the same point inputs,
//! compared on interior probes.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linalg::fit_line;
use crate::placement::ActuatorSet;
use crate::plasmonic::kernel_cell_integral;
use crate::signal::Signal;
use crate::spectral::{enumerate_modes, Domain, ForcedStepper, Point, SpectralField};

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    points: Vec<Point>,
    d: f64,
}

impl ProbeSet {
    pub fn new(domain: &Domain, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("probe set is empty"));
        }
        for p in &points {
            domain.check_point(p)?;
        }
        let d = points.iter().map(|p| domain.boundary_distance(p)).fold(f64::INFINITY, f64::min);
        if !(d > 0.0) {
            return Err(invalid("probes must lie strictly inside the domain"));
        }
        Ok(Self { points, d })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn distance(&self) -> f64 {
        self.d
    }
}

fn check_input(sources: &ActuatorSet, u: &Signal, t: f64) -> Result<()> {
    if u.channels() != sources.len() {
        return Err(invalid(format!("{} input channels for {} sources", u.channels(), sources.len())));
    }
    if !(t > 0.0) || (u.cells() as f64 * u.dt() - t).abs() > 1e-9 * t {
        return Err(invalid(format!("input must cover exactly [0, t] with t = {t} > 0")));
    }
    Ok(())
}

/// w(x, t) = Σ_j ∫₀ᵗ Φ(x, t; x_j, τ) u_j(τ) dτ with `u` piecewise constant on
/// cells spanning [0, t]; each cell integral of the kernel is taken in closed form.
pub fn free_space_point_solution(sources: &ActuatorSet, u: &Signal, probes: &ProbeSet, t: f64) -> Result<Vec<f64>> {
    check_input(sources, u, t)?;
    let domain = sources.domain();
    let kappa = domain.diffusivity();
    let dim = domain.dim();
    let dt = u.dt();
    probes
        .points()
        .iter()
        .map(|x| {
            let mut w = 0.0;
            for (j, xs) in sources.points().iter().enumerate() {
                let r = domain.distance(x, xs);
                if r == 0.0 {
                    return Err(invalid("probe coincides with a source"));
                }
                for q in 0..u.cells() {
                    let uq = u.values()[(j, q)];
                    if uq != 0.0 {
                        let s0 = t - (q + 1) as f64 * dt;
                        let s1 = t - q as f64 * dt;
                        w += uq * kernel_cell_integral(r, s0, s1, kappa, dim);
                    }
                }
            }
            Ok(w)
        })
        .collect()
}

fn neumann_values(domain: &Domain, sources: &ActuatorSet, u: &Signal, probes: &ProbeSet, k: usize) -> Result<Vec<f64>> {
    let modes = enumerate_modes(domain, k)?;
    let stepper = ForcedStepper::new(modes.clone(), sources, u.dt())?;
    let mut z = SpectralField::zeros(modes);
    for q in 0..u.cells() {
        z = stepper.step(&z, &u.cell(q))?;
    }
    probes.points().iter().map(|x| z.evaluate(x)).collect()
}

/// Truncated Neumann solution at the probes, accepted only if doubling the
/// mode count moves every probe value by less than `tol`.
pub fn neumann_solution_probe(sources: &ActuatorSet, u: &Signal, probes: &ProbeSet, t: f64, k: usize, tol: f64) -> Result<Vec<f64>> {
    check_input(sources, u, t)?;
    let domain = sources.domain();
    let coarse = neumann_values(domain, sources, u, probes, k)?;
    let fine = neumann_values(domain, sources, u, probes, 2 * k)?;
    let change = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if change >= tol {
        return Err(Error::Resolution(format!("doubling K = {k} moved probe values by {change:e} (tolerance {tol:e})")));
    }
    Ok(fine)
}

/// Smallest mode count whose largest eigenvalue reaches `lambda_min`.
pub fn modes_for_eigenvalue(domain: &Domain, lambda_min: f64) -> usize {
    let kappa = domain.diffusivity();
    let radius = (lambda_min / kappa).sqrt() / PI;
    let count = match domain.dim() {
        1 => radius * domain.lengths()[0] + 1.0,
        _ => PI / 6.0 * radius.powi(3) * domain.volume() + 1.0,
    };
    let mut k = count.ceil().max(1.0) as usize;
    while enumerate_modes(domain, k).map(|m| m.mode(k - 1).eigenvalue < lambda_min).unwrap_or(false) {
        k = k * 5 / 4 + 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictionOptions {
    /// K-doubling acceptance threshold on probe values
    pub resolution_tol: f64,
    /// require λ_K · quiet ≥ this, where `quiet` is the input-free time before t
    pub spectral_decay: f64,
}

impl Default for RestrictionOptions {
    fn default() -> Self {
        Self { resolution_tol: 1e-6, spectral_decay: 40.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub horizon: f64,
    pub d: f64,
    pub ratio: f64,
    pub gap: f64,
    pub modes: usize,
    pub bound_fit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// sorted by increasing d²/T
    pub rows: Vec<GapRow>,
    pub fit_c: f64,
    pub fit_rate: f64,
    pub r2: f64,
    pub monotone: bool,
}

/// Trailing input-free time of `u`.
fn quiet_time(u: &Signal) -> f64 {
    let last = (0..u.cells()).rev().find(|&q| u.values().column(q).iter().any(|v| *v != 0.0));
    match last {
        Some(q) => (u.cells() - q - 1) as f64 * u.dt(),
        None => u.cells() as f64 * u.dt(),
    }
}

/// For each horizon T: max over probes of |w − y| at time T with the input
/// `input(T)`, and a fit gap ≈ C exp(−c d²/T).
pub fn restriction_gap_report(
    sources: &ActuatorSet,
    probes: &ProbeSet,
    horizons: &[f64],
    input: impl Fn(f64) -> Result<Signal> + Sync,
    opts: RestrictionOptions,
) -> Result<GapReport> {
    if horizons.len() < 3 {
        return Err(Error::InsufficientData(format!("{} horizons, need at least 3", horizons.len())));
    }
    let domain = sources.domain();
    let d = sources.points().iter().map(|p| domain.boundary_distance(p)).fold(probes.distance(), f64::min);
    if !(d > 0.0) {
        return Err(invalid("sources must lie strictly inside the domain"));
    }
    let mut rows: Vec<GapRow> = horizons
        .par_iter()
        .map(|&t| {
            let u = input(t)?;
            let quiet = quiet_time(&u);
            if !(quiet > 0.0) {
                return Err(invalid("restriction inputs need an input-free interval before the horizon"));
            }
            let k = modes_for_eigenvalue(domain, opts.spectral_decay / quiet);
            let w = free_space_point_solution(sources, &u, probes, t)?;
            let y = neumann_solution_probe(sources, &u, probes, t, k, opts.resolution_tol)?;
            let gap = w.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok(GapRow { horizon: t, d, ratio: d * d / t, gap, modes: 2 * k, bound_fit: f64::NAN })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.ratio.total_cmp(&b.ratio));
    let monotone = rows.windows(2).all(|w| w[1].gap <= w[0].gap);
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.gap > 0.0).map(|r| (r.ratio, r.gap.ln())).unzip();
    let fit = fit_line(&x, &y)?;
    let (fit_c, fit_rate) = (fit.intercept.exp(), -fit.slope);
    for r in &mut rows {
        r.bound_fit = fit_c * (-fit_rate * r.ratio).exp();
    }
    Ok(GapReport { rows, fit_c, fit_rate, r2: fit.r2, monotone })
}

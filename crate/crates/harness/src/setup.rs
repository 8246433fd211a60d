//! Builds core objects from configuration blocks.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use plasmotrack::placement::{dct_grid_box, dct_nodes_interval, greedy_placement, ActuatorSet};
use plasmotrack::plasmonic::{resonance_gain, seeded_perturbation, PlasmonicConfig};
use plasmotrack::signal::{TemporalProfile, TimeGrid};
use plasmotrack::spectral::{enumerate_modes, Domain, DomainKind, ModeTable, Point};

use crate::config::{DomainShape, ExperimentConfig, Placement, ProfileChoice};
use crate::error::{HarnessError, Result, StageExt};

pub fn domain(cfg: &ExperimentConfig) -> Result<Domain> {
    let kind = match cfg.domain.kind {
        DomainShape::Interval => DomainKind::Interval,
        DomainShape::Box => DomainKind::Box3,
    };
    Domain::new(kind, &cfg.domain.lengths, cfg.domain.diffusivity).map_err(|e| HarnessError::Config(e.to_string()))
}

pub fn modes(domain: &Domain, k: usize) -> Result<Arc<ModeTable>> {
    enumerate_modes(domain, k).stage("modes")
}

pub fn profile(cfg: &ExperimentConfig) -> TemporalProfile {
    match cfg.projection.profile {
        ProfileChoice::Sin2 => TemporalProfile::Sin2,
        ProfileChoice::Sine => TemporalProfile::Sine,
    }
}

pub fn time_grid(cfg: &ExperimentConfig) -> Result<TimeGrid> {
    let steps = (cfg.feedback.horizon / cfg.feedback.dt).round() as usize;
    TimeGrid::new(cfg.feedback.horizon, steps).stage("time grid")
}

fn csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let row: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match row {
            Ok(r) => rows.push(r),
            // a non-numeric first line is a header
            Err(_) if rows.is_empty() => continue,
            Err(e) => return Err(HarnessError::Config(format!("{}: {e}", path.display()))),
        }
    }
    Ok(rows)
}

/// Points with one (interval) or three coordinates per line.
pub fn read_points_csv(path: &Path) -> Result<Vec<Point>> {
    csv_rows(path)?
        .into_iter()
        .map(|r| match r.len() {
            1 => Ok([r[0], 0.0, 0.0]),
            3 => Ok([r[0], r[1], r[2]]),
            n => Err(HarnessError::Config(format!("{}: points need 1 or 3 columns, found {n}", path.display()))),
        })
        .collect()
}

/// Dense matrix, one row per line.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let rows = csv_rows(path)?;
    let p = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(HarnessError::Config(format!("{}: expected a non-empty rectangular matrix", path.display())));
    }
    Ok(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
}

fn uniform_candidates(domain: &Domain, per_axis: usize) -> Vec<Point> {
    let l = domain.lengths();
    let at = |a: usize, i: usize| (i as f64 + 0.5) / per_axis as f64 * l[a];
    match domain.dim() {
        1 => (0..per_axis).map(|i| [at(0, i), 0.0, 0.0]).collect(),
        _ => {
            let mut v = Vec::with_capacity(per_axis.pow(3));
            for i in 0..per_axis {
                for j in 0..per_axis {
                    for k in 0..per_axis {
                        v.push([at(0, i), at(1, j), at(2, k)]);
                    }
                }
            }
            v
        }
    }
}

pub fn actuators(cfg: &ExperimentConfig, domain: &Domain, modes: &ModeTable) -> Result<ActuatorSet> {
    let a = &cfg.actuators;
    match a.placement {
        Placement::Explicit => ActuatorSet::new(domain, a.points.clone()).map_err(|e| HarnessError::Config(e.to_string())),
        Placement::Dct => match (domain.dim(), a.grid) {
            (1, _) => dct_nodes_interval(domain, a.count).stage("placement"),
            (_, Some(g)) => dct_grid_box(domain, g).stage("placement"),
            _ => Err(HarnessError::Config("box DCT placement needs actuators.grid".into())),
        },
        Placement::Greedy => {
            let cand = match &a.candidates {
                Some(p) => read_points_csv(&cfg.resolve(p))?,
                None => uniform_candidates(domain, a.candidate_density),
            };
            greedy_placement(&cand, domain, modes, cfg.feedback.n_low, a.count).stage("placement")
        }
    }
}

/// Gaussian illumination patterns centred along the domain diagonal.
fn gaussian_dictionary(centers: &[Point], domain: &Domain, patterns: usize, width: f64) -> DMatrix<f64> {
    let l = domain.lengths();
    DMatrix::from_fn(centers.len(), patterns, |i, p| {
        let s = (p as f64 + 0.5) / patterns as f64;
        let r2: f64 = l.iter().enumerate().map(|(a, la)| (centers[i][a] - s * la).powi(2)).sum();
        (-r2 / (width * width)).exp()
    })
}

/// Particles sit at the actuator points.
pub fn plasmonic(cfg: &ExperimentConfig, act: &ActuatorSet, grid: TimeGrid) -> Result<PlasmonicConfig> {
    let p = &cfg.plasmonic;
    let m = act.len();
    let mut dictionary = match &p.dictionary {
        Some(path) => read_matrix_csv(&cfg.resolve(path))?,
        None => gaussian_dictionary(act.points(), act.domain(), p.patterns, p.pattern_width),
    };
    if dictionary.nrows() != m {
        return Err(HarnessError::Config(format!("dictionary has {} rows for {m} particles", dictionary.nrows())));
    }
    if let Some(r) = &p.resonance {
        let g = resonance_gain(p.delta.max(f64::MIN_POSITIVE), r.h, r.im_eps, r.shape, r.e_magnitude).map_err(|e| HarnessError::Config(e.to_string()))?;
        dictionary *= g;
    }
    let contrasts = p.contrasts.clone().unwrap_or_else(|| vec![p.contrast; m]);
    let seed = cfg.seed()?;
    let pc = PlasmonicConfig {
        centers: act.points().to_vec(),
        contrasts,
        heat_capacity: p.heat_capacity,
        diffusivity: act.domain().diffusivity(),
        coupling: DMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { p.coupling }),
        delta: p.delta,
        mu: p.mu,
        perturbation: seeded_perturbation(m, dictionary.ncols(), seed),
        dictionary,
        interaction_perturbation: p.interaction_perturbation,
        grid,
        profile: profile(cfg),
    };
    pc.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(pc)
}

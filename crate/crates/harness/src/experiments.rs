//! Subcommands other than `track`.

use plasmotrack::control::{contraction_diagnostics, decay_rate_fit, ClosedLoopSystem};
use plasmotrack::linalg::fit_line;
use plasmotrack::placement::{genericity_monte_carlo, sampling_matrix, ActuatorSet};
use plasmotrack::plasmonic::calibrate_k0;
use plasmotrack::restriction::{restriction_gap_report, ProbeSet, RestrictionOptions};
use plasmotrack::signal::Signal;
use plasmotrack::spectral::{Domain, DomainKind, Norm, SpectralField};
use rayon::prelude::*;

use crate::coercivity::{coercivity_constant, uniform_mesh_nodes, Coercivity};
use crate::config::{DomainShape, ExperimentConfig};
use crate::error::{HarnessError, Result, StageExt};
use crate::output::{fmt_f64, Report, Table};
use crate::setup;
use crate::track::TrackContext;

const GENERICITY_TRIALS: usize = 200;

pub fn run_simulate(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let domain = setup::domain(cfg)?;
    let f = &cfg.feedback;
    let modes = setup::modes(&domain, f.k_sim)?;
    let act = setup::actuators(cfg, &domain, &modes)?;
    let gain = f.gain.unwrap_or(f.start_gain);
    let sys = ClosedLoopSystem::homogeneous(modes.clone(), &act, gain, f.n_low).stage("closed loop")?;
    let mut init = cfg.reference.initial.clone();
    if init.is_empty() {
        init = vec![1.0; f.n_low];
    }
    let z0 = SpectralField::from_leading(modes, &init).stage("initial state")?;
    let rec = sys.simulate(&z0, f.horizon, f.dt, false).stage("simulate")?;
    let mut header = vec!["t".to_string(), "norm_H".into(), "norm_Vdual".into()];
    header.extend((1..=act.len()).map(|j| format!("u_{j}")));
    let mut t = Table::with_header("trajectory.csv", header);
    for q in 0..rec.times.len() {
        let mut row = vec![rec.times[q], rec.norm_h[q], rec.norm_vdual[q]];
        row.extend(rec.inputs[q].iter());
        t.push(&row);
    }
    report.tables.push(t);
    let fit = decay_rate_fit(&rec, Norm::Vdual).stage("decay fit")?;
    let mut s = Table::new("decay_fit.csv", &["gain", "rate", "residual", "r2", "samples"]);
    s.push(&[gain, fit.rate, fit.residual, fit.r2, fit.samples as f64]);
    report.tables.push(s);
    report.check("decay_positive", fit.rate > 0.0, format!("fitted V' rate {:.6}", fit.rate));
    Ok(())
}

pub fn run_place(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let domain = setup::domain(cfg)?;
    let f = &cfg.feedback;
    let modes = setup::modes(&domain, f.k_sim)?;
    let act = setup::actuators(cfg, &domain, &modes)?;
    let mut pts = Table::new("actuators.csv", &["index", "x", "y", "z"]);
    for (j, p) in act.points().iter().enumerate() {
        pts.push(&[(j + 1) as f64, p[0], p[1], p[2]]);
    }
    report.tables.push(pts);
    let mats = sampling_matrix(&act, &modes, f.n_low).stage("sampling matrix")?;
    report.tolerance("svd_rank_relative", plasmotrack::linalg::RANK_RTOL);
    report.tolerance("genericity_threshold", plasmotrack::placement::GENERICITY_THRESHOLD);
    let seed = cfg.seed()?;
    let failures = if act.len() <= modes.len() { genericity_monte_carlo(&modes, act.len(), GENERICITY_TRIALS, seed).stage("genericity")? } else { 0 };
    let sys = ClosedLoopSystem::homogeneous(modes.clone(), &act, f.gain.unwrap_or(f.start_gain), f.n_low).stage("closed loop")?;
    let diag = contraction_diagnostics(&sys, &mats);
    let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
    let mut s = Table::new(
        "placement.csv",
        &["n", "m", "sigma_min", "sigma_max", "genericity_failures", "genericity_trials", "leakage", "mechanism_a", "mechanism_b", "mechanism_c_margin"],
    );
    s.push(&[
        f.n_low as f64,
        act.len() as f64,
        mats.sigma_min,
        mats.sigma_max,
        failures as f64,
        GENERICITY_TRIALS as f64,
        opt(diag.leakage),
        opt(diag.mechanism_a),
        opt(diag.mechanism_b),
        opt(diag.mechanism_c_margin),
    ]);
    report.tables.push(s);
    report.check("full_row_rank", mats.has_full_row_rank(), format!("sigma_min(Phi_NM) = {:e}", mats.sigma_min));
    Ok(())
}

pub fn run_calibrate(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let domain = setup::domain(cfg)?;
    let modes = setup::modes(&domain, cfg.feedback.k_sim)?;
    let act = setup::actuators(cfg, &domain, &modes)?;
    let pc = setup::plasmonic(cfg, &act, setup::time_grid(cfg)?)?;
    let map = calibrate_k0(&pc).stage("calibration")?;
    let mut cols = Table::new("calibration.csv", &["pattern", "column_norm", "projection_residual"]);
    for (l, (n, r)) in map.column_norms.iter().zip(&map.projection_residuals).enumerate() {
        cols.push(&[(l + 1) as f64, *n, *r]);
    }
    report.tables.push(cols);
    let mut k0 = Table::with_header("k0.csv", (1..=map.k0.ncols()).map(|l| format!("pattern_{l}")).collect());
    for i in 0..map.k0.nrows() {
        k0.push(&map.k0.row(i).iter().copied().collect::<Vec<_>>());
    }
    report.tables.push(k0);
    let mut s = Table::new("calibration_summary.csv", &["sigma_min", "sigma_max", "rank", "m", "p"]);
    s.push(&[map.sigma_min, map.sigma_max, map.rank as f64, map.k0.nrows() as f64, map.k0.ncols() as f64]);
    report.tables.push(s);
    report.check("actuation_rank", map.full_rank(), format!("rank {} of {}", map.rank, map.k0.nrows()));
    Ok(())
}

/// sin²(2πτ/T) on [0, T/2] and zero afterwards, as cell averages.
pub fn restriction_input(channels: usize, horizon: f64, cells: usize) -> plasmotrack::Result<Signal> {
    let dt = horizon / cells as f64;
    let f = |tau: f64| if tau < horizon / 2.0 { (2.0 * std::f64::consts::PI * tau / horizon).sin().powi(2) } else { 0.0 };
    let v = nalgebra::DMatrix::from_fn(channels, cells, |_, q| 0.5 * (f(q as f64 * dt) + f((q + 1) as f64 * dt)));
    Signal::new(dt, v)
}

pub fn run_restriction(cfg: &ExperimentConfig, report: &mut Report) -> Result<plasmotrack::restriction::GapReport> {
    let r = &cfg.restriction;
    let domain = match r.kind {
        DomainShape::Interval => Domain::new(DomainKind::Interval, &[r.side], r.diffusivity),
        DomainShape::Box => Domain::new(DomainKind::Box3, &[r.side; 3], r.diffusivity),
    }
    .map_err(|e| HarnessError::Config(e.to_string()))?;
    let sources = ActuatorSet::new(&domain, r.sources.clone()).map_err(|e| HarnessError::Config(e.to_string()))?;
    let probes = ProbeSet::new(&domain, r.probes.clone()).map_err(|e| HarnessError::Config(e.to_string()))?;
    let d = sources.points().iter().map(|p| domain.boundary_distance(p)).fold(probes.distance(), f64::min);
    let horizons: Vec<f64> = r.ratios.iter().map(|x| d * d / x).collect();
    let opts = RestrictionOptions { resolution_tol: r.resolution_tol, spectral_decay: r.spectral_decay };
    report.tolerance("restriction_resolution", r.resolution_tol);
    let (cells, m) = (r.cells, sources.len());
    let rep = restriction_gap_report(&sources, &probes, &horizons, |t| restriction_input(m, t, cells), opts).stage("restriction")?;
    let mut t = Table::new("restriction.csv", &["T", "d", "gap", "bound_fit"]);
    for row in &rep.rows {
        t.push(&[row.horizon, row.d, row.gap, row.bound_fit]);
    }
    report.tables.push(t);
    let mut s = Table::new("restriction_fit.csv", &["C", "c", "r2", "monotone"]);
    s.push(&[rep.fit_c, rep.fit_rate, rep.r2, f64::from(u8::from(rep.monotone))]);
    report.tables.push(s);
    report.check("gap_monotone", rep.monotone, "gap nonincreasing in d^2/T");
    report.check("gap_fit", rep.fit_rate > 0.0 && rep.r2 >= 0.95, format!("c = {:.4}, R^2 = {:.6}", rep.fit_rate, rep.r2));
    Ok(rep)
}

fn mesh_point(cfg: &ExperimentConfig, cells: usize) -> Result<Coercivity> {
    let c = &cfg.coercivity;
    let domain = Domain::interval(c.length, 1.0).map_err(|e| HarnessError::Config(e.to_string()))?;
    let h = c.length / cells as f64;
    let k = (c.k_factor as f64 / h).round() as usize;
    coercivity_constant(&domain, &uniform_mesh_nodes(c.length, cells), k)
}

/// Log-log slope of ξ̂ against h.
pub fn mesh_slope(points: &[Coercivity]) -> Result<f64> {
    let x: Vec<f64> = points.iter().map(|p| p.h.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.xi.ln()).collect();
    Ok(fit_line(&x, &y).stage("coercivity fit")?.slope)
}

pub fn run_coercivity(cfg: &ExperimentConfig, report: &mut Report) -> Result<Vec<Coercivity>> {
    let points: Vec<Coercivity> = cfg.coercivity.meshes.par_iter().map(|&n| mesh_point(cfg, n)).collect::<Result<_>>()?;
    let mut t = Table::new("coercivity.csv", &["h", "nodes", "modes", "xi"]);
    for p in &points {
        t.push(&[p.h, p.nodes as f64, p.modes as f64, p.xi]);
    }
    report.tables.push(t);
    if points.len() >= 2 {
        let slope = mesh_slope(&points)?;
        report.check("coercivity_slope", (-2.3..=-1.7).contains(&slope), format!("slope {slope:.4}"));
    }
    Ok(points)
}

struct Cell {
    sweep: &'static str,
    index: usize,
    value: f64,
    outcome: std::result::Result<(f64, f64), String>,
}

fn fit_row(t: &mut Table, name: &str, xs: &[f64], ys: &[f64], expected: f64) -> Option<f64> {
    let ok = xs.len() >= 3;
    let slope = fit_line(xs, ys).ok().map(|f| f.slope);
    let status = if ok { "ok" } else { "flagged: fewer than 3 points" };
    t.push_raw(vec![name.to_string(), String::new(), String::new(), slope.map_or(String::new(), fmt_f64), fmt_f64(expected), status.to_string()]);
    slope.filter(|_| ok)
}

pub fn run_sweep(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let sw = cfg.sweep.clone().ok_or_else(|| HarnessError::Config("sweep block missing".into()))?;
    let ctx = if sw.deltas.is_empty() { None } else { Some(TrackContext::prepare(cfg)?) };
    let mut jobs: Vec<(&'static str, usize, f64)> = Vec::new();
    jobs.extend(sw.deltas.iter().enumerate().map(|(i, v)| ("delta", i, *v)));
    jobs.extend(sw.gains.iter().enumerate().map(|(i, v)| ("gain", i, *v)));
    jobs.extend(sw.meshes.iter().enumerate().map(|(i, v)| ("mesh", i, *v as f64)));
    let domain = setup::domain(cfg)?;
    let f = &cfg.feedback;
    let modes = setup::modes(&domain, f.k_sim)?;
    let act = setup::actuators(cfg, &domain, &modes)?;
    let cells: Vec<Cell> = jobs
        .par_iter()
        .map(|&(sweep, index, value)| {
            let outcome = match sweep {
                "delta" => {
                    ctx.as_ref().expect("context built for delta sweeps").physical(value).map(|r| (r.row.rho_norm, r.row.eta)).map_err(|e| e.to_string())
                }
                "gain" => ClosedLoopSystem::homogeneous(modes.clone(), &act, value, f.n_low)
                    .and_then(|s| {
                        let z0 = SpectralField::from_leading(modes.clone(), &vec![1.0; f.n_low])?;
                        decay_rate_fit(&s.simulate(&z0, f.horizon, f.dt, false)?, Norm::Vdual)
                    })
                    .map(|fit| (fit.rate, fit.residual))
                    .map_err(|e| e.to_string()),
                _ => mesh_point(cfg, value as usize).map(|c| (c.xi, c.h)).map_err(|e| e.to_string()),
            };
            Cell { sweep, index, value, outcome }
        })
        .collect();
    let mut t = Table::new("sweep.csv", &["sweep", "index", "value", "metric", "secondary", "status"]);
    for c in &cells {
        let (m, s, st) = match &c.outcome {
            Ok((m, s)) => (fmt_f64(*m), fmt_f64(*s), "ok".to_string()),
            Err(e) => (String::new(), String::new(), format!("error: {e}")),
        };
        t.push_raw(vec![c.sweep.to_string(), c.index.to_string(), fmt_f64(c.value), m, s, st]);
    }
    let ok = |name: &'static str| -> Vec<(f64, (f64, f64))> {
        cells.iter().filter(|c| c.sweep == name).filter_map(|c| c.outcome.as_ref().ok().map(|o| (c.value, *o))).collect()
    };
    if !sw.deltas.is_empty() {
        let pts: Vec<(f64, (f64, f64))> = ok("delta").into_iter().filter(|(_, o)| o.0 > 0.0).collect();
        let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1 .0.ln()).collect();
        let mu = cfg.plasmonic.mu;
        if let Some(s) = fit_row(&mut t, "delta_fit", &xs, &ys, mu) {
            report.check("remainder_slope", (s - mu).abs() <= 0.2, format!("slope {s:.4}, configured mu {mu}"));
        }
        let mut by_delta: Vec<(f64, f64)> = ok("delta").into_iter().map(|(v, o)| (v, o.1)).collect();
        by_delta.sort_by(|a, b| b.0.total_cmp(&a.0));
        report.check("eta_monotone", by_delta.windows(2).all(|w| w[1].1 <= w[0].1), "eta nonincreasing as delta decreases");
    }
    if !sw.meshes.is_empty() {
        let pts = ok("mesh");
        let xs: Vec<f64> = pts.iter().map(|p| p.1 .1.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1 .0.ln()).collect();
        if let Some(s) = fit_row(&mut t, "mesh_fit", &xs, &ys, -2.0) {
            report.check("coercivity_slope", (s + 2.0).abs() <= 0.3, format!("slope {s:.4}"));
        }
    }
    report.check("sweep_cells", cells.iter().all(|c| c.outcome.is_ok()), format!("{} cells", cells.len()));
    report.tables.push(t);
    Ok(())
}

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use plasmotrack::linalg::composite_rule;
use plasmotrack::placement::ActuatorSet;
use plasmotrack::restriction::{free_space_point_solution, neumann_solution_probe, restriction_gap_report, ProbeSet, RestrictionOptions};
use plasmotrack::signal::Signal;
use plasmotrack::spectral::{Domain, Point};
use plasmotrack::Error;

/// sin²(2πτ/T) on [0, T/2], zero afterwards, as cell averages of `q` cells.
fn bump(channels: usize, t: f64, q: usize, amp: f64) -> Signal {
    let dt = t / q as f64;
    let f = |tau: f64| if tau < t / 2.0 { (2.0 * PI * tau / t).sin().powi(2) } else { 0.0 };
    let cells = DMatrix::from_fn(channels, q, |_, k| amp * 0.5 * (f(k as f64 * dt) + f((k + 1) as f64 * dt)));
    Signal::new(dt, cells).unwrap()
}

fn g1(x: f64, s: f64, kappa: f64) -> f64 {
    (4.0 * PI * kappa * s).powf(-0.5) * (-x * x / (4.0 * kappa * s)).exp()
}

/// Neumann heat kernel of [0, L] by reflections.
fn images_1d(x: f64, y: f64, s: f64, l: f64, kappa: f64) -> f64 {
    (-12i32..=12).map(|n| g1(x - y + 2.0 * n as f64 * l, s, kappa) + g1(x + y + 2.0 * n as f64 * l, s, kappa)).sum()
}

/// Neumann solution by images with Gauss–Legendre in time on each input cell.
fn images_solution(domain: &Domain, src: &[Point], u: &Signal, x: &Point, t: f64) -> f64 {
    let kappa = domain.diffusivity();
    let lens = domain.lengths();
    let mut acc = 0.0;
    for (j, y) in src.iter().enumerate() {
        for q in 0..u.cells() {
            let uq = u.values()[(j, q)];
            if uq == 0.0 {
                continue;
            }
            let (taus, ws) = composite_rule(q as f64 * u.dt(), (q + 1) as f64 * u.dt(), 1, 12);
            for (tau, w) in taus.iter().zip(&ws) {
                let s = t - tau;
                let g: f64 = (0..lens.len()).map(|a| images_1d(x[a], y[a], s, lens[a], kappa)).product();
                acc += w * uq * g;
            }
        }
    }
    acc
}

#[test]
fn neumann_probe_matches_images_in_a_box() {
    let d = Domain::box3([1.0, 0.8, 1.2], 0.7).unwrap();
    let src = ActuatorSet::new(&d, vec![[0.4, 0.4, 0.5], [0.6, 0.3, 0.7]]).unwrap();
    let probes = ProbeSet::new(&d, vec![[0.5, 0.5, 0.6], [0.2, 0.7, 1.0]]).unwrap();
    let t = 0.1;
    let u = bump(2, t, 40, 1.0);
    let vals = neumann_solution_probe(&src, &u, &probes, t, 4000, 1e-6).unwrap();
    for (x, v) in probes.points().iter().zip(&vals) {
        let oracle = images_solution(&d, src.points(), &u, x, t);
        assert!((v - oracle).abs() < 1e-9 * oracle.abs().max(1.0), "{v} vs {oracle}");
    }
}

#[test]
fn neumann_probe_matches_images_on_an_interval() {
    let d = Domain::interval(1.0, 1.0).unwrap();
    let src = ActuatorSet::new(&d, vec![[0.3, 0.0, 0.0]]).unwrap();
    let probes = ProbeSet::new(&d, vec![[0.5, 0.0, 0.0], [0.9, 0.0, 0.0]]).unwrap();
    let u = bump(1, 0.2, 50, 2.0);
    let vals = neumann_solution_probe(&src, &u, &probes, 0.2, 60, 1e-6).unwrap();
    for (x, v) in probes.points().iter().zip(&vals) {
        assert!((v - images_solution(&d, src.points(), &u, x, 0.2)).abs() < 1e-10);
    }
}

#[test]
fn constant_mode_only_gives_mass_over_length() {
    // the probe sits on the node of cos(πx/L), so with K = 1 (checked against
    // K = 2) only the constant mode contributes: value = ∫u dt / L
    let d = Domain::interval(2.0, 1.0).unwrap();
    let src = ActuatorSet::new(&d, vec![[0.5, 0.0, 0.0]]).unwrap();
    let probes = ProbeSet::new(&d, vec![[1.0, 0.0, 0.0]]).unwrap();
    let u = Signal::new(0.1, DMatrix::from_element(1, 10, 3.0)).unwrap();
    let v = neumann_solution_probe(&src, &u, &probes, 1.0, 1, 1e-12).unwrap();
    assert!((v[0] - 3.0 / 2.0).abs() < 1e-14);
    let off = ProbeSet::new(&d, vec![[1.5, 0.0, 0.0]]).unwrap();
    assert!(matches!(neumann_solution_probe(&src, &u, &off, 1.0, 1, 1e-6), Err(Error::Resolution(_))));
}

#[test]
fn free_space_far_probe_is_negligible() {
    let d = Domain::box3([40.0; 3], 1.0).unwrap();
    let src = ActuatorSet::new(&d, vec![[1.0, 1.0, 1.0]]).unwrap();
    let probes = ProbeSet::new(&d, vec![[21.0, 1.0, 1.0]]).unwrap();
    let u = Signal::new(0.01, DMatrix::from_element(1, 100, 1.0)).unwrap();
    // |x − x_j|² = 400 ≫ 4κT = 4
    let w = free_space_point_solution(&src, &u, &probes, 1.0).unwrap();
    assert!(w[0] >= 0.0 && w[0] <= 1e-12);
    let zero = Signal::zeros(1, 100, 0.01);
    assert_eq!(free_space_point_solution(&src, &zero, &probes, 1.0).unwrap(), vec![0.0]);
}

#[test]
fn free_space_refinement_is_stable() {
    let d = Domain::box3([1.0; 3], 1.0).unwrap();
    let src = ActuatorSet::new(&d, vec![[0.5, 0.5, 0.5]]).unwrap();
    let probes = ProbeSet::new(&d, vec![[0.6, 0.5, 0.5]]).unwrap();
    let t = 0.05;
    let coarse = free_space_point_solution(&src, &bump(1, t, 200, 1.0), &probes, t).unwrap()[0];
    let fine = free_space_point_solution(&src, &bump(1, t, 400, 1.0), &probes, t).unwrap()[0];
    assert!((coarse - fine).abs() < 1e-6);
    let hit = ProbeSet::new(&d, vec![[0.5, 0.5, 0.5]]).unwrap();
    assert!(free_space_point_solution(&src, &bump(1, t, 20, 1.0), &hit, t).is_err());
}

fn cube_sweep(ratios: &[f64], side: f64) -> plasmotrack::restriction::GapReport {
    let c = side / 2.0;
    let d = Domain::box3([side; 3], 1.0).unwrap();
    let src = ActuatorSet::new(&d, vec![[c, c, c]]).unwrap();
    let probes = ProbeSet::new(&d, vec![[c + 0.05, c, c], [c, c - 0.05, c], [c, c, c + 0.03]]).unwrap();
    let dist = c - 0.05;
    let horizons: Vec<f64> = ratios.iter().map(|r| dist * dist / r).collect();
    restriction_gap_report(&src, &probes, &horizons, |t| Ok(bump(1, t, 64, 1.0)), RestrictionOptions::default()).unwrap()
}

#[test]
fn gap_decays_exponentially_in_d2_over_t() {
    let start = Instant::now();
    let rep = cube_sweep(&[1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0, 15.0], 1.0);
    assert!(rep.monotone);
    assert!(rep.fit_rate > 0.0 && rep.r2 >= 0.95, "rate {} r2 {}", rep.fit_rate, rep.r2);
    assert!(rep.rows.last().unwrap().gap < 1e-9);
    assert!(start.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn gap_is_linear_in_amplitude_and_shrinks_with_distance() {
    let d = Domain::box3([1.0; 3], 1.0).unwrap();
    let src = ActuatorSet::new(&d, vec![[0.5; 3]]).unwrap();
    let probes = ProbeSet::new(&d, vec![[0.55, 0.5, 0.5]]).unwrap();
    let hs = [0.05, 0.1, 0.2];
    let one = restriction_gap_report(&src, &probes, &hs, |t| Ok(bump(1, t, 32, 1.0)), RestrictionOptions::default()).unwrap();
    let three = restriction_gap_report(&src, &probes, &hs, |t| Ok(bump(1, t, 32, 3.0)), RestrictionOptions::default()).unwrap();
    for (a, b) in one.rows.iter().zip(&three.rows) {
        assert!((b.gap - 3.0 * a.gap).abs() < 1e-9 * b.gap.max(1e-12));
    }
    // same horizon, doubled box: larger d, smaller gap
    let d2 = Domain::box3([2.0; 3], 1.0).unwrap();
    let src2 = ActuatorSet::new(&d2, vec![[1.0; 3]]).unwrap();
    let probes2 = ProbeSet::new(&d2, vec![[1.05, 1.0, 1.0]]).unwrap();
    let big = restriction_gap_report(&src2, &probes2, &hs, |t| Ok(bump(1, t, 32, 1.0)), RestrictionOptions::default()).unwrap();
    for (a, b) in one.rows.iter().zip(&big.rows) {
        assert!(b.gap < a.gap);
    }
    assert!(matches!(
        restriction_gap_report(&src, &probes, &hs[..2], |t| Ok(bump(1, t, 32, 1.0)), RestrictionOptions::default()),
        Err(Error::InsufficientData(_))
    ));
}

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use plasmotrack::linalg::{expm, phi1, sym_eigen};
use plasmotrack::placement::ActuatorSet;
use plasmotrack::spectral::{enumerate_modes, heat_step_forced, project_function, Domain, Norm, QuadratureSpec, SpectralField};
use plasmotrack::Error;

#[test]
fn interval_eigenvalues_match_cosine_series() {
    let d = Domain::interval(2.0, 0.5).unwrap();
    let modes = enumerate_modes(&d, 6).unwrap();
    for (k, m) in modes.modes().iter().enumerate() {
        let expect = 0.5 * (k as f64 * PI / 2.0).powi(2);
        assert!((m.eigenvalue - expect).abs() < 1e-12 * expect.max(1.0));
        assert_eq!(m.index[0], k);
    }
}

#[test]
fn cube_ties_break_lexicographically() {
    let d = Domain::box3([1.0; 3], 1.0).unwrap();
    let modes = enumerate_modes(&d, 4).unwrap();
    let idx: Vec<[usize; 3]> = modes.modes().iter().map(|m| m.index).collect();
    assert_eq!(idx, vec![[0, 0, 0], [0, 0, 1], [0, 1, 0], [1, 0, 0]]);
    assert_eq!(modes.mode(1).eigenvalue, modes.mode(3).eigenvalue);
}

#[test]
fn box_modes_are_the_smallest_eigenvalues() {
    let d = Domain::box3([1.0, 1.7, 0.6], 1.0).unwrap();
    let k = 60;
    let modes = enumerate_modes(&d, k).unwrap();
    // brute-force list over a generous index box
    let mut all = Vec::new();
    for a in 0..20 {
        for b in 0..20 {
            for c in 0..20 {
                all.push(PI * PI * ((a as f64).powi(2) + (b as f64 / 1.7).powi(2) + (c as f64 / 0.6).powi(2)));
            }
        }
    }
    all.sort_by(f64::total_cmp);
    for (m, e) in modes.modes().iter().zip(&all) {
        assert!((m.eigenvalue - e).abs() < 1e-9 * e.max(1.0));
    }
}

#[test]
fn modes_are_orthonormal_under_quadrature() {
    let d = Domain::box3([1.0, 0.8, 1.3], 1.0).unwrap();
    let modes = enumerate_modes(&d, 10).unwrap();
    for j in 0..modes.len() {
        let m2 = modes.clone();
        let f = project_function(move |x| m2.eval_unchecked(j, x), modes.clone(), QuadratureSpec { order: 12, panels: 4 }).unwrap();
        for (k, a) in f.coeffs().iter().enumerate() {
            let expect = if j == k { 1.0 } else { 0.0 };
            assert!((a - expect).abs() < 1e-12, "<phi_{j}, phi_{k}> = {a}");
        }
    }
}

#[test]
fn projection_of_polynomial_matches_closed_form() {
    // f(x) = x on [0, 1]: <f, sqrt2 cos(k pi x)> = sqrt2 ((-1)^k - 1)/(k pi)^2
    let d = Domain::interval(1.0, 1.0).unwrap();
    let modes = enumerate_modes(&d, 9).unwrap();
    let f = project_function(|x| x[0], modes, QuadratureSpec::default()).unwrap();
    assert!((f.coeffs()[0] - 0.5).abs() < 1e-14);
    for k in 1..9 {
        let kp = k as f64 * PI;
        let expect = 2f64.sqrt() * ((-1f64).powi(k as i32) - 1.0) / (kp * kp);
        assert!((f.coeffs()[k] - expect).abs() < 1e-13);
    }
}

#[test]
fn point_evaluation_outside_domain_is_rejected() {
    let d = Domain::interval(1.0, 1.0).unwrap();
    let modes = enumerate_modes(&d, 3).unwrap();
    assert!(matches!(modes.eval(0, &[1.5, 0.0, 0.0]), Err(Error::InvalidArgument(_))));
    assert!(enumerate_modes(&d, 0).is_err());
    assert!(Domain::interval(-1.0, 1.0).is_err());
}

#[test]
fn norms_are_ordered_and_semigroup_contracts() {
    let d = Domain::interval(1.0, 1.0).unwrap();
    let modes = enumerate_modes(&d, 12).unwrap();
    let z = SpectralField::new(modes, DVector::from_fn(12, |k, _| 1.0 / (1.0 + k as f64))).unwrap();
    assert!(z.norm(Norm::Vdual) <= z.norm(Norm::H));
    assert!(z.norm(Norm::H) <= z.norm(Norm::Graph));
    assert!((z.resolvent_apply().elliptic_apply().sub(&z).unwrap().norm(Norm::H)) < 1e-15);
    let s = z.semigroup_apply(0.01).unwrap();
    assert!(s.norm(Norm::H) <= z.norm(Norm::H));
    assert!(s.semigroup_apply(0.02).unwrap().sub(&z.semigroup_apply(0.03).unwrap()).unwrap().norm(Norm::H) < 1e-15);
    assert!(z.semigroup_apply(-1.0).is_err());
}

fn sym_expm_oracle(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(a);
    &vecs * DMatrix::from_diagonal(&vals.map(f64::exp)) * vecs.transpose()
}

#[test]
fn expm_agrees_with_eigendecomposition() {
    for (scale, n) in [(0.1, 3), (5.0, 8), (300.0, 12)] {
        let b = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5);
        let a = (&b + b.transpose()) * scale;
        let e = expm(&a).unwrap();
        let o = sym_expm_oracle(&a);
        assert!((&e - &o).norm() <= 1e-12 * o.norm().max(1.0), "scale {scale}");
    }
    // nilpotent: exp(N) = I + N
    let mut nil = DMatrix::zeros(2, 2);
    nil[(0, 1)] = 3.0;
    let e = expm(&nil).unwrap();
    assert!((e[(0, 1)] - 3.0).abs() < 1e-14 && (e[(0, 0)] - 1.0).abs() < 1e-14);
}

#[test]
fn phi1_is_smooth_across_the_series_switch() {
    for l in [0.0f64, 1e-9, 1e-7, 1e-5, 1.0, 100.0] {
        let dt: f64 = 0.1;
        let exact = if l == 0.0 { dt } else { -(-l * dt).exp_m1() / l };
        assert!((phi1(l, dt) - exact).abs() < 1e-13 * dt, "lambda {l}");
    }
}

fn rk4_forced(alpha: &DVector<f64>, lam: &[f64], b: &DVector<f64>, dt: f64, sub: usize) -> DVector<f64> {
    let h = dt / sub as f64;
    let f = |a: &DVector<f64>| DVector::from_fn(a.len(), |k, _| -lam[k] * a[k] + b[k]);
    let mut a = alpha.clone();
    for _ in 0..sub {
        let k1 = f(&a);
        let k2 = f(&(&a + &k1 * (h / 2.0)));
        let k3 = f(&(&a + &k2 * (h / 2.0)));
        let k4 = f(&(&a + &k3 * h));
        a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    a
}

#[test]
fn forced_step_matches_fine_rk4() {
    let d = Domain::interval(1.0, 1.0).unwrap();
    let modes = enumerate_modes(&d, 8).unwrap();
    let act = ActuatorSet::new(&d, vec![[0.2, 0.0, 0.0], [0.7, 0.0, 0.0]]).unwrap();
    let z = SpectralField::new(modes.clone(), DVector::from_fn(8, |k, _| (k as f64 + 1.0).recip())).unwrap();
    let u = [1.5, -0.5];
    let dt = 0.01;
    let next = heat_step_forced(&z, &act, &u, dt).unwrap();
    let e = modes.sample_matrix(act.points()).unwrap();
    let b = &e * DVector::from_column_slice(&u);
    let oracle = rk4_forced(z.coeffs(), &modes.eigenvalues(), &b, dt, 4000);
    assert!((next.coeffs() - oracle).norm() < 1e-10);
}

#[test]
fn constant_mode_accumulates_injected_mass() {
    let d = Domain::box3([1.0, 2.0, 0.5], 1.0).unwrap();
    let modes = enumerate_modes(&d, 5).unwrap();
    let act = ActuatorSet::new(&d, vec![[0.3, 0.3, 0.3]]).unwrap();
    let mut z = SpectralField::zeros(modes);
    for _ in 0..10 {
        z = heat_step_forced(&z, &act, &[2.0], 0.05).unwrap();
    }
    // mean value = total injected heat / volume
    let mean = z.coeffs()[0] / d.volume().sqrt();
    assert!((mean - 2.0 * 0.5 / d.volume()).abs() < 1e-14);
}

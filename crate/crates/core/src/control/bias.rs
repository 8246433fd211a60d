use nalgebra::{DMatrix, DVector};

use super::closed_loop::ClosedLoopSystem;
use crate::error::{invalid, Error, Result};
use crate::linalg::{sigma_min, spectral_norm};
use crate::placement::sampling_matrix;
use crate::spectral::{Norm, SpectralField};

/// Operator norms entering the small-gain and tail bounds, all taken with the
/// V′ weighting 1/(1 + λ_k) on state coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormFactors {
    /// ‖R_cl‖ with R_cl = −A_cl⁻¹
    pub c_cl: f64,
    /// ‖(I − P_N) B‖
    pub tail_input: f64,
    /// ‖U_N‖
    pub feedforward: f64,
}

#[derive(Debug, Clone)]
pub struct BiasMatrix {
    pub t: DMatrix<f64>,
    /// ‖T_N‖ in the V′-weighted norm on X_N
    pub norm: f64,
    /// plain spectral norm of the coefficient matrix
    pub norm_h: f64,
    pub small_gain_bound: f64,
    pub factors: NormFactors,
    /// U_N, M×N
    pub feedforward_matrix: DMatrix<f64>,
}

fn weights(lam: &[f64]) -> DVector<f64> {
    DVector::from_iterator(lam.len(), lam.iter().map(|l| 1.0 / (1.0 + l)))
}

fn weighted_norm(a: &DMatrix<f64>, left: &DVector<f64>, right: &DVector<f64>) -> f64 {
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| left[i] * a[(i, j)] / right[j]);
    spectral_norm(&scaled)
}

/// Column k of T_N: first N coefficients of the equilibrium driven by
/// g(φ_k) = A₀φ_k + B U_N φ_k.
pub fn assemble_bias_matrix(system: &ClosedLoopSystem) -> Result<BiasMatrix> {
    let modes = system.modes();
    let n = system.n_low();
    if n == 0 {
        return Err(invalid("bias matrix needs N >= 1"));
    }
    let mats = sampling_matrix(system.actuators(), modes, n)?;
    let u = mats.feedforward_matrix()?;
    let lam = modes.eigenvalues();
    let a = system.generator();
    let inv = a.clone().lu().try_inverse().ok_or_else(|| Error::Singular { context: "closed-loop generator".into(), estimate: sigma_min(a) })?;
    let e = system.input_matrix();
    let mut t = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut g = e * u.column(k);
        g[k] -= lam[k];
        let z = -(&inv * g);
        t.column_mut(k).copy_from(&z.rows(0, n));
    }
    let w = weights(&lam);
    let wn = w.rows(0, n).into_owned();
    let c_cl = weighted_norm(&inv, &w, &w);
    let k = lam.len();
    let e_tail = e.rows(n, k - n).into_owned();
    let tail_input = weighted_norm(&e_tail, &w.rows(n, k - n).into_owned(), &DVector::repeat(e.ncols(), 1.0));
    let feedforward = weighted_norm(&u, &DVector::repeat(u.nrows(), 1.0), &wn);
    let norm = weighted_norm(&t, &wn, &wn);
    let factors = NormFactors { c_cl, tail_input, feedforward };
    Ok(BiasMatrix { norm_h: spectral_norm(&t), norm, small_gain_bound: c_cl * tail_input * feedforward, factors, t, feedforward_matrix: u })
}

#[derive(Debug, Clone)]
pub struct PicardTrace {
    /// ‖y^(ℓ) − a*‖ for ℓ = 0, 1, ...
    pub errors: Vec<f64>,
    pub last: DVector<f64>,
    pub converged: bool,
}

impl PicardTrace {
    /// Successive error ratios while the error is above round-off.
    pub fn ratios(&self, floor: f64) -> Vec<f64> {
        self.errors.windows(2).take_while(|w| w[1] > floor).map(|w| w[1] / w[0]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub a_star: DVector<f64>,
    pub picard: Option<PicardTrace>,
    /// set when Picard was skipped because ‖T_N‖ >= 1
    pub warning: Option<String>,
}

/// Direct solve of (I + T_N) a* = a^r plus Picard y ← a^r − T_N y when
/// the spectral norm of T_N is below one.
pub fn fixed_point_reference(t: &DMatrix<f64>, a_r: &[f64], max_iter: usize) -> Result<FixedPoint> {
    let n = t.nrows();
    if t.ncols() != n || a_r.len() != n {
        return Err(invalid(format!("T_N is {}x{}, reference has {} entries", t.nrows(), t.ncols(), a_r.len())));
    }
    let ar = DVector::from_column_slice(a_r);
    let lhs = DMatrix::identity(n, n) + t;
    let a_star = crate::linalg::solve(&lhs, &ar, "I + T_N")?;
    let tn = spectral_norm(t);
    if tn >= 1.0 {
        return Ok(FixedPoint { a_star, picard: None, warning: Some(format!("Picard skipped: ||T_N|| = {tn} >= 1")) });
    }
    let floor = 1e-15 * a_star.norm().max(1.0);
    let mut y = ar.clone();
    let mut errors = vec![(&y - &a_star).norm()];
    let mut converged = errors[0] <= floor;
    for _ in 0..max_iter {
        if converged {
            break;
        }
        y = &ar - t * &y;
        let err = (&y - &a_star).norm();
        errors.push(err);
        converged = err <= floor;
    }
    Ok(FixedPoint { a_star, picard: Some(PicardTrace { errors, last: y, converged }), warning: None })
}

#[derive(Debug, Clone)]
pub struct TailReport {
    /// ‖P_N(y_∞ − y_r)‖_H
    pub low_mismatch: f64,
    /// ‖(I − P_N) y_∞‖ in V′
    pub tail: f64,
    /// ‖I−P_N‖·C_cl·‖(I−P_N)B‖·‖U_N‖·‖(I+T_N)⁻¹‖·‖y_r‖
    pub bound: f64,
    /// C_cl·‖(I−P_N)B‖·|U_N y*|, an intermediate link of the same chain
    pub sharp_bound: f64,
    pub inverse_norm: f64,
    pub reference_norm: f64,
    pub factors: NormFactors,
    pub holds: bool,
}

/// Low-mode mismatch and tail of the steady state of `system`, which must be
/// commanded to the fixed point y* of the reference `y_ref`.
pub fn tail_mismatch_report(system: &ClosedLoopSystem, y_ref: &SpectralField, bias: &BiasMatrix) -> Result<TailReport> {
    let n = system.n_low();
    let modes = system.modes();
    let zinf = system.equilibrium()?;
    let ystar = SpectralField::new(modes.clone(), system.commanded().clone())?;
    let yinf = ystar.add(&zinf)?;
    let low_mismatch = yinf.sub(y_ref)?.low(n).norm(Norm::H);
    let tail = yinf.tail(n).norm(Norm::Vdual);
    let lam = modes.eigenvalues();
    let wn = weights(&lam[..n]);
    let inv = (DMatrix::identity(n, n) + &bias.t)
        .try_inverse()
        .ok_or_else(|| Error::Singular { context: "I + T_N".into(), estimate: sigma_min(&(DMatrix::identity(n, n) + &bias.t)) })?;
    let inverse_norm = weighted_norm(&inv, &wn, &wn);
    let reference_norm = y_ref.low(n).norm(Norm::Vdual);
    let f = bias.factors;
    let bound = f.c_cl * f.tail_input * f.feedforward * inverse_norm * reference_norm;
    let ustar = &bias.feedforward_matrix * system.commanded().rows(0, n);
    let sharp_bound = f.c_cl * f.tail_input * ustar.norm();
    let slack = 1e-12 * bound.max(tail) + 1e-15;
    Ok(TailReport {
        low_mismatch,
        tail,
        bound,
        sharp_bound,
        inverse_norm,
        reference_norm,
        factors: f,
        holds: tail <= sharp_bound + slack && sharp_bound <= bound + slack,
    })
}

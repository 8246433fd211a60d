use nalgebra::{DMatrix, DVector};

use super::closed_loop::ClosedLoopSystem;
use crate::linalg::{spectral_norm, sym_eigen};
use crate::placement::SamplingMatrices;

/// Block norms of the closed-loop generator split at N and the sufficient
/// contraction conditions they feed. All norms use the V′ weighting, so the
/// blocks are those of W A_cl W⁻¹ with W = diag(1/(1 + λ_k)).
#[derive(Debug, Clone)]
pub struct ContractionReport {
    pub a12_norm: f64,
    pub beta: f64,
    /// λ_{N+1} (diffusivity included)
    pub lambda_next: f64,
    pub schur_inverse_norm: Option<f64>,
    /// ‖P_N A_cl⁻¹ Q_N‖
    pub leakage: Option<f64>,
    pub input_norm: f64,
    pub tail_input_norm: f64,
    pub feedforward_norm: Option<f64>,
    pub sigma_min: f64,
    /// L_N ‖B‖ ‖U_N‖
    pub universal: Option<f64>,
    /// C_S ‖A₁₂‖ / (λ_{N+1} − β), valid when λ_{N+1} > β
    pub mechanism_a: Option<f64>,
    /// decay constants (M, α) with ‖e^{t A_cl}‖ ≤ M e^{−α t}
    pub semigroup: Option<(f64, f64)>,
    /// M/α, bounds L_N
    pub mechanism_b: Option<f64>,
    /// σ_min − L_N ‖B‖ s_N with s_N = max_{k≤N} λ_k (1 + λ_k)
    pub mechanism_c_margin: Option<f64>,
}

impl ContractionReport {
    pub fn universal_holds(&self) -> Option<bool> {
        self.universal.map(|v| v < 1.0)
    }

    pub fn mechanism_a_holds(&self) -> Option<bool> {
        self.mechanism_a.map(|b| product(b, self.input_norm, self.feedforward_norm) < 1.0)
    }

    pub fn mechanism_b_holds(&self) -> Option<bool> {
        self.mechanism_b.map(|b| product(b, self.input_norm, self.feedforward_norm) < 1.0)
    }

    pub fn mechanism_c_holds(&self) -> Option<bool> {
        self.mechanism_c_margin.map(|m| m > 0.0)
    }
}

fn product(leak: f64, b: f64, u: Option<f64>) -> f64 {
    if leak == 0.0 || b == 0.0 {
        return 0.0;
    }
    u.map_or(f64::INFINITY, |u| leak * b * u)
}

/// C_S ‖A₁₂‖ / (λ_{N+1} − β); `None` unless λ_{N+1} > β.
pub fn mechanism_a_bound(schur_inverse_norm: f64, a12_norm: f64, lambda_next: f64, beta: f64) -> Option<f64> {
    if a12_norm == 0.0 {
        return Some(0.0);
    }
    (lambda_next > beta).then(|| schur_inverse_norm * a12_norm / (lambda_next - beta))
}

pub fn contraction_diagnostics(system: &ClosedLoopSystem, mats: &SamplingMatrices) -> ContractionReport {
    let n = mats.n();
    let lam = system.modes().eigenvalues();
    let k = lam.len();
    let w: DVector<f64> = DVector::from_iterator(k, lam.iter().map(|l| 1.0 / (1.0 + l)));
    let a = system.generator();
    let aw = DMatrix::from_fn(k, k, |i, j| w[i] * a[(i, j)] / w[j]);
    let m = k - n;
    let a11 = aw.view((0, 0), (n, n)).into_owned();
    let a12 = aw.view((0, n), (n, m)).into_owned();
    let a21 = aw.view((n, 0), (m, n)).into_owned();
    let a22 = aw.view((n, n), (m, m)).into_owned();
    let a12_norm = spectral_norm(&a12);
    let mut e22 = a22.clone();
    for i in 0..m {
        e22[(i, i)] += lam[n + i];
    }
    let beta = spectral_norm(&e22);
    let lambda_next = if n < k { lam[n] } else { f64::INFINITY };

    let schur_inverse_norm = a22.clone().try_inverse().and_then(|inv22| (a11 - &a12 * inv22 * &a21).try_inverse()).map(|s| spectral_norm(&s));
    let leakage = aw.clone().try_inverse().map(|inv| spectral_norm(&inv.view((0, n), (n, m)).into_owned()));

    let e = system.input_matrix();
    let we = DMatrix::from_fn(e.nrows(), e.ncols(), |i, j| w[i] * e[(i, j)]);
    let input_norm = spectral_norm(&we);
    let tail_input_norm = spectral_norm(&we.rows(n, m).into_owned());
    let feedforward_norm = mats.feedforward_matrix().ok().map(|u| {
        let scaled = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] / w[j]);
        spectral_norm(&scaled)
    });
    let universal = leakage.map(|l| product(l, input_norm, feedforward_norm));
    let mechanism_a = if a12_norm == 0.0 { Some(0.0) } else { schur_inverse_norm.and_then(|c| mechanism_a_bound(c, a12_norm, lambda_next, beta)) };

    // A_cl is self-adjoint for the inner product weighted by W; its spectrum
    // comes from the symmetric similar matrix W^{1/2} A_cl W^{-1/2}.
    let sqrt_w = w.map(f64::sqrt);
    let sym = DMatrix::from_fn(k, k, |i, j| sqrt_w[i] * a[(i, j)] / sqrt_w[j]);
    let (eigs, _) = sym_eigen(&sym);
    let alpha = -eigs[k - 1];
    let semigroup = (alpha > 0.0).then(|| ((1.0 + lam[k - 1]).sqrt() / (1.0 + lam[0]).sqrt(), alpha));
    let mechanism_b = semigroup.map(|(mm, al)| mm / al);

    let s_n = lam[..n].iter().map(|l| l * (1.0 + l)).fold(0.0, f64::max);
    let mechanism_c_margin = leakage.map(|l| mats.sigma_min - l * input_norm * s_n);

    ContractionReport {
        a12_norm,
        beta,
        lambda_next,
        schur_inverse_norm,
        leakage,
        input_norm,
        tail_input_norm,
        feedforward_norm,
        sigma_min: mats.sigma_min,
        universal,
        mechanism_a,
        semigroup,
        mechanism_b,
        mechanism_c_margin,
    }
}

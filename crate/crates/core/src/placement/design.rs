use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::actuators::ActuatorSet;
use crate::error::{invalid, Result};
use crate::linalg::sigma_min;
use crate::spectral::{Domain, ModeTable, Point};

/// σ_min below this counts as a rank failure in the genericity experiment.
pub const GENERICITY_THRESHOLD: f64 = 1e-10;

fn columns(phi: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(phi.nrows(), idx.len(), |r, c| phi[(r, idx[c])])
}

/// Forward greedy selection of `m` candidates maximizing σ_min of the N-row
/// sampling matrix. Ties go to the lowest candidate index. If the naive choice
/// of the first `m` candidates is strictly better, it is returned instead.
pub fn greedy_placement(candidates: &[Point], domain: &Domain, modes: &ModeTable, n: usize, m: usize) -> Result<ActuatorSet> {
    if n == 0 || n > modes.len() {
        return Err(invalid(format!("need 1 <= N <= K, got N = {n}")));
    }
    if m < n || candidates.len() < m {
        return Err(invalid(format!("need |candidates| >= M >= N, got {} >= {m} >= {n}", candidates.len())));
    }
    let full = modes.sample_matrix(candidates)?;
    let phi = full.rows(0, n).into_owned();
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    for _ in 0..m {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..candidates.len() {
            if chosen.contains(&c) {
                continue;
            }
            let mut trial = chosen.clone();
            trial.push(c);
            let s = sigma_min(&columns(&phi, &trial));
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
        chosen.push(best.expect("candidate pool not exhausted").0);
    }
    let naive: Vec<usize> = (0..m).collect();
    if sigma_min(&columns(&phi, &naive)) > sigma_min(&columns(&phi, &chosen)) {
        chosen = naive;
    }
    ActuatorSet::new(domain, chosen.iter().map(|&c| candidates[c]).collect())
}

fn uniform_point(rng: &mut ChaCha8Rng, domain: &Domain) -> Point {
    let mut p = [0.0; 3];
    for (a, l) in domain.lengths().iter().enumerate() {
        p[a] = rng.random::<f64>() * l;
    }
    p
}

/// Number of trials (M uniform points each) with σ_min(Φ_{M,M}) below
/// `GENERICITY_THRESHOLD`. Trial `i` draws from ChaCha stream `i` of `seed`.
pub fn genericity_monte_carlo(modes: &ModeTable, m: usize, trials: usize, seed: u64) -> Result<usize> {
    genericity_monte_carlo_with(modes, m, trials, seed, uniform_point)
}

/// As [`genericity_monte_carlo`] with a custom point sampler.
pub fn genericity_monte_carlo_with<S>(modes: &ModeTable, m: usize, trials: usize, seed: u64, sampler: S) -> Result<usize>
where
    S: Fn(&mut ChaCha8Rng, &Domain) -> Point + Sync,
{
    if trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    if m == 0 || m > modes.len() {
        return Err(invalid(format!("need 1 <= M <= K, got M = {m}")));
    }
    let domain = modes.domain();
    let failures = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let pts: Vec<Point> = (0..m).map(|_| sampler(&mut rng, domain)).collect();
            let e = DMatrix::from_fn(m, m, |k, j| modes.eval_unchecked(k, &pts[j]));
            usize::from(sigma_min(&e) < GENERICITY_THRESHOLD)
        })
        .sum();
    Ok(failures)
}

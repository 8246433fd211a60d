use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg::pseudo_inverse;

/// Lawson–Hanson active-set solution of min ‖A x − b‖ over x ≥ 0.
/// Returns the minimizer and the attained residual norm.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> Result<(DVector<f64>, f64)> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(invalid(format!("rhs has {} entries for {m} rows", b.len())));
    }
    let norm1 = (0..n).map(|j| a.column(j).abs().sum()).fold(0.0, f64::max);
    let tol = 10.0 * f64::EPSILON * norm1 * (m.max(n) as f64);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let residual = |x: &DVector<f64>| (b - a * x).norm();
    let mut iterations = 0;
    loop {
        let w = a.transpose() * (b - a * &x);
        let next = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
        let Some(j) = next else {
            return Ok((x.clone(), residual(&x)));
        };
        passive[j] = true;
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::NotConverged { iterations: max_iter, residual: residual(&x), best: x.iter().copied().collect() });
            }
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = DMatrix::from_fn(m, idx.len(), |r, c| a[(r, idx[c])]);
            let sol = pseudo_inverse(&sub).pinv * b;
            let mut s = DVector::zeros(n);
            for (c, &k) in idx.iter().enumerate() {
                s[k] = sol[c];
            }
            if idx.iter().all(|&k| s[k] > tol) {
                x = s;
                break;
            }
            let alpha = idx
                .iter()
                .filter(|&&k| s[k] <= tol)
                .map(|&k| {
                    let d = x[k] - s[k];
                    if d > 0.0 {
                        x[k] / d
                    } else {
                        0.0
                    }
                })
                .fold(f64::INFINITY, f64::min);
            x += (&s - &x) * alpha;
            for &k in &idx {
                if x[k] <= tol {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
        }
    }
}

//! Dense linear-algebra helpers on top of nalgebra: SVD-based pseudo-inverse and
//! nullspace, Padé matrix exponential, Gauss–Legendre rules, small regressions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold used for every rank decision.
pub const RANK_RTOL: f64 = 1e-10;

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(0);
    }
    a.clone().svd(false, false).singular_values
}

/// Smallest of the min(m, n) singular values; 0 for an empty matrix.
pub fn sigma_min(a: &DMatrix<f64>) -> f64 {
    let s = singular_values(a);
    if s.is_empty() {
        0.0
    } else {
        s.min()
    }
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).iter().copied().fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub pinv: DMatrix<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub rank: usize,
}

/// Moore–Penrose pseudo-inverse. Singular values below `RANK_RTOL * sigma_max`
/// are treated as zero; `sigma_min` is the smallest of the min(m, n) values.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> PseudoInverse {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return PseudoInverse { pinv: DMatrix::zeros(n, m), sigma_min: 0.0, sigma_max: 0.0, rank: 0 };
    }
    let svd = a.clone().svd(true, true);
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = RANK_RTOL * smax;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut pinv = DMatrix::zeros(n, m);
    let mut rank = 0;
    for (i, &si) in s.iter().enumerate() {
        if si > tol && si > 0.0 {
            rank += 1;
            pinv += (vt.row(i).transpose() / si) * u.column(i).transpose();
        }
    }
    PseudoInverse { pinv, sigma_min: smin, sigma_max: smax, rank }
}

/// Orthonormal basis (as columns) of the nullspace of `a`.
pub fn nullspace(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    if m == 0 {
        return DMatrix::identity(n, n);
    }
    // pad to square so the SVD returns the full right singular basis
    let rows = m.max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = padded.svd(false, true);
    let s = &svd.singular_values;
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let smax = s.iter().copied().fold(0.0, f64::max);
    let tol = RANK_RTOL * smax.max(f64::MIN_POSITIVE);
    let cols: Vec<DVector<f64>> = s.iter().enumerate().filter(|(_, &si)| si <= tol).map(|(i, _)| vt.row(i).transpose()).collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Numerical rank with the crate-wide relative threshold.
pub fn rank(a: &DMatrix<f64>) -> usize {
    let s = singular_values(a);
    let smax = s.iter().copied().fold(0.0, f64::max);
    s.iter().filter(|&&v| v > RANK_RTOL * smax && v > 0.0).count()
}

/// Solve `a x = b` by LU with a relative residual check.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>, context: &str) -> Result<DVector<f64>> {
    let singular = || Error::Singular { context: context.to_string(), estimate: sigma_min(a) };
    let x = a.clone().lu().solve(b).ok_or_else(singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    let scale = a.norm() * x.norm() + b.norm();
    let res = (a * &x - b).norm();
    if scale > 0.0 && res > 1e-10 * scale {
        return Err(singular());
    }
    Ok(x)
}

/// Matrix exponential (nalgebra's scaling and squaring), with shape and
/// finiteness checks.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument("expm needs a square matrix".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("expm input is not finite".into()));
    }
    if a.is_empty() {
        return Ok(DMatrix::zeros(0, 0));
    }
    let r = a.exp();
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("expm overflow (max entry {:e})", a.amax())));
    }
    Ok(r)
}

/// (1 - e^{-lambda dt}) / lambda, with the limit dt at lambda = 0.
pub fn phi1(lambda: f64, dt: f64) -> f64 {
    let x = lambda * dt;
    if x.abs() < 1e-6 {
        dt * (1.0 - x / 2.0 + x * x / 6.0)
    } else {
        -(-x).exp_m1() / lambda
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on [a, b].
pub fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(lo + 0.5 * h * (x + 1.0));
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// root-mean-square of the residuals
    pub rms: f64,
    pub r2: f64,
}

/// Ordinary least-squares line y ≈ slope·x + intercept.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return Err(Error::InsufficientData(format!("line fit needs >= 2 paired points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("line fit abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(LineFit { slope, intercept, rms: (ss_res / nf).sqrt(), r2 })
}

/// Symmetric eigen-decomposition sorted ascending.
pub fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let vecs = DMatrix::from_columns(&idx.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    (vals, vecs)
}

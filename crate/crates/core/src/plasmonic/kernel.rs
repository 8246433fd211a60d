use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::spectral::Point;

fn dist(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Φ(x,t; y,τ) = (4πκ(t−τ))^{−3/2} exp(−|x−y|²/(4κ(t−τ))) for t > τ, else 0.
pub fn free_space_kernel(x: &Point, t: f64, y: &Point, tau: f64, kappa: f64) -> f64 {
    let s = t - tau;
    if s <= 0.0 {
        return 0.0;
    }
    let r2 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    (4.0 * PI * kappa * s).powf(-1.5) * (-r2 / (4.0 * kappa * s)).exp()
}

/// One-dimensional heat kernel (4πκs)^{−1/2} exp(−r²/(4κs)).
pub fn free_space_kernel_1d(r: f64, s: f64, kappa: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    (4.0 * PI * kappa * s).powf(-0.5) * (-r * r / (4.0 * kappa * s)).exp()
}

/// ∂_t Φ at separation `r` and lag `s`; evaluated in log form so the s → 0
/// limit underflows cleanly to 0.
pub fn heat_kernel_dt(r: f64, s: f64, kappa: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let log_phi = -1.5 * (4.0 * PI * kappa * s).ln() - r * r / (4.0 * kappa * s);
    if log_phi < -700.0 {
        return 0.0;
    }
    log_phi.exp() * (r * r / (4.0 * kappa * s * s) - 1.5 / s)
}

pub fn kernel_time_derivative(zi: &Point, t: f64, zj: &Point, tau: f64, kappa: f64) -> Result<f64> {
    let r = dist(zi, zj);
    if r == 0.0 {
        return Err(invalid("kernel derivative needs distinct points"));
    }
    Ok(heat_kernel_dt(r, t - tau, kappa))
}

/// ∫_{s0}^{s1} of the heat kernel at separation r > 0 over the lag s, in
/// closed form via erfc (3D) or erfc and a Gaussian (1D).
pub fn kernel_cell_integral(r: f64, s0: f64, s1: f64, kappa: f64, dim: usize) -> f64 {
    let anti = |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let arg = r / (2.0 * (kappa * s).sqrt());
        match dim {
            1 => (s / (PI * kappa)).sqrt() * (-arg * arg).exp() - r / (2.0 * kappa) * libm::erfc(arg),
            _ => libm::erfc(arg) / (4.0 * PI * kappa * r),
        }
    };
    anti(s1.max(0.0)) - anti(s0.max(0.0))
}

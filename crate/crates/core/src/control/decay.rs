use std::sync::Arc;

use super::closed_loop::{ClosedLoopSystem, TrajectoryRecord};
use crate::error::{invalid, Error, Result};
use crate::linalg::fit_line;
use crate::placement::ActuatorSet;
use crate::spectral::{ModeTable, Norm, SpectralField};

pub const GAIN_CAP: f64 = 65536.0;

/// Samples at or below this level are excluded from the fit.
const FLOOR: f64 = 1e-12;
const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    /// rms residual of the log-norm fit
    pub residual: f64,
    pub r2: f64,
    pub samples: usize,
}

/// Least-squares slope of ln‖·‖ against time.
pub fn fit_log_decay(times: &[f64], norms: &[f64]) -> Result<DecayFit> {
    if times.len() != norms.len() {
        return Err(invalid("times and norms differ in length"));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = times.iter().zip(norms).filter(|(_, &v)| v > FLOOR).map(|(&t, &v)| (t, v.ln())).unzip();
    if t.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSignal(format!("{} samples above {FLOOR:e}, need {MIN_SAMPLES}", t.len())));
    }
    let fit = fit_line(&t, &y)?;
    Ok(DecayFit { rate: -fit.slope, residual: fit.rms, r2: fit.r2, samples: t.len() })
}

pub fn decay_rate_fit(rec: &TrajectoryRecord, norm: Norm) -> Result<DecayFit> {
    let norms = match norm {
        Norm::H => &rec.norm_h,
        Norm::Vdual => &rec.norm_vdual,
        Norm::Graph => return Err(invalid("decay fits use the H or V′ norm")),
    };
    fit_log_decay(&rec.times, norms)
}

#[derive(Debug, Clone)]
pub struct GainSearch {
    pub gain: f64,
    pub fit: DecayFit,
    pub history: Vec<(f64, DecayFit)>,
}

/// Doubles the gain from `start_gain` until the fitted V′ decay rate of the
/// homogeneous loop started at `z0` reaches `target_rate`.
#[allow(clippy::too_many_arguments)]
pub fn gain_doubling_search(
    modes: Arc<ModeTable>,
    actuators: &ActuatorSet,
    n_low: usize,
    target_rate: f64,
    start_gain: f64,
    z0: &SpectralField,
    horizon: f64,
    dt: f64,
) -> Result<GainSearch> {
    if !(start_gain > 0.0) || !(target_rate > 0.0) {
        return Err(invalid("start gain and target rate must be > 0"));
    }
    let mut gain = start_gain;
    let mut history = Vec::new();
    loop {
        let sys = ClosedLoopSystem::homogeneous(modes.clone(), actuators, gain, n_low)?;
        let fit = decay_rate_fit(&sys.simulate(z0, horizon, dt, false)?, Norm::Vdual)?;
        history.push((gain, fit));
        if fit.rate >= target_rate {
            return Ok(GainSearch { gain, fit, history });
        }
        if gain * 2.0 > GAIN_CAP {
            let best_rate = history.iter().map(|(_, f)| f.rate).fold(f64::NEG_INFINITY, f64::max);
            return Err(Error::GainCap { cap: GAIN_CAP, best_rate });
        }
        gain *= 2.0;
    }
}

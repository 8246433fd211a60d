use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg::{expm, phi1, sigma_min, solve};
use crate::placement::{min_norm_feedforward, sampling_matrix, ActuatorSet};
use crate::spectral::{ModeTable, Norm, SpectralField};

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackConfig {
    pub gain: f64,
    pub n_low: usize,
    pub k_sim: usize,
    pub dt: f64,
    pub horizon: f64,
    /// reference coefficients a^r over the first N modes
    pub reference: Vec<f64>,
}

impl FeedbackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(invalid(format!("gain must be > 0, got {}", self.gain)));
        }
        if self.n_low == 0 || self.n_low > self.k_sim {
            return Err(invalid(format!("need 0 < N <= K, got N = {}, K = {}", self.n_low, self.k_sim)));
        }
        if !(self.dt > 0.0) || !(self.horizon >= self.dt) {
            return Err(invalid(format!("need dt > 0 and T >= dt, got dt = {}, T = {}", self.dt, self.horizon)));
        }
        if self.reference.len() > self.n_low {
            return Err(invalid(format!("{} reference coefficients for N = {}", self.reference.len(), self.n_low)));
        }
        Ok(())
    }
}

/// (Cz)_j = Σ_k α_k φ_k(x_j) / (1 + λ_k).
pub fn observe(z: &SpectralField, actuators: &ActuatorSet) -> Result<DVector<f64>> {
    let w = z.resolvent_apply();
    let e = z.modes().sample_matrix(actuators.points())?;
    Ok(e.transpose() * w.coeffs())
}

/// Error dynamics ż = A_cl z + g for z = y − y*, where y* is the commanded
/// state and u = u_r − λ C z.
#[derive(Debug, Clone)]
pub struct ClosedLoopSystem {
    modes: Arc<ModeTable>,
    actuators: ActuatorSet,
    gain: f64,
    gain_matrix: Option<DMatrix<f64>>,
    n_low: usize,
    input: DMatrix<f64>,
    observation: DMatrix<f64>,
    generator: DMatrix<f64>,
    commanded: DVector<f64>,
    feedforward: DVector<f64>,
    forcing: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// H norm of z(t) − z_∞
    pub norm_h: Vec<f64>,
    /// V′ norm of z(t) − z_∞
    pub norm_vdual: Vec<f64>,
    /// input applied from each grid time on
    pub inputs: Vec<DVector<f64>>,
    pub snapshots: Option<Vec<DVector<f64>>>,
    pub equilibrium: DVector<f64>,
}

impl ClosedLoopSystem {
    /// Homogeneous loop (y* = 0, u_r = 0). A zero gain gives A_cl = −Λ.
    pub fn homogeneous(modes: Arc<ModeTable>, actuators: &ActuatorSet, gain: f64, n_low: usize) -> Result<Self> {
        if !(gain >= 0.0 && gain.is_finite()) {
            return Err(invalid(format!("gain must be >= 0, got {gain}")));
        }
        if n_low > modes.len() {
            return Err(invalid(format!("N = {n_low} exceeds K = {}", modes.len())));
        }
        if actuators.domain() != modes.domain() {
            return Err(invalid("actuators and modes live on different domains"));
        }
        let input = modes.sample_matrix(actuators.points())?;
        let lam = modes.eigenvalues();
        let observation = DMatrix::from_fn(actuators.len(), modes.len(), |j, k| input[(k, j)] / (1.0 + lam[k]));
        let k = modes.len();
        let mut sys = Self {
            modes,
            actuators: actuators.clone(),
            gain,
            gain_matrix: None,
            n_low,
            input,
            observation,
            generator: DMatrix::zeros(k, k),
            commanded: DVector::zeros(k),
            feedforward: DVector::zeros(actuators.len()),
            forcing: DVector::zeros(k),
        };
        sys.rebuild_generator();
        Ok(sys)
    }

    /// Loop commanded to the configured reference coefficients with minimum-norm feedforward.
    pub fn assemble(actuators: &ActuatorSet, config: &FeedbackConfig, modes: Arc<ModeTable>) -> Result<Self> {
        config.validate()?;
        if modes.len() != config.k_sim {
            return Err(invalid(format!("mode table has {} modes, config asks for K = {}", modes.len(), config.k_sim)));
        }
        let sys = Self::homogeneous(modes.clone(), actuators, config.gain, config.n_low)?;
        let target = SpectralField::from_leading(modes, &config.reference)?;
        sys.commanded_to(&target)
    }

    /// Same generator, new commanded state y* ∈ X_N with its minimum-norm feedforward.
    pub fn commanded_to(&self, target: &SpectralField) -> Result<Self> {
        if target.len() != self.modes.len() {
            return Err(invalid("commanded state has the wrong number of modes"));
        }
        if target.tail(self.n_low).norm(Norm::H) > 0.0 {
            return Err(invalid("commanded state must lie in the span of the first N modes"));
        }
        let lam = self.modes.eigenvalues();
        let needs_ff = (0..self.n_low).any(|k| lam[k] * target.coeffs()[k] != 0.0);
        let u_r = if needs_ff {
            let mats = sampling_matrix(&self.actuators, &self.modes, self.n_low)?;
            min_norm_feedforward(target, &mats)?
        } else {
            DVector::zeros(self.actuators.len())
        };
        self.with_commanded(target.coeffs().clone(), u_r)
    }

    /// Explicit commanded state and feedforward; g_k = −λ_k α*_k + Σ_j (u_r)_j φ_k(x_j).
    pub fn with_commanded(&self, commanded: DVector<f64>, feedforward: DVector<f64>) -> Result<Self> {
        if commanded.len() != self.modes.len() || feedforward.len() != self.actuators.len() {
            return Err(invalid("commanded state or feedforward has the wrong size"));
        }
        let lam = self.modes.eigenvalues();
        let forcing = DVector::from_fn(lam.len(), |k, _| -lam[k] * commanded[k]) + &self.input * &feedforward;
        Ok(Self { commanded, feedforward, forcing, ..self.clone() })
    }

    /// General static output feedback u = u_r − K C z in place of the scalar gain.
    pub fn with_gain_matrix(&self, gain_matrix: DMatrix<f64>) -> Result<Self> {
        let m = self.actuators.len();
        if gain_matrix.shape() != (m, m) {
            return Err(invalid(format!("gain matrix must be {m}x{m}")));
        }
        let mut sys = Self { gain_matrix: Some(gain_matrix), ..self.clone() };
        sys.rebuild_generator();
        Ok(sys)
    }

    fn rebuild_generator(&mut self) {
        let lam = self.modes.eigenvalues();
        let feedback = match &self.gain_matrix {
            Some(kmat) => &self.input * kmat * &self.observation,
            None => &self.input * &self.observation * self.gain,
        };
        self.generator = -DMatrix::from_diagonal(&DVector::from_column_slice(&lam)) - feedback;
    }

    pub fn modes(&self) -> &Arc<ModeTable> {
        &self.modes
    }

    pub fn actuators(&self) -> &ActuatorSet {
        &self.actuators
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn n_low(&self) -> usize {
        self.n_low
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn forcing(&self) -> &DVector<f64> {
        &self.forcing
    }

    pub fn commanded(&self) -> &DVector<f64> {
        &self.commanded
    }

    pub fn feedforward(&self) -> &DVector<f64> {
        &self.feedforward
    }

    /// K×M matrix E_kj = φ_k(x_j).
    pub fn input_matrix(&self) -> &DMatrix<f64> {
        &self.input
    }

    /// M×K matrix D_jk = φ_k(x_j)/(1 + λ_k).
    pub fn observation_matrix(&self) -> &DMatrix<f64> {
        &self.observation
    }

    /// Input commanded at state z: u_r − λ C z.
    pub fn control(&self, z: &DVector<f64>) -> DVector<f64> {
        let cz = &self.observation * z;
        match &self.gain_matrix {
            Some(kmat) => &self.feedforward - kmat * cz,
            None => &self.feedforward - cz * self.gain,
        }
    }

    /// Solves A_cl z + g = 0.
    pub fn equilibrium(&self) -> Result<SpectralField> {
        let z = solve(&self.generator, &(-&self.forcing), "closed-loop equilibrium")?;
        SpectralField::new(self.modes.clone(), z)
    }

    /// Continuous feedback, exact exponential stepping:
    /// z ← E z + A_cl⁻¹(E − I) g with E = exp(A_cl dt).
    pub fn simulate(&self, z0: &SpectralField, horizon: f64, dt: f64, keep_snapshots: bool) -> Result<TrajectoryRecord> {
        let steps = step_count(horizon, dt)?;
        let prop = expm(&(&self.generator * dt))
            .map_err(|e| Error::Numeric(format!("closed-loop propagator: {e}; sigma_min(A_cl) = {:e}", sigma_min(&self.generator))))?;
        let affine = match solve(&self.generator, &((&prop - DMatrix::identity(prop.nrows(), prop.ncols())) * &self.forcing), "affine term") {
            Ok(v) => v,
            Err(_) => augmented_affine(&self.generator, &self.forcing, dt)?,
        };
        let zinf = self.equilibrium().map(SpectralField::into_coeffs).unwrap_or_else(|_| DVector::zeros(self.modes.len()));
        self.run(z0, steps, dt, zinf, keep_snapshots, |z| &prop * z + &affine)
    }

    /// Sample-and-hold feedback: u_q = u_r − λ C z(t_q) is applied over
    /// [t_q, t_q + dt) and the state advances by the exact Duhamel step.
    pub fn simulate_sampled(&self, z0: &SpectralField, horizon: f64, dt: f64, keep_snapshots: bool) -> Result<TrajectoryRecord> {
        let steps = step_count(horizon, dt)?;
        let (prop, affine) = self.sampled_propagator(dt)?;
        let k = prop.nrows();
        let zs = solve(&(DMatrix::identity(k, k) - &prop), &affine, "sampled-loop fixed point").unwrap_or_else(|_| DVector::zeros(k));
        self.run(z0, steps, dt, zs, keep_snapshots, |z| &prop * z + &affine)
    }

    /// (F, c) with z_{q+1} = F z_q + c under sample-and-hold feedback.
    pub fn sampled_propagator(&self, dt: f64) -> Result<(DMatrix<f64>, DVector<f64>)> {
        if !(dt > 0.0) {
            return Err(invalid("dt must be > 0"));
        }
        let lam = self.modes.eigenvalues();
        let decay = DVector::from_iterator(lam.len(), lam.iter().map(|l| (-l * dt).exp()));
        let gamma = DVector::from_iterator(lam.len(), lam.iter().map(|&l| phi1(l, dt)));
        let loop_gain = match &self.gain_matrix {
            Some(kmat) => &self.input * kmat * &self.observation,
            None => &self.input * &self.observation * self.gain,
        };
        let mut prop = DMatrix::from_diagonal(&decay);
        for i in 0..prop.nrows() {
            for j in 0..prop.ncols() {
                prop[(i, j)] -= gamma[i] * loop_gain[(i, j)];
            }
        }
        Ok((prop, self.forcing.component_mul(&gamma)))
    }

    fn run(
        &self,
        z0: &SpectralField,
        steps: usize,
        dt: f64,
        zref: DVector<f64>,
        keep_snapshots: bool,
        advance: impl Fn(&DVector<f64>) -> DVector<f64>,
    ) -> Result<TrajectoryRecord> {
        if z0.len() != self.modes.len() {
            return Err(invalid("initial state has the wrong number of modes"));
        }
        let lam = self.modes.eigenvalues();
        let mut rec = TrajectoryRecord {
            times: Vec::with_capacity(steps + 1),
            norm_h: Vec::with_capacity(steps + 1),
            norm_vdual: Vec::with_capacity(steps + 1),
            inputs: Vec::with_capacity(steps + 1),
            snapshots: keep_snapshots.then(Vec::new),
            equilibrium: zref.clone(),
        };
        let mut z = z0.coeffs().clone();
        for q in 0..=steps {
            let e = &z - &zref;
            rec.times.push(q as f64 * dt);
            rec.norm_h.push(e.norm());
            rec.norm_vdual.push(e.iter().zip(&lam).map(|(a, l)| (a / (1.0 + l)).powi(2)).sum::<f64>().sqrt());
            rec.inputs.push(self.control(&z));
            if let Some(s) = rec.snapshots.as_mut() {
                s.push(z.clone());
            }
            if q < steps {
                z = advance(&z);
            }
        }
        Ok(rec)
    }
}

fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && horizon >= dt) {
        return Err(invalid(format!("need dt > 0 and T >= dt, got dt = {dt}, T = {horizon}")));
    }
    let n = (horizon / dt).round();
    if (n * dt - horizon).abs() > 1e-9 * horizon {
        return Err(invalid(format!("dt = {dt} does not divide T = {horizon}")));
    }
    Ok(n as usize)
}

/// ∫₀^dt e^{A s} g ds from the exponential of [[A, g], [0, 0]]; used when A is singular.
fn augmented_affine(a: &DMatrix<f64>, g: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    let k = a.nrows();
    let mut aug = DMatrix::zeros(k + 1, k + 1);
    aug.view_mut((0, 0), (k, k)).copy_from(&(a * dt));
    aug.view_mut((0, k), (k, 1)).copy_from(&(g * dt));
    let e = expm(&aug)?;
    Ok(e.view((0, k), (k, 1)).into_owned().column(0).into_owned())
}

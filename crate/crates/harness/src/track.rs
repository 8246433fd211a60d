//! End-to-end tracking run: ideal feedback, its Y₀ projection and the
//! plasmonic realization, with the error budget tying them together.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use plasmotrack::control::{
    assemble_bias_matrix, decay_rate_fit, fixed_point_reference, gain_doubling_search, tail_mismatch_report, BiasMatrix, ClosedLoopSystem, DecayFit,
    FixedPoint, TailReport,
};
use plasmotrack::linalg::{phi1, sym_eigen};
use plasmotrack::placement::{sampling_matrix, ActuatorSet};
use plasmotrack::plasmonic::{calibrate_k0, invert_actuation, profile_intensities, run_pipeline, ActuationMap, InversionMode, PlasmonicConfig};
use plasmotrack::signal::{project_onto_profile, Signal};
use plasmotrack::spectral::{ForcedStepper, ModeTable, Norm, SpectralField};

use crate::config::{ExperimentConfig, InversionChoice};
use crate::error::{HarnessError, Result, StageExt};
use crate::output::{fmt_f64, Report, Table};
use crate::setup;

/// ‖·‖_{V′} of a coefficient vector.
pub fn vdual(lam: &[f64], v: &DVector<f64>) -> f64 {
    v.iter().zip(lam).map(|(a, l)| (a / (1.0 + l)).powi(2)).sum::<f64>().sqrt()
}

/// States at every grid node under piecewise-constant input cells.
pub fn replay(stepper: &ForcedStepper, y0: &DVector<f64>, u: &Signal) -> Result<Vec<DVector<f64>>> {
    let mut out = Vec::with_capacity(u.cells() + 1);
    out.push(y0.clone());
    for q in 0..u.cells() {
        let next = stepper.step_coeffs(&out[q], &u.cell(q)).stage("replay")?;
        out.push(next);
    }
    Ok(out)
}

/// Norm of u ↦ y(T) from L²(0,T; ℝ^M) (piecewise-constant cells) into V′,
/// from the exact discrete reachability Gramian. Since the Gramian grows
/// with time this also bounds the map into C([0,T]; V′) on the grid.
pub fn input_to_state_norm(modes: &ModeTable, act: &ActuatorSet, dt: f64, steps: usize) -> Result<f64> {
    let lam = modes.eigenvalues();
    let e = modes.sample_matrix(act.points()).stage("gramian")?;
    let eet = &e * e.transpose();
    let k = lam.len();
    let wg: Vec<f64> = lam.iter().map(|&l| phi1(l, dt) / (1.0 + l)).collect();
    let g = DMatrix::from_fn(k, k, |i, j| {
        let r = (-(lam[i] + lam[j]) * dt).exp();
        let sum = if r == 1.0 { steps as f64 } else { (1.0 - r.powi(steps as i32)) / (1.0 - r) };
        wg[i] * wg[j] * eet[(i, j)] * sum
    });
    let (eig, _) = sym_eigen(&g);
    Ok((eig[k - 1].max(0.0) / dt).sqrt())
}

/// Power-iteration estimate of the same norm started from the input `start`.
pub fn input_to_state_norm_power(modes: &ModeTable, act: &ActuatorSet, start: &Signal, iterations: usize) -> Result<f64> {
    let lam = modes.eigenvalues();
    let e = modes.sample_matrix(act.points()).stage("power iteration")?;
    let (dt, q) = (start.dt(), start.cells());
    // column c of `gain` maps cell c's input to the weighted final state
    let decay = |i: usize, c: usize| (-lam[i] * (q - 1 - c) as f64 * dt).exp() * phi1(lam[i], dt) / (1.0 + lam[i]);
    let forward = |u: &DMatrix<f64>| {
        let mut y = DVector::zeros(lam.len());
        for c in 0..q {
            let bu = &e * u.column(c);
            for i in 0..lam.len() {
                y[i] += decay(i, c) * bu[i];
            }
        }
        y
    };
    let adjoint = |y: &DVector<f64>| {
        let mut u = DMatrix::zeros(e.ncols(), q);
        for c in 0..q {
            let s = DVector::from_fn(lam.len(), |i, _| decay(i, c) * y[i]);
            u.set_column(c, &(e.transpose() * s));
        }
        u
    };
    let mut v = start.values().clone();
    let n = v.norm();
    if n == 0.0 {
        return Err(HarnessError::Assertion("power iteration needs a nonzero start".into()));
    }
    v /= n;
    let mut est = 0.0;
    for _ in 0..iterations.max(1) {
        let y = forward(&v);
        est = y.norm();
        let w = adjoint(&y);
        let wn = w.norm();
        if wn == 0.0 {
            break;
        }
        v = w / wn;
    }
    Ok(est / dt.sqrt())
}

/// Ideal loop, projection and calibration shared by the δ runs.
pub struct TrackContext {
    pub modes: Arc<ModeTable>,
    pub actuators: ActuatorSet,
    pub gain: f64,
    pub gain_search: Option<Vec<(f64, DecayFit)>>,
    pub system: ClosedLoopSystem,
    pub bias: Option<BiasMatrix>,
    pub fixed_point: Option<FixedPoint>,
    pub tail: Option<TailReport>,
    pub y0: DVector<f64>,
    pub ideal_states: Vec<DVector<f64>>,
    pub ideal_norms: (Vec<f64>, Vec<f64>),
    pub times: Vec<f64>,
    pub u_ideal: Signal,
    pub decay: Option<DecayFit>,
    pub cross_integrator: f64,
    pub profile_cells: Vec<f64>,
    pub u_des_coeffs: DVector<f64>,
    pub u_des: Signal,
    pub projection_residual: f64,
    pub y0_states: Vec<DVector<f64>>,
    pub err_projection: Vec<f64>,
    pub c_t: f64,
    pub plasmonic: PlasmonicConfig,
    pub calibration: ActuationMap,
    pub intensity_coeffs: DVector<f64>,
    pub intensities: DMatrix<f64>,
    pub inversion_residual: f64,
    /// leading-model (δ = 0) heat input for the same intensities
    pub lead_heat: Signal,
    pub stepper: ForcedStepper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetRow {
    pub delta: f64,
    pub eta: f64,
    pub rho_norm: f64,
    /// ‖G − u_des‖ in L²
    pub realization_error: f64,
    pub err_projection: f64,
    pub err_physical: f64,
    pub err_total: f64,
    pub bound_projection: f64,
    pub bound_physical: f64,
    pub bound_total: f64,
}

impl BudgetRow {
    pub fn holds(&self) -> bool {
        let slack = 1e-12 * self.bound_total.max(1e-300);
        self.err_projection <= self.bound_projection + slack && self.err_physical <= self.bound_physical + slack && self.err_total <= self.bound_total + slack
    }
}

pub struct PhysicalRun {
    pub row: BudgetRow,
    /// discrete H¹(0,T) seminorm of the Volterra amplitudes, for information
    pub sigma_h1: f64,
    pub heat: Signal,
    pub err_physical: Vec<f64>,
    pub err_total: Vec<f64>,
}

impl TrackContext {
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        let domain = setup::domain(cfg)?;
        let f = &cfg.feedback;
        let modes = setup::modes(&domain, f.k_sim)?;
        let actuators = setup::actuators(cfg, &domain, &modes)?;
        let mats = sampling_matrix(&actuators, &modes, f.n_low).stage("sampling matrix")?;
        if !mats.has_full_row_rank() {
            return Err(HarnessError::Stage {
                stage: "sampling matrix",
                source: plasmotrack::Error::RankDeficient { context: format!("Phi_{{N,M}} with N = {}, M = {}", f.n_low, actuators.len()), sigma_min: mats.sigma_min },
            });
        }
        let grid = setup::time_grid(cfg)?;
        let (dt, steps) = (grid.dt(), grid.steps());

        let (gain, gain_search) = match f.gain {
            Some(g) => (g, None),
            None => {
                let z0 = SpectralField::from_leading(modes.clone(), &vec![1.0; f.n_low]).stage("gain search")?;
                let s = gain_doubling_search(modes.clone(), &actuators, f.n_low, f.target_rate, f.start_gain, &z0, f.horizon, dt).stage("gain search")?;
                (s.gain, Some(s.history))
            }
        };
        let base = ClosedLoopSystem::homogeneous(modes.clone(), &actuators, gain, f.n_low).stage("closed loop")?;
        let y_ref = SpectralField::from_leading(modes.clone(), &cfg.reference.coefficients).stage("reference")?;
        let lam = modes.eigenvalues();
        let moving = y_ref.coeffs().iter().zip(&lam).any(|(a, l)| a * l != 0.0);
        let (bias, fixed_point, ystar) = if cfg.reference.fixed_point && moving {
            let bias = assemble_bias_matrix(&base).stage("bias matrix")?;
            let mut a_r = cfg.reference.coefficients.clone();
            a_r.resize(f.n_low, 0.0);
            let fp = fixed_point_reference(&bias.t, &a_r, cfg.tolerances.picard_iterations).stage("fixed point")?;
            let ystar = SpectralField::from_leading(modes.clone(), fp.a_star.as_slice()).stage("fixed point")?;
            (Some(bias), Some(fp), ystar)
        } else {
            (None, None, y_ref.clone())
        };
        let system = base.commanded_to(&ystar).stage("feedforward")?;
        let tail = match &bias {
            Some(b) => Some(tail_mismatch_report(&system, &y_ref, b).stage("tail report")?),
            None => None,
        };

        let y0 = SpectralField::from_leading(modes.clone(), &cfg.reference.initial).stage("initial state")?;
        let z0 = y0.sub(&ystar).stage("initial state")?;
        let rec = system.simulate_sampled(&z0, f.horizon, dt, true).stage("ideal loop")?;
        let snaps = rec.snapshots.clone().unwrap_or_default();
        let ideal_states: Vec<DVector<f64>> = snaps.iter().map(|z| z + ystar.coeffs()).collect();
        let cells: Vec<DVector<f64>> = rec.inputs[..steps].to_vec();
        let u_ideal = Signal::from_cells(&cells, dt).stage("ideal loop")?;
        let decay = decay_rate_fit(&rec, Norm::Vdual).ok();

        let stepper = ForcedStepper::new(modes.clone(), &actuators, dt).stage("forced solver")?;
        let y0c = y0.coeffs().clone();
        let check = cfg.tolerances.cross_check_steps.min(steps);
        let head = Signal::from_cells(&cells[..check], dt).stage("cross-integrator check")?;
        let replayed = replay(&stepper, &y0c, &head)?;
        let cross_integrator = replayed.iter().zip(&ideal_states).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);

        let profile_cells = setup::profile(cfg).cells(&grid);
        let proj = project_onto_profile(&u_ideal, &profile_cells).stage("projection")?;
        let u_des = Signal::from_profile(&proj.coeffs, &profile_cells, dt).stage("projection")?;
        let y0_states = replay(&stepper, &y0c, &u_des)?;
        let err_projection: Vec<f64> = y0_states.iter().zip(&ideal_states).map(|(a, b)| vdual(&lam, &(a - b))).collect();
        let c_t = input_to_state_norm(&modes, &actuators, dt, steps)?;

        let plasmonic = setup::plasmonic(cfg, &actuators, grid)?;
        let lead = plasmonic.with_delta(0.0);
        let calibration = calibrate_k0(&lead).stage("calibration")?;
        let mode = match cfg.plasmonic.inversion {
            InversionChoice::Signed => InversionMode::Signed,
            InversionChoice::Nonnegative => InversionMode::Nonnegative,
        };
        let inv = invert_actuation(&calibration, &proj.coeffs, mode).stage("inversion")?;
        let intensities = profile_intensities(&plasmonic, &inv.p);
        let lead_heat = run_pipeline(&lead, &intensities).stage("leading pipeline")?.heat;

        Ok(Self {
            times: rec.times.clone(),
            ideal_norms: (rec.norm_h.clone(), rec.norm_vdual.clone()),
            modes,
            actuators,
            gain,
            gain_search,
            system,
            bias,
            fixed_point,
            tail,
            y0: y0c,
            ideal_states,
            u_ideal,
            decay,
            cross_integrator,
            profile_cells,
            u_des_coeffs: proj.coeffs,
            u_des,
            projection_residual: proj.residual,
            y0_states,
            err_projection,
            c_t,
            plasmonic,
            calibration,
            intensity_coeffs: inv.p,
            intensities,
            inversion_residual: inv.residual,
            lead_heat,
            stepper,
        })
    }

    /// Runs the δ-perturbed pipeline on the calibrated intensities and drives the PDE with it.
    pub fn physical(&self, delta: f64) -> Result<PhysicalRun> {
        let cfg = self.plasmonic.with_delta(delta);
        let out = run_pipeline(&cfg, &self.intensities).stage("plasmonic pipeline")?;
        let sigma = &out.solution.sigma;
        let dt = cfg.grid.dt();
        let sigma_h1 = (1..sigma.ncols()).map(|q| ((sigma.column(q) - sigma.column(q - 1)) / dt).norm_squared() * dt).sum::<f64>().sqrt();
        let heat = out.heat;
        let lam = self.modes.eigenvalues();
        let states = replay(&self.stepper, &self.y0, &heat)?;
        let err_physical: Vec<f64> = states.iter().zip(&self.y0_states).map(|(a, b)| vdual(&lam, &(a - b))).collect();
        let err_total: Vec<f64> = states.iter().zip(&self.ideal_states).map(|(a, b)| vdual(&lam, &(a - b))).collect();
        let realization_error = heat.sub(&self.u_des).stage("budget")?.l2_norm();
        let rho_norm = heat.sub(&self.lead_heat).stage("budget")?.l2_norm();
        let u_norm = self.u_des.l2_norm();
        let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let row = BudgetRow {
            delta,
            eta: if u_norm > 0.0 { realization_error / u_norm } else { 0.0 },
            rho_norm,
            realization_error,
            err_projection: sup(&self.err_projection),
            err_physical: sup(&err_physical),
            err_total: sup(&err_total),
            bound_projection: self.c_t * self.projection_residual,
            bound_physical: self.c_t * realization_error,
            bound_total: self.c_t * (self.projection_residual + realization_error),
        };
        Ok(PhysicalRun { row, sigma_h1, heat, err_physical, err_total })
    }
}

/// The configured δ followed by the sweep values, largest first, without repeats.
pub fn budget_deltas(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut d: Vec<f64> = std::iter::once(cfg.plasmonic.delta).chain(cfg.sweep.iter().flat_map(|s| s.deltas.iter().copied())).collect();
    d.sort_by(|a, b| b.total_cmp(a));
    d.dedup();
    d
}

pub struct TrackOutcome {
    pub context: TrackContext,
    pub budget: Vec<BudgetRow>,
}

pub fn run_track(cfg: &ExperimentConfig, report: &mut Report) -> Result<TrackOutcome> {
    let tol = &cfg.tolerances;
    report.tolerance("cross_integrator", tol.cross_integrator);
    report.tolerance("low_mode", tol.low_mode);
    report.tolerance("inversion_residual", 1e-9);
    report.tolerance("truncation", tol.truncation);
    report.tolerance("svd_rank_relative", plasmotrack::linalg::RANK_RTOL);
    let ctx = TrackContext::prepare(cfg)?;
    let mut doubled = cfg.clone();
    doubled.feedback.k_sim *= 2;
    let fine = TrackContext::prepare(&doubled)?;
    let max_change = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let change_v = max_change(&ctx.ideal_norms.1, &fine.ideal_norms.1).max(max_change(&ctx.err_projection, &fine.err_projection));
    let change_h = max_change(&ctx.ideal_norms.0, &fine.ideal_norms.0);
    let m = ctx.actuators.len();

    let mut header = vec!["t".to_string(), "norm_H".into(), "norm_Vdual".into()];
    header.extend((1..=m).map(|j| format!("u_{j}")));
    let mut traj = Table::with_header("trajectory.csv", header);
    let (nh, nv) = &ctx.ideal_norms;
    for q in 0..ctx.times.len() {
        // the input column holds the value applied from t_q on; the last node has none
        let mut row: Vec<String> = [ctx.times[q], nh[q], nv[q]].iter().map(|v| fmt_f64(*v)).collect();
        for j in 0..m {
            row.push(if q < ctx.u_ideal.cells() { fmt_f64(ctx.u_ideal.values()[(j, q)]) } else { String::new() });
        }
        traj.push_raw(row);
    }
    report.tables.push(traj);

    let deltas = budget_deltas(cfg);
    let runs: Vec<PhysicalRun> = deltas.iter().map(|&d| ctx.physical(d)).collect::<Result<_>>()?;
    let main_run = &runs[deltas.iter().position(|d| *d == cfg.plasmonic.delta).unwrap_or(0)];
    let mut errs = Table::new("track_errors.csv", &["t", "err_projection", "err_physical", "err_total"]);
    for q in 0..ctx.times.len() {
        errs.push(&[ctx.times[q], ctx.err_projection[q], main_run.err_physical[q], main_run.err_total[q]]);
    }
    report.tables.push(errs);

    let mut budget = Table::new(
        "budget.csv",
        &[
            "delta",
            "eta",
            "rho_norm",
            "realization_error",
            "projection_residual",
            "c_t",
            "err_projection",
            "err_physical",
            "err_total",
            "bound_projection",
            "bound_physical",
            "bound_total",
            "sigma_h1",
        ],
    );
    for run in &runs {
        let r = &run.row;
        budget.push(&[
            r.delta,
            r.eta,
            r.rho_norm,
            r.realization_error,
            ctx.projection_residual,
            ctx.c_t,
            r.err_projection,
            r.err_physical,
            r.err_total,
            r.bound_projection,
            r.bound_physical,
            r.bound_total,
            run.sigma_h1,
        ]);
    }
    report.tables.push(budget);

    let mut cal = Table::new("calibration.csv", &["pattern", "column_norm", "projection_residual"]);
    for (l, (n, r)) in ctx.calibration.column_norms.iter().zip(&ctx.calibration.projection_residuals).enumerate() {
        cal.push(&[(l + 1) as f64, *n, *r]);
    }
    report.tables.push(cal);

    if let Some(b) = &ctx.bias {
        let n = b.t.nrows();
        let mut t = Table::with_header("bias_matrix.csv", (1..=n).map(|k| format!("col_{k}")).collect());
        for i in 0..n {
            t.push(&b.t.row(i).iter().copied().collect::<Vec<_>>());
        }
        report.tables.push(t);
    }

    // point sources leave the state with little H regularity, so the H change is informational
    report.check(
        "truncation",
        change_v <= tol.truncation,
        format!("K = {} -> {}: V' norms move {change_v:e}, H norms {change_h:e}", cfg.feedback.k_sim, doubled.feedback.k_sim),
    );
    report.check(
        "cross_integrator",
        ctx.cross_integrator <= tol.cross_integrator,
        format!("max replay deviation {:e} over {} steps", ctx.cross_integrator, tol.cross_check_steps),
    );
    if let Some(t) = &ctx.tail {
        report.check("low_mode_exactness", t.low_mismatch <= tol.low_mode, format!("||P_N(y_inf - y_r)|| = {:e}", t.low_mismatch));
        report.check("tail_bound", t.holds, format!("tail {:e} <= bound {:e}", t.tail, t.bound));
    }
    report.check("actuation_rank", ctx.calibration.full_rank(), format!("sigma_min(K0) = {:e}", ctx.calibration.sigma_min));
    let first = &runs[0].row;
    report.check(
        "projection_bound",
        first.err_projection <= first.bound_projection * (1.0 + 1e-12),
        format!("{:e} <= C_T {:e} * {:e}", first.err_projection, ctx.c_t, ctx.projection_residual),
    );
    let power = input_to_state_norm_power(&ctx.modes, &ctx.actuators, &ctx.u_ideal, tol.power_iterations)?;
    report.check("c_t_cross_check", (power / ctx.c_t - 1.0).abs() <= 0.1, format!("Gramian {:e}, power iteration {:e}", ctx.c_t, power));
    let all_hold = runs.iter().all(|r| r.row.holds());
    report.check("total_budget", all_hold, format!("{} delta values", runs.len()));
    let monotone = runs.windows(2).all(|w| w[1].row.eta <= w[0].row.eta);
    report.check("eta_monotone", monotone, runs.iter().map(|r| format!("{:.3e}", r.row.eta)).collect::<Vec<_>>().join(" "));
    let budget = runs.into_iter().map(|r| r.row).collect();
    Ok(TrackOutcome { context: ctx, budget })
}

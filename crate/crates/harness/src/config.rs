//! Experiment configuration. Every block rejects unknown keys; missing blocks
//! and keys fall back to the built-in default scenario.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub domain: DomainBlock,
    #[serde(default)]
    pub actuators: ActuatorBlock,
    #[serde(default)]
    pub feedback: FeedbackBlock,
    #[serde(default)]
    pub reference: ReferenceBlock,
    #[serde(default)]
    pub plasmonic: PlasmonicBlock,
    #[serde(default)]
    pub projection: ProjectionBlock,
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub restriction: RestrictionBlock,
    #[serde(default)]
    pub coercivity: CoercivityBlock,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// directory against which relative file paths resolve
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainShape {
    Interval,
    Box,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainBlock {
    pub kind: DomainShape,
    pub lengths: Vec<f64>,
    pub diffusivity: f64,
}

impl Default for DomainBlock {
    fn default() -> Self {
        Self { kind: DomainShape::Interval, lengths: vec![1.0], diffusivity: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Dct,
    Explicit,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActuatorBlock {
    pub placement: Placement,
    /// M for interval DCT nodes and greedy selection
    pub count: usize,
    /// per-axis (N1, N2, N3) for box DCT grids
    pub grid: Option<[usize; 3]>,
    pub points: Vec<[f64; 3]>,
    /// CSV of candidate points for greedy selection
    pub candidates: Option<PathBuf>,
    /// uniform candidates per axis when no candidate file is given
    pub candidate_density: usize,
}

impl Default for ActuatorBlock {
    fn default() -> Self {
        Self { placement: Placement::Dct, count: 4, grid: None, points: Vec::new(), candidates: None, candidate_density: 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeedbackBlock {
    /// fixed gain; when absent the gain comes from a doubling search for `target_rate`
    pub gain: Option<f64>,
    pub target_rate: f64,
    pub start_gain: f64,
    pub n_low: usize,
    pub k_sim: usize,
    pub dt: f64,
    pub horizon: f64,
}

impl Default for FeedbackBlock {
    fn default() -> Self {
        Self { gain: Some(2.0), target_rate: 1.0, start_gain: 0.0625, n_low: 4, k_sim: 32, dt: 0.01, horizon: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceBlock {
    pub coefficients: Vec<f64>,
    /// declare the reference an equilibrium (only the constant mode may be set)
    pub equilibrium: bool,
    pub fixed_point: bool,
    /// leading coefficients of the initial state
    pub initial: Vec<f64>,
}

impl Default for ReferenceBlock {
    fn default() -> Self {
        Self { coefficients: vec![0.2, 1.0, -0.5, 0.25], equilibrium: false, fixed_point: true, initial: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InversionChoice {
    Signed,
    Nonnegative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceBlock {
    pub h: f64,
    pub im_eps: f64,
    pub shape: f64,
    pub e_magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlasmonicBlock {
    /// α_i, shared by all particles unless `contrasts` is given
    pub contrast: f64,
    pub contrasts: Option<Vec<f64>>,
    pub heat_capacity: f64,
    /// uniform off-diagonal β_ij
    pub coupling: f64,
    pub delta: f64,
    pub mu: f64,
    /// P; ignored when `dictionary` is given
    pub patterns: usize,
    /// width of the Gaussian illumination patterns
    pub pattern_width: f64,
    /// CSV with M rows and P columns
    pub dictionary: Option<PathBuf>,
    pub interaction_perturbation: f64,
    pub inversion: InversionChoice,
    /// scales the dictionary by the absorbed-power gain at `delta`
    pub resonance: Option<ResonanceBlock>,
}

impl Default for PlasmonicBlock {
    fn default() -> Self {
        Self {
            contrast: 1.5,
            contrasts: None,
            heat_capacity: 1.0,
            coupling: 0.01,
            delta: 0.1,
            mu: 1.0,
            patterns: 6,
            pattern_width: 0.3,
            dictionary: None,
            interaction_perturbation: 1.0,
            inversion: InversionChoice::Signed,
            resonance: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileChoice {
    Sin2,
    Sine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectionBlock {
    pub profile: ProfileChoice,
}

impl Default for ProjectionBlock {
    fn default() -> Self {
        Self { profile: ProfileChoice::Sin2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub deltas: Vec<f64>,
    pub gains: Vec<f64>,
    /// 1/h for the coercivity meshes
    pub meshes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RestrictionBlock {
    pub kind: DomainShape,
    pub side: f64,
    pub diffusivity: f64,
    pub sources: Vec<[f64; 3]>,
    pub probes: Vec<[f64; 3]>,
    /// d²/T values; horizons follow from the probe distance d
    pub ratios: Vec<f64>,
    pub cells: usize,
    pub spectral_decay: f64,
    pub resolution_tol: f64,
}

impl Default for RestrictionBlock {
    fn default() -> Self {
        Self {
            kind: DomainShape::Box,
            side: 1.0,
            diffusivity: 1.0,
            sources: vec![[0.5, 0.5, 0.5]],
            probes: vec![[0.55, 0.5, 0.5], [0.5, 0.45, 0.5], [0.5, 0.5, 0.53]],
            ratios: vec![1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0, 15.0],
            cells: 64,
            spectral_decay: 40.0,
            resolution_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoercivityBlock {
    pub length: f64,
    pub meshes: Vec<usize>,
    pub k_factor: usize,
}

impl Default for CoercivityBlock {
    fn default() -> Self {
        Self { length: 1.0, meshes: vec![8, 16, 32, 64], k_factor: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// open-loop replay of the recorded inputs versus the closed loop
    pub cross_integrator: f64,
    pub cross_check_steps: usize,
    pub low_mode: f64,
    pub picard_iterations: usize,
    pub power_iterations: usize,
    /// largest change of the V′ trajectory norms when K is doubled
    pub truncation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { cross_integrator: 1e-8, cross_check_steps: 100, low_mode: 1e-8, picard_iterations: 200, power_iterations: 60, truncation: 1e-6 }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `default` names the built-in scenario; anything else is a file path.
    pub fn load(source: &str) -> Result<Self> {
        if source == "default" {
            return Self::parse(DEFAULT_CONFIG);
        }
        let path = Path::new(source);
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("built-in config parses")
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| HarnessError::Config("a seed is required (config `seed` or --seed)".into()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Canonical text form; hashed into the manifest.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let d = &self.domain;
        let dims = match d.kind {
            DomainShape::Interval => 1,
            DomainShape::Box => 3,
        };
        if d.lengths.len() != dims {
            return bad(format!("domain.lengths needs {dims} entries for {:?}", d.kind));
        }
        let f = &self.feedback;
        if f.n_low == 0 || f.n_low > f.k_sim {
            return bad(format!("feedback needs 0 < n_low <= k_sim, got {} and {}", f.n_low, f.k_sim));
        }
        if !(f.dt > 0.0) || !(f.horizon >= f.dt) {
            return bad("feedback needs dt > 0 and horizon >= dt".into());
        }
        let steps = (f.horizon / f.dt).round();
        if (steps * f.dt - f.horizon).abs() > 1e-9 * f.horizon {
            return bad(format!("feedback.dt = {} does not divide horizon = {}", f.dt, f.horizon));
        }
        if let Some(g) = f.gain {
            if !(g > 0.0) {
                return bad(format!("feedback.gain must be > 0, got {g}"));
            }
        }
        let r = &self.reference;
        if r.coefficients.len() > f.n_low || r.initial.len() > f.k_sim {
            return bad("reference.coefficients must have at most n_low entries and reference.initial at most k_sim".into());
        }
        if r.equilibrium && r.coefficients.iter().skip(1).any(|c| *c != 0.0) {
            return bad("reference.equilibrium = true allows only the constant-mode coefficient".into());
        }
        let a = &self.actuators;
        match a.placement {
            Placement::Explicit if a.points.is_empty() => return bad("explicit placement needs actuators.points".into()),
            Placement::Dct if d.kind == DomainShape::Box && a.grid.is_none() => return bad("box DCT placement needs actuators.grid".into()),
            Placement::Dct | Placement::Greedy if d.kind == DomainShape::Interval && a.count == 0 => return bad("actuators.count must be >= 1".into()),
            _ => {}
        }
        let p = &self.plasmonic;
        if !(p.heat_capacity > 0.0) || !(p.mu > 0.0) || !(0.0..=1.0).contains(&p.delta) {
            return bad("plasmonic needs heat_capacity > 0, mu > 0 and delta in [0, 1]".into());
        }
        if let Some(s) = &self.sweep {
            if s.deltas.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
                return bad("sweep.deltas must lie in (0, 1]".into());
            }
            if s.gains.iter().any(|x| !(*x > 0.0)) || s.meshes.contains(&0) {
                return bad("sweep.gains must be > 0 and sweep.meshes >= 1".into());
            }
        }
        let c = &self.coercivity;
        if !(c.length > 0.0) || c.k_factor == 0 {
            return bad("coercivity needs length > 0 and k_factor >= 1".into());
        }
        Ok(())
    }
}

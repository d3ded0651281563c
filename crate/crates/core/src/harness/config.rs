//! Experiment configuration: a sectioned TOML file with every key
//! documented below and unknown keys rejected.
//!
//! ```toml
//! [experiment]
//! kind = "npc-check"     # geodesic | flow | resolvent | npc-check | mayer | compare | euclid-oracle
//! seed = 7               # required; drives random points and probes
//!
//! [background]
//! kind = "flat"          # flat | constant-ricci | modes
//! n = 64                 # grid size, power of two >= 8
//! ricci = -0.5           # constant-ricci only
//! omega_mean = 1.0       # modes only: ω = mean + Σ modes
//! omega_modes = [[1, 0.1, 0.0]]   # [k, cos, sin]
//! ricci_mean = 0.0
//! ricci_modes = []
//!
//! [initial]
//! constant = 0.0
//! modes = [[1, 1e-3, 0.0]]        # initial potential, or
//! file = "phi0.csv"               # a potential file (relative to the config)
//! target_modes = [[2, 0.0, 1e-3]] # second endpoint (geodesic)
//! target_file = "phi1.csv"
//! random_amplitude = 1e-2         # random points: mode k scaled by 1/k³
//! random_modes = 3
//!
//! [numerics]
//! m_t = 64               # geodesic time slices
//! epsilon = 1e-3         # geodesic: ε-regularised solve instead of the exact one
//! tau = 1e-5             # resolvent / flow step
//! steps = 20             # flow steps
//! t = 1e-4               # mayer / compare horizon
//! n_schedule = [2, 4, 8] # mayer / euclid-oracle
//! levels = 8             # compare: τ = t/2 … t/2^levels
//! reference_dt = 7.62939453125e-10
//! samples = 11           # parameter samples per comparison check
//! triangles = 200
//! quadrilaterals = 100
//! convexity_pairs = 0
//! probes = 0             # resolvent optimality probes
//! verify_uniqueness = false
//! euclid_lambda = 1.0    # euclid-oracle: f(x) = λx²/2
//! euclid_x0 = 1.0
//!
//! [tolerances]
//! tol_metric = 1e-8
//! tol_ineq = 1e-6
//! tol_newton = 1e-10
//! inner_tol = 1e-9
//! min_order = 0.9
//! max_final_error = 2e-3 # optional bound on the last error of a convergence study
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::kahler::{FourierMode, SurfaceBackground};
use crate::space::ToleranceConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Geodesic,
    Flow,
    Resolvent,
    NpcCheck,
    Mayer,
    Compare,
    EuclidOracle,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Geodesic => "geodesic",
            Self::Flow => "flow",
            Self::Resolvent => "resolvent",
            Self::NpcCheck => "npc-check",
            Self::Mayer => "mayer",
            Self::Compare => "compare",
            Self::EuclidOracle => "euclid-oracle",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackgroundKind {
    #[default]
    Flat,
    ConstantRicci,
    Modes,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackgroundSpec {
    pub kind: BackgroundKind,
    pub n: usize,
    pub ricci: f64,
    pub omega_mean: f64,
    pub omega_modes: Vec<[f64; 3]>,
    pub ricci_mean: f64,
    pub ricci_modes: Vec<[f64; 3]>,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        Self {
            kind: BackgroundKind::Flat,
            n: 64,
            ricci: 0.0,
            omega_mean: 1.0,
            omega_modes: Vec::new(),
            ricci_mean: 0.0,
            ricci_modes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSpec {
    pub constant: f64,
    pub modes: Vec<[f64; 3]>,
    pub file: Option<PathBuf>,
    pub target_modes: Vec<[f64; 3]>,
    pub target_file: Option<PathBuf>,
    pub random_amplitude: f64,
    pub random_modes: usize,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            constant: 0.0,
            modes: Vec::new(),
            file: None,
            target_modes: Vec::new(),
            target_file: None,
            random_amplitude: 1e-2,
            random_modes: 3,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub m_t: usize,
    pub epsilon: Option<f64>,
    pub tau: f64,
    pub steps: usize,
    pub t: f64,
    pub n_schedule: Vec<usize>,
    pub levels: usize,
    pub reference_dt: Option<f64>,
    pub samples: usize,
    pub triangles: usize,
    pub quadrilaterals: usize,
    pub convexity_pairs: usize,
    pub probes: usize,
    pub verify_uniqueness: bool,
    pub euclid_lambda: f64,
    pub euclid_x0: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            m_t: 64,
            epsilon: None,
            tau: 1e-5,
            steps: 20,
            t: 1e-4,
            n_schedule: (1..=8).map(|k| 1usize << k).collect(),
            levels: 8,
            reference_dt: None,
            samples: 11,
            triangles: 200,
            quadrilaterals: 100,
            convexity_pairs: 0,
            probes: 0,
            verify_uniqueness: false,
            euclid_lambda: 1.0,
            euclid_x0: 1.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tol_metric: f64,
    pub tol_ineq: f64,
    pub tol_newton: f64,
    pub inner_tol: f64,
    pub min_order: f64,
    pub max_final_error: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        let t = ToleranceConfig::default();
        Self {
            tol_metric: t.tol_metric,
            tol_ineq: t.tol_ineq,
            tol_newton: t.tol_newton,
            inner_tol: 1e-9,
            min_order: 0.9,
            max_final_error: None,
        }
    }
}

impl Tolerances {
    pub fn space_tolerances(&self) -> ToleranceConfig {
        ToleranceConfig {
            tol_metric: self.tol_metric,
            tol_ineq: self.tol_ineq,
            tol_newton: self.tol_newton,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub background: BackgroundSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

fn modes(list: &[[f64; 3]], what: &str) -> Result<Vec<FourierMode>, ConfigError> {
    list.iter()
        .map(|[k, c, s]| {
            if *k < 1.0 || k.fract() != 0.0 {
                return Err(ConfigError(format!("{what}: mode index must be a positive integer, got {k}")));
            }
            Ok(FourierMode {
                k: *k as u32,
                cos: *c,
                sin: *s,
            })
        })
        .collect()
}

fn eval_modes(mean: f64, list: &[FourierMode], x: f64) -> f64 {
    mean + list
        .iter()
        .map(|m| {
            let th = 2.0 * std::f64::consts::PI * m.k as f64 * x;
            m.cos * th.cos() + m.sin * th.sin()
        })
        .sum::<f64>()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn background(&self) -> Result<SurfaceBackground, ConfigError> {
        let b = &self.background;
        let bg = match b.kind {
            BackgroundKind::Flat => SurfaceBackground::flat(b.n),
            BackgroundKind::ConstantRicci => SurfaceBackground::constant_ricci(b.n, b.ricci),
            BackgroundKind::Modes => {
                let om = modes(&b.omega_modes, "background.omega_modes")?;
                let rm = modes(&b.ricci_modes, "background.ricci_modes")?;
                SurfaceBackground::from_fn(
                    "modes",
                    b.n,
                    |x| eval_modes(b.omega_mean, &om, x),
                    |x| eval_modes(b.ricci_mean, &rm, x),
                )
            }
        };
        bg.map_err(|e| ConfigError(format!("background: {e}")))
    }

    pub fn initial_modes(&self) -> Result<Vec<FourierMode>, ConfigError> {
        modes(&self.initial.modes, "initial.modes")
    }

    pub fn target_modes(&self) -> Result<Vec<FourierMode>, ConfigError> {
        modes(&self.initial.target_modes, "initial.target_modes")
    }

    /// Kind-specific completeness and file existence, checked before any
    /// computation. Relative paths resolve against `base`.
    pub fn validate(&self, base: &Path) -> Result<(), ConfigError> {
        let n = &self.numerics;
        let kind = self.experiment.kind;
        let tol = &self.tolerances;
        self.tolerances
            .space_tolerances()
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if !(tol.inner_tol > 0.0) || !(tol.min_order > 0.0) {
            return Err(ConfigError("inner_tol and min_order must be positive".into()));
        }
        if kind != ExperimentKind::EuclidOracle {
            self.background()?;
            self.initial_modes()?;
            self.target_modes()?;
        }
        for (what, file) in [("initial.file", &self.initial.file), ("initial.target_file", &self.initial.target_file)] {
            if let Some(f) = file {
                if !base.join(f).is_file() {
                    return Err(ConfigError(format!("{what}: {} does not exist", f.display())));
                }
            }
        }
        if self.initial.file.is_some() && !self.initial.modes.is_empty() {
            return Err(ConfigError("initial: give either modes or file, not both".into()));
        }
        if n.samples < 2 {
            return Err(ConfigError("numerics.samples must be at least 2".into()));
        }
        let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(ConfigError(msg.into())) };
        match kind {
            ExperimentKind::Geodesic => {
                need(
                    !self.initial.target_modes.is_empty() || self.initial.target_file.is_some(),
                    "geodesic: initial.target_modes or initial.target_file is required",
                )?;
                need(n.m_t >= 2, "geodesic: numerics.m_t must be at least 2")?;
                need(n.epsilon.map_or(true, |e| e > 0.0), "geodesic: numerics.epsilon must be positive")?;
                need(
                    n.epsilon.is_some() || self.background.kind == BackgroundKind::Flat,
                    "geodesic: numerics.epsilon is required off the flat background",
                )?;
            }
            ExperimentKind::Flow | ExperimentKind::Resolvent => {
                need(n.tau > 0.0, "numerics.tau must be positive")?;
                need(kind == ExperimentKind::Resolvent || n.steps >= 1, "flow: numerics.steps must be at least 1")?;
            }
            ExperimentKind::NpcCheck => {
                need(
                    self.background.kind == BackgroundKind::Flat,
                    "npc-check: runs on the flat background",
                )?;
                need(
                    n.triangles + n.quadrilaterals + n.convexity_pairs > 0,
                    "npc-check: nothing to check",
                )?;
                need(self.initial.random_amplitude > 0.0, "initial.random_amplitude must be positive")?;
            }
            ExperimentKind::Mayer | ExperimentKind::EuclidOracle => {
                need(n.t > 0.0, "numerics.t must be positive")?;
                need(
                    !n.n_schedule.is_empty()
                        && n.n_schedule[0] >= 1
                        && n.n_schedule.windows(2).all(|w| w[1] > w[0]),
                    "numerics.n_schedule must be positive and strictly increasing",
                )?;
                if kind == ExperimentKind::EuclidOracle {
                    need(n.euclid_lambda >= 0.0, "euclid-oracle: euclid_lambda must be nonnegative")?;
                    need(n.n_schedule.len() >= 2, "euclid-oracle: need at least two schedule entries")?;
                }
            }
            ExperimentKind::Compare => {
                need(n.t > 0.0, "numerics.t must be positive")?;
                need(n.levels >= 2, "compare: numerics.levels must be at least 2")?;
                need(n.reference_dt.map_or(true, |d| d > 0.0), "compare: reference_dt must be positive")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::parse("[experiment]\nkind = \"flow\"\nseed = 3\n").unwrap();
        assert_eq!(cfg.experiment.kind, ExperimentKind::Flow);
        assert_eq!(cfg.background.n, 64);
        assert_eq!(cfg.numerics.n_schedule.last(), Some(&256));
        assert!(cfg.validate(Path::new(".")).is_ok());
    }

    #[test]
    fn unknown_keys_and_missing_seed_are_rejected() {
        assert!(ExperimentConfig::parse("[experiment]\nkind = \"flow\"\nseed = 1\ncolour = 2\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\nkind = \"flow\"\nseed = 1\n[numerics]\ntua = 1\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\nkind = \"flow\"\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\nkind = \"dance\"\nseed = 1\n").is_err());
    }

    #[test]
    fn kind_specific_checks() {
        let cfg = ExperimentConfig::parse("[experiment]\nkind = \"geodesic\"\nseed = 1\n").unwrap();
        assert!(cfg.validate(Path::new(".")).is_err());
        let cfg = ExperimentConfig::parse(
            "[experiment]\nkind = \"geodesic\"\nseed = 1\n[initial]\ntarget_modes = [[1, 1e-3, 0.0]]\n[background]\nkind = \"constant-ricci\"\nricci = -0.5\n",
        )
        .unwrap();
        assert!(cfg.validate(Path::new(".")).is_err());
        let cfg = ExperimentConfig::parse("[experiment]\nkind = \"flow\"\nseed = 1\n[initial]\nfile = \"missing.csv\"\n").unwrap();
        assert!(cfg.validate(Path::new(".")).is_err());
        let cfg = ExperimentConfig::parse("[experiment]\nkind = \"mayer\"\nseed = 1\n[numerics]\nn_schedule = [4, 2]\n").unwrap();
        assert!(cfg.validate(Path::new(".")).is_err());
    }

    #[test]
    fn mode_backgrounds() {
        let cfg = ExperimentConfig::parse(
            "[experiment]\nkind = \"flow\"\nseed = 1\n[background]\nkind = \"modes\"\nn = 16\nomega_modes = [[1, 0.2, 0.0]]\nricci_mean = 0.5\n",
        )
        .unwrap();
        let bg = cfg.background().unwrap();
        assert!((bg.omega()[0] - 1.2).abs() < 1e-15);
        assert!((bg.volume() - 1.0).abs() < 1e-14);
        assert!((bg.mean_scalar_curvature() - 0.5).abs() < 1e-14);
    }
}

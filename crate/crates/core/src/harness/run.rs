use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::engine::{
    discrete_flow, energy_bound_diagnostics, fitted_order, flow_properties,
    mayer_limit, resolvent, FlowPropertySettings, PropertyEntry, PropertyReport, Relation, ResolventConfig,
    UNIQUENESS_TOL,
};
use crate::error::Result;
use crate::euclid::{euclid_mayer_iterate, QuadraticFunctional};
use crate::geodesic::{geodesic_epsilon, geodesic_legendre, GeodesicSettings};
use crate::io::{fmt_f64, read_potential, write_geodesic, write_potential, write_properties, write_table, write_trace, Metadata};
use crate::kahler::{functional_i, Potential, SurfaceBackground};
use crate::model::KahlerSpace;
use crate::reference::{compare_discrete_to_smooth, halving_schedule, integrate_calabi, mode_amplitude, PDEConfig};
use crate::space::{check_b_convexity, check_npc_triangle, check_quadrilateral, MetricSpace, RandomPoints};

/// Multiplier applied to tolerance thresholds under `--strict`.
pub const STRICT_FACTOR: f64 = 0.1;

pub const ASSERTIONS_FILE: &str = "assertions.csv";

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub strict: bool,
}

#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub config_hash: String,
    pub report: PropertyReport,
    pub files: Vec<PathBuf>,
    pub runtime_error: Option<String>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.runtime_error.is_none() && self.report.all_passed() {
            0
        } else {
            1
        }
    }
}

pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads, validates and runs a config file. Config problems are returned
/// before anything is written.
pub fn run_file(path: &Path, opts: &RunOptions) -> std::result::Result<RunSummary, ConfigError> {
    let bytes = fs::read(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    run_bytes(&bytes, base, opts)
}

pub fn run_bytes(bytes: &[u8], base: &Path, opts: &RunOptions) -> std::result::Result<RunSummary, ConfigError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ConfigError(e.to_string()))?;
    let mut cfg = ExperimentConfig::parse(text)?;
    if let Some(seed) = opts.seed {
        cfg.experiment.seed = seed;
    }
    if opts.strict {
        let t = &mut cfg.tolerances;
        t.tol_metric *= STRICT_FACTOR;
        t.tol_ineq *= STRICT_FACTOR;
        t.max_final_error = t.max_final_error.map(|e| e * STRICT_FACTOR);
    }
    cfg.validate(base)?;
    let out_dir = match &opts.out {
        Some(o) => o.clone(),
        None => base.join(&cfg.output.dir),
    };
    let prepared = Prepared::new(&cfg, base)?;

    fs::create_dir_all(&out_dir).map_err(|e| ConfigError(format!("{}: {e}", out_dir.display())))?;
    let hash = config_hash(bytes);
    let meta = Metadata::new()
        .with("config_hash", &hash)
        .with("experiment", cfg.experiment.kind.name())
        .with("seed", cfg.experiment.seed)
        .with("strict", opts.strict);
    let mut ctx = Context {
        cfg: &cfg,
        out_dir: &out_dir,
        meta: meta.clone(),
        report: PropertyReport::default(),
        files: Vec::new(),
    };
    let outcome = ctx.dispatch(&prepared);
    let mut report = std::mem::take(&mut ctx.report);
    let mut files = std::mem::take(&mut ctx.files);
    let mut meta = meta;
    let runtime_error = outcome.err().map(|e| e.to_string());
    if let Some(msg) = &runtime_error {
        meta.push("error", msg.replace('\n', " "));
        report.push(PropertyEntry::new("runtime_error", 1.0, 0.0, Relation::AtMost));
    }
    let path = out_dir.join(ASSERTIONS_FILE);
    write_properties(&path, &report, &meta).map_err(|e| ConfigError(e.to_string()))?;
    files.push(path);
    Ok(RunSummary {
        out_dir,
        config_hash: hash,
        report,
        files,
        runtime_error,
    })
}

/// Inputs resolved up front so that bad backgrounds or potential files are
/// reported as config errors.
struct Prepared {
    bg: Option<SurfaceBackground>,
    phi0: Option<Potential>,
    phi1: Option<Potential>,
}

impl Prepared {
    fn new(cfg: &ExperimentConfig, base: &Path) -> std::result::Result<Self, ConfigError> {
        if cfg.experiment.kind == ExperimentKind::EuclidOracle {
            return Ok(Self {
                bg: None,
                phi0: None,
                phi1: None,
            });
        }
        let bg = cfg.background()?;
        let load = |file: &Option<PathBuf>, modes: Vec<_>, what: &str| -> std::result::Result<Potential, ConfigError> {
            match file {
                Some(f) => read_potential(&base.join(f), &bg).map_err(|e| ConfigError(format!("{what}: {e}"))),
                None => bg
                    .potential_from_modes(cfg.initial.constant, &modes)
                    .map_err(|e| ConfigError(format!("{what}: {e}"))),
            }
        };
        let phi0 = load(&cfg.initial.file, cfg.initial_modes()?, "initial")?;
        let phi1 = if cfg.experiment.kind == ExperimentKind::Geodesic {
            Some(load(&cfg.initial.target_file, cfg.target_modes()?, "target")?)
        } else {
            None
        };
        Ok(Self {
            bg: Some(bg),
            phi0: Some(phi0),
            phi1,
        })
    }
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    out_dir: &'a Path,
    meta: Metadata,
    report: PropertyReport,
    files: Vec<PathBuf>,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn rounding_slack(scale: f64) -> f64 {
    64.0 * f64::EPSILON * scale.abs().max(f64::MIN_POSITIVE)
}

impl Context<'_> {
    fn assert(&mut self, name: &str, value: f64, threshold: f64, relation: Relation) {
        self.report.push(PropertyEntry::new(name, value, threshold, relation));
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out_dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn space(&self, bg: &SurfaceBackground) -> Result<KahlerSpace> {
        let mut sp = KahlerSpace::new(bg.clone()).with_settings(self.geodesic_settings())?;
        sp.random_amplitude = self.cfg.initial.random_amplitude;
        sp.random_modes = self.cfg.initial.random_modes;
        Ok(sp)
    }

    fn geodesic_settings(&self) -> GeodesicSettings {
        GeodesicSettings {
            m_t: self.cfg.numerics.m_t,
            newton_tol: self.cfg.tolerances.tol_newton,
            ..GeodesicSettings::default()
        }
    }

    fn resolvent_config(&self, tau: f64) -> Result<ResolventConfig> {
        let n = &self.cfg.numerics;
        let mut rc = ResolventConfig::new(tau)?;
        rc.inner_tol = self.cfg.tolerances.inner_tol;
        rc.seed = self.cfg.experiment.seed;
        rc.probes = n.probes;
        rc.verify_uniqueness = n.verify_uniqueness;
        Ok(rc)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.experiment.seed)
    }

    fn dispatch(&mut self, p: &Prepared) -> Result<()> {
        let kind = self.cfg.experiment.kind;
        if kind == ExperimentKind::EuclidOracle {
            return self.euclid_oracle();
        }
        let bg = p.bg.as_ref().expect("prepared background");
        let phi0 = p.phi0.as_ref().expect("prepared initial potential");
        self.meta.push("background", bg.id());
        match kind {
            ExperimentKind::Geodesic => self.geodesic(bg, phi0, p.phi1.as_ref().expect("prepared target")),
            ExperimentKind::Flow => self.flow(bg, phi0),
            ExperimentKind::Resolvent => self.resolvent(bg, phi0),
            ExperimentKind::NpcCheck => self.npc_check(bg),
            ExperimentKind::Mayer => self.mayer(bg, phi0),
            ExperimentKind::Compare => self.compare(bg, phi0),
            ExperimentKind::EuclidOracle => unreachable!(),
        }
    }

    fn euclid_oracle(&mut self) -> Result<()> {
        let n = &self.cfg.numerics;
        let f = QuadraticFunctional::scalar(n.euclid_lambda)?;
        let x0 = DVector::from_element(1, n.euclid_x0);
        let exact = f.exact_flow(&x0, n.t)[0];
        let mut rows = Vec::new();
        let (mut taus, mut errs) = (Vec::new(), Vec::new());
        for &steps in &n.n_schedule {
            let x = euclid_mayer_iterate(&f, &x0, n.t, steps)?[0];
            let tau = n.t / steps as f64;
            let err = (x - exact).abs();
            rows.push(vec![steps.to_string(), fmt_f64(tau), fmt_f64(x), fmt_f64(exact), fmt_f64(err)]);
            taus.push(tau);
            errs.push(err);
        }
        let path = self.path("mayer_errors.csv");
        write_table(&path, &self.meta, &["n", "tau", "iterate", "exact", "error"], &rows)?;
        let monotone = errs.windows(2).all(|w| w[1] < w[0]);
        self.assert("mayer_error_monotone", flag(monotone), 1.0, Relation::AtLeast);
        self.assert("mayer_error_order", fitted_order(&taus, &errs), self.cfg.tolerances.min_order, Relation::AtLeast);
        if let Some(bound) = self.cfg.tolerances.max_final_error {
            self.assert("mayer_final_error", *errs.last().expect("non-empty"), bound, Relation::AtMost);
        }
        Ok(())
    }

    fn geodesic(&mut self, bg: &SurfaceBackground, phi0: &Potential, phi1: &Potential) -> Result<()> {
        let tol = &self.cfg.tolerances;
        let path = match self.cfg.numerics.epsilon {
            None => geodesic_legendre(bg, phi0, phi1, self.cfg.numerics.m_t)?,
            Some(eps) => geodesic_epsilon(bg, phi0, phi1, eps, &self.geodesic_settings())?,
        };
        let file = self.path("geodesic.csv");
        write_geodesic(&file, bg, &path, &self.meta)?;
        let m = path.m_t();
        let endpoints = Potential::from_values(path.slices[0].clone())
            .sup_distance(phi0)
            .max(Potential::from_values(path.slices[m].clone()).sup_distance(phi1));
        self.assert("geodesic_endpoints", endpoints, 0.0, Relation::AtMost);
        // convexity in t: second differences are nonnegative
        let dt2 = (1.0 / m as f64).powi(2);
        let mut min_ptt = f64::INFINITY;
        for i in 1..m {
            for k in 0..bg.n() {
                let d = path.slices[i + 1][k] - 2.0 * path.slices[i][k] + path.slices[i - 1][k];
                min_ptt = min_ptt.min(d / dt2);
            }
        }
        self.assert("geodesic_time_convexity", min_ptt, -tol.tol_metric, Relation::AtLeast);
        let e0 = path.energy[0].abs().max(f64::MIN_POSITIVE);
        match self.cfg.numerics.epsilon {
            None => {
                self.assert("energy_element_drift", path.energy_drift() / e0, tol.tol_metric, Relation::AtMost);
            }
            Some(eps) => {
                self.assert("newton_residual", path.solver_residual, tol.tol_newton, Relation::AtMost);
                // the energy element is constant up to O(ε)
                self.assert("energy_element_drift", path.energy_drift(), f64::INFINITY, Relation::AtMost);
                self.assert("energy_element_drift_over_epsilon", path.energy_drift() / eps, f64::INFINITY, Relation::AtMost);
            }
        }
        self.assert("length", path.length(), f64::INFINITY, Relation::AtMost);
        Ok(())
    }

    fn resolvent(&mut self, bg: &SurfaceBackground, phi0: &Potential) -> Result<()> {
        let sp = self.space(bg)?;
        let rc = self.resolvent_config(self.cfg.numerics.tau)?;
        let out = resolvent(&sp, phi0, &rc)?;
        let mut meta = self.meta.clone();
        meta.push("tau", fmt_f64(rc.tau));
        meta.push("objective", fmt_f64(out.objective));
        meta.push("anchor_objective", fmt_f64(out.anchor_objective));
        meta.push("iterations", out.iterations);
        meta.push("euler_lagrange", fmt_f64(out.euler_lagrange));
        let x = bg.grid().nodes();
        let rows: Vec<Vec<String>> = (0..bg.n())
            .map(|k| vec![fmt_f64(x[k]), fmt_f64(phi0.values()[k]), fmt_f64(out.point.values()[k])])
            .collect();
        let file = self.path("resolvent.csv");
        write_table(&file, &meta, &["x", "initial", "resolvent"], &rows)?;

        self.assert("inner_solve_certified", flag(out.certified), 1.0, Relation::AtLeast);
        self.assert("boundary_limited", flag(out.boundary_limited), 0.0, Relation::AtMost);
        let nu0 = sp.functional(phi0)?;
        let nu1 = sp.functional(&out.point)?;
        self.assert("energy_decrease", nu1 - nu0, rounding_slack(nu0), Relation::AtMost);
        self.assert(
            "objective_below_anchor",
            out.objective - out.anchor_objective,
            rounding_slack(out.anchor_objective),
            Relation::AtMost,
        );
        let drift = (functional_i(bg, &out.point) - functional_i(bg, phi0)).abs();
        self.assert("i_conservation", drift, self.cfg.tolerances.tol_metric * 0.1, Relation::AtMost);
        if let Some(m) = out.optimality_margin {
            self.assert("optimality_margin", m, -self.cfg.tolerances.tol_ineq, Relation::AtLeast);
        }
        if let Some(s) = out.uniqueness_spread {
            self.assert("uniqueness_spread", s, UNIQUENESS_TOL, Relation::AtMost);
        }
        Ok(())
    }

    fn flow(&mut self, bg: &SurfaceBackground, phi0: &Potential) -> Result<()> {
        let sp = self.space(bg)?;
        let n = &self.cfg.numerics;
        let tol = &self.cfg.tolerances;
        let rc = self.resolvent_config(n.tau)?;
        let trace = discrete_flow(&sp, phi0, &rc, n.steps)?;
        let i: Vec<f64> = trace.iterates.iter().map(|p| functional_i(bg, p)).collect();
        let d0: Vec<f64> = trace
            .iterates
            .iter()
            .map(|p| sp.distance(phi0, p))
            .collect::<Result<_>>()?;
        let file = self.path("trace.csv");
        write_trace(&file, &trace, &[("i", i.clone()), ("distance_to_start", d0)], &self.meta)?;

        let i_drift = i.iter().map(|v| (v - i[0]).abs()).fold(0.0, f64::max);
        let mut trace_props = PropertyReport::default();
        trace_props.push(PropertyEntry::new("steps_certified", flag(trace.all_certified()), 1.0, Relation::AtLeast));
        trace_props.push(PropertyEntry::new(
            "energy_monotone",
            trace.worst_energy_increase(),
            rounding_slack(trace.energies[0]),
            Relation::AtMost,
        ));
        trace_props.push(PropertyEntry::new("i_conservation", i_drift, tol.tol_metric * 0.1, Relation::AtMost));

        // flow-map properties against a second, random initial point
        let mut rng = self.rng();
        let psi0 = sp.random_point(&mut rng);
        let mut t_grid = Vec::new();
        let mut k = 1;
        while k <= n.steps {
            t_grid.push(k as f64 * n.tau);
            k *= 2;
        }
        let mut fps = FlowPropertySettings::new(rc, t_grid);
        fps.tol_ineq = tol.tol_ineq;
        let props = flow_properties(&sp, phi0, &psi0, &fps)?;
        let file = self.path("properties.csv");
        write_properties(&file, &props, &self.meta)?;
        self.report.entries.extend(trace_props.entries);
        self.report.entries.extend(props.entries);

        if bg.mean_scalar_curvature() < 0.0 {
            // quantities that start at zero are measured against the largest initial one
            let first = energy_bound_diagnostics(bg, &trace.iterates[..1], 1.0, 0.0)?;
            let floor = first.initial.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
            let eb = energy_bound_diagnostics(bg, &trace.iterates, 10.0, floor)?;
            let names = ["abs_j", "i_a", "j_a", "abs_log_volume", "h1"];
            let rows: Vec<Vec<String>> = names
                .iter()
                .zip(eb.sups())
                .zip(eb.initial)
                .map(|((n, s), i)| vec![n.to_string(), fmt_f64(i), fmt_f64(s)])
                .collect();
            let file = self.path("energy_bounds.csv");
            write_table(&file, &self.meta, &["quantity", "initial", "sup"], &rows)?;
            self.assert("energy_bounds_finite", flag(eb.bounded), 1.0, Relation::AtLeast);
        }
        Ok(())
    }

    fn npc_check(&mut self, bg: &SurfaceBackground) -> Result<()> {
        let sp = self.space(bg)?;
        let n = &self.cfg.numerics;
        let samples = n.samples;
        let mut rng = self.rng();
        let triangles: Vec<[Potential; 3]> = (0..n.triangles)
            .map(|_| [sp.random_point(&mut rng), sp.random_point(&mut rng), sp.random_point(&mut rng)])
            .collect();
        let quads: Vec<[Potential; 4]> = (0..n.quadrilaterals)
            .map(|_| std::array::from_fn(|_| sp.random_point(&mut rng)))
            .collect();
        let pairs: Vec<[Potential; 2]> = (0..n.convexity_pairs)
            .map(|_| [sp.random_point(&mut rng), sp.random_point(&mut rng)])
            .collect();
        let tri: Vec<f64> = triangles
            .par_iter()
            .map(|[a, b, c]| check_npc_triangle(&sp, a, b, c, samples))
            .collect::<Result<_>>()?;
        let quad: Vec<f64> = quads
            .par_iter()
            .map(|[x0, x1, y0, y1]| check_quadrilateral(&sp, x0, x1, y0, y1, samples))
            .collect::<Result<_>>()?;
        let conv: Vec<f64> = pairs
            .par_iter()
            .map(|[p, q]| check_b_convexity(&sp, p, q, 0.0, samples))
            .collect::<Result<_>>()?;
        let mut rows = Vec::new();
        for (kind, vals) in [("triangle", &tri), ("quadrilateral", &quad), ("convexity", &conv)] {
            rows.extend(vals.iter().enumerate().map(|(i, v)| vec![kind.to_string(), i.to_string(), fmt_f64(*v)]));
        }
        let file = self.path("npc_residuals.csv");
        write_table(&file, &self.meta, &["check", "index", "residual"], &rows)?;
        let worst = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tol = self.cfg.tolerances.tol_ineq;
        if !tri.is_empty() {
            self.assert("npc_triangle", worst(&tri), tol, Relation::AtMost);
        }
        if !quad.is_empty() {
            self.assert("quadrilateral_comparison", worst(&quad), tol, Relation::AtMost);
        }
        if !conv.is_empty() {
            self.assert("k_energy_convexity", worst(&conv), tol, Relation::AtMost);
        }
        Ok(())
    }

    fn mayer(&mut self, bg: &SurfaceBackground, phi0: &Potential) -> Result<()> {
        let sp = self.space(bg)?;
        let n = &self.cfg.numerics;
        let base = self.resolvent_config(n.t / n.n_schedule[0] as f64)?;
        let levels = mayer_limit(&sp, phi0, n.t, &n.n_schedule, &base)?;
        let rows: Vec<Vec<String>> = levels
            .iter()
            .map(|l| {
                vec![
                    l.n.to_string(),
                    fmt_f64(n.t / l.n as f64),
                    fmt_f64(l.energy),
                    l.next_distance.map(fmt_f64).unwrap_or_default(),
                    l.certified.to_string(),
                ]
            })
            .collect();
        let file = self.path("mayer.csv");
        write_table(&file, &self.meta, &["n", "tau", "energy", "next_distance", "certified"], &rows)?;
        self.assert(
            "steps_certified",
            flag(levels.iter().all(|l| l.certified)),
            1.0,
            Relation::AtLeast,
        );
        let nu0 = sp.functional(phi0)?;
        let rise = levels.iter().map(|l| l.energy - nu0).fold(f64::NEG_INFINITY, f64::max);
        self.assert("energy_below_initial", rise, rounding_slack(nu0), Relation::AtMost);
        let (taus, dists): (Vec<f64>, Vec<f64>) = levels
            .iter()
            .filter_map(|l| l.next_distance.map(|d| (n.t / l.n as f64, d)))
            .unzip();
        if dists.len() >= 2 && dists.iter().all(|d| *d > 0.0) {
            self.assert("cauchy_order", fitted_order(&taus, &dists), self.cfg.tolerances.min_order, Relation::AtLeast);
        }
        Ok(())
    }

    fn compare(&mut self, bg: &SurfaceBackground, phi0: &Potential) -> Result<()> {
        let sp = self.space(bg)?;
        let n = &self.cfg.numerics;
        let tol = &self.cfg.tolerances;
        let schedule = halving_schedule(n.t, n.levels);
        let finest = *schedule.last().expect("levels >= 2");
        let reference_dt = n.reference_dt.unwrap_or(finest / 512.0);
        let base = self.resolvent_config(schedule[0])?;
        let table = compare_discrete_to_smooth(&sp, phi0, n.t, &schedule, &base, reference_dt)?;
        let rows: Vec<Vec<String>> = table
            .rows
            .iter()
            .map(|r| {
                vec![
                    fmt_f64(r.tau),
                    r.steps.to_string(),
                    fmt_f64(r.sup_error),
                    fmt_f64(r.coherence),
                    r.certified.to_string(),
                ]
            })
            .collect();
        let mut meta = self.meta.clone();
        meta.push("t_end", fmt_f64(n.t));
        meta.push("reference_dt", fmt_f64(reference_dt));
        meta.push("fitted_order", fmt_f64(table.fitted_order));
        let file = self.path("convergence.csv");
        write_table(&file, &meta, &["tau", "steps", "sup_error", "coherence", "certified"], &rows)?;

        let mut pde = PDEConfig::new(reference_dt, n.t)?;
        pde.record_every = (pde.steps() / 64).max(1);
        let traj = integrate_calabi(bg, phi0, &pde)?;
        let modes = 4.min(bg.n() / 2 - 1);
        let mut columns = vec!["t".to_string()];
        columns.extend((1..=modes).map(|k| format!("mode{k}")));
        columns.extend(["nu", "calabi_energy"].map(String::from));
        let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = (0..traj.times.len())
            .map(|j| {
                let mut row = vec![fmt_f64(traj.times[j])];
                row.extend((1..=modes).map(|k| fmt_f64(mode_amplitude(bg, &traj.states[j], k))));
                row.push(fmt_f64(traj.nu[j]));
                row.push(fmt_f64(traj.calabi[j]));
                row
            })
            .collect();
        let file = self.path("trajectory.csv");
        write_table(&file, &self.meta, &cols, &rows)?;

        self.assert("steps_certified", flag(table.rows.iter().all(|r| r.certified)), 1.0, Relation::AtLeast);
        self.assert("discrepancy_monotone", flag(table.monotone), 1.0, Relation::AtLeast);
        self.assert("discrepancy_order", table.fitted_order, tol.min_order, Relation::AtLeast);
        if let Some(bound) = tol.max_final_error {
            let last = table.rows.last().expect("non-empty").sup_error;
            self.assert("finest_discrepancy", last, bound, Relation::AtMost);
        }
        self.assert(
            "reference_energy_monotone",
            traj.max_nu_increase(),
            rounding_slack(traj.nu[0]),
            Relation::AtMost,
        );
        self.assert("reference_i_conservation", traj.i_drift(), tol.tol_metric * 0.1, Relation::AtMost);
        Ok(())
    }
}

/// Writes `potential` in the format accepted by `initial.file`.
pub fn export_potential(path: &Path, bg: &SurfaceBackground, potential: &Potential) -> Result<()> {
    write_potential(path, bg, potential, &Metadata::new())
}

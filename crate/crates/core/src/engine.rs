//! Minimizing-movement machinery: the Moreau–Yosida resolvent computed by an
//! inner descent, discrete flows built from it, Mayer's limit `W_{t/n}^n`,
//! and the property harness for flow maps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpaceError};
use crate::kahler::{evaluate_functionals, Potential, SurfaceBackground};
use crate::space::{check_npc_triangle, MetricSpace};

/// Smallest step size the engine accepts.
pub const TAU_MIN: f64 = 1e-8;
/// Minimizers found from perturbed seeds must coincide to this distance.
pub const UNIQUENESS_TOL: f64 = 1e-7;

/// One descent step proposal for the proximal objective
/// `F(ψ) = d²(anchor, ψ) / 2τ + f(ψ)`.
#[derive(Clone, Debug)]
pub struct ProximalStep<T> {
    pub direction: T,
    /// Directional derivative of `F` along `direction` (negative for descent).
    pub slope: f64,
    /// Stationarity measure; the inner solve stops when it drops below
    /// `inner_tol`.
    pub residual: f64,
}

/// Spaces on which the resolvent can be computed by inner optimisation.
pub trait ProximalSpace: MetricSpace {
    type Tangent: Clone + Send + Sync;

    fn proximal_objective(&self, anchor: &Self::Point, current: &Self::Point, tau: f64) -> Result<f64> {
        let d = self.distance(anchor, current)?;
        Ok(d * d / (2.0 * tau) + self.functional(current)?)
    }

    fn proximal_step(
        &self,
        anchor: &Self::Point,
        current: &Self::Point,
        tau: f64,
    ) -> Result<ProximalStep<Self::Tangent>>;

    /// Moves `current` by `alpha * direction`; fails with
    /// [`SpaceError::Positivity`] when the result is not admissible.
    fn retract(
        &self,
        anchor: &Self::Point,
        current: &Self::Point,
        direction: &Self::Tangent,
        alpha: f64,
    ) -> Result<Self::Point>;

    /// Norm of the Euler–Lagrange residual of the proximal problem.
    fn euler_lagrange_residual(&self, anchor: &Self::Point, current: &Self::Point, tau: f64) -> Result<f64>;

    /// Random admissible point near `p` at scale `scale`.
    fn perturb(&self, p: &Self::Point, scale: f64, rng: &mut dyn rand::RngCore) -> Result<Self::Point>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InnerMethod {
    /// Preconditioned descent with Armijo backtracking on `F`.
    PreconditionedDescent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventConfig {
    pub tau: f64,
    pub inner_max_iters: usize,
    pub inner_tol: f64,
    pub inner_method: InnerMethod,
    /// Seed for random probes and restart perturbations.
    pub seed: u64,
    /// Random probe points used to certify optimality (0 disables).
    pub probes: usize,
    pub probe_scale: f64,
    /// Restart from three perturbed seeds and compare minimizers.
    pub verify_uniqueness: bool,
}

impl ResolventConfig {
    pub fn new(tau: f64) -> Result<Self> {
        let cfg = Self {
            tau,
            inner_max_iters: 200,
            inner_tol: 1e-9,
            inner_method: InnerMethod::PreconditionedDescent,
            seed: 0,
            probes: 0,
            probe_scale: 1e-4,
            verify_uniqueness: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        let cfg = Self { tau, ..self.clone() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(SpaceError::InvalidArgument(format!("tau must be positive, got {}", self.tau)));
        }
        if self.tau < TAU_MIN {
            return Err(SpaceError::StepTooSmall {
                tau: self.tau,
                floor: TAU_MIN,
            });
        }
        if !(self.inner_tol > 0.0) || self.inner_max_iters == 0 {
            return Err(SpaceError::InvalidArgument(
                "inner_tol must be positive and inner_max_iters nonzero".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ResolventOutcome<P> {
    pub point: P,
    /// `F(W_τ φ)`.
    pub objective: f64,
    /// `F(φ) = f(φ)`.
    pub anchor_objective: f64,
    pub iterations: usize,
    pub residual: f64,
    pub euler_lagrange: f64,
    /// Inner residual reached `inner_tol`.
    pub certified: bool,
    /// The admissible-cone boundary forced the line search below 1/100 of
    /// a full step.
    pub boundary_limited: bool,
    /// `min_probe F(probe) − F(W_τ φ)`; nonnegative when certified.
    pub optimality_margin: Option<f64>,
    /// Largest distance between minimizers found from perturbed seeds.
    pub uniqueness_spread: Option<f64>,
}

impl<P> ResolventOutcome<P> {
    /// Certified, optimal against every probe, and unique when checked.
    pub fn verified(&self) -> bool {
        self.certified
            && self.optimality_margin.map_or(true, |m| m >= -8.0 * f64::EPSILON * self.objective.abs())
            && self.uniqueness_spread.map_or(true, |s| s <= UNIQUENESS_TOL)
    }
}

const ARMIJO: f64 = 1e-4;

struct InnerResult<P> {
    point: P,
    objective: f64,
    iterations: usize,
    residual: f64,
    converged: bool,
    boundary_limited: bool,
}

fn inner_solve<S: ProximalSpace + ?Sized>(
    space: &S,
    anchor: &S::Point,
    start: S::Point,
    cfg: &ResolventConfig,
) -> Result<InnerResult<S::Point>> {
    let tau = cfg.tau;
    let mut current = start;
    let mut value = space.proximal_objective(anchor, &current, tau)?;
    let mut step = space.proximal_step(anchor, &current, tau)?;
    let mut boundary_limited = false;
    let mut best_recent = step.residual;
    let mut stalled = 0;
    let mut iterations = 0;
    for iter in 0..cfg.inner_max_iters {
        iterations = iter;
        if step.residual <= cfg.inner_tol {
            return Ok(InnerResult {
                point: current,
                objective: value,
                iterations: iter,
                residual: step.residual,
                converged: true,
                boundary_limited,
            });
        }
        if !(step.slope < 0.0) {
            break;
        }
        // below this the objective cannot resolve a decrease
        let noise = 16.0 * f64::EPSILON * value.abs().max(f64::MIN_POSITIVE);
        let mut alpha = 1.0;
        let mut hit_boundary = false;
        let accepted = loop {
            match space.retract(anchor, &current, &step.direction, alpha) {
                Ok(trial) => {
                    let tv = space.proximal_objective(anchor, &trial, tau)?;
                    if tv <= value + ARMIJO * alpha * step.slope && tv < value {
                        let next = space.proximal_step(anchor, &trial, tau)?;
                        break Some((trial, tv, next));
                    }
                    if tv <= value + noise {
                        let next = space.proximal_step(anchor, &trial, tau)?;
                        if next.residual < step.residual {
                            break Some((trial, tv, next));
                        }
                    }
                }
                Err(SpaceError::Positivity { .. }) => hit_boundary = true,
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                break None;
            }
        };
        let Some((trial, tv, next)) = accepted else { break };
        if hit_boundary && alpha < 0.01 {
            boundary_limited = true;
        }
        current = trial;
        value = tv;
        step = next;
        if step.residual < 0.5 * best_recent {
            best_recent = step.residual;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 8 {
                break;
            }
        }
    }
    Ok(InnerResult {
        point: current,
        objective: value,
        iterations: iterations + 1,
        residual: step.residual,
        converged: false,
        boundary_limited,
    })
}

/// Resolvent `W_τ(φ) = argmin_ψ d²(φ, ψ)/2τ + f(ψ)`.
///
/// The inner descent starts at `φ` and only accepts steps that decrease the
/// objective, so `F(W_τ φ) <= F(φ) = f(φ)` holds exactly in floating point.
pub fn resolvent<S: ProximalSpace + ?Sized>(
    space: &S,
    phi: &S::Point,
    cfg: &ResolventConfig,
) -> Result<ResolventOutcome<S::Point>> {
    cfg.validate()?;
    let anchor_objective = space.functional(phi)?;
    let inner = inner_solve(space, phi, phi.clone(), cfg)?;
    let euler_lagrange = space.euler_lagrange_residual(phi, &inner.point, cfg.tau)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let optimality_margin = if cfg.probes > 0 {
        let mut margin = f64::INFINITY;
        for _ in 0..cfg.probes {
            let probe = space.perturb(&inner.point, cfg.probe_scale, &mut rng)?;
            let v = space.proximal_objective(phi, &probe, cfg.tau)?;
            margin = margin.min(v - inner.objective);
        }
        Some(margin)
    } else {
        None
    };
    let uniqueness_spread = if cfg.verify_uniqueness {
        let mut spread = 0.0_f64;
        for _ in 0..3 {
            let seed = space.perturb(&inner.point, cfg.probe_scale, &mut rng)?;
            let other = inner_solve(space, phi, seed, cfg)?;
            spread = spread.max(space.distance(&inner.point, &other.point)?);
        }
        Some(spread)
    } else {
        None
    };

    Ok(ResolventOutcome {
        objective: inner.objective,
        anchor_objective,
        iterations: inner.iterations,
        residual: inner.residual,
        euler_lagrange,
        certified: inner.converged,
        boundary_limited: inner.boundary_limited,
        optimality_margin,
        uniqueness_spread,
        point: inner.point,
    })
}

/// Per-step diagnostics of a discrete flow.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepRecord {
    /// `d(φ_j, φ_{j+1})`.
    pub step_distance: f64,
    /// Proximal objective at the minimizer.
    pub objective: f64,
    pub euler_lagrange: f64,
    pub inner_iterations: usize,
    pub certified: bool,
    pub boundary_limited: bool,
}

#[derive(Clone, Debug)]
pub struct DiscreteFlowTrace<P> {
    /// Partition `t_0 < t_1 < … < t_m`.
    pub times: Vec<f64>,
    pub tau: f64,
    pub iterates: Vec<P>,
    /// `f(φ_j)` for every iterate.
    pub energies: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

impl<P> DiscreteFlowTrace<P> {
    pub fn last(&self) -> &P {
        self.iterates.last().expect("trace holds at least the initial point")
    }

    pub fn all_certified(&self) -> bool {
        self.steps.iter().all(|s| s.certified)
    }

    /// `max_j (f(φ_{j+1}) − f(φ_j))`; nonpositive for a monotone trace.
    pub fn worst_energy_increase(&self) -> f64 {
        self.energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Uniform-step discrete flow `φ_{j+1} = W_τ(φ_j)`, `j < m`.
pub fn discrete_flow<S: ProximalSpace + ?Sized>(
    space: &S,
    phi0: &S::Point,
    cfg: &ResolventConfig,
    m: usize,
) -> Result<DiscreteFlowTrace<S::Point>> {
    cfg.validate()?;
    if m == 0 {
        return Err(SpaceError::InvalidArgument("need at least one step".into()));
    }
    let mut trace = DiscreteFlowTrace {
        times: vec![0.0],
        tau: cfg.tau,
        iterates: vec![phi0.clone()],
        energies: vec![space.functional(phi0)?],
        steps: Vec::with_capacity(m),
    };
    for j in 0..m {
        let cur = &trace.iterates[j];
        let out = resolvent(space, cur, cfg)?;
        let step_distance = space.distance(cur, &out.point)?;
        trace.steps.push(StepRecord {
            step_distance,
            objective: out.objective,
            euler_lagrange: out.euler_lagrange,
            inner_iterations: out.iterations,
            certified: out.certified,
            boundary_limited: out.boundary_limited,
        });
        trace.energies.push(space.functional(&out.point)?);
        trace.iterates.push(out.point);
        trace.times.push((j + 1) as f64 * cfg.tau);
    }
    Ok(trace)
}

/// `min_j [2 j τ (f(φ_0) − f(φ_j)) − d²(φ_0, φ_j)]` together with the
/// rounding slack appropriate for the compared magnitudes.
pub fn distance_control_margin<S: MetricSpace + ?Sized>(
    space: &S,
    trace: &DiscreteFlowTrace<S::Point>,
) -> Result<(f64, f64)> {
    let mut margin = f64::INFINITY;
    let mut slack = 0.0_f64;
    let f0 = trace.energies[0];
    for j in 1..trace.iterates.len() {
        let d = space.distance(&trace.iterates[0], &trace.iterates[j])?;
        let bound = 2.0 * j as f64 * trace.tau * (f0 - trace.energies[j]);
        margin = margin.min(bound - d * d);
        let scale = 2.0 * j as f64 * trace.tau * (f0.abs() + trace.energies[j].abs()) + d * d;
        slack = slack.max(64.0 * f64::EPSILON * scale);
    }
    Ok((margin, slack))
}

#[derive(Clone, Debug)]
pub struct MayerLevel<P> {
    pub n: usize,
    pub point: P,
    pub energy: f64,
    /// `d(result_n, result_{next n})`, absent for the last level.
    pub next_distance: Option<f64>,
    pub certified: bool,
}

/// `W_{t/n}^n(φ0)` for every `n` in an increasing schedule. Levels are
/// independent and computed concurrently.
pub fn mayer_limit<S: ProximalSpace + ?Sized>(
    space: &S,
    phi0: &S::Point,
    t: f64,
    n_schedule: &[usize],
    base: &ResolventConfig,
) -> Result<Vec<MayerLevel<S::Point>>> {
    if !(t > 0.0) {
        return Err(SpaceError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    if n_schedule.is_empty() || n_schedule.windows(2).any(|w| w[1] <= w[0]) || n_schedule[0] == 0 {
        return Err(SpaceError::InvalidArgument("n_schedule must be positive and increasing".into()));
    }
    let runs: Vec<Result<(S::Point, bool)>> = n_schedule
        .par_iter()
        .map(|&n| {
            let cfg = base.with_tau(t / n as f64)?;
            let trace = discrete_flow(space, phi0, &cfg, n)?;
            let ok = trace.all_certified();
            Ok((trace.iterates.into_iter().last().expect("non-empty"), ok))
        })
        .collect();
    let mut levels = Vec::with_capacity(n_schedule.len());
    for (&n, run) in n_schedule.iter().zip(runs) {
        let (point, certified) = run?;
        levels.push(MayerLevel {
            n,
            energy: space.functional(&point)?,
            point,
            next_distance: None,
            certified,
        });
    }
    for i in 0..levels.len().saturating_sub(1) {
        let d = space.distance(&levels[i].point, &levels[i + 1].point)?;
        levels[i].next_distance = Some(d);
    }
    Ok(levels)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// Passes when `value <= threshold`.
    AtMost,
    /// Passes when `value >= threshold`.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyEntry {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl PropertyEntry {
    pub fn new(name: impl Into<String>, value: f64, threshold: f64, relation: Relation) -> Self {
        let passed = value.is_finite()
            && match relation {
                Relation::AtMost => value <= threshold,
                Relation::AtLeast => value >= threshold,
            };
        Self {
            name: name.into(),
            value,
            threshold,
            relation,
            passed,
        }
    }
}

/// Named residuals of a flow-map study, each tagged pass/fail.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub entries: Vec<PropertyEntry>,
}

impl PropertyReport {
    pub fn push(&mut self, entry: PropertyEntry) {
        self.entries.push(entry);
    }

    pub fn get(&self, name: &str) -> Option<&PropertyEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fitted_order(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowPropertySettings {
    pub resolvent: ResolventConfig,
    /// Times at which flow maps are compared; each must be a positive
    /// multiple of `resolvent.tau`.
    pub t_grid: Vec<f64>,
    pub tol_ineq: f64,
    pub hoelder_floor: f64,
    pub dissipation_tol: f64,
    pub npc_samples: usize,
}

impl FlowPropertySettings {
    pub fn new(resolvent: ResolventConfig, t_grid: Vec<f64>) -> Self {
        Self {
            resolvent,
            t_grid,
            tol_ineq: 1e-6,
            hoelder_floor: 0.45,
            dissipation_tol: 0.1,
            npc_samples: 5,
        }
    }

    fn steps_for(&self, t: f64) -> Result<usize> {
        let k = (t / self.resolvent.tau).round();
        if !(k >= 1.0) || ((k * self.resolvent.tau - t).abs() > 1e-9 * t) {
            return Err(SpaceError::InvalidArgument(format!(
                "time {t} is not a positive multiple of tau = {}",
                self.resolvent.tau
            )));
        }
        Ok(k as usize)
    }
}

/// Flow map `F_t ≈ W_τ^{t/τ}` evaluated on the grid for two initial points,
/// checked for contraction, Hölder-½ continuity, the semigroup law,
/// energy dissipation, distance control and NPC along the flow.
pub fn flow_properties<S: ProximalSpace + ?Sized>(
    space: &S,
    phi0: &S::Point,
    psi0: &S::Point,
    settings: &FlowPropertySettings,
) -> Result<PropertyReport> {
    if settings.t_grid.is_empty() {
        return Err(SpaceError::InvalidArgument("t_grid is empty".into()));
    }
    let steps: Vec<usize> = settings
        .t_grid
        .iter()
        .map(|&t| settings.steps_for(t))
        .collect::<Result<_>>()?;
    let max_steps = *steps.iter().max().expect("non-empty");
    let cfg = &settings.resolvent;
    let (phi_trace, psi_trace) = rayon::join(
        || discrete_flow(space, phi0, cfg, max_steps),
        || discrete_flow(space, psi0, cfg, max_steps),
    );
    let (phi_trace, psi_trace) = (phi_trace?, psi_trace?);
    let mut report = PropertyReport::default();

    let d0 = space.distance(phi0, psi0)?;
    let mut contraction = f64::NEG_INFINITY;
    for &k in &steps {
        let dk = space.distance(&phi_trace.iterates[k], &psi_trace.iterates[k])?;
        contraction = contraction.max(dk - d0);
    }
    report.push(PropertyEntry::new("contraction", contraction, settings.tol_ineq, Relation::AtMost));

    let mut dists = Vec::with_capacity(steps.len());
    let mut hoelder_constant = 0.0_f64;
    for (&k, &t) in steps.iter().zip(&settings.t_grid) {
        let d = space.distance(phi0, &phi_trace.iterates[k])?;
        hoelder_constant = hoelder_constant.max(d / t.sqrt());
        dists.push(d);
    }
    let exponent = fitted_order(&settings.t_grid, &dists);
    report.push(PropertyEntry::new("hoelder_exponent", exponent, settings.hoelder_floor, Relation::AtLeast));
    report.push(PropertyEntry::new("hoelder_constant", hoelder_constant, f64::INFINITY, Relation::AtMost));

    // Semigroup: F_{s+t} against F_s ∘ F_t with independent step sizes; the
    // threshold is twice the sum of both sides' self-convergence estimates.
    let total = settings.t_grid.iter().cloned().fold(0.0, f64::max);
    let n_total = max_steps;
    let semigroup = semigroup_check(space, phi0, total, n_total, cfg)?;
    report.push(PropertyEntry::new("semigroup", semigroup.0, semigroup.1, Relation::AtMost));

    let mut gap = 0.0_f64;
    let mut slope0 = f64::NAN;
    for (j, step) in phi_trace.steps.iter().enumerate() {
        let drop = phi_trace.energies[j] - phi_trace.energies[j + 1];
        if step.step_distance <= 0.0 {
            continue;
        }
        let slope = drop / step.step_distance;
        if j == 0 {
            slope0 = slope;
        }
        let rate = -drop / cfg.tau;
        gap = gap.max((rate + slope * slope).abs() / (slope * slope).max(1e-12));
    }
    report.push(PropertyEntry::new("dissipation_gap", gap, settings.dissipation_tol, Relation::AtMost));
    report.push(PropertyEntry::new(
        "slope_estimate",
        if slope0.is_nan() { 0.0 } else { slope0 },
        0.0,
        Relation::AtLeast,
    ));

    let (margin, slack) = distance_control_margin(space, &phi_trace)?;
    report.push(PropertyEntry::new("distance_control_margin", margin, -slack, Relation::AtLeast));

    let npc = check_npc_triangle(space, phi0, psi0, phi_trace.last(), settings.npc_samples)?;
    report.push(PropertyEntry::new("npc", npc, settings.tol_ineq, Relation::AtMost));

    Ok(report)
}

/// Returns `(d(F_{s+t}x, F_s F_t x), tolerance)` with `s = t_total/3`,
/// `t = 2 t_total/3`.
fn semigroup_check<S: ProximalSpace + ?Sized>(
    space: &S,
    x: &S::Point,
    t_total: f64,
    n: usize,
    cfg: &ResolventConfig,
) -> Result<(f64, f64)> {
    let n = n.max(3);
    let run = |t: f64, steps: usize, from: &S::Point| -> Result<S::Point> {
        let c = cfg.with_tau(t / steps as f64)?;
        Ok(discrete_flow(space, from, &c, steps)?.iterates.pop().expect("non-empty"))
    };
    let (s, t) = (t_total / 3.0, 2.0 * t_total / 3.0);
    let ns = (n / 3).max(1);
    let nt = (2 * n / 3).max(1);
    let direct = run(t_total, n, x)?;
    let direct_fine = run(t_total, 2 * n, x)?;
    let composed = run(s, ns, &run(t, nt, x)?)?;
    let composed_fine = run(s, 2 * ns, &run(t, 2 * nt, x)?)?;
    let residual = space.distance(&direct, &composed)?;
    let tol = 2.0 * (space.distance(&direct, &direct_fine)? + space.distance(&composed, &composed_fine)?);
    Ok((residual, tol.max(1e-14)))
}

/// Sup over a trace of the quantities bounded for backgrounds with negative
/// Ricci density, next to their initial values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBoundReport {
    pub steps: usize,
    pub sup_abs_j: f64,
    pub sup_i_a: f64,
    pub sup_j_a: f64,
    pub sup_abs_log_volume: f64,
    /// `∫ φ_x²`.
    pub sup_h1: f64,
    pub initial: [f64; 5],
    /// Every quantity stays finite and below `growth_factor` times
    /// `max(initial, floor)`.
    pub bounded: bool,
}

impl EnergyBoundReport {
    pub fn sups(&self) -> [f64; 5] {
        [self.sup_abs_j, self.sup_i_a, self.sup_j_a, self.sup_abs_log_volume, self.sup_h1]
    }
}

pub fn energy_bound_diagnostics(
    bg: &SurfaceBackground,
    iterates: &[Potential],
    growth_factor: f64,
    floor: f64,
) -> Result<EnergyBoundReport> {
    if iterates.is_empty() {
        return Err(SpaceError::InvalidArgument("empty trace".into()));
    }
    let mut sups = [0.0_f64; 5];
    let mut initial = [0.0_f64; 5];
    for (j, phi) in iterates.iter().enumerate() {
        let f = evaluate_functionals(bg, phi)?;
        let vals = [f.j.abs(), f.i_a, f.j_a, f.log_volume_integral.abs(), 2.0 * bg.volume() * f.j_a];
        if j == 0 {
            initial = vals;
        }
        for (s, v) in sups.iter_mut().zip(vals) {
            *s = if v.is_finite() { s.max(v) } else { f64::INFINITY };
        }
    }
    let bounded = sups
        .iter()
        .zip(&initial)
        .all(|(s, i)| s.is_finite() && *s <= growth_factor * i.max(floor));
    Ok(EnergyBoundReport {
        steps: iterates.len() - 1,
        sup_abs_j: sups[0],
        sup_i_a: sups[1],
        sup_j_a: sups[2],
        sup_abs_log_volume: sups[3],
        sup_h1: sups[4],
        initial,
        bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euclid::{euclid_resolvent, EuclideanSpace, QuadraticFunctional};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn resolvent_delegates_to_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let f = QuadraticFunctional::new(a, DVector::from_vec(vec![0.3, -0.2]), 0.1).unwrap();
        let space = EuclideanSpace::new(f.clone());
        let x = DVector::from_vec(vec![1.0, -2.0]);
        let cfg = ResolventConfig::new(0.7).unwrap();
        let out = resolvent(&space, &x, &cfg).unwrap();
        let exact = euclid_resolvent(&f, &x, 0.7).unwrap();
        assert!((out.point - exact).norm() < 1e-10);
        assert!(out.certified);
        assert!(out.objective <= out.anchor_objective);
    }

    #[test]
    fn euclidean_flow_halves() {
        let space = EuclideanSpace::new(QuadraticFunctional::scalar(1.0).unwrap());
        let trace = discrete_flow(&space, &DVector::from_element(1, 1.0), &ResolventConfig::new(1.0).unwrap(), 3).unwrap();
        let vals: Vec<f64> = trace.iterates.iter().map(|p| p[0]).collect();
        for (v, e) in vals.iter().zip([1.0, 0.5, 0.25, 0.125]) {
            assert!((v - e).abs() < 1e-14);
        }
        assert_eq!(trace.times, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn stationary_point_is_fixed() {
        let space = EuclideanSpace::new(QuadraticFunctional::scalar(3.0).unwrap());
        let trace = discrete_flow(&space, &DVector::zeros(1), &ResolventConfig::new(0.1).unwrap(), 4).unwrap();
        assert!(trace.iterates.iter().all(|p| p[0] == 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(ResolventConfig::new(0.0).is_err());
        assert!(matches!(ResolventConfig::new(1e-9), Err(SpaceError::StepTooSmall { .. })));
    }

    #[test]
    fn fitted_order_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.5)).collect();
        assert!((fitted_order(&x, &y) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn property_entry_relations() {
        assert!(PropertyEntry::new("a", 1.0, 2.0, Relation::AtMost).passed);
        assert!(!PropertyEntry::new("a", 3.0, 2.0, Relation::AtMost).passed);
        assert!(PropertyEntry::new("b", 3.0, 2.0, Relation::AtLeast).passed);
        assert!(!PropertyEntry::new("b", f64::NAN, 2.0, Relation::AtLeast).passed);
    }

    #[test]
    fn euclidean_contraction_is_exponential() {
        let space = EuclideanSpace::new(QuadraticFunctional::scalar(1.0).unwrap());
        let settings = FlowPropertySettings::new(ResolventConfig::new(0.01).unwrap(), vec![0.1, 0.2, 0.4]);
        let rep = flow_properties(&space, &DVector::from_element(1, 1.0), &DVector::from_element(1, -0.5), &settings).unwrap();
        let c = rep.get("contraction").unwrap();
        assert!(c.passed && c.value < 0.0);
        assert!(rep.get("distance_control_margin").unwrap().passed);
    }
}

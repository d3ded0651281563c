//! Direct integrator for the reduced Calabi flow `∂φ/∂t = s_φ − s̄`, used as
//! the smooth reference for discrete flows.
//!
//! The step is linearly implicit: the fourth-order part `−c φ_xxxx / w²`
//! (with `w` the mean background density) is treated implicitly in Fourier
//! space and the remainder `s_φ − s̄ + c φ_xxxx / w²` explicitly.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{discrete_flow, fitted_order, ResolventConfig};
use crate::error::{Result, SpaceError};
use crate::geodesic::{endpoint_velocity, GeodesicSettings};
use crate::kahler::{calabi_energy, calabi_velocity, functional_i, k_energy, Potential, SurfaceBackground};
use crate::model::KahlerSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PDEConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Coefficient `c` of the implicit fourth-order damping.
    pub stabilization: f64,
    /// Record every this many steps (the final state is always recorded).
    pub record_every: usize,
}

impl PDEConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            dt,
            t_end,
            stabilization: 1.0,
            record_every: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return Err(SpaceError::InvalidArgument("dt and t_end must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(SpaceError::InvalidArgument("record_every must be at least 1".into()));
        }
        if !(self.stabilization >= 0.0) {
            return Err(SpaceError::InvalidArgument("stabilization must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }

    /// Explicit part stays stable when `dt |1 − c| k_max⁴ / w_min² <= 2`,
    /// `k_max = πN` the highest resolved angular wavenumber.
    pub fn check_stability(&self, bg: &SurfaceBackground) -> Result<()> {
        let w_min = bg.omega().iter().cloned().fold(f64::INFINITY, f64::min);
        let k4 = (PI * bg.n() as f64).powi(4);
        let w = bg.volume();
        // the implicit part uses the mean density, the explicit remainder sees
        // the mismatch against the pointwise one
        let mismatch = (1.0 - self.stabilization).abs() + self.stabilization * (1.0 - (w_min / w).powi(2)).abs();
        let bound = self.dt * mismatch * k4 / (w_min * w_min);
        if bound > 2.0 {
            return Err(SpaceError::InvalidArgument(format!(
                "dt = {:.3e} violates the stability bound (factor {bound:.3e} > 2)",
                self.dt
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Potential>,
    pub nu: Vec<f64>,
    pub calabi: Vec<f64>,
    pub i: Vec<f64>,
    /// `max_{k<=4} ‖∂ᵏφ‖_∞` at each record.
    pub monitor: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &Potential {
        self.states.last().expect("trajectory is never empty")
    }

    /// State recorded at time `t`, if any record lies within `1e-9 t`.
    pub fn at_time(&self, t: f64) -> Option<&Potential> {
        let tol = 1e-9 * t.abs().max(1e-300);
        self.times
            .iter()
            .position(|s| (s - t).abs() <= tol)
            .map(|i| &self.states[i])
    }

    pub fn max_nu_increase(&self) -> f64 {
        self.nu.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn i_drift(&self) -> f64 {
        let i0 = self.i[0];
        self.i.iter().map(|v| (v - i0).abs()).fold(0.0, f64::max)
    }
}

/// `2|φ̂_k| / N`, the amplitude of Fourier mode `k`.
pub fn mode_amplitude(bg: &SurfaceBackground, phi: &Potential, k: usize) -> f64 {
    let c = bg.grid().forward(phi.values());
    2.0 * c[k].norm() / bg.n() as f64
}

fn monitor(bg: &SurfaceBackground, phi: &Potential) -> f64 {
    (0..=4)
        .map(|k| {
            let d = if k == 0 {
                phi.values().to_vec()
            } else {
                bg.grid().derivative(phi.values(), k)
            };
            d.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0, f64::max)
}

fn record(bg: &SurfaceBackground, traj: &mut Trajectory, t: f64, phi: &Potential) -> Result<()> {
    traj.times.push(t);
    traj.nu.push(k_energy(bg, phi)?);
    traj.calabi.push(calabi_energy(bg, phi)?);
    traj.i.push(functional_i(bg, phi));
    traj.monitor.push(monitor(bg, phi));
    traj.states.push(phi.clone());
    Ok(())
}

/// Integrates the Calabi flow from `phi0` up to `cfg.t_end`.
pub fn integrate_calabi(bg: &SurfaceBackground, phi0: &Potential, cfg: &PDEConfig) -> Result<Trajectory> {
    cfg.validate()?;
    cfg.check_stability(bg)?;
    bg.check_band_limit(phi0)?;
    bg.density(phi0)?;
    let steps = cfg.steps();
    let dt = cfg.t_end / steps as f64;
    let w = bg.volume();
    let c = cfg.stabilization;
    let two_pi = 2.0 * PI;
    let stiff = |k: i64| c * (two_pi * k as f64).powi(4) / (w * w);

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        nu: Vec::new(),
        calabi: Vec::new(),
        i: Vec::new(),
        monitor: Vec::new(),
    };
    let mut phi = phi0.clone();
    record(bg, &mut traj, 0.0, &phi)?;
    for step in 1..=steps {
        let t = step as f64 * dt;
        let v = calabi_velocity(bg, &phi).map_err(|_| SpaceError::PositivityLoss { time: t - dt })?;
        // φ + dt (v + c φ_xxxx / w²), then divide by 1 + dt c k⁴ / w²
        let damped = bg.grid().apply_multiplier(phi.values(), |k| dt * stiff(k));
        let rhs: Vec<f64> = phi
            .values()
            .iter()
            .zip(&v)
            .zip(&damped)
            .map(|((p, v), d)| p + dt * v + d)
            .collect();
        let next = bg.grid().apply_multiplier(&rhs, |k| 1.0 / (1.0 + dt * stiff(k)));
        phi = Potential::from_values(next);
        if phi.values().iter().any(|v| !v.is_finite()) || bg.density(&phi).is_err() {
            return Err(SpaceError::PositivityLoss { time: t });
        }
        if step % cfg.record_every == 0 || step == steps {
            record(bg, &mut traj, t, &phi)?;
        }
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub tau: f64,
    pub steps: usize,
    /// `max_j ‖φ_j − φ(t_j)‖_∞`.
    pub sup_error: f64,
    /// `max_j ‖φ_{j+1} − φ_j − γ̇_j(0)‖_∞ / τ`.
    pub coherence: f64,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub t_end: f64,
    pub rows: Vec<ConvergenceRow>,
    pub fitted_order: f64,
    pub monotone: bool,
    /// Largest spatial-derivative monitor along the reference run.
    pub reference_monitor: f64,
}

/// Default schedule `t_end / 2, …, t_end / 2^levels`.
pub fn halving_schedule(t_end: f64, levels: usize) -> Vec<f64> {
    (1..=levels).map(|k| t_end / 2f64.powi(k as i32)).collect()
}

/// Runs discrete flows for each `τ` (concurrently) and compares them with one
/// reference run at step `reference_dt`, which must divide every `τ`.
pub fn compare_discrete_to_smooth(
    space: &KahlerSpace,
    phi0: &Potential,
    t_end: f64,
    tau_schedule: &[f64],
    base: &ResolventConfig,
    reference_dt: f64,
) -> Result<ConvergenceTable> {
    if tau_schedule.is_empty() || tau_schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SpaceError::InvalidArgument("tau schedule must be strictly decreasing".into()));
    }
    let bg = space.background();
    let finest = *tau_schedule.last().expect("non-empty");
    let ratio = finest / reference_dt;
    if (ratio - ratio.round()).abs() > 1e-6 || ratio < 1.0 {
        return Err(SpaceError::InvalidArgument("reference dt must divide the finest tau".into()));
    }
    let mut pde = PDEConfig::new(reference_dt, t_end)?;
    pde.record_every = ratio.round() as usize;
    let reference = integrate_calabi(bg, phi0, &pde)?;
    let reference_monitor = reference.monitor.iter().cloned().fold(0.0, f64::max);

    let rows: Vec<Result<ConvergenceRow>> = tau_schedule
        .par_iter()
        .map(|&tau| {
            let steps = (t_end / tau).round() as usize;
            let cfg = base.with_tau(tau)?;
            let trace = discrete_flow(space, phi0, &cfg, steps)?;
            let mut sup_error = 0.0_f64;
            for (t, phi) in trace.times.iter().zip(&trace.iterates) {
                let exact = reference.at_time(*t).ok_or_else(|| {
                    SpaceError::InvalidArgument(format!("no reference record at t = {t}"))
                })?;
                sup_error = sup_error.max(phi.sup_distance(exact));
            }
            let coherence = coherence(bg, &trace.iterates, tau, space.settings())?;
            Ok(ConvergenceRow {
                tau,
                steps,
                sup_error,
                coherence,
                certified: trace.all_certified(),
            })
        })
        .collect();
    let rows: Vec<ConvergenceRow> = rows.into_iter().collect::<Result<_>>()?;
    let taus: Vec<f64> = rows.iter().map(|r| r.tau).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.sup_error).collect();
    Ok(ConvergenceTable {
        t_end,
        fitted_order: fitted_order(&taus, &errs),
        monotone: errs.windows(2).all(|w| w[1] < w[0]) || errs.iter().all(|e| *e == 0.0),
        reference_monitor,
        rows,
    })
}

/// `max_j ‖φ_{j+1} − φ_j − γ̇_j(0)‖_∞ / τ` with `γ_j` the geodesic from `φ_j`
/// to `φ_{j+1}`; its initial velocity is minus the terminal velocity of the
/// reversed geodesic.
pub fn coherence(bg: &SurfaceBackground, iterates: &[Potential], tau: f64, settings: &GeodesicSettings) -> Result<f64> {
    let mut worst = 0.0_f64;
    for pair in iterates.windows(2) {
        if pair[0] == pair[1] {
            continue;
        }
        let back = endpoint_velocity(bg, &pair[1], &pair[0], settings)?;
        for ((a, b), v) in pair[1].values().iter().zip(pair[0].values()).zip(&back) {
            worst = worst.max((a - b + v).abs() / tau);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kahler::FourierMode;

    #[test]
    fn zero_is_stationary() {
        let bg = SurfaceBackground::flat(16).unwrap();
        let traj = integrate_calabi(&bg, &bg.zero(), &PDEConfig::new(1e-6, 1e-5).unwrap()).unwrap();
        assert!(traj.states.iter().all(|p| p.values().iter().all(|v| *v == 0.0)));
        assert_eq!(traj.times.len(), 11);
    }

    #[test]
    fn linear_mode_decays() {
        let bg = SurfaceBackground::flat(32).unwrap();
        let phi = bg.potential_from_modes(0.0, &[FourierMode::cosine(1, 1e-3)]).unwrap();
        let mut cfg = PDEConfig::new(1e-7, 1e-4).unwrap();
        cfg.record_every = 100;
        let traj = integrate_calabi(&bg, &phi, &cfg).unwrap();
        let ratio = mode_amplitude(&bg, traj.last(), 1) / 1e-3;
        let expected = (-(2.0 * PI).powi(4) * 1e-4_f64).exp();
        assert!((ratio / expected - 1.0).abs() < 1e-2, "{ratio} vs {expected}");
        assert!(traj.calabi.windows(2).all(|w| w[1] <= w[0]));
        assert!(traj.i_drift() < 1e-9);
    }

    #[test]
    fn unstable_step_rejected() {
        let bg = SurfaceBackground::flat(32).unwrap();
        let mut cfg = PDEConfig::new(1e-3, 1e-2).unwrap();
        cfg.stabilization = 0.0;
        assert!(cfg.check_stability(&bg).is_err());
        cfg.stabilization = 1.0;
        assert!(cfg.check_stability(&bg).is_ok());
    }

    #[test]
    fn schedule_halves() {
        assert_eq!(halving_schedule(1.0, 3), vec![0.5, 0.25, 0.125]);
    }
}

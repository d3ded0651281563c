//! The Kähler potential space with the Mabuchi distance and the K-energy,
//! wired into the generic resolvent engine.

use rand::RngCore;

use crate::engine::{ProximalSpace, ProximalStep};
use crate::error::{Result, SpaceError};
use crate::geodesic::{endpoint_velocity, geodesic_point, mabuchi_distance_with, GeodesicSettings};
use crate::kahler::{calabi_velocity, functional_i, k_energy, normalize_to, Potential, SurfaceBackground};
use crate::space::{MetricSpace, RandomPoints};

#[derive(Clone, Debug)]
pub struct KahlerSpace {
    bg: SurfaceBackground,
    settings: GeodesicSettings,
    /// Amplitude of random points (mode `k` scaled by `1/k³`).
    pub random_amplitude: f64,
    pub random_modes: usize,
}

impl KahlerSpace {
    pub fn new(bg: SurfaceBackground) -> Self {
        Self {
            bg,
            settings: GeodesicSettings::default(),
            random_amplitude: 1e-2,
            random_modes: 3,
        }
    }

    pub fn with_settings(mut self, settings: GeodesicSettings) -> Result<Self> {
        settings.validate()?;
        self.settings = settings;
        Ok(self)
    }

    pub fn background(&self) -> &SurfaceBackground {
        &self.bg
    }

    pub fn settings(&self) -> &GeodesicSettings {
        &self.settings
    }

    /// `r = γ̇(1) − τ (s_ψ − s̄)` with the density of `ψ`.
    fn residual_field(&self, anchor: &Potential, current: &Potential, tau: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let density = self.bg.density(current)?;
        let velocity = if anchor == current {
            vec![0.0; self.bg.n()]
        } else {
            endpoint_velocity(&self.bg, anchor, current, &self.settings)?
        };
        let flow = calabi_velocity(&self.bg, current)?;
        let r = velocity.iter().zip(&flow).map(|(v, f)| v - tau * f).collect();
        Ok((r, density))
    }

    fn l2(&self, f: &[f64]) -> f64 {
        self.bg.integrate(&f.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt()
    }
}

impl MetricSpace for KahlerSpace {
    type Point = Potential;

    fn distance(&self, p: &Potential, q: &Potential) -> Result<f64> {
        mabuchi_distance_with(&self.bg, p, q, &self.settings)
    }

    fn geodesic(&self, p: &Potential, q: &Potential, s: f64) -> Result<Potential> {
        geodesic_point(&self.bg, p, q, s, &self.settings)
    }

    fn functional(&self, p: &Potential) -> Result<f64> {
        k_energy(&self.bg, p)
    }

    fn functional_name(&self) -> &str {
        "k-energy"
    }
}

impl RandomPoints for KahlerSpace {
    fn random_point(&self, rng: &mut dyn RngCore) -> Potential {
        // amplitudes ≤ a/k³ keep |φ_xx| ≤ 4π²a ζ(1) ≪ ω for the default a
        self.bg
            .random_potential(rng, self.random_amplitude, self.random_modes)
            .unwrap_or_else(|_| self.bg.zero())
    }
}

impl ProximalSpace for KahlerSpace {
    type Tangent = Vec<f64>;

    fn proximal_step(&self, anchor: &Potential, current: &Potential, tau: f64) -> Result<ProximalStep<Vec<f64>>> {
        let (r, density) = self.residual_field(anchor, current, tau)?;
        // dF[δ] = (1/τ) ∫ r δ ω_ψ; precondition by the linearised fourth-order
        // operator so that the step is well scaled for every τ.
        let g: Vec<f64> = r.iter().zip(&density).map(|(r, d)| r * d).collect();
        let w = self.bg.volume();
        let two_pi = 2.0 * std::f64::consts::PI;
        let direction: Vec<f64> = self
            .bg
            .grid()
            .apply_multiplier(&g, |k| {
                let k4 = (two_pi * k as f64).powi(4);
                -1.0 / (w * (1.0 + tau * k4 / (w * w)))
            });
        let slope = self.bg.integrate(&g.iter().zip(&direction).map(|(a, b)| a * b).collect::<Vec<_>>()) / tau;
        let residual = self.l2(&direction) / tau;
        Ok(ProximalStep {
            direction,
            slope,
            residual,
        })
    }

    fn retract(&self, anchor: &Potential, current: &Potential, direction: &Vec<f64>, alpha: f64) -> Result<Potential> {
        if direction.len() != self.bg.n() {
            return Err(SpaceError::InvalidArgument("direction has the wrong length".into()));
        }
        let moved = Potential::from_values(
            current
                .values()
                .iter()
                .zip(direction)
                .map(|(p, d)| p + alpha * d)
                .collect(),
        );
        // the minimizer keeps I fixed: ∫ γ̇(1) ω_ψ = I(ψ) − I(anchor)
        let moved = normalize_to(&self.bg, &moved, functional_i(&self.bg, anchor));
        self.bg.density(&moved)?;
        Ok(moved)
    }

    fn euler_lagrange_residual(&self, anchor: &Potential, current: &Potential, tau: f64) -> Result<f64> {
        let (r, _) = self.residual_field(anchor, current, tau)?;
        Ok(self.l2(&r) / tau)
    }

    fn perturb(&self, p: &Potential, scale: f64, rng: &mut dyn RngCore) -> Result<Potential> {
        let delta = self.bg.random_potential(rng, scale, self.random_modes)?;
        let values = p.values().iter().zip(delta.values()).map(|(a, b)| a + b).collect();
        let q = self.bg.potential(values)?;
        Ok(normalize_to(&self.bg, &q, functional_i(&self.bg, p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{resolvent, ResolventConfig};
    use crate::kahler::FourierMode;

    fn space() -> KahlerSpace {
        KahlerSpace::new(SurfaceBackground::flat(32).unwrap())
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let sp = space();
        let out = resolvent(&sp, &sp.background().zero(), &ResolventConfig::new(1e-3).unwrap()).unwrap();
        assert!(out.point.values().iter().all(|v| v.abs() < 1e-14));
        assert!(out.certified);
    }

    #[test]
    fn resolvent_decreases_energy_and_amplitude() {
        let sp = space();
        let phi = sp.background().potential_from_modes(0.0, &[FourierMode::cosine(1, 1e-4)]).unwrap();
        let tau = 1e-5;
        let out = resolvent(&sp, &phi, &ResolventConfig::new(tau).unwrap()).unwrap();
        assert!(out.certified, "residual {}", out.residual);
        assert!(out.objective <= out.anchor_objective);
        // implicit Euler for φ_t = −φ_xxxx on mode 1
        let expected = 1e-4 / (1.0 + tau * (2.0 * std::f64::consts::PI).powi(4));
        let c = sp.background().grid().forward(out.point.values());
        let got = 2.0 * c[1].re / 32.0;
        assert!((got - expected).abs() < 1e-4 * expected, "{got} vs {expected}");
        assert!(out.euler_lagrange < 1e-5, "{}", out.euler_lagrange);
    }

    #[test]
    fn retract_preserves_i() {
        let sp = space();
        let bg = sp.background();
        let phi = bg.potential_from_modes(0.3, &[FourierMode::cosine(2, 1e-3)]).unwrap();
        let dir = vec![1e-3; bg.n()];
        let moved = sp.retract(&phi, &phi, &dir, 1.0).unwrap();
        assert!((functional_i(bg, &moved) - functional_i(bg, &phi)).abs() < 1e-14);
    }
}

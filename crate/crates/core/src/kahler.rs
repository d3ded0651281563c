//! Circle-symmetric Kähler potentials on a Riemann-surface background.
//!
//! A potential is a periodic grid function `φ(x_k)`, `x_k = k/N`. The deformed
//! volume density is `ω + φ_xx`, and all functionals reduce to quadratures on
//! the circle evaluated with spectral derivatives.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpaceError};
use crate::spectral::SpectralGrid;

/// Default lower bound for the deformed density `ω + φ_xx`.
pub const DEFAULT_POSITIVITY_FLOOR: f64 = 1e-6;
/// Band-limit threshold on the top third of the spectrum.
pub const BAND_LIMIT_RATIO: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SurfaceBackground {
    id: String,
    grid: SpectralGrid,
    omega: Vec<f64>,
    ricci: Vec<f64>,
    volume: f64,
    s_bar: f64,
    positivity_floor: f64,
}

impl SurfaceBackground {
    pub fn new(id: impl Into<String>, n: usize, omega: Vec<f64>, ricci: Vec<f64>) -> Result<Self> {
        let grid = SpectralGrid::new(n)?;
        if omega.len() != n || ricci.len() != n {
            return Err(SpaceError::InvalidArgument(format!(
                "background densities must have {n} samples"
            )));
        }
        if let Some((index, &density)) = omega
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0 && w.is_finite()))
        {
            return Err(SpaceError::Positivity {
                index,
                density,
                floor: 0.0,
            });
        }
        if ricci.iter().any(|r| !r.is_finite()) {
            return Err(SpaceError::InvalidArgument("ricci density must be finite".into()));
        }
        let volume = grid.mean(&omega);
        let s_bar = grid.mean(&ricci) / volume;
        Ok(Self {
            id: id.into(),
            grid,
            omega,
            ricci,
            volume,
            s_bar,
            positivity_floor: DEFAULT_POSITIVITY_FLOOR,
        })
    }

    /// Flat torus: `ω ≡ 1`, `ρ ≡ 0`.
    pub fn flat(n: usize) -> Result<Self> {
        Self::new("flat", n, vec![1.0; n], vec![0.0; n])
    }

    /// Unit volume density with constant Ricci density `r` (sign of `r`
    /// models the sign of the first Chern class).
    pub fn constant_ricci(n: usize, r: f64) -> Result<Self> {
        Self::new(format!("ricci{r:+}"), n, vec![1.0; n], vec![r; n])
    }

    /// Background sampled from densities given as functions of `x ∈ [0, 1)`.
    pub fn from_fn(
        id: impl Into<String>,
        n: usize,
        omega: impl Fn(f64) -> f64,
        ricci: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let nodes = SpectralGrid::new(n)?.nodes();
        Self::new(
            id,
            n,
            nodes.iter().map(|&x| omega(x)).collect(),
            nodes.iter().map(|&x| ricci(x)).collect(),
        )
    }

    pub fn with_positivity_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0) {
            return Err(SpaceError::InvalidArgument(format!(
                "positivity floor must be positive, got {floor}"
            )));
        }
        self.positivity_floor = floor;
        Ok(self)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn ricci(&self) -> &[f64] {
        &self.ricci
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Mean scalar curvature `s̄`, fixed for every potential.
    pub fn mean_scalar_curvature(&self) -> f64 {
        self.s_bar
    }

    pub fn recompute_mean_scalar_curvature(&self) -> f64 {
        self.grid.mean(&self.ricci) / self.grid.mean(&self.omega)
    }

    pub fn positivity_floor(&self) -> f64 {
        self.positivity_floor
    }

    /// The constant weight when `ω` is constant (metric-flat background).
    pub fn flat_weight(&self) -> Option<f64> {
        let w0 = self.omega[0];
        self.omega
            .iter()
            .all(|w| (w - w0).abs() <= 1e-14 * w0)
            .then_some(w0)
    }

    /// `∫ f dx` over the circle.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.grid.mean(f)
    }

    /// Wraps grid values after checking length and positivity.
    pub fn potential(&self, values: Vec<f64>) -> Result<Potential> {
        if values.len() != self.n() {
            return Err(SpaceError::InvalidArgument(format!(
                "potential has {} samples, background has {}",
                values.len(),
                self.n()
            )));
        }
        let p = Potential { values };
        self.density(&p)?;
        Ok(p)
    }

    /// `φ = c + Σ a_k cos(2πkx) + b_k sin(2πkx)` sampled on the grid.
    pub fn potential_from_modes(&self, constant: f64, modes: &[FourierMode]) -> Result<Potential> {
        let values = self
            .grid
            .nodes()
            .iter()
            .map(|&x| {
                constant
                    + modes
                        .iter()
                        .map(|m| {
                            let th = 2.0 * PI * m.k as f64 * x;
                            m.cos * th.cos() + m.sin * th.sin()
                        })
                        .sum::<f64>()
            })
            .collect();
        self.potential(values)
    }

    /// Random band-limited potential with `modes` Fourier modes whose
    /// amplitudes are at most `amplitude / k³`.
    pub fn random_potential(&self, rng: &mut dyn RngCore, amplitude: f64, modes: usize) -> Result<Potential> {
        let list: Vec<FourierMode> = (1..=modes as u32)
            .map(|k| {
                let scale = amplitude / (k as f64).powi(3);
                FourierMode {
                    k,
                    cos: scale * rng.gen_range(-1.0..1.0),
                    sin: scale * rng.gen_range(-1.0..1.0),
                }
            })
            .collect();
        self.potential_from_modes(0.0, &list)
    }

    pub fn zero(&self) -> Potential {
        Potential {
            values: vec![0.0; self.n()],
        }
    }

    /// Deformed density `ω + φ_xx`, rejected if it drops to the floor.
    pub fn density(&self, phi: &Potential) -> Result<Vec<f64>> {
        let pxx = self.grid.derivative(&phi.values, 2);
        let density: Vec<f64> = self.omega.iter().zip(&pxx).map(|(w, d)| w + d).collect();
        let (index, &worst) = density
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is non-empty");
        if !(worst > self.positivity_floor) {
            return Err(SpaceError::Positivity {
                index,
                density: worst,
                floor: self.positivity_floor,
            });
        }
        Ok(density)
    }

    pub fn check_band_limit(&self, phi: &Potential) -> Result<()> {
        let ratio = self.grid.top_third_ratio(&phi.values);
        if ratio > BAND_LIMIT_RATIO {
            return Err(SpaceError::BandLimit { ratio });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: u32,
    pub cos: f64,
    pub sin: f64,
}

impl FourierMode {
    pub fn cosine(k: u32, amplitude: f64) -> Self {
        Self {
            k,
            cos: amplitude,
            sin: 0.0,
        }
    }
}

/// Grid-sampled potential. Admissibility is relative to a background and
/// checked by the operations that need it.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    values: Vec<f64>,
}

impl Potential {
    /// Unchecked constructor; see [`SurfaceBackground::potential`].
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shifted(&self, c: f64) -> Potential {
        Potential {
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    pub fn sup_distance(&self, other: &Potential) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `(ω + φ_xx) / ω`.
pub fn volume_ratio(bg: &SurfaceBackground, phi: &Potential) -> Result<Vec<f64>> {
    let density = bg.density(phi)?;
    Ok(density.iter().zip(bg.omega()).map(|(d, w)| d / w).collect())
}

/// `s_φ = (ρ − (log ratio)_xx) / (ω + φ_xx)`. The Ricci density enters with
/// unit coefficient, which keeps `∫ s_φ (ω + φ_xx)` independent of `φ`.
pub fn scalar_curvature(bg: &SurfaceBackground, phi: &Potential) -> Result<Vec<f64>> {
    let density = bg.density(phi)?;
    Ok(curvature_from_density(bg, &density))
}

fn curvature_from_density(bg: &SurfaceBackground, density: &[f64]) -> Vec<f64> {
    let log_ratio: Vec<f64> = density
        .iter()
        .zip(bg.omega())
        .map(|(d, w)| (d / w).ln())
        .collect();
    let lxx = bg.grid().derivative(&log_ratio, 2);
    bg.ricci()
        .iter()
        .zip(&lxx)
        .zip(density)
        .map(|((r, l), d)| (r - l) / d)
        .collect()
}

/// `I(φ) = ∫ φ ω + ½ ∫ φ φ_xx`, normalised by `I(0) = 0` and `dI = ∫ · ω_φ`.
pub fn functional_i(bg: &SurfaceBackground, phi: &Potential) -> f64 {
    let pxx = bg.grid().derivative(phi.values(), 2);
    let integrand: Vec<f64> = phi
        .values()
        .iter()
        .zip(bg.omega())
        .zip(&pxx)
        .map(|((p, w), d)| p * w + 0.5 * p * d)
        .collect();
    bg.integrate(&integrand)
}

/// `J(φ) = −∫ φ ρ`, the straight-path integral of `−∫ φ̇ ρ`.
pub fn functional_j(bg: &SurfaceBackground, phi: &Potential) -> f64 {
    let integrand: Vec<f64> = phi.values().iter().zip(bg.ricci()).map(|(p, r)| -p * r).collect();
    bg.integrate(&integrand)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub i: f64,
    pub j: f64,
    pub i_a: f64,
    pub j_a: f64,
    pub nu: f64,
    pub calabi_energy: f64,
    pub log_volume_integral: f64,
    /// `|I(φ)| <= 1e-12 · V`.
    pub mean_normalized: bool,
}

impl FunctionalReport {
    /// Flat `key = value` text, one entry per line.
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in [
            ("I", self.i),
            ("J", self.j),
            ("I_A", self.i_a),
            ("J_A", self.j_a),
            ("nu", self.nu),
            ("calabi_energy", self.calabi_energy),
            ("log_volume_integral", self.log_volume_integral),
        ] {
            let _ = writeln!(out, "{k} = {v:e}");
        }
        let _ = writeln!(out, "mean_normalized = {}", self.mean_normalized);
        out
    }
}

pub fn evaluate_functionals(bg: &SurfaceBackground, phi: &Potential) -> Result<FunctionalReport> {
    let density = bg.density(phi)?;
    let grid = bg.grid();
    let v = bg.volume();
    let i = functional_i(bg, phi);
    let j = functional_j(bg, phi);

    // I^A = (1/V) ∫ φ (ω − ω_φ) and J^A = (1/2V) ∫ φ_x²: two routes whose
    // ratio is exactly 2 in complex dimension one.
    let pxx = grid.derivative(phi.values(), 2);
    let px = grid.derivative(phi.values(), 1);
    let i_a = -bg.integrate(&phi.values().iter().zip(&pxx).map(|(p, d)| p * d).collect::<Vec<_>>()) / v;
    let j_a = 0.5 * bg.integrate(&px.iter().map(|d| d * d).collect::<Vec<_>>()) / v;

    let log_volume_integral = entropy(bg, &density);
    let nu = log_volume_integral + j + bg.mean_scalar_curvature() * i;

    let s = curvature_from_density(bg, &density);
    let s_bar = bg.mean_scalar_curvature();
    let calabi_energy = bg.integrate(
        &s.iter()
            .zip(&density)
            .map(|(s, d)| (s - s_bar).powi(2) * d)
            .collect::<Vec<_>>(),
    );
    Ok(FunctionalReport {
        i,
        j,
        i_a,
        j_a,
        nu,
        calabi_energy,
        log_volume_integral,
        mean_normalized: i.abs() <= 1e-12 * v,
    })
}

/// `(1 + x) log(1 + x) − x`, summed as a series near 0 where the closed form
/// cancels.
fn entropy_density(x: f64) -> f64 {
    if x.abs() > 0.25 {
        return (1.0 + x) * x.ln_1p() - x;
    }
    // Σ_{k≥2} (−x)^k / (k (k−1))
    let mut sum = 0.0;
    let mut pow = x * x;
    for k in 2..60 {
        let term = pow / (k * (k - 1)) as f64;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        pow *= -x;
    }
    sum
}

/// `∫ log(ω_φ/ω) ω_φ`, written as `∫ ω [(1+x) log(1+x) − x]` with
/// `x = φ_xx / ω`; the dropped term `∫ φ_xx` vanishes on the circle.
fn entropy(bg: &SurfaceBackground, density: &[f64]) -> f64 {
    bg.integrate(
        &density
            .iter()
            .zip(bg.omega())
            .map(|(d, w)| w * entropy_density((d - w) / w))
            .collect::<Vec<_>>(),
    )
}

/// K-energy `ν(φ)` in its explicit entropy + J + s̄ I form.
pub fn k_energy(bg: &SurfaceBackground, phi: &Potential) -> Result<f64> {
    let density = bg.density(phi)?;
    Ok(entropy(bg, &density) + functional_j(bg, phi) + bg.mean_scalar_curvature() * functional_i(bg, phi))
}

/// Calabi energy `∫ (s_φ − s̄)² ω_φ`.
pub fn calabi_energy(bg: &SurfaceBackground, phi: &Potential) -> Result<f64> {
    let density = bg.density(phi)?;
    let s = curvature_from_density(bg, &density);
    let s_bar = bg.mean_scalar_curvature();
    Ok(bg.integrate(
        &s.iter()
            .zip(&density)
            .map(|(s, d)| (s - s_bar).powi(2) * d)
            .collect::<Vec<_>>(),
    ))
}

/// Calabi flow velocity `s_φ − s̄`; `dν(φ)[ψ] = −∫ (s_φ − s̄) ψ ω_φ`.
pub fn calabi_velocity(bg: &SurfaceBackground, phi: &Potential) -> Result<Vec<f64>> {
    let s_bar = bg.mean_scalar_curvature();
    Ok(scalar_curvature(bg, phi)?.into_iter().map(|s| s - s_bar).collect())
}

/// Shift by a constant so that `I = 0`. Idempotent.
pub fn mean_normalize(bg: &SurfaceBackground, phi: &Potential) -> Potential {
    // I(φ + c) = I(φ) + cV
    phi.shifted(-functional_i(bg, phi) / bg.volume())
}

/// Shift by a constant so that `I` takes the given value.
pub fn normalize_to(bg: &SurfaceBackground, phi: &Potential, target_i: f64) -> Potential {
    phi.shifted((target_i - functional_i(bg, phi)) / bg.volume())
}

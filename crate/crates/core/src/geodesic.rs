//! Geodesics of the reduced Mabuchi metric.
//!
//! With circle symmetry in complex dimension one the geodesic equation reads
//! `(ω + φ_xx) φ_tt − φ_tx² = 0`. On a metric-flat background (`ω ≡ w`) it is
//! linearised by the Legendre transform of `ψ(x) = w x²/2 + φ(x)`: the duals
//! of the slices interpolate linearly in `t`. Every slice value, velocity and
//! density is then obtained from one scalar root per grid point, with the
//! endpoints evaluated through their exact trigonometric interpolants.
//!
//! For general backgrounds the ε-regularised equation
//! `(ω + φ_xx) φ_tt − φ_tx² = ε ω` is solved by damped Newton on the
//! space-time grid, and distances are Richardson-extrapolated in ε.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpaceError};
use crate::kahler::{Potential, SurfaceBackground};
use crate::spectral::FourierSeries;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSettings {
    /// Number of time intervals; a path carries `m_t + 1` slices.
    pub m_t: usize,
    /// Relative regularisation: curved-background quantities extrapolate
    /// from `ε ∈ {h, 2h, 4h}` with `h = richardson_h · ‖φ1 − φ0‖_{L²(ω)}`.
    pub richardson_h: f64,
    /// Sup-norm residual target of the space-time Newton solve.
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for GeodesicSettings {
    fn default() -> Self {
        Self {
            m_t: 64,
            richardson_h: 1e-3,
            newton_tol: 1e-10,
            max_newton: 40,
        }
    }
}

impl GeodesicSettings {
    pub fn validate(&self) -> Result<()> {
        if self.m_t < 2 {
            return Err(SpaceError::InvalidArgument(format!("m_t must be >= 2, got {}", self.m_t)));
        }
        if !(self.richardson_h > 0.0) || !(self.newton_tol > 0.0) {
            return Err(SpaceError::InvalidArgument(
                "richardson_h and newton_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VelocityKind {
    /// Velocities from the Legendre representation.
    Exact,
    /// Velocities from finite differences in `t`.
    FiniteDifference,
}

/// Space-time samples of a geodesic, `slices[m]` at `times[m] = m / m_t`.
#[derive(Clone, Debug)]
pub struct GeodesicPath {
    pub times: Vec<f64>,
    pub slices: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    /// Energy element `E(t) = ∫ φ̇² (ω + φ_xx)` per slice.
    pub energy: Vec<f64>,
    /// Regularisation; `0` for exact geodesics.
    pub epsilon: f64,
    /// Final residual of the solver that produced the path.
    pub solver_residual: f64,
    pub velocity_kind: VelocityKind,
}

impl GeodesicPath {
    pub fn slice_count(&self) -> usize {
        self.slices.len()
    }

    pub fn m_t(&self) -> usize {
        self.slices.len() - 1
    }

    pub fn slice(&self, m: usize) -> Potential {
        Potential::from_values(self.slices[m].clone())
    }

    /// `max_m E(t_m) − min_m E(t_m)`.
    pub fn energy_drift(&self) -> f64 {
        let (lo, hi) = self
            .energy
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        hi - lo
    }

    /// Trapezoidal length `∫ √E dt`.
    pub fn length(&self) -> f64 {
        let dt = 1.0 / self.m_t() as f64;
        let roots: Vec<f64> = self.energy.iter().map(|e| e.max(0.0).sqrt()).collect();
        let inner: f64 = roots[1..roots.len() - 1].iter().sum();
        dt * (inner + 0.5 * (roots[0] + roots[roots.len() - 1]))
    }

    /// Velocity at `t = 0` or `t = 1` from the one-sided three-point stencil.
    pub fn endpoint_velocity_stencil(&self, at_end: bool) -> Vec<f64> {
        let m = self.m_t();
        let dt = 1.0 / m as f64;
        let (a, b, c, sign) = if at_end {
            (&self.slices[m], &self.slices[m - 1], &self.slices[m - 2], 1.0)
        } else {
            (&self.slices[0], &self.slices[1], &self.slices[2], -1.0)
        };
        a.iter()
            .zip(b)
            .zip(c)
            .map(|((a, b), c)| sign * (3.0 * a - 4.0 * b + c) / (2.0 * dt))
            .collect()
    }

    /// Sup-norm residual of `(ω + φ_xx) φ_tt − φ_tx² − ε ω` on interior
    /// slices, with spectral `x`-derivatives and centred differences in `t`.
    pub fn hcma_residual(&self, bg: &SurfaceBackground) -> f64 {
        let grid = bg.grid();
        let m = self.m_t();
        let dt = 1.0 / m as f64;
        let mut worst = 0.0_f64;
        for i in 1..m {
            let pxx = grid.derivative(&self.slices[i], 2);
            let (ptt, ptx): (Vec<f64>, Vec<f64>) = match self.velocity_kind {
                VelocityKind::Exact => (
                    self.velocities[i + 1]
                        .iter()
                        .zip(&self.velocities[i - 1])
                        .map(|(p, q)| (p - q) / (2.0 * dt))
                        .collect(),
                    grid.derivative(&self.velocities[i], 1),
                ),
                VelocityKind::FiniteDifference => {
                    let ptt = (0..bg.n())
                        .map(|k| {
                            (self.slices[i + 1][k] - 2.0 * self.slices[i][k] + self.slices[i - 1][k])
                                / (dt * dt)
                        })
                        .collect();
                    let diff: Vec<f64> = self.slices[i + 1]
                        .iter()
                        .zip(&self.slices[i - 1])
                        .map(|(p, q)| (p - q) / (2.0 * dt))
                        .collect();
                    (ptt, grid.derivative(&diff, 1))
                }
            };
            for k in 0..bg.n() {
                let w = bg.omega()[k];
                let r = (w + pxx[k]) * ptt[k] - ptx[k] * ptx[k] - self.epsilon * w;
                worst = worst.max(r.abs());
            }
        }
        worst
    }
}

/// Legendre-side description of an endpoint on a flat background of weight
/// `w`: the strictly increasing map `x ↦ w x + φ_x(x)` and the interpolant
/// of `φ` used to invert it.
#[derive(Clone, Debug)]
pub struct LegendreProfile {
    weight: f64,
    psi_prime: Vec<f64>,
    series: FourierSeries,
    slope_bound: f64,
}

impl LegendreProfile {
    pub fn new(bg: &SurfaceBackground, phi: &Potential) -> Result<Self> {
        let weight = bg.flat_weight().ok_or_else(|| {
            SpaceError::InvalidArgument("Legendre geodesics need a metric-flat background".into())
        })?;
        bg.density(phi)?;
        let grid = bg.grid();
        let px = grid.derivative(phi.values(), 1);
        let psi_prime: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(&px)
            .map(|(x, d)| weight * x + d)
            .collect();
        if let Some(index) = psi_prime.windows(2).position(|w| w[1] <= w[0]) {
            return Err(SpaceError::Monotonicity { t: f64::NAN, index });
        }
        let slope_bound = px.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        Ok(Self {
            weight,
            psi_prime,
            series: grid.interpolant(phi.values()),
            slope_bound,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `x ↦ w x + φ_x(x)` on the grid.
    pub fn psi_prime(&self) -> &[f64] {
        &self.psi_prime
    }

    /// Solves `w y + φ'(y) = p`.
    pub fn invert(&self, p: f64) -> Result<f64> {
        let w = self.weight;
        let span = 1.1 * self.slope_bound / w + 1e-12;
        let mut lo = p / w - span;
        let mut hi = p / w + span;
        let mut y = p / w;
        for _ in 0..100 {
            let [_, d1, d2] = self.series.eval(y);
            let r = w * y + d1 - p;
            let c = w + d2;
            if c <= 0.0 {
                return Err(SpaceError::Monotonicity { t: f64::NAN, index: 0 });
            }
            if r > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let mut next = y - r / c;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - y).abs() <= 1e-15 * (1.0 + y.abs()) {
                return Ok(next);
            }
            y = next;
        }
        Ok(y)
    }

    /// Legendre dual `u(p) = p y − w y²/2 − φ(y)` with `y = (ψ')⁻¹(p)`.
    pub fn dual(&self, p: f64) -> Result<f64> {
        let y = self.invert(p)?;
        Ok(p * y - 0.5 * self.weight * y * y - self.series.value(y))
    }
}

/// Per-grid-point state of a Legendre slice.
#[derive(Clone, Copy, Debug)]
struct PointState {
    s: f64,
    value: f64,
    velocity: f64,
    density: f64,
}

/// Values, velocities and densities of the geodesic slice at `t`.
#[derive(Clone, Debug)]
pub struct LegendreSlice {
    pub values: Vec<f64>,
    pub velocity: Vec<f64>,
    pub density: Vec<f64>,
}

impl LegendreSlice {
    pub fn energy(&self, bg: &SurfaceBackground) -> f64 {
        bg.integrate(
            &self
                .velocity
                .iter()
                .zip(&self.density)
                .map(|(v, d)| v * v * d)
                .collect::<Vec<_>>(),
        )
    }
}

/// Solves for the point `x` on slice `t`: find `s` with
/// `w s = φ0'(x − t s) − φ1'(x + (1 − t) s)`, so that `y0 = x − ts` and
/// `y1 = x + (1−t)s` share the same Legendre slope and average to `x`.
fn solve_point(
    from: &LegendreProfile,
    to: &LegendreProfile,
    x: f64,
    t: f64,
    guess: f64,
) -> std::result::Result<PointState, ()> {
    let w = from.weight;
    let bound = 1.05 * (from.slope_bound + to.slope_bound) / w + 1e-12;
    let (mut lo, mut hi) = (-bound, bound);
    let fixed0 = (t == 0.0).then(|| from.series.eval(x));
    let fixed1 = (t == 1.0).then(|| to.series.eval(x));
    let mut s = guess.clamp(lo, hi);
    for _ in 0..100 {
        let y0 = x - t * s;
        let y1 = x + (1.0 - t) * s;
        let [f0, d0, dd0] = fixed0.unwrap_or_else(|| from.series.eval(y0));
        let [f1, d1, dd1] = fixed1.unwrap_or_else(|| to.series.eval(y1));
        let c0 = w + dd0;
        let c1 = w + dd1;
        if c0 <= 0.0 || c1 <= 0.0 {
            return Err(());
        }
        let r = -w * s + d0 - d1;
        let slope = t * c0 + (1.0 - t) * c1;
        if r > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let step = r / slope;
        if step.abs() <= 1e-15 * (1.0 + s.abs()) || r == 0.0 {
            let d0s = -t * s;
            let d1s = (1.0 - t) * s;
            return Ok(PointState {
                s,
                value: (1.0 - t) * (0.5 * w * d0s * d0s + f0) + t * (0.5 * w * d1s * d1s + f1),
                velocity: 0.5 * w * s * s - s * d0 - f0 + f1,
                density: 1.0 / ((1.0 - t) / c0 + t / c1),
            });
        }
        let mut next = s + step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        s = next;
    }
    Err(())
}

/// Slice of the exact geodesic from `from` to `to` at time `t`.
pub fn legendre_slice(
    bg: &SurfaceBackground,
    from: &LegendreProfile,
    to: &LegendreProfile,
    t: f64,
) -> Result<LegendreSlice> {
    if !(0.0..=1.0).contains(&t) {
        return Err(SpaceError::InvalidArgument(format!("t must lie in [0, 1], got {t}")));
    }
    let n = bg.n();
    let mut out = LegendreSlice {
        values: Vec::with_capacity(n),
        velocity: Vec::with_capacity(n),
        density: Vec::with_capacity(n),
    };
    let mut guess = 0.0;
    for (index, x) in bg.grid().nodes().into_iter().enumerate() {
        let st = solve_point(from, to, x, t, guess).map_err(|_| SpaceError::Monotonicity { t, index })?;
        guess = st.s;
        out.values.push(st.value);
        out.velocity.push(st.velocity);
        out.density.push(st.density);
    }
    Ok(out)
}

/// Exact geodesic on a metric-flat background, sampled on `m_t + 1` slices.
pub fn geodesic_legendre(
    bg: &SurfaceBackground,
    phi0: &Potential,
    phi1: &Potential,
    m_t: usize,
) -> Result<GeodesicPath> {
    if m_t < 2 {
        return Err(SpaceError::InvalidArgument(format!("m_t must be >= 2, got {m_t}")));
    }
    let from = LegendreProfile::new(bg, phi0)?;
    let to = LegendreProfile::new(bg, phi1)?;
    let times: Vec<f64> = (0..=m_t).map(|m| m as f64 / m_t as f64).collect();
    let mut path = GeodesicPath {
        times: times.clone(),
        slices: Vec::with_capacity(m_t + 1),
        velocities: Vec::with_capacity(m_t + 1),
        energy: Vec::with_capacity(m_t + 1),
        epsilon: 0.0,
        solver_residual: 0.0,
        velocity_kind: VelocityKind::Exact,
    };
    for (m, &t) in times.iter().enumerate() {
        let slice = legendre_slice(bg, &from, &to, t)?;
        path.energy.push(slice.energy(bg));
        path.velocities.push(slice.velocity);
        path.slices.push(if m == 0 {
            phi0.values().to_vec()
        } else if m == m_t {
            phi1.values().to_vec()
        } else {
            slice.values
        });
    }
    Ok(path)
}

/// Point at parameter `s` on the exact geodesic.
pub fn legendre_point(bg: &SurfaceBackground, phi0: &Potential, phi1: &Potential, s: f64) -> Result<Potential> {
    if s == 0.0 {
        return Ok(phi0.clone());
    }
    if s == 1.0 {
        return Ok(phi1.clone());
    }
    let from = LegendreProfile::new(bg, phi0)?;
    let to = LegendreProfile::new(bg, phi1)?;
    Ok(Potential::from_values(legendre_slice(bg, &from, &to, s)?.values))
}

/// Oversampling factor for the energy quadrature of [`legendre_distance`].
const ENERGY_OVERSAMPLING: usize = 4;

/// Exact Mabuchi distance on a metric-flat background: `√E(0)`. The energy
/// integrand is evaluated pointwise off the grid, since it varies faster than
/// the potentials when densities come close to zero.
pub fn legendre_distance(bg: &SurfaceBackground, phi0: &Potential, phi1: &Potential) -> Result<f64> {
    if phi0 == phi1 {
        bg.density(phi0)?;
        return Ok(0.0);
    }
    let from = LegendreProfile::new(bg, phi0)?;
    let to = LegendreProfile::new(bg, phi1)?;
    let m = ENERGY_OVERSAMPLING * bg.n();
    let mut sum = 0.0;
    let mut guess = 0.0;
    for j in 0..m {
        let x = j as f64 / m as f64;
        let st = solve_point(&from, &to, x, 0.0, guess).map_err(|_| SpaceError::Monotonicity {
            t: 0.0,
            index: j / ENERGY_OVERSAMPLING,
        })?;
        guess = st.s;
        sum += st.velocity * st.velocity * st.density;
    }
    Ok((sum / m as f64).sqrt())
}

/// Velocity `∂γ/∂t` at `t = 1` of the exact geodesic from `phi0` to `phi1`,
/// together with the density of `phi1`.
pub fn legendre_endpoint_velocity(
    bg: &SurfaceBackground,
    phi0: &Potential,
    phi1: &Potential,
) -> Result<LegendreSlice> {
    let from = LegendreProfile::new(bg, phi0)?;
    let to = LegendreProfile::new(bg, phi1)?;
    legendre_slice(bg, &from, &to, 1.0)
}

/// Solves the ε-geodesic equation with Dirichlet data, retrying with
/// continuation in ε (from 1, halving) when the direct solve diverges.
pub fn geodesic_epsilon(
    bg: &SurfaceBackground,
    phi0: &Potential,
    phi1: &Potential,
    epsilon: f64,
    settings: &GeodesicSettings,
) -> Result<GeodesicPath> {
    settings.validate()?;
    if !(epsilon > 0.0) {
        return Err(SpaceError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    bg.density(phi0)?;
    bg.density(phi1)?;
    let solver = EpsilonSolver::new(bg, phi0, phi1, settings);
    match solver.solve(epsilon, solver.initial_guess(epsilon)) {
        Ok(path) => Ok(path),
        Err(SpaceError::NewtonDivergence { .. }) | Err(SpaceError::Positivity { .. }) => {
            let mut eps = epsilon.max(1.0);
            let mut guess = solver.initial_guess(eps);
            let mut last_good = None;
            loop {
                match solver.solve(eps, guess.clone()) {
                    Ok(path) => {
                        if eps <= epsilon {
                            return Ok(path);
                        }
                        last_good = Some(eps);
                        guess = path.slices.iter().map(|s| DVector::from_column_slice(s)).collect();
                        eps = (0.5 * eps).max(epsilon);
                    }
                    Err(SpaceError::NewtonDivergence { residual, .. }) => {
                        return Err(SpaceError::NewtonDivergence {
                            residual,
                            last_good_epsilon: last_good,
                        })
                    }
                    Err(SpaceError::Positivity { .. }) => {
                        return Err(SpaceError::NewtonDivergence {
                            residual: f64::INFINITY,
                            last_good_epsilon: last_good,
                        })
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Err(e) => Err(e),
    }
}

struct EpsilonSolver<'a> {
    bg: &'a SurfaceBackground,
    settings: &'a GeodesicSettings,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    omega: DVector<f64>,
    start: DVector<f64>,
    end: DVector<f64>,
}

impl<'a> EpsilonSolver<'a> {
    fn new(bg: &'a SurfaceBackground, phi0: &Potential, phi1: &Potential, settings: &'a GeodesicSettings) -> Self {
        let n = bg.n();
        let grid = bg.grid();
        Self {
            bg,
            settings,
            d1: DMatrix::from_row_slice(n, n, &grid.derivative_matrix(1)),
            d2: DMatrix::from_row_slice(n, n, &grid.derivative_matrix(2)),
            omega: DVector::from_column_slice(bg.omega()),
            start: DVector::from_column_slice(phi0.values()),
            end: DVector::from_column_slice(phi1.values()),
        }
    }

    /// Linear interpolation bent by `c t(t−1)/2`, with `c` large enough that
    /// `g φ_tt − φ_tx² >= 2εω` holds everywhere: the linearised operator is
    /// then elliptic from the first Newton step.
    fn initial_guess(&self, eps: f64) -> Vec<DVector<f64>> {
        let m = self.settings.m_t;
        let q = &self.d1 * (&self.end - &self.start);
        let g0 = &self.omega + &self.d2 * &self.start;
        let g1 = &self.omega + &self.d2 * &self.end;
        let mut c = 0.0_f64;
        for k in 0..q.len() {
            let g = g0[k].min(g1[k]);
            c = c.max((2.0 * eps * self.omega[k] + q[k] * q[k]) / g);
        }
        (0..=m)
            .map(|i| {
                let t = i as f64 / m as f64;
                let bend = if i == 0 || i == m { 0.0 } else { 0.5 * c * t * (t - 1.0) };
                (&self.start * (1.0 - t) + &self.end * t).add_scalar(bend)
            })
            .collect()
    }

    fn residual(&self, u: &[DVector<f64>], eps: f64) -> Vec<DVector<f64>> {
        let m = self.settings.m_t;
        let dt = 1.0 / m as f64;
        (1..m)
            .map(|i| {
                let g = &self.omega + &self.d2 * &u[i];
                let a = (&u[i + 1] - &u[i] * 2.0 + &u[i - 1]) / (dt * dt);
                let q = &self.d1 * (&u[i + 1] - &u[i - 1]) / (2.0 * dt);
                g.component_mul(&a) - q.component_mul(&q) - &self.omega * eps
            })
            .collect()
    }

    /// Positive densities on every slice and a positive discrete
    /// discriminant `g φ_tt − φ_tx²` on interior slices.
    fn admissible(&self, u: &[DVector<f64>]) -> bool {
        let floor = self.bg.positivity_floor();
        if !u.iter().all(|s| (&self.omega + &self.d2 * s).iter().all(|d| *d > floor)) {
            return false;
        }
        let m = self.settings.m_t;
        let dt = 1.0 / m as f64;
        (1..m).all(|i| {
            let g = &self.omega + &self.d2 * &u[i];
            let a = (&u[i + 1] - &u[i] * 2.0 + &u[i - 1]) / (dt * dt);
            let q = &self.d1 * (&u[i + 1] - &u[i - 1]) / (2.0 * dt);
            (0..g.len()).all(|k| g[k] * a[k] - q[k] * q[k] > 0.0)
        })
    }

    /// Newton step from the block-tridiagonal Jacobian (block Thomas).
    fn newton_step(&self, u: &[DVector<f64>], r: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        let m = self.settings.m_t;
        let dt = 1.0 / m as f64;
        let k = m - 1;
        let mut c_prime: Vec<DMatrix<f64>> = Vec::with_capacity(k);
        let mut r_prime: Vec<DVector<f64>> = Vec::with_capacity(k);
        for b in 0..k {
            let i = b + 1;
            let g = &self.omega + &self.d2 * &u[i];
            let a = (&u[i + 1] - &u[i] * 2.0 + &u[i - 1]) / (dt * dt);
            let q = &self.d1 * (&u[i + 1] - &u[i - 1]) / (2.0 * dt);
            let gd = DMatrix::from_diagonal(&g) / (dt * dt);
            let qd1 = DMatrix::from_diagonal(&q) * &self.d1 / dt;
            let mut diag = DMatrix::from_diagonal(&a) * &self.d2 - &gd * 2.0;
            let mut rhs = -&r[b];
            if b > 0 {
                let lower = &gd + &qd1;
                diag -= &lower * &c_prime[b - 1];
                rhs -= &lower * &r_prime[b - 1];
            }
            let lu = diag.lu();
            if b + 1 < k {
                let upper = &gd - &qd1;
                c_prime.push(lu.solve(&upper).ok_or(SpaceError::NewtonDivergence {
                    residual: f64::INFINITY,
                    last_good_epsilon: None,
                })?);
            }
            r_prime.push(lu.solve(&rhs).ok_or(SpaceError::NewtonDivergence {
                residual: f64::INFINITY,
                last_good_epsilon: None,
            })?);
        }
        let mut delta = vec![DVector::zeros(self.bg.n()); k];
        delta[k - 1] = r_prime[k - 1].clone();
        for b in (0..k - 1).rev() {
            delta[b] = &r_prime[b] - &c_prime[b] * &delta[b + 1];
        }
        Ok(delta)
    }

    fn solve(&self, eps: f64, mut u: Vec<DVector<f64>>) -> Result<GeodesicPath> {
        let sup = |r: &[DVector<f64>]| r.iter().map(|v| v.amax()).fold(0.0, f64::max);
        let mut r = self.residual(&u, eps);
        let mut norm = sup(&r);
        let mut iters = 0;
        while norm > self.settings.newton_tol {
            if iters >= self.settings.max_newton {
                return Err(SpaceError::NewtonDivergence {
                    residual: norm,
                    last_good_epsilon: None,
                });
            }
            iters += 1;
            let delta = self.newton_step(&u, &r)?;
            let mut alpha = 1.0;
            loop {
                let mut trial = u.clone();
                for (b, d) in delta.iter().enumerate() {
                    trial[b + 1] += d * alpha;
                }
                if self.admissible(&trial) {
                    let tr = self.residual(&trial, eps);
                    let tn = sup(&tr);
                    if tn < norm || tn <= self.settings.newton_tol {
                        u = trial;
                        r = tr;
                        norm = tn;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1.0 / 64.0 {
                    return Err(SpaceError::NewtonDivergence {
                        residual: norm,
                        last_good_epsilon: None,
                    });
                }
            }
        }
        Ok(self.assemble(u, eps, norm))
    }

    fn assemble(&self, u: Vec<DVector<f64>>, eps: f64, residual: f64) -> GeodesicPath {
        let m = self.settings.m_t;
        let dt = 1.0 / m as f64;
        let slices: Vec<Vec<f64>> = u.iter().map(|v| v.as_slice().to_vec()).collect();
        let n = self.bg.n();
        let velocities: Vec<Vec<f64>> = (0..=m)
            .map(|i| {
                (0..n)
                    .map(|k| {
                        if i == 0 {
                            (-3.0 * slices[0][k] + 4.0 * slices[1][k] - slices[2][k]) / (2.0 * dt)
                        } else if i == m {
                            (3.0 * slices[m][k] - 4.0 * slices[m - 1][k] + slices[m - 2][k]) / (2.0 * dt)
                        } else {
                            (slices[i + 1][k] - slices[i - 1][k]) / (2.0 * dt)
                        }
                    })
                    .collect()
            })
            .collect();
        let energy = (0..=m)
            .map(|i| {
                let g = &self.omega + &self.d2 * &u[i];
                self.bg.integrate(
                    &velocities[i]
                        .iter()
                        .zip(g.iter())
                        .map(|(v, g)| v * v * g)
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        GeodesicPath {
            times: (0..=m).map(|i| i as f64 / m as f64).collect(),
            slices,
            velocities,
            energy,
            epsilon: eps,
            solver_residual: residual,
            velocity_kind: VelocityKind::FiniteDifference,
        }
    }
}

/// Richardson weights for `ε ∈ {h, 2h, 4h}` cancelling `O(ε)` and `O(ε²)`.
const RICHARDSON: [f64; 3] = [8.0 / 3.0, -2.0, 1.0 / 3.0];

fn richardson_paths(
    bg: &SurfaceBackground,
    phi0: &Potential,
    phi1: &Potential,
    settings: &GeodesicSettings,
) -> Result<[GeodesicPath; 3]> {
    // the ε-path length expands in powers of ε/d, so ε must sit well below
    // the distance; the L² norm of the difference estimates d
    let diff: Vec<f64> = phi1
        .values()
        .iter()
        .zip(phi0.values())
        .zip(bg.omega())
        .map(|((a, b), w)| (a - b).powi(2) * w)
        .collect();
    let h = settings.richardson_h * bg.integrate(&diff).sqrt().max(1e-12);
    Ok([
        geodesic_epsilon(bg, phi0, phi1, h, settings)?,
        geodesic_epsilon(bg, phi0, phi1, 2.0 * h, settings)?,
        geodesic_epsilon(bg, phi0, phi1, 4.0 * h, settings)?,
    ])
}

/// Mabuchi distance: exact on metric-flat backgrounds, Richardson-extrapolated
/// ε-geodesic length otherwise.
pub fn mabuchi_distance(bg: &SurfaceBackground, phi0: &Potential, phi1: &Potential) -> Result<f64> {
    mabuchi_distance_with(bg, phi0, phi1, &GeodesicSettings::default())
}

pub fn mabuchi_distance_with(
    bg: &SurfaceBackground,
    phi0: &Potential,
    phi1: &Potential,
    settings: &GeodesicSettings,
) -> Result<f64> {
    if bg.flat_weight().is_some() {
        return legendre_distance(bg, phi0, phi1);
    }
    if phi0 == phi1 {
        bg.density(phi0)?;
        return Ok(0.0);
    }
    let paths = richardson_paths(bg, phi0, phi1, settings)?;
    let len: f64 = paths.iter().zip(RICHARDSON).map(|(p, c)| c * p.length()).sum();
    Ok(len.max(0.0))
}

/// Endpoint velocity `∂γ/∂t` at `t = 1` on any background.
pub fn endpoint_velocity(
    bg: &SurfaceBackground,
    phi0: &Potential,
    phi1: &Potential,
    settings: &GeodesicSettings,
) -> Result<Vec<f64>> {
    if bg.flat_weight().is_some() {
        return Ok(legendre_endpoint_velocity(bg, phi0, phi1)?.velocity);
    }
    if phi0 == phi1 {
        return Ok(vec![0.0; bg.n()]);
    }
    let paths = richardson_paths(bg, phi0, phi1, settings)?;
    let mut out = vec![0.0; bg.n()];
    for (p, c) in paths.iter().zip(RICHARDSON) {
        for (o, v) in out.iter_mut().zip(p.endpoint_velocity_stencil(true)) {
            *o += c * v;
        }
    }
    Ok(out)
}

/// Geodesic point at parameter `s` on any background. Off the flat case the
/// Richardson-combined slices are interpolated in `t` by cubic Hermite
/// polynomials.
pub fn geodesic_point(
    bg: &SurfaceBackground,
    phi0: &Potential,
    phi1: &Potential,
    s: f64,
    settings: &GeodesicSettings,
) -> Result<Potential> {
    if bg.flat_weight().is_some() {
        return legendre_point(bg, phi0, phi1, s);
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(SpaceError::InvalidArgument(format!("s must lie in [0, 1], got {s}")));
    }
    if s == 0.0 || phi0 == phi1 {
        return Ok(phi0.clone());
    }
    if s == 1.0 {
        return Ok(phi1.clone());
    }
    let paths = richardson_paths(bg, phi0, phi1, settings)?;
    let m = settings.m_t;
    let dt = 1.0 / m as f64;
    let i = ((s / dt).floor() as usize).min(m - 1);
    let u = (s - i as f64 * dt) / dt;
    let (h00, h10, h01, h11) = (
        2.0 * u.powi(3) - 3.0 * u * u + 1.0,
        u.powi(3) - 2.0 * u * u + u,
        -2.0 * u.powi(3) + 3.0 * u * u,
        u.powi(3) - u * u,
    );
    let mut values = vec![0.0; bg.n()];
    for (p, c) in paths.iter().zip(RICHARDSON) {
        for (k, v) in values.iter_mut().enumerate() {
            let interp = h00 * p.slices[i][k]
                + h10 * dt * p.velocities[i][k]
                + h01 * p.slices[i + 1][k]
                + h11 * dt * p.velocities[i + 1][k];
            *v += c * interp;
        }
    }
    Ok(Potential::from_values(values))
}

/// Lower bound `V^{-1/2} max{∫_{φ>ψ} (φ−ψ) ω_φ, −∫_{φ<ψ} (φ−ψ) ω_ψ}` on the
/// distance between potentials with `I(φ) = I(ψ) = 0`.
pub fn distance_lower_bound(bg: &SurfaceBackground, phi: &Potential, psi: &Potential) -> Result<f64> {
    let dphi = bg.density(phi)?;
    let dpsi = bg.density(psi)?;
    let diff: Vec<f64> = phi.values().iter().zip(psi.values()).map(|(a, b)| a - b).collect();
    let pos = bg.integrate(&diff.iter().zip(&dphi).map(|(d, w)| d.max(0.0) * w).collect::<Vec<_>>());
    let neg = bg.integrate(&diff.iter().zip(&dpsi).map(|(d, w)| (-d).max(0.0) * w).collect::<Vec<_>>());
    Ok(pos.max(neg) / bg.volume().sqrt())
}

/// `dL/ds` for `L(s) = d(anchor, φ(s))`:
/// `E(1)^{-1/2} ∫ (∂γ/∂t)(1) (dφ/ds) ω_{φ(s)}`.
pub fn distance_first_variation(
    bg: &SurfaceBackground,
    anchor: &Potential,
    point: &Potential,
    derivative: &[f64],
    settings: &GeodesicSettings,
) -> Result<f64> {
    if derivative.len() != bg.n() {
        return Err(SpaceError::InvalidArgument("derivative has the wrong length".into()));
    }
    let density = bg.density(point)?;
    let velocity = endpoint_velocity(bg, anchor, point, settings)?;
    let energy = bg.integrate(
        &velocity
            .iter()
            .zip(&density)
            .map(|(v, d)| v * v * d)
            .collect::<Vec<_>>(),
    );
    if energy <= 0.0 {
        return Err(SpaceError::ZeroDistance);
    }
    let pairing = bg.integrate(
        &velocity
            .iter()
            .zip(derivative)
            .zip(&density)
            .map(|((v, d), w)| v * d * w)
            .collect::<Vec<_>>(),
    );
    Ok(pairing / energy.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kahler::FourierMode;

    fn cos(bg: &SurfaceBackground, c: f64, a: f64) -> Potential {
        bg.potential_from_modes(c, &[FourierMode::cosine(1, a)]).unwrap()
    }

    #[test]
    fn identical_endpoints_give_a_constant_path() {
        let bg = SurfaceBackground::flat(32).unwrap();
        let phi = cos(&bg, 0.0, 0.004);
        let path = geodesic_legendre(&bg, &phi, &phi, 8).unwrap();
        for s in &path.slices {
            assert!(Potential::from_values(s.clone()).sup_distance(&phi) < 1e-15);
        }
        assert!(path.energy.iter().all(|e| e.abs() < 1e-28));
        assert_eq!(legendre_distance(&bg, &phi, &phi).unwrap(), 0.0);
    }

    #[test]
    fn constant_shift_moves_linearly() {
        let bg = SurfaceBackground::flat(32).unwrap();
        let c = 0.3;
        let path = geodesic_legendre(&bg, &bg.zero(), &bg.potential(vec![c; 32]).unwrap(), 4).unwrap();
        for (m, s) in path.slices.iter().enumerate() {
            let t = path.times[m];
            assert!(s.iter().all(|v| (v - t * c).abs() < 1e-15));
        }
        for e in &path.energy {
            assert!((e - c * c).abs() < 1e-15);
        }
        let d = legendre_distance(&bg, &bg.zero(), &bg.potential(vec![c; 32]).unwrap()).unwrap();
        assert!((d - c).abs() < 1e-15);
    }

    #[test]
    fn small_cosine_geodesic_solves_hcma() {
        let bg = SurfaceBackground::flat(32).unwrap();
        let path = geodesic_legendre(&bg, &bg.zero(), &cos(&bg, 0.0, 0.005), 64).unwrap();
        assert!(path.hcma_residual(&bg) <= 1e-7, "{}", path.hcma_residual(&bg));
        assert!(path.energy_drift() <= 1e-8 * path.energy[0]);
    }

    #[test]
    fn legendre_dual_inverts_slope() {
        let bg = SurfaceBackground::flat(32).unwrap();
        let prof = LegendreProfile::new(&bg, &cos(&bg, 0.0, 0.01)).unwrap();
        for p in [-0.3, 0.1, 0.77, 1.9] {
            let y = prof.invert(p).unwrap();
            let [_, d1, _] = prof.series.eval(y);
            assert!((y + d1 - p).abs() < 1e-14);
        }
    }

    #[test]
    fn epsilon_geodesic_between_equal_endpoints_is_a_parabola() {
        let bg = SurfaceBackground::flat(16).unwrap();
        let settings = GeodesicSettings { m_t: 16, ..Default::default() };
        let eps = 0.2;
        let path = geodesic_epsilon(&bg, &bg.zero(), &bg.zero(), eps, &settings).unwrap();
        for (m, s) in path.slices.iter().enumerate() {
            let t = path.times[m];
            let expect = eps * t * (t - 1.0) / 2.0;
            assert!(s.iter().all(|v| (v - expect).abs() < 1e-12));
        }
    }

    #[test]
    fn epsilon_geodesic_is_convex_in_time() {
        let bg = SurfaceBackground::flat(16).unwrap();
        let settings = GeodesicSettings { m_t: 32, ..Default::default() };
        let path = geodesic_epsilon(&bg, &cos(&bg, 0.0, 0.004), &cos(&bg, 0.05, -0.003), 1e-2, &settings).unwrap();
        for i in 1..path.m_t() {
            for k in 0..16 {
                assert!(path.slices[i + 1][k] - 2.0 * path.slices[i][k] + path.slices[i - 1][k] >= 0.0);
            }
        }
    }

    #[test]
    fn first_variation_along_constants() {
        let bg = SurfaceBackground::flat(16).unwrap();
        let settings = GeodesicSettings::default();
        let point = bg.potential(vec![0.4; 16]).unwrap();
        let up = distance_first_variation(&bg, &bg.zero(), &point, &[1.0; 16], &settings).unwrap();
        assert!((up - 1.0).abs() < 1e-14);
        let down = distance_first_variation(&bg, &bg.zero(), &point, &[-1.0; 16], &settings).unwrap();
        assert!((down + 1.0).abs() < 1e-14);
        assert!(matches!(
            distance_first_variation(&bg, &point, &point, &[1.0; 16], &settings),
            Err(SpaceError::ZeroDistance)
        ));
    }

    #[test]
    fn curved_background_needs_epsilon_route() {
        let n = 16;
        let omega: Vec<f64> = (0..n)
            .map(|k| 1.0 + 0.1 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        let bg = SurfaceBackground::new("wavy", n, omega, vec![0.0; n]).unwrap();
        assert!(LegendreProfile::new(&bg, &bg.zero()).is_err());
        let settings = GeodesicSettings { m_t: 16, ..Default::default() };
        let c = bg.potential(vec![0.2; n]).unwrap();
        // constants: φ_t = t c solves the equation up to ε, so d(0, c) = c √V
        let d = mabuchi_distance_with(&bg, &bg.zero(), &c, &settings).unwrap();
        assert!((d - 0.2 * bg.volume().sqrt()).abs() < 1e-8, "{d}");
    }
}

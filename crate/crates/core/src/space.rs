//! Geodesic metric spaces carrying a functional, and the comparison
//! inequalities every instantiation is checked against.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpaceError};

/// A geodesic metric space together with the functional being descended.
///
/// Implementations must be pure: no caching across calls and no interior
/// mutability, so distinct instances can be used from several threads.
pub trait MetricSpace: Sync {
    type Point: Clone + Send + Sync;

    fn distance(&self, p: &Self::Point, q: &Self::Point) -> Result<f64>;

    /// Constant-speed geodesic from `p` (at `s = 0`) to `q` (at `s = 1`).
    fn geodesic(&self, p: &Self::Point, q: &Self::Point, s: f64) -> Result<Self::Point>;

    fn functional(&self, p: &Self::Point) -> Result<f64>;

    fn functional_name(&self) -> &str;
}

/// Spaces that can draw random admissible points, for property sweeps.
pub trait RandomPoints: MetricSpace {
    fn random_point(&self, rng: &mut dyn RngCore) -> Self::Point;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative tolerance for metric identities.
    pub tol_metric: f64,
    /// Absolute slack added to inequality right-hand sides.
    pub tol_ineq: f64,
    /// Residual target for inner Newton solves.
    pub tol_newton: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            tol_metric: 1e-8,
            tol_ineq: 1e-6,
            tol_newton: 1e-10,
        }
    }
}

impl ToleranceConfig {
    pub fn new(tol_metric: f64, tol_ineq: f64, tol_newton: f64) -> Result<Self> {
        let cfg = Self {
            tol_metric,
            tol_ineq,
            tol_newton,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol_metric", self.tol_metric),
            ("tol_ineq", self.tol_ineq),
            ("tol_newton", self.tol_newton),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SpaceError::InvalidArgument(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// All tolerances scaled by `factor` (used by strict runs).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            tol_metric: self.tol_metric * factor,
            tol_ineq: self.tol_ineq * factor,
            tol_newton: self.tol_newton * factor,
        }
    }
}

/// Uniform parameter grid on `[0, 1]` including both endpoints.
pub fn sample_grid(samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(SpaceError::InvalidArgument(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let last = (samples - 1) as f64;
    Ok((0..samples).map(|i| i as f64 / last).collect())
}

/// Worst residual of the NPC comparison
/// `d(a, g(s))^2 <= (1-s) d(a,b)^2 + s d(a,c)^2 - s(1-s) d(b,c)^2`
/// where `g` is the geodesic from `b` to `c`. The inequality holds iff the
/// result is at most `tol_ineq`.
pub fn check_npc_triangle<S: MetricSpace + ?Sized>(
    space: &S,
    a: &S::Point,
    b: &S::Point,
    c: &S::Point,
    samples: usize,
) -> Result<f64> {
    let grid = sample_grid(samples)?;
    let dbc = space.distance(b, c)?;
    if dbc == 0.0 {
        return Ok(0.0);
    }
    let dab2 = space.distance(a, b)?.powi(2);
    let dac2 = space.distance(a, c)?.powi(2);
    let mut worst = f64::NEG_INFINITY;
    for s in grid {
        let g = space.geodesic(b, c, s).map_err(|e| SpaceError::at(s, e))?;
        let lhs = space.distance(a, &g).map_err(|e| SpaceError::at(s, e))?.powi(2);
        let rhs = (1.0 - s) * dab2 + s * dac2 - s * (1.0 - s) * dbc * dbc;
        worst = worst.max(lhs - rhs);
    }
    Ok(worst)
}

/// Worst residual of the quadrilateral comparison for the geodesics
/// `x_t` (from `x0` to `x1`) and `y_t` (from `y0` to `y1`):
///
/// `d²(x_t,y0) + d²(x_{1-t},y1) <= d²(x0,y0) + d²(x1,y1) + 2t² d²(x0,x1)
///   + t (d²(y0,y1) - d²(x0,x1)) - t (d(y0,y1) - d(x0,x1))²`.
pub fn check_quadrilateral<S: MetricSpace + ?Sized>(
    space: &S,
    x0: &S::Point,
    x1: &S::Point,
    y0: &S::Point,
    y1: &S::Point,
    samples: usize,
) -> Result<f64> {
    let grid = sample_grid(samples)?;
    let dx = space.distance(x0, x1)?;
    let dy = space.distance(y0, y1)?;
    let d00 = space.distance(x0, y0)?;
    let d11 = space.distance(x1, y1)?;
    if dx == 0.0 && dy == 0.0 {
        // both sides reduce to d²(x0,y0) + d²(x1,y1)
        return Ok(0.0);
    }
    let mut worst = f64::NEG_INFINITY;
    for t in grid {
        let xt = space.geodesic(x0, x1, t).map_err(|e| SpaceError::at(t, e))?;
        let xs = space
            .geodesic(x0, x1, 1.0 - t)
            .map_err(|e| SpaceError::at(t, e))?;
        let lhs = space.distance(&xt, y0).map_err(|e| SpaceError::at(t, e))?.powi(2)
            + space.distance(&xs, y1).map_err(|e| SpaceError::at(t, e))?.powi(2);
        let rhs = d00 * d00 + d11 * d11 + 2.0 * t * t * dx * dx + t * (dy * dy - dx * dx)
            - t * (dy - dx).powi(2);
        worst = worst.max(lhs - rhs);
    }
    Ok(worst)
}

/// Worst residual of `f(x_t) <= (1-t) f(p) + t f(q) + B t(1-t) d²(p,q)` along
/// the geodesic from `p` to `q`.
pub fn check_b_convexity<S: MetricSpace + ?Sized>(
    space: &S,
    p: &S::Point,
    q: &S::Point,
    b: f64,
    samples: usize,
) -> Result<f64> {
    if !(b >= 0.0) {
        return Err(SpaceError::InvalidArgument(format!(
            "convexity constant must be nonnegative, got {b}"
        )));
    }
    let grid = sample_grid(samples)?;
    let d = space.distance(p, q)?;
    if d == 0.0 {
        return Ok(0.0);
    }
    let fp = space.functional(p)?;
    let fq = space.functional(q)?;
    let mut worst = f64::NEG_INFINITY;
    for t in grid {
        let xt = space.geodesic(p, q, t).map_err(|e| SpaceError::at(t, e))?;
        let ft = space.functional(&xt).map_err(|e| SpaceError::at(t, e))?;
        let rhs = (1.0 - t) * fp + t * fq + b * t * (1.0 - t) * d * d;
        worst = worst.max(ft - rhs);
    }
    Ok(worst)
}

/// Residuals of the metric-space contract for one pair: symmetry, endpoint
/// matching and constant speed, each relative to `max(1, d(p,q))`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ContractResiduals {
    pub symmetry: f64,
    pub endpoints: f64,
    pub constant_speed: f64,
}

impl ContractResiduals {
    pub fn worst(&self) -> f64 {
        self.symmetry.max(self.endpoints).max(self.constant_speed)
    }
}

pub fn contract_residuals<S: MetricSpace + ?Sized>(
    space: &S,
    p: &S::Point,
    q: &S::Point,
    samples: usize,
) -> Result<ContractResiduals> {
    let dpq = space.distance(p, q)?;
    let scale = dpq.max(1.0);
    let symmetry = (dpq - space.distance(q, p)?).abs() / scale;
    let start = space.geodesic(p, q, 0.0)?;
    let end = space.geodesic(p, q, 1.0)?;
    let endpoints = space.distance(&start, p)?.max(space.distance(&end, q)?) / scale;
    let mut constant_speed = 0.0_f64;
    for s in sample_grid(samples)? {
        let g = space.geodesic(p, q, s).map_err(|e| SpaceError::at(s, e))?;
        let ds = space.distance(p, &g).map_err(|e| SpaceError::at(s, e))?;
        constant_speed = constant_speed.max((ds - s * dpq).abs() / scale);
    }
    Ok(ContractResiduals {
        symmetry,
        endpoints,
        constant_speed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The real line with `f(x) = x^2 / 2`.
    struct Line;

    impl MetricSpace for Line {
        type Point = f64;
        fn distance(&self, p: &f64, q: &f64) -> Result<f64> {
            Ok((p - q).abs())
        }
        fn geodesic(&self, p: &f64, q: &f64, s: f64) -> Result<f64> {
            Ok((1.0 - s) * p + s * q)
        }
        fn functional(&self, p: &f64) -> Result<f64> {
            Ok(0.5 * p * p)
        }
        fn functional_name(&self) -> &str {
            "half-square"
        }
    }

    #[test]
    fn degenerate_triangle_is_zero() {
        assert_eq!(check_npc_triangle(&Line, &1.0, &1.0, &1.0, 5).unwrap(), 0.0);
    }

    #[test]
    fn flat_line_attains_equality() {
        let r = check_npc_triangle(&Line, &0.0, &1.0, &3.0, 11).unwrap();
        assert!(r.abs() < 1e-12, "{r}");
    }

    #[test]
    fn quadrilateral_cases() {
        assert_eq!(check_quadrilateral(&Line, &2.0, &2.0, &5.0, &5.0, 5).unwrap(), 0.0);
        let r = check_quadrilateral(&Line, &0.0, &1.0, &2.0, &3.0, 11).unwrap();
        assert!(r <= 1e-12, "{r}");
    }

    #[test]
    fn b_convexity_of_half_square() {
        assert_eq!(check_b_convexity(&Line, &1.5, &1.5, 0.0, 3).unwrap(), 0.0);
        // midpoint only: f(1) - (0 + 2)/2 = -0.5
        let grid_mid = check_b_convexity(&Line, &0.0, &2.0, 0.0, 3).unwrap();
        assert!((grid_mid - 0.0).abs() < 1e-15, "endpoints give 0: {grid_mid}");
        let xt = Line.geodesic(&0.0, &2.0, 0.5).unwrap();
        let mid = Line.functional(&xt).unwrap() - 0.5 * (0.0 + Line.functional(&2.0).unwrap());
        assert_eq!(mid, -0.5);
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(check_npc_triangle(&Line, &0.0, &1.0, &2.0, 1).is_err());
        assert!(check_b_convexity(&Line, &0.0, &1.0, -1.0, 3).is_err());
    }

    #[test]
    fn tolerance_validation() {
        assert!(ToleranceConfig::new(1e-8, 0.0, 1e-10).is_err());
        assert!(ToleranceConfig::default().validate().is_ok());
    }
}

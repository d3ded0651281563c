//! Flat finite-dimensional space with a quadratic functional. Every
//! minimizing-movement quantity is available in closed form here, which makes
//! it the ground truth for the generic engine.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, RngCore};

use crate::engine::{ProximalSpace, ProximalStep};
use crate::error::{Result, SpaceError};
use crate::space::{MetricSpace, RandomPoints};

const CONDITION_LIMIT: f64 = 1e12;

/// `f(x) = ½ xᵀ A x − bᵀ x + c` with `A` symmetric positive semidefinite.
#[derive(Clone, Debug)]
pub struct QuadraticFunctional {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl QuadraticFunctional {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d || b.len() != d || d == 0 {
            return Err(SpaceError::InvalidArgument(format!(
                "shape mismatch: A is {}x{}, b has {}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        let asym = (&a - a.transpose()).amax();
        if asym > 1e-12 {
            return Err(SpaceError::InvalidArgument(format!(
                "A is not symmetric (max asymmetry {asym:.3e})"
            )));
        }
        let eigen = SymmetricEigen::new(a.clone());
        let scale = a.amax().max(1.0);
        if let Some(&lo) = eigen.eigenvalues.iter().min_by(|x, y| x.total_cmp(y)) {
            if lo < -1e-12 * scale {
                return Err(SpaceError::InvalidArgument(format!(
                    "A has a negative eigenvalue {lo:.3e}"
                )));
            }
        }
        Ok(Self { a, b, c, eigen })
    }

    /// `f(x) = ½ λ x²` in one dimension.
    pub fn scalar(lambda: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_element(1, 1, lambda),
            DVector::zeros(1),
            0.0,
        )
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.a * x)) - self.b.dot(x) + self.c
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(SpaceError::InvalidArgument(format!(
                "point has dimension {}, functional has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Condition number of `I + τA`.
    pub fn resolvent_condition(&self, tau: f64) -> f64 {
        let (lo, hi) = self
            .eigen
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| {
                (lo.min(l), hi.max(l))
            });
        (1.0 + tau * hi) / (1.0 + tau * lo.max(0.0))
    }

    /// Exact gradient flow `x(t)` of `f` from `x0`, by diagonalising `A`.
    pub fn exact_flow(&self, x0: &DVector<f64>, t: f64) -> DVector<f64> {
        let q = &self.eigen.eigenvectors;
        let y0 = q.transpose() * x0;
        let bt = q.transpose() * &self.b;
        let y = DVector::from_iterator(
            y0.len(),
            (0..y0.len()).map(|i| {
                let l = self.eigen.eigenvalues[i];
                let decay = (-l * t).exp();
                // (1 - e^{-lt}) / l, continuous at l = 0
                let gain = if (l * t).abs() < 1e-12 { t } else { -(-l * t).exp_m1() / l };
                decay * y0[i] + gain * bt[i]
            }),
        );
        q * y
    }
}

/// Closed-form resolvent `argmin_y |y − x|²/2τ + f(y) = (I + τA)⁻¹ (x + τ b)`.
pub fn euclid_resolvent(f: &QuadraticFunctional, x: &DVector<f64>, tau: f64) -> Result<DVector<f64>> {
    f.check_dim(x)?;
    if !(tau > 0.0) {
        return Err(SpaceError::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let cond = f.resolvent_condition(tau);
    if cond > CONDITION_LIMIT {
        return Err(SpaceError::IllConditioned(cond));
    }
    let m = DMatrix::identity(f.dim(), f.dim()) + &f.a * tau;
    let rhs = x + &f.b * tau;
    m.cholesky()
        .map(|ch| ch.solve(&rhs))
        .ok_or(SpaceError::IllConditioned(cond))
}

/// `n` resolvent steps of size `t / n` from `x0`.
pub fn euclid_mayer_iterate(
    f: &QuadraticFunctional,
    x0: &DVector<f64>,
    t: f64,
    n: usize,
) -> Result<DVector<f64>> {
    f.check_dim(x0)?;
    if !(t >= 0.0) || n == 0 {
        return Err(SpaceError::InvalidArgument(format!(
            "need t >= 0 and n >= 1, got t = {t}, n = {n}"
        )));
    }
    if t == 0.0 {
        return Ok(x0.clone());
    }
    let tau = t / n as f64;
    let cond = f.resolvent_condition(tau);
    if cond > CONDITION_LIMIT {
        return Err(SpaceError::IllConditioned(cond));
    }
    let m = DMatrix::identity(f.dim(), f.dim()) + &f.a * tau;
    let chol = m.cholesky().ok_or(SpaceError::IllConditioned(cond))?;
    let shift = &f.b * tau;
    let mut x = x0.clone();
    for _ in 0..n {
        x = chol.solve(&(&x + &shift));
    }
    Ok(x)
}

/// `R^d` with the Euclidean distance and a quadratic functional.
#[derive(Clone, Debug)]
pub struct EuclideanSpace {
    f: QuadraticFunctional,
}

impl EuclideanSpace {
    pub fn new(f: QuadraticFunctional) -> Self {
        Self { f }
    }

    pub fn functional_def(&self) -> &QuadraticFunctional {
        &self.f
    }
}

impl MetricSpace for EuclideanSpace {
    type Point = DVector<f64>;

    fn distance(&self, p: &DVector<f64>, q: &DVector<f64>) -> Result<f64> {
        self.f.check_dim(p)?;
        self.f.check_dim(q)?;
        Ok((p - q).norm())
    }

    fn geodesic(&self, p: &DVector<f64>, q: &DVector<f64>, s: f64) -> Result<DVector<f64>> {
        self.f.check_dim(p)?;
        self.f.check_dim(q)?;
        Ok(p * (1.0 - s) + q * s)
    }

    fn functional(&self, p: &DVector<f64>) -> Result<f64> {
        self.f.check_dim(p)?;
        Ok(self.f.value(p))
    }

    fn functional_name(&self) -> &str {
        "quadratic"
    }
}

impl RandomPoints for EuclideanSpace {
    fn random_point(&self, rng: &mut dyn RngCore) -> DVector<f64> {
        DVector::from_iterator(self.f.dim(), (0..self.f.dim()).map(|_| rng.gen_range(-1.0..1.0)))
    }
}

impl ProximalSpace for EuclideanSpace {
    type Tangent = DVector<f64>;

    fn proximal_step(
        &self,
        anchor: &DVector<f64>,
        current: &DVector<f64>,
        tau: f64,
    ) -> Result<ProximalStep<DVector<f64>>> {
        let grad = (current - anchor) / tau + self.f.gradient(current);
        // Newton direction: (I/τ + A)⁻¹ grad
        let m = DMatrix::identity(self.f.dim(), self.f.dim()) / tau + &self.f.a;
        let cond = self.f.resolvent_condition(tau);
        let newton = m
            .cholesky()
            .map(|ch| ch.solve(&grad))
            .ok_or(SpaceError::IllConditioned(cond))?;
        let direction = -newton;
        Ok(ProximalStep {
            slope: grad.dot(&direction),
            residual: direction.norm() / tau,
            direction,
        })
    }

    fn retract(
        &self,
        _anchor: &DVector<f64>,
        current: &DVector<f64>,
        direction: &DVector<f64>,
        alpha: f64,
    ) -> Result<DVector<f64>> {
        Ok(current + direction * alpha)
    }

    fn euler_lagrange_residual(
        &self,
        anchor: &DVector<f64>,
        current: &DVector<f64>,
        tau: f64,
    ) -> Result<f64> {
        Ok(((current - anchor) / tau + self.f.gradient(current)).norm())
    }

    fn perturb(&self, p: &DVector<f64>, scale: f64, rng: &mut dyn RngCore) -> Result<DVector<f64>> {
        Ok(p + DVector::from_iterator(p.len(), (0..p.len()).map(|_| scale * rng.gen_range(-1.0..1.0))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v1(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn resolvent_scalar_cases() {
        let f = QuadraticFunctional::scalar(1.0).unwrap();
        // argmin (y-2)²/2 + y²/2 = x / (1 + τ)
        assert!((euclid_resolvent(&f, &v1(2.0), 1.0).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((euclid_resolvent(&f, &v1(2.0), 1e-8).unwrap()[0] - 2.0).abs() < 1e-7);

        let g = QuadraticFunctional::new(DMatrix::zeros(1, 1), v1(1.0), 0.0).unwrap();
        // argmin y²/2τ − y = τ
        assert!((euclid_resolvent(&g, &v1(0.0), 0.5).unwrap()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mayer_iterates_closed_form() {
        let f = QuadraticFunctional::scalar(1.0).unwrap();
        let x0 = v1(1.0);
        assert!((euclid_mayer_iterate(&f, &x0, 1.0, 1).unwrap()[0] - 0.5).abs() < 1e-15);
        let two = euclid_mayer_iterate(&f, &x0, 1.0, 2).unwrap()[0];
        assert!((two - (1.0f64 / 1.5).powi(2)).abs() < 1e-15);
        let many = euclid_mayer_iterate(&f, &x0, 1.0, 1 << 14).unwrap()[0];
        assert!((many - (-1.0f64).exp()).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_inputs() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(QuadraticFunctional::new(asym, DVector::zeros(2), 0.0).is_err());
        let neg = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert!(QuadraticFunctional::new(neg, DVector::zeros(1), 0.0).is_err());
        let f = QuadraticFunctional::scalar(1.0).unwrap();
        assert!(euclid_resolvent(&f, &v1(1.0), 0.0).is_err());
        assert!(euclid_mayer_iterate(&f, &v1(1.0), 1.0, 0).is_err());
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1e14]));
        let stiff = QuadraticFunctional::new(a, DVector::zeros(2), 0.0).unwrap();
        assert!(matches!(
            euclid_resolvent(&stiff, &DVector::from_vec(vec![1.0, 1.0]), 1.0),
            Err(SpaceError::IllConditioned(_))
        ));
    }

    #[test]
    fn exact_flow_with_linear_term() {
        // A = 2, b = 4: minimizer 2, x(t) = 2 + (x0 - 2) e^{-2t}
        let f = QuadraticFunctional::new(DMatrix::from_element(1, 1, 2.0), v1(4.0), 0.0).unwrap();
        let x = f.exact_flow(&v1(5.0), 0.3)[0];
        assert!((x - (2.0 + 3.0 * (-0.6f64).exp())).abs() < 1e-14);
        let free = QuadraticFunctional::new(DMatrix::zeros(1, 1), v1(1.5), 0.0).unwrap();
        assert!((free.exact_flow(&v1(0.0), 2.0)[0] - 3.0).abs() < 1e-14);
    }
}

//! Periodic spectral calculus on the uniform grid `x_k = k / N` of the unit circle.
//!
//! The Nyquist mode is discarded by every derivative and by the trigonometric
//! interpolant, so grid derivatives and off-grid evaluation of the interpolant
//! always describe the same band-limited function.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SpaceError};

#[derive(Clone)]
pub struct SpectralGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid").field("n", &self.n).finish()
    }
}

impl SpectralGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(SpaceError::InvalidArgument(format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Grid abscissae `k / N`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| k as f64 / self.n as f64).collect()
    }

    /// Signed integer wavenumber of FFT bin `j`; the Nyquist bin maps to `None`.
    pub fn wavenumber(&self, j: usize) -> Option<i64> {
        let half = self.n / 2;
        match j.cmp(&half) {
            std::cmp::Ordering::Less => Some(j as i64),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(j as i64 - self.n as i64),
        }
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.n);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    pub fn inverse(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.n);
        self.inverse.process(&mut coeffs);
        let scale = 1.0 / self.n as f64;
        coeffs.iter().map(|c| c.re * scale).collect()
    }

    /// Applies a real Fourier multiplier `m(k)` (k the signed wavenumber).
    /// The Nyquist bin is zeroed.
    pub fn apply_multiplier(&self, values: &[f64], multiplier: impl Fn(i64) -> f64) -> Vec<f64> {
        let mut coeffs = self.forward(values);
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c = match self.wavenumber(j) {
                Some(k) => *c * multiplier(k),
                None => Complex64::new(0.0, 0.0),
            };
        }
        self.inverse(coeffs)
    }

    /// Spectral derivative of the given order.
    pub fn derivative(&self, values: &[f64], order: u32) -> Vec<f64> {
        if order == 0 {
            return values.to_vec();
        }
        let mut coeffs = self.forward(values);
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c = match self.wavenumber(j) {
                Some(k) => {
                    let ik = Complex64::new(0.0, 2.0 * PI * k as f64);
                    *c * ik.powu(order)
                }
                None => Complex64::new(0.0, 0.0),
            };
        }
        self.inverse(coeffs)
    }

    /// Dense matrix of the spectral derivative operator (row-major, `n * n`).
    pub fn derivative_matrix(&self, order: u32) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        let mut unit = vec![0.0; n];
        for col in 0..n {
            unit.iter_mut().for_each(|v| *v = 0.0);
            unit[col] = 1.0;
            let d = self.derivative(&unit, order);
            for row in 0..n {
                out[row * n + col] = d[row];
            }
        }
        out
    }

    /// Ratio of the largest coefficient magnitude in the top third of the
    /// spectrum to the largest magnitude overall (mean mode excluded).
    pub fn top_third_ratio(&self, values: &[f64]) -> f64 {
        let coeffs = self.forward(values);
        let half = self.n / 2;
        let cutoff = (2 * half) / 3;
        let mut overall = 0.0_f64;
        let mut top = 0.0_f64;
        for (j, c) in coeffs.iter().enumerate().take(half + 1).skip(1) {
            let mag = c.norm();
            overall = overall.max(mag);
            if j > cutoff {
                top = top.max(mag);
            }
        }
        if overall == 0.0 {
            0.0
        } else {
            top / overall
        }
    }

    /// Trapezoidal mean over the circle.
    pub fn mean(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / self.n as f64
    }

    pub fn interpolant(&self, values: &[f64]) -> FourierSeries {
        let coeffs = self.forward(values);
        let scale = 1.0 / self.n as f64;
        FourierSeries {
            coeffs: coeffs[..self.n / 2].iter().map(|c| c * scale).collect(),
        }
    }
}

/// Trigonometric interpolant of grid data, evaluable anywhere on the real line.
#[derive(Clone, Debug)]
pub struct FourierSeries {
    coeffs: Vec<Complex64>,
}

impl FourierSeries {
    /// Value and first two derivatives at `y`.
    pub fn eval(&self, y: f64) -> [f64; 3] {
        let theta = 2.0 * PI * y;
        let z = Complex64::new(theta.cos(), theta.sin());
        let mut zk = z;
        let mut f = self.coeffs[0].re;
        let mut f1 = 0.0;
        let mut f2 = 0.0;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let term = c * zk;
            let omega = 2.0 * PI * k as f64;
            f += 2.0 * term.re;
            f1 -= 2.0 * omega * term.im;
            f2 -= 2.0 * omega * omega * term.re;
            zk *= z;
        }
        [f, f1, f2]
    }

    pub fn value(&self, y: f64) -> f64 {
        self.eval(y)[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(SpectralGrid::new(12).is_err());
        assert!(SpectralGrid::new(4).is_err());
        assert!(SpectralGrid::new(16).is_ok());
    }

    #[test]
    fn derivatives_of_a_cosine() {
        let g = SpectralGrid::new(32).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| (2.0 * PI * 3.0 * x).cos()).collect();
        let d2 = g.derivative(&f, 2);
        let d4 = g.derivative(&f, 4);
        let w = 2.0 * PI * 3.0;
        for (k, x) in g.nodes().iter().enumerate() {
            let c = (w * x).cos();
            assert!((d2[k] + w * w * c).abs() < 1e-9);
            assert!((d4[k] - w.powi(4) * c).abs() < 1e-6);
        }
    }

    #[test]
    fn interpolant_matches_analytic_off_grid() {
        let g = SpectralGrid::new(16).unwrap();
        let f = |x: f64| 0.3 * (2.0 * PI * x).sin() + 0.1 * (4.0 * PI * x).cos() + 2.0;
        let vals: Vec<f64> = g.nodes().iter().map(|&x| f(x)).collect();
        let s = g.interpolant(&vals);
        for y in [0.013, 0.377, 1.25, -0.4] {
            let [v, d1, d2] = s.eval(y);
            assert!((v - f(y)).abs() < 1e-13);
            let e1 = 0.3 * 2.0 * PI * (2.0 * PI * y).cos() - 0.1 * 4.0 * PI * (4.0 * PI * y).sin();
            let e2 = -0.3 * (2.0 * PI).powi(2) * (2.0 * PI * y).sin()
                - 0.1 * (4.0 * PI).powi(2) * (4.0 * PI * y).cos();
            assert!((d1 - e1).abs() < 1e-12);
            assert!((d2 - e2).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_matrix_agrees_with_fft() {
        let g = SpectralGrid::new(8).unwrap();
        let m = g.derivative_matrix(1);
        let v: Vec<f64> = (0..8).map(|k| (k as f64 * 0.7).sin()).collect();
        let d = g.derivative(&v, 1);
        for r in 0..8 {
            let mv: f64 = (0..8).map(|c| m[r * 8 + c] * v[c]).sum();
            assert!((mv - d[r]).abs() < 1e-12);
        }
    }
}

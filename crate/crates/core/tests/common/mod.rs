#![allow(dead_code)]

use std::f64::consts::PI;

use minmove::{FourierMode, Potential, SurfaceBackground};

/// `φ(x) = c + Σ a_k cos 2πkx + b_k sin 2πkx` with closed-form derivatives.
#[derive(Clone, Debug)]
pub struct Trig {
    pub constant: f64,
    pub modes: Vec<FourierMode>,
}

impl Trig {
    pub fn new(constant: f64, modes: &[(u32, f64, f64)]) -> Self {
        Self {
            constant,
            modes: modes.iter().map(|&(k, cos, sin)| FourierMode { k, cos, sin }).collect(),
        }
    }

    /// `order`-th derivative at `x`.
    pub fn d(&self, x: f64, order: u32) -> f64 {
        let mut v = if order == 0 { self.constant } else { 0.0 };
        for m in &self.modes {
            let w = 2.0 * PI * m.k as f64;
            let th = w * x;
            // d/dx rotates (cos, sin) by a quarter turn
            let (c, s) = match order % 4 {
                0 => (th.cos(), th.sin()),
                1 => (-th.sin(), th.cos()),
                2 => (-th.cos(), -th.sin()),
                _ => (th.sin(), -th.cos()),
            };
            v += w.powi(order as i32) * (m.cos * c + m.sin * s);
        }
        v
    }

    pub fn on(&self, bg: &SurfaceBackground) -> Potential {
        bg.potential_from_modes(self.constant, &self.modes).unwrap()
    }
}

/// Nodes and weights of `n`-point Gauss–Legendre quadrature on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Legendre dual `u(p) = x p − (w x²/2 + φ(x))` with `w x + φ'(x) = p`,
/// found by bisection.
fn dual(phi: &Trig, w: f64, p: f64) -> f64 {
    let g = |x: f64| w * x + phi.d(x, 1) - p;
    let (mut lo, mut hi) = (-2.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    x * p - (0.5 * w * x * x + phi.d(x, 0))
}

/// Flat-background distance from the dual side: geodesics are straight
/// lines in `u`, so `d² = ∫_0^w (u1 − u0)² dp`.
pub fn dual_distance(phi0: &Trig, phi1: &Trig, w: f64, samples: usize) -> f64 {
    let h = w / samples as f64;
    let sum: f64 = (0..samples)
        .map(|i| {
            let p = i as f64 * h;
            (dual(phi1, w, p) - dual(phi0, w, p)).powi(2)
        })
        .sum();
    (sum * h).sqrt()
}

//! Numerical quadrature: double-exponential rules for endpoint singularities
//! and half-lines, adaptive Gauss-Legendre for smooth complex integrands.

use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Value together with an estimate of its absolute error.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

const DE_MAX_LEVEL: usize = 9;

/// tanh-sinh rule on [a, b]. The integrand receives the point and its
/// distance to the nearer endpoint so that endpoint singularities can be
/// evaluated without cancellation.
pub fn tanh_sinh<T: Scalar, F: Fn(f64, f64) -> T>(f: F, a: f64, b: f64, tol: f64) -> Result<Estimate<T>> {
    let half = 0.5 * (b - a);
    let tmax = 4.5;
    let node = |t: f64| -> Option<T> {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = half * std::f64::consts::FRAC_PI_2 * t.cosh() / (cu * cu);
        // distance to the nearer endpoint: half * (1 - tanh|u|) = 2 half / (1 + e^{2|u|})
        let dist = 2.0 * half / (1.0 + (2.0 * u.abs()).exp());
        if dist <= 0.0 || w == 0.0 {
            return None;
        }
        let x = if u < 0.0 { a + dist } else { b - dist };
        Some(f(x, dist) * w)
    };
    de_driver(node, tmax, tol, "tanh-sinh quadrature")
}

/// exp-sinh rule on [a, inf). The integrand receives x and x - a.
pub fn exp_sinh<T: Scalar, F: Fn(f64, f64) -> T>(f: F, a: f64, tol: f64) -> Result<Estimate<T>> {
    let tmax = 4.5;
    let node = |t: f64| -> Option<T> {
        let e = (std::f64::consts::FRAC_PI_2 * t.sinh()).exp();
        if e == 0.0 || !e.is_finite() {
            return None;
        }
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() * e;
        let v = f(a + e, e) * w;
        if v.magnitude().is_finite() {
            Some(v)
        } else {
            None
        }
    };
    de_driver(node, tmax, tol, "exp-sinh quadrature")
}

fn de_driver<T: Scalar, N: Fn(f64) -> Option<T>>(
    node: N,
    tmax: f64,
    tol: f64,
    what: &'static str,
) -> Result<Estimate<T>> {
    let mut h = 0.5;
    let mut sum = node(0.0).unwrap_or(T::zero());
    let mut k = 1;
    while k as f64 * h <= tmax {
        let t = k as f64 * h;
        for s in [t, -t] {
            if let Some(v) = node(s) {
                sum = sum + v;
            }
        }
        k += 1;
    }
    let mut prev = sum * h;
    let mut err = f64::INFINITY;
    for _ in 1..DE_MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= tmax {
            let t = k as f64 * h;
            for s in [t, -t] {
                if let Some(v) = node(s) {
                    sum = sum + v;
                }
            }
            k += 2;
        }
        let cur = sum * h;
        err = (cur - prev).magnitude();
        if err <= tol * cur.magnitude() || err == 0.0 {
            return Ok(Estimate { value: cur, error: err });
        }
        prev = cur;
    }
    Err(Error::NoConvergence { what, estimate: err / prev.magnitude().max(f64::MIN_POSITIVE), target: tol })
}

const GL_ORDER: usize = 20;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
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
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

fn gl_panel<T: Scalar, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> T {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = T::zero();
    for &(x, w) in gauss_legendre() {
        s = s + f(c + h * x) * (w * h);
    }
    s
}

/// Adaptive Gauss-Legendre on [a, b] with absolute tolerance `tol` on the
/// whole interval. Panels are bisected until a panel and its two halves agree.
pub fn adaptive_gl<T: Scalar, F: Fn(f64) -> T>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<Estimate<T>> {
    let whole = gl_panel(&f, a, b);
    let mut total = T::zero();
    let mut err = 0.0;
    let mut stack = vec![(a, b, whole, 0u32)];
    while let Some((lo, hi, val, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = gl_panel(&f, lo, mid);
        let right = gl_panel(&f, mid, hi);
        let refined = left + right;
        let diff = (refined - val).magnitude();
        let allowed = tol * (hi - lo) / (b - a);
        if diff <= allowed || diff == 0.0 {
            total = total + refined;
            err += diff;
        } else if depth >= max_depth {
            return Err(Error::NoConvergence {
                what: "adaptive Gauss-Legendre",
                estimate: diff,
                target: allowed,
            });
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(Estimate { value: total, error: err })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let r = tanh_sinh(|x, _| x.powf(-0.5), 0.0, 1.0, 1e-12).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn exp_sinh_gamma_integral() {
        // int_0^inf x^{1/2} e^{-x} dx = Gamma(3/2)
        let r = exp_sinh(|x, _| x.sqrt() * (-x).exp(), 0.0, 1e-13).unwrap();
        assert!((r.value - 0.886_226_925_452_758).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_polynomials_exact() {
        let s: f64 = gauss_legendre().iter().map(|&(x, w)| w * x.powi(38)).sum();
        assert!((s - 2.0 / 39.0).abs() < 1e-14);
        let r = adaptive_gl(|x: f64| Complex64::new(x.cos(), x.sin()), 0.0, 10.0, 1e-13, 30).unwrap();
        assert!((r.value - Complex64::new(10f64.sin(), 1.0 - 10f64.cos())).norm() < 1e-12);
    }
}

//! Special functions: Whittaker M and W, incomplete Gamma, hypergeometric
//! series, K-Bessel and Legendre polynomials.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PrecisionConfig {
    pub target_rel_error: f64,
    pub max_terms: usize,
    pub quadrature_points: usize,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig { target_rel_error: 1e-10, max_terms: 100_000, quadrature_points: 512 }
    }
}

const EPS: f64 = 1e-15;
const MAX_TERMS: usize = 100_000;

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Upper incomplete Gamma function Gamma(s, x).
pub fn inc_gamma(s: f64, x: f64) -> Result<f64> {
    if x < 0.0 {
        return invalid("incomplete Gamma needs x >= 0");
    }
    if x == 0.0 {
        if s <= 0.0 {
            return invalid("Gamma(s, 0) diverges for s <= 0");
        }
        return Ok(gamma(s));
    }
    if s <= 0.0 {
        // Gamma(s, x) = (Gamma(s+1, x) - x^s e^{-x}) / s
        if s.fract() == 0.0 && x < 1.0 {
            return invalid("Gamma(-n, x) for small x is not supported");
        }
        if s.fract() != 0.0 || x >= 1.0 {
            let up = inc_gamma(s + 1.0, x)?;
            return Ok((up - x.powf(s) * (-x).exp()) / s);
        }
    }
    if x < s + 1.0 {
        // Gamma(s) - gamma(s, x), lower part by its power series
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut n = 1.0;
        while term.abs() > EPS * sum.abs() {
            term *= x / (s + n);
            sum += term;
            n += 1.0;
            if n as usize > MAX_TERMS {
                return Err(Error::NoConvergence { what: "incomplete Gamma series", estimate: term / sum, target: EPS });
            }
        }
        let lower = sum * (s * x.ln() - x).exp();
        Ok(gamma(s) - lower)
    } else {
        // Lentz continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_TERMS {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                return Ok(h * (s * x.ln() - x).exp());
            }
        }
        Err(Error::NoConvergence { what: "incomplete Gamma continued fraction", estimate: f64::NAN, target: EPS })
    }
}

/// Kummer's series 1F1(a; b; x).
pub fn hyp1f1(a: f64, b: f64, x: f64) -> Result<f64> {
    if b <= 0.0 && b.fract() == 0.0 {
        return invalid("1F1 with b a nonpositive integer");
    }
    if x < 0.0 && a.fract() != 0.0 || (x < 0.0 && a > 0.0) {
        // Kummer transformation keeps the terms positive
        return Ok(x.exp() * hyp1f1(b - a, b, -x)?);
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut maxterm: f64 = 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) / (b + nf) * x / (nf + 1.0);
        sum += term;
        maxterm = maxterm.max(term.abs());
        if term == 0.0 || (term.abs() < EPS * sum.abs() && nf > x.abs()) {
            if maxterm > 1e6 * sum.abs() {
                return Err(Error::IllConditioned(format!("1F1({a}; {b}; {x}) loses digits")));
            }
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence { what: "1F1 series", estimate: term.abs(), target: EPS })
}

/// Gauss series 2F1(a, b; c; z) for 0 <= z < 1.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if c <= 0.0 && c.fract() == 0.0 {
        return invalid("2F1 with c a nonpositive integer");
    }
    if !(0.0..1.0).contains(&z) {
        return invalid(format!("2F1 argument {z} outside [0, 1)"));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        // once the term ratio has settled below 1 the tail is geometric
        let ratio = ((a + nf + 1.0) * (b + nf + 1.0) / ((c + nf + 1.0) * (nf + 2.0)) * z).abs();
        if ratio < 1.0 {
            let tail = term.abs() * ratio / (1.0 - ratio);
            if tail <= EPS * sum.abs() {
                return Ok(sum);
            }
        }
    }
    Err(Error::NoConvergence { what: "2F1 series", estimate: term.abs(), target: EPS })
}

/// M-Whittaker function M_{k,mu}(v).
pub fn whittaker_m(k: f64, mu: f64, v: f64) -> Result<f64> {
    let b = 1.0 + 2.0 * mu;
    if b <= 0.0 && b.fract() == 0.0 {
        return invalid("M-Whittaker: 2 mu + 1 is a nonpositive integer");
    }
    Ok((-v / 2.0).exp() * v.powf(mu + 0.5) * hyp1f1(mu - k + 0.5, b, v)?)
}

/// v^{-kappa/2} M_{-kappa/2, s-1/2}(v), the Poincare series seed.
pub fn script_m(kappa: f64, s: f64, v: f64) -> Result<f64> {
    Ok(v.powf(-kappa / 2.0) * whittaker_m(-kappa / 2.0, s - 0.5, v)?)
}

/// W-Whittaker function W_{k,mu}(y) for y > 0, evaluated through Tricomi's U.
pub fn whittaker_w(k: f64, mu: f64, y: f64) -> Result<f64> {
    if y <= 0.0 {
        return invalid("W-Whittaker needs y > 0");
    }
    // W is even in mu; use the sign giving the larger U parameter
    let mu = if -mu - k > mu - k { -mu } else { mu };
    let a = mu - k + 0.5;
    let b = 1.0 + 2.0 * mu;
    let pre = (-y / 2.0).exp() * y.powf(mu + 0.5);
    if a > 0.0 {
        let tol = 1e-14;
        // U(a,b,y) = 1/Gamma(a) int_0^inf e^{-yt} t^{a-1} (1+t)^{b-a-1} dt, t = u/y
        let r = quad::exp_sinh(
            |u, _| (-u).exp() * (u / y).powf(a - 1.0) * (1.0 + u / y).powf(b - a - 1.0),
            0.0,
            tol,
        )?;
        let log_u = r.value.ln() - y.ln() - ln_gamma(a);
        return Ok(pre * log_u.exp());
    }
    if a.fract() == 0.0 {
        // U(-n, b, y) = (-1)^n (b)_n 1F1(-n; b; y)
        let n = (-a) as i32;
        let mut poch = 1.0;
        for i in 0..n {
            poch *= b + i as f64;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        return Ok(pre * sign * poch * hyp1f1(a, b, y)?);
    }
    if (2.0 * mu).fract() == 0.0 {
        return Err(Error::IllConditioned(format!("W_{{{k},{mu}}} outside supported parameters")));
    }
    Ok(gamma(-2.0 * mu) / gamma(0.5 - mu - k) * whittaker_m(k, mu, y)?
        + gamma(2.0 * mu) / gamma(0.5 + mu - k) * whittaker_m(k, -mu, y)?)
}

/// |y|^{-kappa/2} W_{sgn(y) kappa/2, s-1/2}(|y|).
pub fn script_w(kappa: f64, s: f64, y: f64) -> Result<f64> {
    if y == 0.0 {
        return invalid("script W needs y != 0");
    }
    if (s - (1.0 - kappa / 2.0)).abs() < 1e-15 {
        return script_w_harmonic(kappa, y);
    }
    Ok(y.abs().powf(-kappa / 2.0) * whittaker_w(kappa / 2.0 * y.signum(), s - 0.5, y.abs())?)
}

/// Closed form of script W at the harmonic point s = 1 - kappa/2.
pub fn script_w_harmonic(kappa: f64, y: f64) -> Result<f64> {
    if y > 0.0 {
        Ok((-y / 2.0).exp())
    } else if y < 0.0 {
        Ok((-y / 2.0).exp() * inc_gamma(1.0 - kappa, -y)?)
    } else {
        invalid("script W needs y != 0")
    }
}

/// K_mu(z) = int_0^inf e^{-z cosh t} cosh(mu t) dt by the trapezoidal rule,
/// which converges geometrically for this integrand.
pub fn bessel_k(mu: f64, z: f64) -> f64 {
    let h = 0.02;
    let mut sum = 0.5 * (-z).exp();
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        let term = (-z * t.cosh()).exp() * (mu * t).cosh();
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        k += 1;
    }
    sum * h
}

/// Legendre polynomial P_l(x) by the three-term recurrence.
pub fn legendre_p(l: u32, x: Complex64) -> Complex64 {
    let (mut p0, mut p1) = (Complex64::new(1.0, 0.0), x);
    if l == 0 {
        return p0;
    }
    for j in 2..=l {
        let p2 = (x * p1 * (2 * j - 1) as f64 - p0 * (j - 1) as f64) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

pub fn legendre_p_real(l: u32, x: f64) -> f64 {
    legendre_p(l, Complex64::new(x, 0.0)).re
}

/// Exact Legendre polynomial at a rational point.
pub fn legendre_p_rational(l: u32, x: Ratio<i128>) -> Ratio<i128> {
    let (mut p0, mut p1) = (Ratio::from_integer(1), x);
    if l == 0 {
        return p0;
    }
    for j in 2..=l as i128 {
        let p2 = (x * p1 * (2 * j - 1) - p0 * (j - 1)) / j;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Both sides of the integral formula
/// int_0^inf v^{kappa-2} W_{kappa,s}(alpha v) exp(-alpha v/2 - beta/v) dv
///   = alpha^{1/4-kappa/2} beta^{kappa/2-3/4} sqrt(pi) W_{0,3/2-2s}(4 sqrt(alpha beta)).
pub fn check_integral_w(kappa: f64, s: f64, alpha: f64, beta: f64) -> Result<(f64, f64)> {
    if alpha <= 0.0 || beta <= 0.0 {
        return invalid("alpha and beta must be positive");
    }
    // scale out the peak value e^{-2 sqrt(alpha beta)} to keep the integrand O(1)
    let peak = 2.0 * (alpha * beta).sqrt();
    let inner_err = std::cell::Cell::new(None);
    let lhs = quad::exp_sinh(
        |v, _| {
            let w = match script_w(kappa, s, alpha * v) {
                Ok(w) => w,
                Err(e) => {
                    inner_err.set(Some(e.to_string()));
                    0.0
                }
            };
            v.powf(kappa - 2.0) * w * (-alpha * v / 2.0 - beta / v + peak).exp()
        },
        0.0,
        1e-12,
    )?;
    if let Some(e) = inner_err.take() {
        return Err(Error::IllConditioned(e));
    }
    let x = 4.0 * (alpha * beta).sqrt();
    let rhs = alpha.powf(0.25 - kappa / 2.0)
        * beta.powf(kappa / 2.0 - 0.75)
        * PI.sqrt()
        * script_w(0.0, 1.5 - 2.0 * s, x)?;
    Ok((lhs.value * (-peak).exp(), rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn incomplete_gamma_basics() {
        assert!(rel(inc_gamma(1.0, 0.5).unwrap(), (-0.5f64).exp()) < 1e-14);
        assert!(rel(inc_gamma(5.5, 0.0).unwrap(), gamma(5.5)) < 1e-14);
        // Gamma(1/2, 2) = sqrt(pi) erfc(sqrt 2)
        assert!(rel(inc_gamma(0.5, 2.0).unwrap(), 0.080_647_117_960_317_7) < 1e-13);
        // Gamma(-1/2, x) = 2 x^{-1/2} e^{-x} - 2 Gamma(1/2, x)
        let x: f64 = 3.0;
        let expect = 2.0 / x.sqrt() * (-x).exp() - 2.0 * inc_gamma(0.5, x).unwrap();
        assert!(rel(inc_gamma(-0.5, x).unwrap(), expect) < 1e-13);
    }

    #[test]
    fn m_whittaker_closed_form() {
        let v: f64 = 1.0;
        assert!(rel(whittaker_m(0.0, 0.5, v).unwrap(), 2.0 * (v / 2.0).sinh()) < 1e-14);
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre_p_real(2, 1.0), 1.0);
        assert_eq!(legendre_p_real(3, 0.0), 0.0);
        assert!((legendre_p_real(2, 0.5) + 0.125).abs() < 1e-15);
        assert_eq!(legendre_p_rational(3, Ratio::from_integer(2)), Ratio::new(17, 1));
    }

    #[test]
    fn hypergeometric_closed_forms() {
        assert!((hyp2f1(3.0, 5.0, 5.0, 0.5).unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(hyp2f1(1.3, 2.0, 0.7, 0.0).unwrap(), 1.0);
        assert!(hyp2f1(1.0, 1.0, 1.0, 1.0).is_err());
    }
}

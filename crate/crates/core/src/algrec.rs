//! Algebraicity diagnostics: normalisation of Fourier coefficients, rational
//! recognition by continued fractions, the period formula and the Hecke
//! recursion for the coefficients c+(n^2 |Delta|, n rho).

use num_complex::Complex64;
use serde::Serialize;

use crate::cycles::{pairing, GeodesicCycle, Pairing, PathOptions};
use crate::error::{invalid, Error, Result};
use crate::maass::{hecke_tm, CoeffTable};
use crate::merom::{c_constant, coefficient_prefactor, i_pow, sqrt_delta, zeta_multiple, QExpansion};

/// b / (C_{k,Delta} i pi^k sqrt(Delta)).
pub fn normalize_coefficient(b: Complex64, k: u32, delta: i64) -> Complex64 {
    b / coefficient_prefactor(k, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecognitionResult {
    pub value: f64,
    /// (numerator, denominator)
    pub candidate: Option<(i128, i128)>,
    pub denominator_bound: i128,
    /// |value - candidate|, or the residual of the best convergent tried
    pub residual: f64,
}

/// Acceptance threshold on the residual, relative to max(1, |x|).
pub const RECOGNITION_TOL: f64 = 1e-6;
/// A later convergent improving the residual by more than this factor
/// disqualifies the candidate.
pub const RECOGNITION_IMPROVEMENT: f64 = 1e3;

/// Convergents of the nearest-integer continued fraction of x, a subsequence
/// of the regular convergents that starts at the nearest integer. Stops once
/// x is reproduced or the denominator passes 1e17.
fn convergents(x: f64) -> Vec<(i128, i128)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut t = x;
    for _ in 0..64 {
        let a = t.round();
        if a.abs() > 1e30 {
            break;
        }
        let ai = a as i128;
        let (p, q) = (ai * p1 + p0, ai * q1 + q0);
        if q.abs() > 100_000_000_000_000_000 {
            break;
        }
        out.push(if q < 0 { (-p, -q) } else { (p, q) });
        (p0, q0, p1, q1) = (p1, q1, p, q);
        let frac = t - a;
        if frac.abs() < 1e-300 {
            break;
        }
        t = 1.0 / frac;
    }
    out
}

/// Relative accuracy assumed for inputs of [`recognize_rational`].
pub const DEFAULT_INPUT_REL_ERR: f64 = 1e-12;

/// Rational recognition with denominators up to `max_den` for x known to
/// DEFAULT_INPUT_REL_ERR relative accuracy.
pub fn recognize_rational(x: f64, max_den: i128) -> RecognitionResult {
    recognize_rational_with_error(x, DEFAULT_INPUT_REL_ERR * x.abs().max(1.0), max_den)
}

/// Takes the first convergent p/q (q <= max_den) with residual at most
/// RECOGNITION_TOL max(1, |x|) that no later convergent, of any denominator,
/// beats by more than RECOGNITION_IMPROVEMENT, where residuals are floored at
/// the uncertainty `err` of x. A real number that is not rational within its
/// error is thus rejected even if some p/q under the bound is close to it.
pub fn recognize_rational_with_error(x: f64, err: f64, max_den: i128) -> RecognitionResult {
    let mut res = RecognitionResult { value: x, candidate: None, denominator_bound: max_den, residual: f64::INFINITY };
    if !x.is_finite() || max_den < 1 {
        return res;
    }
    let tol = RECOGNITION_TOL * x.abs().max(1.0);
    let floor = err.max(0.0);
    let resid = |&(p, q): &(i128, i128)| (x - p as f64 / q as f64).abs();
    let cs = convergents(x);
    res.residual = cs.iter().rfind(|c| c.1 <= max_den).map(resid).unwrap_or(f64::INFINITY);
    for (i, c) in cs.iter().enumerate().take_while(|(_, c)| c.1 <= max_den) {
        let r = resid(c);
        if r > tol {
            continue;
        }
        let beaten = cs[i + 1..]
            .iter()
            .any(|d| r.max(floor) > RECOGNITION_IMPROVEMENT * resid(d).max(floor));
        if !beaten {
            res.candidate = Some(*c);
            res.residual = r;
            break;
        }
    }
    res
}

/// Outcome of the period formula check.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodCheck {
    /// c+(|Delta|, rho)
    pub lhs: f64,
    /// -(zeta, C) / (G, C) / (C_{k,Delta} i pi^k sqrt(Delta))
    pub rhs_i_pi_k: Complex64,
    /// the same with pi i^k in place of i pi^k
    pub rhs_pi_i_k: Complex64,
    pub zeta_pairing: Pairing,
    pub g_pairing: Pairing,
    /// which normalisation agrees with lhs: "i pi^k", "pi i^k" or "none"
    pub matching: &'static str,
    pub relative_residual: f64,
}

/// Threshold on |(G, C)| relative to the size of the projected integral.
pub const G_PAIRING_THRESHOLD: f64 = 1e-8;

/// c+(|Delta|, rho) against the period quotient, with zeta = eta - M G
/// evaluated pointwise along the cycle.
#[allow(clippy::too_many_arguments)]
pub fn period_formula_check<F>(
    eta: &F,
    g: &QExpansion,
    cycle: &GeodesicCycle,
    k: u32,
    delta: i64,
    poles: &[Complex64],
    c_top: f64,
    opts: &PathOptions,
) -> Result<PeriodCheck>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let gp = pairing(&|z| g.eval(z), cycle, k, &[], opts)?;
    if gp.value.abs() < G_PAIRING_THRESHOLD * gp.projected.norm() {
        return Err(Error::IllConditioned(format!(
            "(G, C) = {:.3e} vanishes relative to the cycle integral {:.3e}; choose another cycle",
            gp.value,
            gp.projected.norm()
        )));
    }
    let mult = zeta_multiple(k, delta, Complex64::new(c_top, 0.0));
    let zeta = |z: Complex64| -> Result<Complex64> { Ok(eta(z)? - mult * g.eval(z)?) };
    let zp = pairing(&zeta, cycle, k, poles, opts)?;
    let c = c_constant(k, delta);
    let cf = *c.numer() as f64 / *c.denom() as f64;
    let quotient = -zp.value / gp.value;
    let pi = std::f64::consts::PI;
    let rhs_a = quotient / (Complex64::new(0.0, cf) * pi.powi(k as i32) * sqrt_delta(delta));
    let rhs_b = quotient / (cf * pi * i_pow(k as i64) * sqrt_delta(delta));
    let scale = c_top.abs().max(1e-300);
    let (ra, rb) = ((rhs_a - c_top).norm() / scale, (rhs_b - c_top).norm() / scale);
    let (matching, best) = match (ra <= 1e-4, rb <= 1e-4) {
        (true, _) => ("i pi^k", ra),
        (false, true) => ("pi i^k", rb),
        _ => ("none", ra.min(rb)),
    };
    Ok(PeriodCheck {
        lhs: c_top,
        rhs_i_pi_k: rhs_a,
        rhs_pi_i_k: rhs_b,
        zeta_pairing: zp,
        g_pairing: gp,
        matching,
        relative_residual: best,
    })
}

/// Per-n entry of the Hecke recursion report.
#[derive(Debug, Clone, Serialize)]
pub struct HeckeStep {
    pub n: i64,
    /// n^(2k-1) c_{f|T_n}(|Delta|, rho) - lambda_n c(|Delta|, rho)
    pub remainder: f64,
    pub recognition: RecognitionResult,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeckeReport {
    pub steps: Vec<HeckeStep>,
    pub passed: bool,
    /// first n at which recognition failed
    pub first_failure: Option<i64>,
}

/// For each 2 <= n <= n_max, forms n^(2k-1) f|T_n - lambda_n(G) f, whose
/// coefficient at (|Delta|, rho) must be rational when f has a rational
/// principal part. Equivalently c+(n^2 |Delta|, n rho) is a rational
/// combination of the c+(m^2 |Delta|, m rho), m < n, plus a rational number.
#[allow(clippy::too_many_arguments)]
pub fn hecke_recursion_check(
    table: &CoeffTable,
    eigenvalues: &[(i64, f64)],
    k: u32,
    delta: i64,
    rho: i64,
    n_max: i64,
    max_den: i128,
    rel_err: f64,
) -> Result<HeckeReport> {
    if n_max < 1 {
        return invalid("n_max must be at least 1");
    }
    let base = table.cplus(delta.abs(), rho)?.re;
    let mut steps = Vec::new();
    for n in 2..=n_max {
        let lambda = eigenvalues
            .iter()
            .find(|(m, _)| *m == n)
            .map(|&(_, l)| l)
            .ok_or_else(|| Error::Invalid(format!("no eigenvalue supplied for n = {n}")))?;
        let tn = hecke_tm(table, n)?;
        let c = tn.cplus(delta.abs(), rho)?.re;
        let scale = (n as f64).powi(2 * k as i32 - 1);
        let remainder = scale * c - lambda * base;
        let err = rel_err * (scale * c.abs() + lambda.abs() * base.abs());
        let recognition = recognize_rational_with_error(remainder, err, max_den);
        steps.push(HeckeStep { n, remainder, recognition, passed: recognition.candidate.is_some() });
    }
    let first_failure = steps.iter().find(|s| !s.passed).map(|s| s.n);
    Ok(HeckeReport { passed: first_failure.is_none(), steps, first_failure })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recognition_examples() {
        assert_eq!(recognize_rational(0.333333333, 100).candidate, Some((1, 3)));
        assert_eq!(recognize_rational(std::f64::consts::PI, 10).candidate, None);
        assert_eq!(recognize_rational(-0.125, 1_000_000).candidate, Some((-1, 8)));
    }

    #[test]
    fn normalisation_round_trip() {
        let pref = coefficient_prefactor(6, -3);
        let b = pref * (3.0 / 7.0);
        assert!((normalize_coefficient(b, 6, -3) - 3.0 / 7.0).norm() < 1e-15);
        assert_eq!(normalize_coefficient(Complex64::new(0.0, 0.0), 6, -3), Complex64::new(0.0, 0.0));
    }
}

//! Meromorphic modular forms of weight 2k with poles of order k at Heegner
//! points: the form sums f_{k,D,r}, Petersson Poincare series, Fourier
//! coefficients (numerical and predicted from a harmonic Maass form), residues
//! and q-expansions of cusp forms.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{divisors, forward_divisor_sum, gcd};
use crate::error::{invalid, Error, Result};
use crate::maass::{e, CoeffTable};
use crate::qf::{genus_character, heegner_divisor, validate_indices, DivisorPoint, HeegnerDivisor, Mat2, QuadForm};
use crate::quad::Estimate;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// sqrt(Delta), with sqrt(Delta) = i sqrt|Delta| for Delta < 0.
pub fn sqrt_delta(delta: i64) -> Complex64 {
    if delta < 0 {
        Complex64::new(0.0, (-delta as f64).sqrt())
    } else {
        Complex64::new((delta as f64).sqrt(), 0.0)
    }
}

/// i^n for integer n.
pub fn i_pow(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => I,
        2 => Complex64::new(-1.0, 0.0),
        _ => -I,
    }
}

/// C_{k,Delta} = (-2 sgn Delta)^k |Delta|^(k-1) / (k-1)!, exactly.
pub fn c_constant(k: u32, delta: i64) -> Ratio<i128> {
    let base = -2 * delta.signum() as i128;
    let num = base.pow(k) * (delta.unsigned_abs() as i128).pow(k - 1);
    let den: i128 = (1..k as i128).product();
    Ratio::new(num, den.max(1))
}

/// C_{k,Delta} i pi^k sqrt(Delta), the common prefactor of the Fourier
/// coefficients of eta.
pub fn coefficient_prefactor(k: u32, delta: i64) -> Complex64 {
    let c = c_constant(k, delta).to_f64().expect("finite constant");
    I * c * PI.powi(k as i32) * sqrt_delta(delta)
}

/// Imaginary part of the SL_2(Z)-reduction of z, an upper bound for the
/// height of every point in the Gamma_0(N)-orbit of z.
pub fn orbit_height(z: Complex64) -> f64 {
    reduce_level_one(z).0.im
}

/// Moves z into the standard fundamental domain of SL_2(Z). Returns the
/// reduced point w and g with w = g z.
pub fn reduce_level_one(z: Complex64) -> (Complex64, Mat2) {
    let mut w = z;
    let mut g = Mat2::I;
    for _ in 0..10_000 {
        let n = (w.re + 0.5).floor() as i64;
        if n != 0 {
            w -= n as f64;
            g = Mat2::t(-n).mul(&g);
        }
        if w.norm_sqr() < 1.0 - 1e-15 {
            w = -1.0 / w;
            g = Mat2::S.mul(&g);
        } else {
            break;
        }
    }
    (w, g)
}

/// Moves z up by elements of Gamma_0(N): repeatedly applies the coset
/// matrix of the (c, d), N | c, minimising |cz + d| while that is below 1.
/// Returns (w, g) with w = g z and g in Gamma_0(N).
pub fn raise_gamma0(z: Complex64, n: i64) -> (Complex64, Mat2) {
    let mut w = z;
    let mut g = Mat2::I;
    for _ in 0..10_000 {
        let sh = (w.re + 0.5).floor() as i64;
        if sh != 0 {
            w -= sh as f64;
            g = Mat2::t(-sh).mul(&g);
        }
        let mut best: Option<(f64, i64, i64)> = None;
        let mut c = n;
        while (c as f64) * w.im < 1.0 {
            let d0 = (-(c as f64) * w.re).round() as i64;
            for d in d0 - 1..=d0 + 1 {
                if gcd(c, d) != 1 {
                    continue;
                }
                let m = (w * c as f64 + d as f64).norm_sqr();
                if m < 1.0 - 1e-12 && best.is_none_or(|b| m < b.0) {
                    best = Some((m, c, d));
                }
            }
            c += n;
        }
        match best {
            Some((_, c, d)) => {
                let m = crate::maass::coset_matrix(c, d);
                w = m.act(w);
                g = m.mul(&g);
            }
            None => break,
        }
    }
    (w, g)
}

fn binom_neg(k: u32, m: u32) -> f64 {
    // binom(-k, m) = (-1)^m binom(k + m - 1, m)
    let mut b = 1.0;
    for i in 0..m {
        b *= (k + i) as f64 / (i + 1) as f64;
    }
    if m % 2 == 1 {
        -b
    } else {
        b
    }
}

/// Parameters of f_{k,D,r,Delta,rho}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FkdSpec {
    pub k: u32,
    #[serde(rename = "N")]
    pub n: i64,
    #[serde(rename = "D")]
    pub d: i64,
    pub r: i64,
    #[serde(rename = "Delta")]
    pub delta: i64,
    pub rho: i64,
}

impl FkdSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return invalid("k must be at least 2");
        }
        validate_indices(self.n, self.delta, self.rho, self.d, self.r)
    }

    /// The discriminant D |Delta| of the forms in the sum.
    pub fn disc(&self) -> i64 {
        self.d * self.delta.abs()
    }

    /// Weight of a positive definite form Q with middle coefficient b in the
    /// sum, after folding in the negative form -Q: the first summand counts
    /// b = r rho, the second b = -r rho with chi(-Q) = sgn(Delta) chi(Q).
    fn fold_coefficient(&self, b: i64) -> i32 {
        let n2 = 2 * self.n;
        let target = (self.r * self.rho).rem_euclid(n2);
        let mut c = 0;
        if b.rem_euclid(n2) == target {
            c += 1;
        }
        if b.rem_euclid(n2) == (-target).rem_euclid(n2) {
            let s = if self.k % 2 == 1 { 1 } else { -1 } * self.delta.signum() as i32;
            c += s;
        }
        c
    }

    /// True if the contributions of Q and -Q cancel identically, so the form
    /// vanishes.
    pub fn vanishes(&self) -> bool {
        let n2 = 2 * self.n;
        let t = (self.r * self.rho).rem_euclid(n2);
        t == (-t).rem_euclid(n2) && self.fold_coefficient(t) == 0
    }
}

/// f_{k,D,r,Delta,rho}(z) = i^k |d|^(k-1/2) sum_Q sgn(Q) chi(Q) / Q(z,1)^k over
/// all forms [aN, b, c] of discriminant d = D|Delta| with b = r rho mod 2N.
///
/// Terms are ordered by the hyperbolic distance from z to the root of Q. The
/// truncation radius comes from a packing bound: distinct roots of forms of
/// discriminant d are at distance at least 2 eps with cosh 2 eps = 1 + 1/|d|,
/// so at most (cosh(t + eps) - 1)/(cosh eps - 1) roots lie within distance t.
#[derive(Debug, Clone)]
pub struct FormSum {
    pub spec: FkdSpec,
    /// target for the tail, relative to |d|^((k-1)/2) / y^k
    pub tol: f64,
    eps: f64,
}

impl FormSum {
    pub fn new(spec: FkdSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.disc().unsigned_abs() as f64;
        let eps = 0.5 * (1.0 + 1.0 / d).acosh();
        Ok(FormSum { spec, tol: 1e-13, eps })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Minimal hyperbolic distance to a root below which evaluation is refused.
    pub fn exclusion_radius(&self) -> f64 {
        1e-3 * self.eps
    }

    fn tail_bound(&self, radius: f64) -> f64 {
        let k = self.spec.k as f64;
        let q = (-2.0 * radius).exp();
        let count = self.eps.exp() / (2.0 * (self.eps.cosh() - 1.0));
        2.0 * count * k * 2f64.powf(k) * (-(k - 1.0) * radius).exp() * (1.0 + q)
            / ((1.0 - q).powf(k + 1.0) * (k - 1.0))
    }

    /// Truncation radius: terms at hyperbolic distance > R are dropped.
    pub fn radius(&self) -> f64 {
        let mut r = 1.0;
        while self.tail_bound(r) > self.tol {
            r += 0.05;
        }
        r
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.eval_with_error(z).map(|e| e.value)
    }

    pub fn eval_with_error(&self, z: Complex64) -> Result<Estimate<Complex64>> {
        if z.im <= 0.0 {
            return invalid("z must lie in the upper half-plane");
        }
        if self.spec.vanishes() {
            return Ok(Estimate { value: Complex64::zero(), error: 0.0 });
        }
        // f(z) = j(g, z)^{-2k} f(g z)
        let (w, g) = raise_gamma0(z, self.spec.n);
        let jac = g.j(z).powi(-2 * self.spec.k as i32);
        let est = self.eval_raised(w)?;
        Ok(Estimate { value: est.value * jac, error: est.error * jac.norm() })
    }

    /// The lattice sum taken at z itself, without moving z up first. Slower
    /// at small heights; used to test modularity independently of the reduction.
    pub fn eval_direct(&self, z: Complex64) -> Result<Complex64> {
        if z.im <= 0.0 {
            return invalid("z must lie in the upper half-plane");
        }
        if self.spec.vanishes() {
            return Ok(Complex64::zero());
        }
        self.eval_raised(z).map(|e| e.value)
    }

    fn eval_raised(&self, z: Complex64) -> Result<Estimate<Complex64>> {
        let spec = &self.spec;
        let k = spec.k as i32;
        let disc = spec.disc();
        let dabs = disc.unsigned_abs() as f64;
        let (x, y) = (z.re, z.im);
        let radius = self.radius();
        let pmax = dabs.sqrt() * radius.cosh();
        let n = spec.n;
        let n2 = 2 * n;
        let t = (spec.r * spec.rho).rem_euclid(n2);
        let mut classes = vec![t];
        if (-t).rem_euclid(n2) != t {
            classes.push((-t).rem_euclid(n2));
        }
        let a_max = (pmax / (y * n as f64)).floor() as i64;
        let excl_cosh = self.exclusion_radius().cosh();
        let partial: Vec<Result<Complex64>> = (1..=a_max)
            .into_par_iter()
            .map(|a| {
                let big_a = a * n;
                let af = big_a as f64;
                let w2 = af * (pmax * y - af * y * y) - dabs / 4.0;
                let mut acc = Complex64::zero();
                if w2 < 0.0 {
                    return Ok(acc);
                }
                let w = 2.0 * w2.sqrt();
                let centre = -2.0 * af * x;
                let (lo, hi) = ((centre - w).floor() as i64, (centre + w).ceil() as i64);
                for &cls in &classes {
                    let mut b = lo + (cls - lo).rem_euclid(n2);
                    while b <= hi {
                        let num = b * b - disc;
                        if num % (4 * big_a) == 0 {
                            let q = QuadForm::new(big_a, b, num / (4 * big_a));
                            let p = (af * z.norm_sqr() + b as f64 * x + q.c as f64) / y;
                            let ch = p / dabs.sqrt();
                            if ch <= radius.cosh() {
                                if ch < excl_cosh {
                                    let root = q.heegner_point();
                                    return Err(Error::PoleTooClose {
                                        re: root.re,
                                        im: root.im,
                                        distance: ch.max(1.0).acosh(),
                                    });
                                }
                                let coef = spec.fold_coefficient(b);
                                if coef != 0 {
                                    let chi = genus_character(spec.delta, &q, n)?;
                                    if chi != 0 {
                                        let qz = (z * af + b as f64) * z + q.c as f64;
                                        acc += (coef * chi) as f64 * qz.powi(-k);
                                    }
                                }
                            }
                        }
                        b += n2;
                    }
                }
                Ok(acc)
            })
            .collect();
        let mut sum = Complex64::zero();
        for p in partial {
            sum += p?;
        }
        let scale = dabs.powf(k as f64 - 0.5);
        let natural = dabs.powf((k as f64 - 1.0) / 2.0) / y.powi(k);
        Ok(Estimate {
            value: i_pow(k as i64) * scale * sum,
            error: self.tail_bound(radius) * natural + 1e-15 * scale * sum.norm(),
        })
    }

    /// Poles (roots of the forms with non-zero weight) in the box
    /// [xmin, xmax] x [ymin, oo).
    pub fn poles_in_box(&self, xmin: f64, xmax: f64, ymin: f64) -> Result<Vec<Complex64>> {
        let s = &self.spec;
        if s.vanishes() {
            return Ok(Vec::new());
        }
        if ymin <= 0.0 {
            return invalid("box must stay above the real line");
        }
        let disc = s.disc();
        let root_d = (disc.unsigned_abs() as f64).sqrt();
        let mut out = Vec::new();
        let mut a = s.n;
        while root_d / (2.0 * a as f64) >= ymin {
            let af = a as f64;
            for b in (-2.0 * af * xmax).floor() as i64..=(-2.0 * af * xmin).ceil() as i64 {
                let num = b * b - disc;
                if num % (4 * a) != 0 || s.fold_coefficient(b) == 0 {
                    continue;
                }
                let q = QuadForm::new(a, b, num / (4 * a));
                let z = q.heegner_point();
                if z.re >= xmin && z.re <= xmax && genus_character(s.delta, &q, s.n)? != 0 {
                    out.push(z);
                }
            }
            a += s.n;
        }
        Ok(out)
    }

    /// Leading coefficient a of f = a ((z - p)(z - conj p)/(p - conj p))^(-k) + O(1)
    /// at a pole p: |d|^((k-1)/2) times the folded weight of the form with root p.
    pub fn pole_coefficient(&self, p: Complex64) -> Result<f64> {
        let s = &self.spec;
        let disc = s.disc();
        let root_d = (disc.unsigned_abs() as f64).sqrt();
        let a = (root_d / (2.0 * p.im)).round() as i64;
        let b = (-2.0 * a as f64 * p.re).round() as i64;
        if a <= 0 || a % s.n != 0 || (b * b - disc) % (4 * a) != 0 {
            return invalid(format!("{p} is not a root of a form of discriminant {disc}"));
        }
        let q = QuadForm::new(a, b, (b * b - disc) / (4 * a));
        if (q.heegner_point() - p).norm() > 1e-9 * p.im {
            return invalid(format!("{p} is not a root of a form of discriminant {disc}"));
        }
        let chi = genus_character(s.delta, &q, s.n)? as f64;
        Ok(root_d.powi(s.k as i32 - 1) * s.fold_coefficient(b) as f64 * chi)
    }

    /// The Heegner divisor of the form: points of the classes for r rho and
    /// -r rho, each with residue weight |d|^((k-1)/2) times the folded
    /// coefficient, divided by the stabilizer order.
    pub fn divisor(&self) -> Result<HeegnerDivisor> {
        let s = &self.spec;
        let mut div = heegner_divisor(s.n, s.delta, s.rho, s.d, s.r)?;
        let n2 = 2 * s.n;
        let scale = (s.disc().unsigned_abs() as f64).powf((s.k as f64 - 1.0) / 2.0);
        let mut points: Vec<DivisorPoint> = Vec::new();
        let t = (s.r * s.rho).rem_euclid(n2);
        let neg_sign = if s.k % 2 == 1 { 1.0 } else { -1.0 } * s.delta.signum() as f64;
        for p in &div.points {
            points.push(DivisorPoint { weight: p.weight * scale, ..p.clone() });
        }
        if (-t).rem_euclid(n2) != t {
            let other = heegner_divisor(s.n, s.delta, s.rho, s.d, -s.r)?;
            for p in other.points {
                points.push(DivisorPoint { weight: p.weight * scale * neg_sign, ..p });
            }
        } else {
            for p in &mut points {
                p.weight *= 1.0 + neg_sign;
            }
        }
        div.points = points;
        Ok(div)
    }
}

/// L_j(u) = sum_n (u + n)^{-j} (symmetric summation for j = 1).
fn lattice_sum(j: u32, u: Complex64) -> Complex64 {
    if u.im < -0.3 {
        let v = lattice_sum(j, -u);
        return if j.is_multiple_of(2) { v } else { -v };
    }
    if u.im > 0.3 {
        let q = e(u.re) * (-2.0 * PI * u.im).exp();
        let mut s = Complex64::zero();
        let mut qn = q;
        for l in 1..400 {
            let term = qn * (l as f64).powi(j as i32 - 1);
            s += term;
            if term.norm() < 1e-18 * s.norm().max(1e-300) {
                break;
            }
            qn *= q;
        }
        let fact: f64 = (1..j).map(|m| m as f64).product();
        let mut out = (-2.0 * PI * I).powi(j as i32) / fact * s;
        if j == 1 {
            out -= PI * I;
        }
        return out;
    }
    // derivatives of pi cot(pi u) as polynomials in c = cot(pi u)
    let c = (PI * u).cos() / (PI * u).sin();
    let mut poly = vec![0.0, 1.0];
    for _ in 1..j {
        // p' (c) * (-(1 + c^2))
        let deriv: Vec<f64> = (1..poly.len()).map(|m| poly[m] * m as f64).collect();
        let mut next = vec![0.0; deriv.len() + 2];
        for (m, &dm) in deriv.iter().enumerate() {
            next[m] -= dm;
            next[m + 2] -= dm;
        }
        poly = next;
    }
    let mut val = Complex64::zero();
    for &coef in poly.iter().rev() {
        val = val * c + coef;
    }
    let fact: f64 = (1..j).map(|m| m as f64).product();
    let sign = if (j - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * PI.powi(j as i32) * val / fact
}

/// Petersson Poincare series
/// eta_{k,p}(z) = sum over Gamma_oo \ Gamma_0(N) of (h |_{2k} gamma)(z),
/// h(z) = ((z - p)(z - conj p)/(p - conj p))^{-k}, where the sum over
/// translations is done in closed form.
#[derive(Debug, Clone)]
pub struct PeterssonSeries {
    pub k: u32,
    pub n: i64,
    pub point: Complex64,
    pub tol: f64,
}

impl PeterssonSeries {
    pub fn new(k: u32, n: i64, point: Complex64) -> Result<Self> {
        if k < 2 {
            return invalid("k must be at least 2");
        }
        if n < 1 || point.im <= 0.0 {
            return invalid("need N >= 1 and a point in the upper half-plane");
        }
        Ok(PeterssonSeries { k, n, point, tol: 1e-12 })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// The local function h.
    pub fn seed(&self, z: Complex64) -> Complex64 {
        let p = self.point;
        ((z - p) * (z - p.conj()) / (p - p.conj())).powi(-(self.k as i32))
    }

    /// sum_n h(w + n).
    fn periodized(&self, w: Complex64) -> Complex64 {
        let k = self.k;
        let delta = 2.0 * I * self.point.im;
        let u = w - self.point;
        let mut s = Complex64::zero();
        for j in 1..=k {
            let b = binom_neg(k, k - j);
            let aj = b * delta.powi(j as i32 - 2 * k as i32);
            let bj = b * (-delta).powi(j as i32 - 2 * k as i32);
            s += aj * lattice_sum(j, u) + bj * lattice_sum(j, u + delta);
        }
        delta.powi(k as i32) * s
    }

    fn radius(&self, y: f64) -> f64 {
        let k = self.k as f64;
        let eta = self.point.im;
        let hmax = (2.0 * eta).powf(k) * (2.0 * (2.0 / eta).powf(2.0 * k) + 4.0);
        let spread = 1.0 + y.hypot(1.0);
        let mut r: f64 = (2.0 * y / eta).sqrt().max(1.0);
        loop {
            let tail = hmax * PI / y * k * (1.0 + spread / r).powi(2) * r.powf(2.0 - 2.0 * k) / (2.0 * k - 2.0);
            if tail <= self.tol {
                return r;
            }
            r *= 1.05;
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z.im <= 0.0 {
            return invalid("z must lie in the upper half-plane");
        }
        let radius = self.radius(z.im);
        let cmax = (radius / z.im).floor() as i64;
        let n = self.n;
        let k2 = 2 * self.k as i32;
        let check = |w: Complex64| -> Result<()> {
            let u = w - self.point;
            let shifted = Complex64::new(u.re - u.re.round(), u.im);
            if shifted.norm() < 1e-9 {
                return Err(Error::PoleTooClose { re: self.point.re, im: self.point.im, distance: shifted.norm() });
            }
            Ok(())
        };
        check(z)?;
        let mut total = self.periodized(z);
        let rows: Vec<Result<Complex64>> = (1..=cmax)
            .filter(|c| c % n == 0)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|c| {
                let cf = c as f64;
                let centre = -cf * z.re;
                let half = (radius * radius - (cf * z.im).powi(2)).max(0.0).sqrt();
                let mut acc = Complex64::zero();
                for d in (centre - half).floor() as i64..=(centre + half).ceil() as i64 {
                    if gcd(c, d) != 1 {
                        continue;
                    }
                    let j = z * cf + d as f64;
                    if j.norm() > radius {
                        continue;
                    }
                    let m = crate::maass::coset_matrix(c, d);
                    let w = m.act(z);
                    check(w)?;
                    acc += j.powi(-k2) * self.periodized(w);
                }
                Ok(acc)
            })
            .collect();
        for r in rows {
            total += r?;
        }
        Ok(total)
    }
}

/// Fourier coefficients of a weight-2k form, index 0 holding n = 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourierSeries2k {
    pub k: u32,
    #[serde(rename = "N")]
    pub n: i64,
    pub coeffs: Vec<Complex64>,
    pub errors: Vec<f64>,
    pub height_used: f64,
    /// the n = 0 coefficient when it was measured
    pub constant: Option<Complex64>,
}

impl FourierSeries2k {
    pub fn coeff(&self, n: usize) -> Option<Complex64> {
        n.checked_sub(1).and_then(|i| self.coeffs.get(i).copied())
    }

    /// Scalar Hecke operator T_m: b_n -> sum_{d | (m, n)} d^{2k-1} b_{mn/d^2},
    /// for every n with m n within range.
    pub fn hecke(&self, m: u64) -> Result<FourierSeries2k> {
        if m == 0 {
            return invalid("T_m needs m >= 1");
        }
        let len = self.coeffs.len() as u64 / m;
        let w = 2 * self.k as i32 - 1;
        let mut coeffs = Vec::new();
        let mut errors = Vec::new();
        for n in 1..=len {
            let g = gcd(m as i64, n as i64) as u64;
            let mut s = Complex64::zero();
            let mut err = 0.0;
            for d in divisors(g) {
                let idx = (m * n / (d * d) - 1) as usize;
                let f = (d as f64).powi(w);
                s += self.coeffs[idx] * f;
                err += self.errors.get(idx).copied().unwrap_or(0.0) * f;
            }
            coeffs.push(s);
            errors.push(err);
        }
        Ok(FourierSeries2k { coeffs, errors, constant: None, ..self.clone() })
    }

    pub fn scaled(&self, c: Complex64) -> FourierSeries2k {
        FourierSeries2k {
            coeffs: self.coeffs.iter().map(|b| b * c).collect(),
            errors: self.errors.iter().map(|e| e * c.norm()).collect(),
            constant: self.constant.map(|b| b * c),
            ..self.clone()
        }
    }
}

/// Options for [`fourier_coeffs`].
#[derive(Debug, Clone, Copy)]
pub struct FourierOptions {
    pub heights: (f64, f64),
    pub n_max: usize,
    pub samples: usize,
    /// highest point of the pole set; both heights must lie above it
    pub pole_height: f64,
    /// admissible disagreement between the heights, relative to the
    /// coefficient (or to 1 for small coefficients)
    pub agree_tol: f64,
}

impl FourierOptions {
    pub fn new(heights: (f64, f64), n_max: usize) -> Self {
        FourierOptions { heights, n_max, samples: (8 * n_max).max(64), pole_height: 0.0, agree_tol: 1e-6 }
    }
}

/// b_n = e^{2 pi n y} (1/M) sum_j f(x_j + i y) e(-n x_j), measured at two
/// heights. The lower height is reported and the difference is the error.
pub fn fourier_coeffs<F>(f: F, opts: &FourierOptions, k: u32, level: i64) -> Result<FourierSeries2k>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let (mut y1, mut y2) = opts.heights;
    if y1 > y2 {
        std::mem::swap(&mut y1, &mut y2);
    }
    if y1 <= opts.pole_height || y1 == y2 {
        return invalid(format!(
            "heights {y1}, {y2} must be distinct and above the pole height {}",
            opts.pole_height
        ));
    }
    if opts.samples < 4 * opts.n_max.max(1) {
        return invalid("need at least 4 samples per coefficient");
    }
    let m = opts.samples;
    let sample = |y: f64| -> Result<Vec<Complex64>> {
        (0..m)
            .into_par_iter()
            .map(|j| f(Complex64::new(j as f64 / m as f64, y)))
            .collect()
    };
    let v1 = sample(y1)?;
    let v2 = sample(y2)?;
    let coeff = |vals: &[Complex64], y: f64, n: usize| -> Complex64 {
        let s: Complex64 = vals
            .iter()
            .enumerate()
            .map(|(j, v)| v * e(-((n * j) as f64) / m as f64))
            .sum();
        s / m as f64 * (2.0 * PI * n as f64 * y).exp()
    };
    let mut coeffs = Vec::with_capacity(opts.n_max);
    let mut errors = Vec::with_capacity(opts.n_max);
    for n in 1..=opts.n_max {
        let b1 = coeff(&v1, y1, n);
        let b2 = coeff(&v2, y2, n);
        let err = (b1 - b2).norm();
        if err > opts.agree_tol * b1.norm().max(1.0) {
            return Err(Error::IllConditioned(format!(
                "coefficient {n} differs between heights {y1} and {y2}: {b1} vs {b2}"
            )));
        }
        coeffs.push(b1);
        errors.push(err);
    }
    let c0 = coeff(&v1, y1, 0);
    Ok(FourierSeries2k { k, n: level, coeffs, errors, height_used: y1, constant: Some(c0) })
}

/// b_n = C_{k,Delta} i pi^k sqrt(Delta) n^(2k-1) sum_{d|n} (Delta/d) d^(-k)
/// c+(|Delta| n^2/d^2, rho n/d).
pub fn predicted_coeffs(table: &CoeffTable, k: u32, delta: i64, rho: i64, n_max: usize) -> Result<FourierSeries2k> {
    let a: Vec<Complex64> = (1..=n_max as i64)
        .map(|m| table.cplus(delta.abs() * m * m, rho * m))
        .collect::<Result<_>>()?;
    let pref = coefficient_prefactor(k, delta);
    let coeffs: Vec<Complex64> = forward_divisor_sum(&a, k as i32, delta).into_iter().map(|b| b * pref).collect();
    Ok(FourierSeries2k {
        k,
        n: table.n,
        errors: vec![0.0; coeffs.len()],
        coeffs,
        height_used: f64::INFINITY,
        constant: None,
    })
}

/// Input for the canonical form eta_{k,Delta,rho}(f): the principal part of f.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeromFormSpec {
    pub k: u32,
    #[serde(rename = "N")]
    pub n: i64,
    #[serde(rename = "Delta")]
    pub delta: i64,
    pub rho: i64,
    /// c+(D, r) for D < 0, one entry per index pair
    pub principal_part: Vec<PrincipalTerm>,
    #[serde(default = "default_form_tol")]
    pub tol: f64,
}

fn default_form_tol() -> f64 {
    1e-13
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrincipalTerm {
    #[serde(rename = "D")]
    pub d: i64,
    pub r: i64,
    pub c: f64,
}

/// sum_{(D, r)} c+(D, r) f_{k,D,r,Delta,rho}.
#[derive(Debug, Clone)]
pub struct EtaForm {
    pub terms: Vec<(f64, FormSum)>,
}

impl EtaForm {
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let mut s = Complex64::zero();
        for (c, f) in &self.terms {
            s += f.eval(z)? * *c;
        }
        Ok(s)
    }

    /// Residue divisor: weighted union of the divisors of the terms.
    pub fn divisor(&self) -> Result<Vec<DivisorPoint>> {
        let mut pts: Vec<DivisorPoint> = Vec::new();
        for (c, f) in &self.terms {
            for p in f.divisor()?.points {
                match pts.iter_mut().find(|q| q.form == p.form) {
                    Some(q) => q.weight += c * p.weight,
                    None => pts.push(DivisorPoint { weight: c * p.weight, ..p }),
                }
            }
        }
        Ok(pts)
    }

    pub fn poles_in_box(&self, xmin: f64, xmax: f64, ymin: f64) -> Result<Vec<Complex64>> {
        let mut out: Vec<Complex64> = Vec::new();
        for (_, f) in &self.terms {
            for p in f.poles_in_box(xmin, xmax, ymin)? {
                if !out.iter().any(|q| (q - p).norm() < 1e-12) {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }

    /// Upper bound on the height of the pole set.
    pub fn pole_height(&self) -> Result<f64> {
        Ok(self.divisor()?.iter().map(|p| orbit_height(p.z())).fold(0.0, f64::max))
    }
}

/// eta = (1/2) sum_{(D, r)} c+(D, r) f_{k,D,r}. Each f_{k,D,r} already folds
/// the classes r rho and -r rho, and a symmetric principal part lists the pair
/// (D, r), (D, -r) twice (once as c+ = 2 when r = -r mod 2N), hence the 1/2.
pub fn eta_for_f(spec: &MeromFormSpec) -> Result<EtaForm> {
    let mut terms = Vec::new();
    for t in &spec.principal_part {
        let fs = FkdSpec { k: spec.k, n: spec.n, d: t.d, r: t.r, delta: spec.delta, rho: spec.rho };
        terms.push((0.5 * t.c, FormSum::new(fs)?.with_tol(spec.tol)));
    }
    Ok(EtaForm { terms })
}

/// Principal part (D < 0) of a coefficient table, dropping entries below
/// `cutoff` in absolute value.
pub fn principal_part_of(table: &CoeffTable, cutoff: f64) -> Vec<PrincipalTerm> {
    table
        .principal_part()
        .filter(|(&(d, _), (c, _))| d < 0 && c.norm() > cutoff)
        .map(|(&(d, r), (c, _))| PrincipalTerm { d, r, c: c.re })
        .collect()
}

/// Result of a contour-average residue extraction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residue {
    pub value: f64,
    pub imag_residual: f64,
    /// change between M and 2M contour points
    pub error: f64,
}

/// a with f = a ((z - p)(z - conj p)/(p - conj p))^{-k} + (holomorphic) near p:
/// the mean of f / h over a circle of Euclidean radius `radius` about p.
/// `poles` lists other singularities that must stay outside the circle.
pub fn residue_at<F>(f: F, point: Complex64, k: u32, radius: f64, poles: &[Complex64]) -> Result<Residue>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if radius <= 0.0 || radius >= point.im {
        return invalid("contour radius must be positive and below Im of the point");
    }
    for &q in poles {
        let d = (q - point).norm();
        if d > 1e-9 && d <= 1.5 * radius {
            return Err(Error::PoleTooClose { re: q.re, im: q.im, distance: d });
        }
    }
    let h_inv = |z: Complex64| ((z - point) * (z - point.conj()) / (point - point.conj())).powi(k as i32);
    let mean = |m: usize| -> Result<Complex64> {
        let vals: Vec<Complex64> = (0..m)
            .into_par_iter()
            .map(|j| {
                let z = point + e(j as f64 / m as f64) * radius;
                Ok(f(z)? * h_inv(z))
            })
            .collect::<Result<_>>()?;
        Ok(vals.iter().sum::<Complex64>() / m as f64)
    };
    let a1 = mean(32)?;
    let a2 = mean(64)?;
    Ok(Residue { value: a2.re, imag_residual: a2.im, error: (a2 - a1).norm() })
}

fn ratio_from_str(s: &str) -> Option<Ratio<i128>> {
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i128 = p.trim().parse().ok()?;
            let q: i128 = q.trim().parse().ok()?;
            (q != 0).then(|| Ratio::new(p, q))
        }
        None => Some(Ratio::from_integer(s.trim().parse().ok()?)),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawCoeff {
    Int(i64),
    Text(String),
}

fn ser_coeffs<S: Serializer>(c: &[Ratio<i128>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let raw: Vec<RawCoeff> = c
        .iter()
        .map(|r| match (r.is_integer(), r.to_integer().to_i64()) {
            (true, Some(v)) => RawCoeff::Int(v),
            _ => RawCoeff::Text(format!("{}/{}", r.numer(), r.denom())),
        })
        .collect();
    raw.serialize(s)
}

fn de_coeffs<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Ratio<i128>>, D::Error> {
    let raw = Vec::<RawCoeff>::deserialize(d)?;
    raw.into_iter()
        .map(|r| match r {
            RawCoeff::Int(v) => Ok(Ratio::from_integer(v as i128)),
            RawCoeff::Text(t) => {
                ratio_from_str(&t).ok_or_else(|| serde::de::Error::custom(format!("bad coefficient {t}")))
            }
        })
        .collect()
}

/// q-expansion sum_{n>=1} a_n q^n of a cusp form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QExpansion {
    pub level: i64,
    pub weight: i64,
    #[serde(serialize_with = "ser_coeffs", deserialize_with = "de_coeffs")]
    pub coeffs: Vec<Ratio<i128>>,
}

impl QExpansion {
    /// q prod_{m>=1} (1 - q^m)^24 to n_terms coefficients.
    pub fn ramanujan_delta(n_terms: usize) -> QExpansion {
        // coefficients of prod (1 - q^m)^24 up to q^(n_terms - 1)
        let mut p = vec![0i128; n_terms];
        p[0] = 1;
        for m in 1..n_terms {
            for _ in 0..24 {
                for i in (m..n_terms).rev() {
                    p[i] -= p[i - m];
                }
            }
        }
        QExpansion { level: 1, weight: 12, coeffs: p.into_iter().map(Ratio::from_integer).collect() }
    }

    pub fn coeff(&self, n: usize) -> Option<Ratio<i128>> {
        n.checked_sub(1).and_then(|i| self.coeffs.get(i).copied())
    }

    pub fn is_normalized(&self) -> bool {
        self.coeffs.first().is_some_and(|a| a.is_one())
    }

    fn eval_series(&self, z: Complex64) -> Result<Complex64> {
        let q = e(z.re) * (-2.0 * PI * z.im).exp();
        let mut s = Complex64::zero();
        let mut qn = q;
        let mut last = f64::INFINITY;
        for a in &self.coeffs {
            let t = qn * a.to_f64().unwrap_or(f64::NAN);
            s += t;
            last = t.norm();
            qn *= q;
        }
        let growth = (self.coeffs.len() as f64).powf(self.weight as f64 / 2.0);
        if last > 1e-15 * s.norm().max(1e-300) && qn.norm() * growth > 1e-15 * s.norm().max(1e-300) {
            return Err(Error::NoConvergence { what: "q-expansion", estimate: last, target: 1e-15 * s.norm() });
        }
        Ok(s)
    }

    /// Value at z. Level-one forms are first moved to the fundamental domain.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z.im <= 0.0 {
            return invalid("z must lie in the upper half-plane");
        }
        if self.level != 1 {
            return self.eval_series(z);
        }
        let (w, g) = reduce_level_one(z);
        // f(z) = (cz + d)^{-weight} f(g z)
        Ok(self.eval_series(w)? * g.j(z).powi(-(self.weight as i32)))
    }

    pub fn as_series(&self, k: u32) -> FourierSeries2k {
        FourierSeries2k {
            k,
            n: self.level,
            coeffs: self.coeffs.iter().map(|a| Complex64::new(a.to_f64().unwrap_or(f64::NAN), 0.0)).collect(),
            errors: vec![0.0; self.coeffs.len()],
            height_used: f64::INFINITY,
            constant: None,
        }
    }
}

/// The multiple C_{k,Delta} i pi^k sqrt(Delta) c_top of G subtracted from eta.
pub fn zeta_multiple(k: u32, delta: i64, c_top: Complex64) -> Complex64 {
    coefficient_prefactor(k, delta) * c_top
}

/// zeta = eta - C_{k,Delta} i pi^k sqrt(Delta) c_top G on coefficients. The
/// first coefficient is set to zero.
pub fn zeta_normalize(eta: &FourierSeries2k, g: &QExpansion, delta: i64, c_top: Complex64) -> Result<FourierSeries2k> {
    if !g.is_normalized() {
        return invalid("G must have first coefficient 1");
    }
    if g.coeffs.len() < eta.coeffs.len() {
        return invalid("G has fewer coefficients than eta");
    }
    let mult = zeta_multiple(eta.k, delta, c_top);
    let mut coeffs: Vec<Complex64> = eta
        .coeffs
        .iter()
        .zip(&g.coeffs)
        .map(|(b, a)| b - mult * a.to_f64().unwrap_or(f64::NAN))
        .collect();
    if let Some(c) = coeffs.first_mut() {
        *c = Complex64::zero();
    }
    Ok(FourierSeries2k { coeffs, ..eta.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert_eq!(c_constant(2, -3), Ratio::from_integer(12));
        assert_eq!(c_constant(6, -3), Ratio::new(15552, 120));
        assert_eq!(c_constant(3, 5), Ratio::new(-8 * 25, 2));
    }

    #[test]
    fn delta_coefficients() {
        let d = QExpansion::ramanujan_delta(6);
        let t: Vec<i128> = d.coeffs.iter().map(|c| c.to_integer()).collect();
        assert_eq!(t, vec![1, -24, 252, -1472, 4830, -6048]);
    }

    #[test]
    fn lattice_sum_matches_direct() {
        for &u in &[Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.5), Complex64::new(0.1, -0.7)] {
            for j in 2..6u32 {
                let direct: Complex64 = (-4000..=4000).map(|n| (u + n as f64).powi(-(j as i32))).sum();
                let tail = 2.0 / ((j - 1) as f64 * 4000f64.powi(j as i32 - 1));
                assert!((lattice_sum(j, u) - direct).norm() < tail + 1e-12, "j={j} u={u}");
            }
        }
    }
}

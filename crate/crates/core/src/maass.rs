//! Vector-valued forms for the Weil representation of the lattice of signature
//! (2, 1) with discriminant group Z/2NZ: representation matrices, Maass
//! Poincare series, Fourier coefficient extraction, raising and Hecke operators.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, kronecker};
use crate::error::{invalid, Error, Result};
use crate::qf::Mat2;
use crate::specfun;

/// e(x) = exp(2 pi i x).
pub fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * x)
}

/// Principal square root with the branch cut on the negative axis, taking
/// sqrt(-x) = i sqrt(x) on the cut.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re < 0.0 {
        Complex64::new(0.0, (-z.re).sqrt())
    } else {
        z.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeilRep {
    pub n: i64,
    pub dual: bool,
}

impl WeilRep {
    pub fn new(n: i64, dual: bool) -> Result<Self> {
        if n < 1 {
            return invalid("level must be positive");
        }
        Ok(WeilRep { n, dual })
    }

    pub fn dim(&self) -> usize {
        2 * self.n as usize
    }

    pub fn sigma(&self) -> i64 {
        if self.dual {
            -1
        } else {
            1
        }
    }

    /// Whether D is an admissible index for component r.
    pub fn admissible(&self, d: i64, r: i64) -> bool {
        (d - self.sigma() * r * r).rem_euclid(4 * self.n) == 0
    }

    fn t_entry(&self, r: usize, q: i64) -> Complex64 {
        let r = r as i64;
        e((self.sigma() * q * ((r * r) % (4 * self.n))) as f64 / (4 * self.n) as f64)
    }

    /// Coefficient of e_r in rho(S) e_{r'}.
    fn s_entry(&self, r: usize, rp: usize) -> Complex64 {
        let sg = self.sigma() as f64;
        let two_n = 2 * self.n;
        let rr = (r as i64 * rp as i64) % two_n;
        e(-sg / 8.0) * e(-sg * rr as f64 / two_n as f64) / (two_n as f64).sqrt()
    }
}

/// Element (M, phi) of Mp_2(Z) with phi(tau) = eps * sqrt(c tau + d).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaplecticElement {
    pub m: Mat2,
    pub eps: i8,
}

const PROBE: Complex64 = Complex64::new(0.173, 1.291);

impl MetaplecticElement {
    pub fn new(m: Mat2, eps: i8) -> Result<Self> {
        if m.det() != 1 {
            return invalid("matrix must have determinant 1");
        }
        if eps != 1 && eps != -1 {
            return invalid("branch sign must be +1 or -1");
        }
        Ok(MetaplecticElement { m, eps })
    }

    pub fn t(q: i64) -> Self {
        MetaplecticElement { m: Mat2::t(q), eps: 1 }
    }

    pub fn s() -> Self {
        MetaplecticElement { m: Mat2::S, eps: 1 }
    }

    pub fn phi(&self, tau: Complex64) -> Complex64 {
        principal_sqrt(self.m.j(tau)) * self.eps as f64
    }

    /// (A, phi_A)(B, phi_B) = (AB, phi_A(B tau) phi_B(tau)).
    pub fn mul(&self, o: &MetaplecticElement) -> MetaplecticElement {
        let m = self.m.mul(&o.m);
        let prod = self.phi(o.m.act(PROBE)) * o.phi(PROBE);
        let base = principal_sqrt(m.j(PROBE));
        let eps = if (prod / base).re > 0.0 { 1 } else { -1 };
        MetaplecticElement { m, eps }
    }
}

#[derive(Debug, Clone, Copy)]
enum Gen {
    T(i64),
    S,
}

/// Word in T and S whose product is exactly the matrix m.
fn word(m: Mat2) -> Vec<Gen> {
    let mut out = Vec::new();
    let mut m = m;
    loop {
        if m.c == 0 {
            if m.a == 1 {
                out.push(Gen::T(m.b));
            } else {
                // -T^{-b} with -I = S^2
                out.extend([Gen::S, Gen::S, Gen::T(-m.b)]);
            }
            return out;
        }
        let q = m.a.div_euclid(m.c);
        out.push(Gen::T(q));
        let (a1, b1) = (m.a - q * m.c, m.b - q * m.d);
        out.push(Gen::S);
        m = Mat2::new(m.c, m.d, -a1, -b1);
    }
}

/// Row-vector action helper: returns row * rho(g) for a generator g.
fn apply_gen(rep: &WeilRep, row: &[Complex64], g: Gen) -> Vec<Complex64> {
    match g {
        Gen::T(q) => row.iter().enumerate().map(|(r, &x)| x * rep.t_entry(r, q)).collect(),
        Gen::S => (0..rep.dim())
            .map(|rp| (0..rep.dim()).map(|r| row[r] * rep.s_entry(r, rp)).sum())
            .collect(),
    }
}

fn lift(g: Gen) -> MetaplecticElement {
    match g {
        Gen::T(q) => MetaplecticElement::t(q),
        Gen::S => MetaplecticElement::s(),
    }
}

/// Row r of rho(g), i.e. the coefficients of e_r in rho(g) e_{r'}.
pub fn weil_row(rep: &WeilRep, g: &MetaplecticElement, r: usize) -> Vec<Complex64> {
    let mut row = vec![Complex64::new(0.0, 0.0); rep.dim()];
    row[r] = Complex64::new(1.0, 0.0);
    let mut acc = MetaplecticElement::t(0);
    for gen in word(g.m) {
        row = apply_gen(rep, &row, gen);
        acc = acc.mul(&lift(gen));
    }
    debug_assert_eq!(acc.m, g.m);
    if acc.eps != g.eps {
        // differ by (I, -1), which acts as -1
        row.iter_mut().for_each(|x| *x = -*x);
    }
    row
}

/// rho(g) as a row-major matrix with entry [r][r'] = coefficient of e_r in rho(g) e_{r'}.
pub fn weil_matrix(rep: &WeilRep, g: &MetaplecticElement) -> Vec<Vec<Complex64>> {
    (0..rep.dim()).map(|r| weil_row(rep, g, r)).collect()
}

pub fn apply_matrix(m: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Harmonic Maass form coefficients c^+(D, r) and c^-(D, r).
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    pub n: i64,
    pub weight_times_2: i32,
    pub dual: bool,
    pub entries: BTreeMap<(i64, i64), (Complex64, Complex64)>,
}

#[derive(Serialize, Deserialize)]
struct CoeffEntryJson {
    #[serde(rename = "D")]
    d: i64,
    r: i64,
    cplus: [f64; 2],
    cminus: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct CoeffTableJson {
    #[serde(rename = "N")]
    n: i64,
    weight_times_2: i32,
    dual: bool,
    entries: Vec<CoeffEntryJson>,
}

impl Serialize for CoeffTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CoeffTableJson {
            n: self.n,
            weight_times_2: self.weight_times_2,
            dual: self.dual,
            entries: self
                .entries
                .iter()
                .map(|(&(d, r), &(p, m))| CoeffEntryJson { d, r, cplus: [p.re, p.im], cminus: [m.re, m.im] })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoeffTable {
    fn deserialize<De: serde::Deserializer<'de>>(de: De) -> std::result::Result<Self, De::Error> {
        let j = CoeffTableJson::deserialize(de)?;
        let mut t = CoeffTable::new(j.n, j.weight_times_2, j.dual);
        for en in j.entries {
            t.entries.insert(
                (en.d, en.r.rem_euclid(2 * j.n)),
                (Complex64::new(en.cplus[0], en.cplus[1]), Complex64::new(en.cminus[0], en.cminus[1])),
            );
        }
        t.validate().map_err(serde::de::Error::custom)?;
        Ok(t)
    }
}

impl CoeffTable {
    pub fn new(n: i64, weight_times_2: i32, dual: bool) -> Self {
        CoeffTable { n, weight_times_2, dual, entries: BTreeMap::new() }
    }

    pub fn rep(&self) -> WeilRep {
        WeilRep { n: self.n, dual: self.dual }
    }

    pub fn weight(&self) -> f64 {
        self.weight_times_2 as f64 / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.weight_times_2 % 2 == 0 {
            return invalid("weight must be half-integral");
        }
        let rep = self.rep();
        for &(d, r) in self.entries.keys() {
            if !rep.admissible(d, r) {
                return invalid(format!("index ({d}, {r}) violates D = sigma r^2 mod 4N"));
            }
        }
        Ok(())
    }

    pub fn cplus(&self, d: i64, r: i64) -> Result<Complex64> {
        self.entries
            .get(&(d, r.rem_euclid(2 * self.n)))
            .map(|x| x.0)
            .ok_or(Error::MissingIndex { d, r })
    }

    pub fn insert(&mut self, d: i64, r: i64, cplus: Complex64, cminus: Complex64) {
        self.entries.insert((d, r.rem_euclid(2 * self.n)), (cplus, cminus));
    }

    /// Entries with D < 0, the principal part.
    pub fn principal_part(&self) -> impl Iterator<Item = (&(i64, i64), &(Complex64, Complex64))> {
        self.entries.range(..(0, 0))
    }
}

/// Maass Poincare series P_{kappa,D,r}(tau, s), including the 1/(2 Gamma(2s))
/// normalisation.
#[derive(Debug, Clone)]
pub struct PoincareSeries {
    pub rep: WeilRep,
    pub weight_times_2: i32,
    pub d: i64,
    pub r: i64,
    pub s: f64,
    /// absolute tolerance for the truncated tail
    pub tol: f64,
}

impl PoincareSeries {
    pub fn new(rep: WeilRep, weight_times_2: i32, d: i64, r: i64, s: f64) -> Result<Self> {
        if weight_times_2 % 2 == 0 {
            return invalid("weight must be half-integral");
        }
        if d >= 0 {
            return invalid("Poincare series index D must be negative");
        }
        if !rep.admissible(d, r) {
            return invalid(format!("D = {d} is not sigma r^2 mod 4N for r = {r}"));
        }
        if s <= 1.0 {
            return invalid("the series needs s > 1");
        }
        Ok(PoincareSeries { rep, weight_times_2, d, r: r.rem_euclid(2 * rep.n), s, tol: 1e-12 })
    }

    /// Harmonic special value s = 1 - kappa/2.
    pub fn harmonic(rep: WeilRep, weight_times_2: i32, d: i64, r: i64) -> Result<Self> {
        Self::new(rep, weight_times_2, d, r, 1.0 - weight_times_2 as f64 / 4.0)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn kappa(&self) -> f64 {
        self.weight_times_2 as f64 / 2.0
    }

    fn x_scale(&self) -> f64 {
        PI * self.d.unsigned_abs() as f64 / self.rep.n as f64
    }

    /// Radius R such that the terms with |c tau + d| > R are below `tol`.
    pub fn truncation_radius(&self, v: f64) -> f64 {
        let s = self.s;
        let kappa = self.kappa();
        let x = self.x_scale() * v;
        let scale = (x.ln() * (s - kappa / 2.0) + x / 2.0 - specfun::ln_gamma(2.0 * s)).exp();
        // tail of sum |j|^{-2s} over pairs with |j| > R is at most 4 pi R^{2-2s} / (v (2s - 2))
        let mut r: f64 = 2.0;
        while scale * 4.0 * PI * r.powf(2.0 - 2.0 * s) / (v * (2.0 * s - 2.0)) > self.tol {
            r *= 1.1;
        }
        r.max(1.0 / v.sqrt()).max(1.5)
    }

    fn seed(&self, v: f64) -> Result<f64> {
        specfun::script_m(self.kappa(), self.s, self.x_scale() * v)
    }

    pub fn eval(&self, tau: Complex64) -> Result<Vec<Complex64>> {
        let mut out = self.eval_horocycle(tau.im, &[tau.re])?;
        Ok(out.pop().expect("one sample"))
    }

    /// Values at u + i v for every u in `us`. Each coset is visited once and
    /// its representation row is shared by all sample points.
    pub fn eval_horocycle(&self, v: f64, us: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        let big_r = self.truncation_radius(v);
        let dim = self.rep.dim();
        let n4 = (4 * self.rep.n) as f64;
        let r_idx = self.r as usize;
        let kappa2 = self.weight_times_2;
        let (umin, umax) = us.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &u| (a.min(u), b.max(u)));
        let cmax = (big_r / v).floor() as i64;
        let zero = || vec![vec![Complex64::new(0.0, 0.0); dim]; us.len()];
        let out = (-cmax..=cmax)
            .into_par_iter()
            .try_fold(zero, |mut out, c| -> Result<_> {
                let w2 = big_r * big_r - (c as f64 * v).powi(2);
                if w2 < 0.0 {
                    return Ok(out);
                }
                let w = w2.sqrt();
                let cf = c as f64;
                let (lo, hi) =
                    if c >= 0 { (-cf * umax - w, -cf * umin + w) } else { (-cf * umin - w, -cf * umax + w) };
                for d in lo.ceil() as i64..=hi.floor() as i64 {
                    if gcd(c, d) != 1 {
                        continue;
                    }
                    let m = coset_matrix(c, d);
                    let g = MetaplecticElement { m, eps: 1 };
                    // rho(g)^{-1} e_r = sum_{r'} conj(rho(g)[r][r']) e_{r'}
                    let row: Vec<Complex64> =
                        weil_row(&self.rep, &g, r_idx).into_iter().map(|x| x.conj()).collect();
                    for (k, &u) in us.iter().enumerate() {
                        let tau = Complex64::new(u, v);
                        let j = m.j(tau);
                        if j.norm_sqr() > big_r * big_r {
                            continue;
                        }
                        let mt = m.act(tau);
                        let seed = self.seed(mt.im)? * e(self.d as f64 * mt.re / n4);
                        // phi^{-2 kappa}
                        let factor = principal_sqrt(j).powi(-kappa2) * seed;
                        for (o, x) in out[k].iter_mut().zip(&row) {
                            *o += factor * x;
                        }
                    }
                }
                Ok(out)
            })
            .try_reduce(zero, |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    for (p, q) in x.iter_mut().zip(y) {
                        *p += q;
                    }
                }
                Ok(a)
            })?;
        let mut out = out;
        let norm = specfun::gamma(2.0 * self.s);
        for o in out.iter_mut() {
            o.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(out)
    }
}

/// Some matrix in SL_2(Z) with bottom row (c, d).
pub fn coset_matrix(c: i64, d: i64) -> Mat2 {
    let (_, x, y) = crate::arith::ext_gcd(d, c);
    // d x + c y = 1 => a = x, b = -y
    Mat2::new(x, -y, c, d)
}

/// Adapts a pointwise evaluator to the horocycle sampler interface.
pub fn pointwise<F>(f: F) -> impl Fn(f64, &[f64]) -> Result<Vec<Vec<Complex64>>>
where
    F: Fn(Complex64) -> Result<Vec<Complex64>> + Sync,
{
    move |v, us| us.par_iter().map(|&u| f(Complex64::new(u, v))).collect()
}

/// Result of a two-height coefficient extraction.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub table: CoeffTable,
    /// |c(y1) - c(y2)| / max(|c|, 1) for indices with D > 0
    pub residuals: BTreeMap<(i64, i64), f64>,
}

/// Samples the components of a harmonic Maass form on two horocycles and
/// separates holomorphic and non-holomorphic coefficients for D in
/// [dmin, dmax]. `sampler(v, us)` returns the vector values at u + iv.
pub fn extract_coeffs_two_height<F>(
    sampler: F,
    rep: WeilRep,
    weight_times_2: i32,
    heights: (f64, f64),
    drange: (i64, i64),
    samples: usize,
) -> Result<Extraction>
where
    F: Fn(f64, &[f64]) -> Result<Vec<Vec<Complex64>>>,
{
    let (y1, y2) = heights;
    if !(y1 > 0.0 && y2 > 0.0 && y1 != y2) {
        return invalid("need two distinct positive heights");
    }
    let kappa = weight_times_2 as f64 / 2.0;
    let n4 = (4 * rep.n) as f64;
    let us: Vec<f64> = (0..samples).map(|j| j as f64 / samples as f64).collect();
    let vals1 = sampler(y1, &us)?;
    let vals2 = sampler(y2, &us)?;
    let coeff_at = |vals: &[Vec<Complex64>], d: i64, r: usize| -> Complex64 {
        let s: Complex64 = vals
            .iter()
            .enumerate()
            .map(|(j, v)| v[r] * e(-(d as f64) * j as f64 / (samples as f64 * n4)))
            .sum();
        s / samples as f64
    };
    let mut table = CoeffTable::new(rep.n, weight_times_2, rep.dual);
    let mut residuals = BTreeMap::new();
    for r in 0..rep.dim() {
        for d in drange.0..=drange.1 {
            if !rep.admissible(d, r as i64) {
                continue;
            }
            let a1 = coeff_at(&vals1, d, r);
            let a2 = coeff_at(&vals2, d, r);
            let df = d as f64;
            let grow = |y: f64| (2.0 * PI * df * y / n4).exp();
            if d > 0 {
                let c1 = a1 * grow(y1);
                let c2 = a2 * grow(y2);
                residuals.insert((d, r as i64), (c1 - c2).norm() / c1.norm().max(1.0));
                table.insert(d, r as i64, c1, Complex64::new(0.0, 0.0));
            } else {
                let (g1, g2) = if d == 0 {
                    (y1.powf(1.0 - kappa), y2.powf(1.0 - kappa))
                } else {
                    let x = PI * df.abs() / rep.n as f64;
                    (specfun::inc_gamma(1.0 - kappa, x * y1)?, specfun::inc_gamma(1.0 - kappa, x * y2)?)
                };
                let (b1, b2) = (a1 * grow(y1), a2 * grow(y2));
                let det = g2 - g1;
                let cminus = (b2 - b1) / det;
                let cplus = b1 - cminus * g1;
                table.insert(d, r as i64, cplus, cminus);
            }
        }
    }
    Ok(Extraction { table, residuals })
}

fn partial_u<F: Fn(Complex64) -> Result<Vec<Complex64>>>(
    f: &F,
    tau: Complex64,
    dir: Complex64,
    h: f64,
) -> Result<Vec<Complex64>> {
    let diff = |h: f64| -> Result<Vec<Complex64>> {
        let p = f(tau + dir * h)?;
        let m = f(tau - dir * h)?;
        Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let d1 = diff(h)?;
    let d2 = diff(h / 2.0)?;
    Ok(d1.iter().zip(&d2).map(|(a, b)| (b * 4.0 - a) / 3.0).collect())
}

/// Iterated raising operator R^n_kappa = R_{kappa+2n-2} o ... o R_kappa,
/// R_kappa = 2i d/dtau + kappa/v, by nested Richardson-extrapolated central
/// differences with step h.
pub fn raising_numeric<F>(f: &F, kappa: f64, n: u32, tau: Complex64, h: f64) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Vec<Complex64>>,
{
    if n == 0 {
        return f(tau);
    }
    let inner = |t: Complex64| raising_numeric(f, kappa, n - 1, t, h);
    let k = kappa + 2.0 * (n - 1) as f64;
    let du = partial_u(&inner, tau, Complex64::new(1.0, 0.0), h)?;
    let dv = partial_u(&inner, tau, Complex64::new(0.0, 1.0), h)?;
    let val = inner(tau)?;
    let i = Complex64::new(0.0, 1.0);
    // 2i d/dtau = i (d/du - i d/dv)
    Ok((0..val.len()).map(|j| i * (du[j] - i * dv[j]) + val[j] * (k / tau.im)).collect())
}

/// Weight kappa Laplacian -v^2 (d_u^2 + d_v^2) + i kappa v (d_u + i d_v) by
/// finite differences.
pub fn laplacian_numeric<F>(f: &F, kappa: f64, tau: Complex64, h: f64) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Vec<Complex64>>,
{
    let second = |dir: Complex64, h: f64| -> Result<Vec<Complex64>> {
        let p = f(tau + dir * h)?;
        let m = f(tau - dir * h)?;
        let c = f(tau)?;
        Ok((0..c.len()).map(|j| (p[j] + m[j] - c[j] * 2.0) / (h * h)).collect())
    };
    let rich = |dir: Complex64| -> Result<Vec<Complex64>> {
        let a = second(dir, h)?;
        let b = second(dir, h / 2.0)?;
        Ok(a.iter().zip(&b).map(|(a, b)| (b * 4.0 - a) / 3.0).collect())
    };
    let uu = rich(Complex64::new(1.0, 0.0))?;
    let vv = rich(Complex64::new(0.0, 1.0))?;
    let du = partial_u(f, tau, Complex64::new(1.0, 0.0), h)?;
    let dv = partial_u(f, tau, Complex64::new(0.0, 1.0), h)?;
    let v = tau.im;
    let i = Complex64::new(0.0, 1.0);
    Ok((0..uu.len())
        .map(|j| -(uu[j] + vv[j]) * v * v + i * kappa * v * (du[j] + i * dv[j]))
        .collect())
}

/// r' mod 2N with p r' = r mod 2N and d = sigma r'^2 mod 4N.
fn divide_index(rep: &WeilRep, d: i64, r: i64, p: i64) -> Option<i64> {
    let n2 = 2 * rep.n;
    (0..n2).find(|&rp| (p * rp - r).rem_euclid(n2) == 0 && rep.admissible(d, rp))
}

/// Hecke operator T_p (p prime, p coprime to N) on the holomorphic
/// coefficients of a form of weight 1/2 + k':
/// c'(D, r) = c(p^2 D, p r) + p^{k'-1} (sigma D / p) c(D, r) + p^{2k'-1} c(D/p^2, r/p).
pub fn hecke_tp_at(table: &CoeffTable, p: i64, d: i64, r: i64) -> Result<Complex64> {
    let rep = table.rep();
    if gcd(p, rep.n) != 1 || p < 2 || crate::arith::factorize(p as u64) != [(p as u64, 1)] {
        return invalid(format!("T_p needs a prime p coprime to N, got {p}"));
    }
    let kp = (table.weight_times_2 - 1) as f64 / 2.0;
    let pf = p as f64;
    let mut c = table.cplus(p * p * d, p * r)?;
    let chi = kronecker(rep.sigma() * d, p);
    if chi != 0 {
        c += table.cplus(d, r)? * (chi as f64 * pf.powf(kp - 1.0));
    }
    if d % (p * p) == 0 {
        if let Some(rp) = divide_index(&rep, d / (p * p), r, p) {
            c += table.cplus(d / (p * p), rp)? * pf.powf(2.0 * kp - 1.0);
        }
    }
    Ok(c)
}

/// T_p applied to every index of the table whose inputs are available.
/// Non-holomorphic coefficients are not transformed and are set to zero.
pub fn hecke_tp(table: &CoeffTable, p: i64) -> Result<CoeffTable> {
    let mut out = CoeffTable::new(table.n, table.weight_times_2, table.dual);
    for &(d, r) in table.entries.keys() {
        match hecke_tp_at(table, p, d, r) {
            Ok(c) => out.insert(d, r, c, Complex64::new(0.0, 0.0)),
            Err(Error::MissingIndex { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn scale_sub(a: &CoeffTable, b: &CoeffTable, lambda: f64) -> CoeffTable {
    let mut out = CoeffTable::new(a.n, a.weight_times_2, a.dual);
    for (&(d, r), &(c, _)) in &a.entries {
        if let Some(&(cb, _)) = b.entries.get(&(d, r)) {
            out.insert(d, r, c - cb * lambda, Complex64::new(0.0, 0.0));
        }
    }
    out
}

/// T_m for m coprime to N, built from T_p with
/// T_{p^{n+1}} = T_p T_{p^n} - p^{2k'-1} T_{p^{n-1}}.
pub fn hecke_tm(table: &CoeffTable, m: i64) -> Result<CoeffTable> {
    if m < 1 || gcd(m, table.n) != 1 {
        return invalid(format!("T_m needs m >= 1 coprime to N, got {m}"));
    }
    let kp = (table.weight_times_2 - 1) as f64 / 2.0;
    let mut cur = table.clone();
    for (p, e) in crate::arith::factorize(m as u64) {
        let p = p as i64;
        let mut prev = cur.clone();
        let mut now = hecke_tp(&cur, p)?;
        for _ in 1..e {
            let next = scale_sub(&hecke_tp(&now, p)?, &prev, (p as f64).powf(2.0 * kp - 1.0));
            prev = now;
            now = next;
        }
        cur = now;
    }
    Ok(cur)
}

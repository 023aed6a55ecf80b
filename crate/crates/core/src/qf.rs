//! Integral binary quadratic forms [a, b, c] with N | a, their Gamma_0(N)
//! classes, Heegner points, genus characters and Heegner divisors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{ext_gcd, gcd, is_fundamental, isqrt, kronecker};
use crate::error::{invalid, Error, Result};

/// 2x2 integer matrix [[a, b], [c, d]].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Mat2 {
    pub const I: Mat2 = Mat2 { a: 1, b: 0, c: 0, d: 1 };
    pub const S: Mat2 = Mat2 { a: 0, b: -1, c: 1, d: 0 };

    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub const fn t(n: i64) -> Self {
        Mat2 { a: 1, b: n, c: 0, d: 1 }
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// Inverse of a determinant one matrix.
    pub fn inv(&self) -> Mat2 {
        Mat2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn neg(&self) -> Mat2 {
        Mat2 { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }

    /// Moebius action on the upper half-plane.
    pub fn act(&self, z: Complex64) -> Complex64 {
        (z * self.a as f64 + self.b as f64) / (z * self.c as f64 + self.d as f64)
    }

    /// Automorphy factor cz + d.
    pub fn j(&self, z: Complex64) -> Complex64 {
        z * self.c as f64 + self.d as f64
    }

    pub fn trace(&self) -> i64 {
        self.a + self.d
    }
}

/// The form a x^2 + b x y + c y^2. For level N forms, `a` already contains
/// the factor N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub const fn new(a: i64, b: i64, c: i64) -> Self {
        QuadForm { a, b, c }
    }

    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn neg(&self) -> QuadForm {
        QuadForm::new(-self.a, -self.b, -self.c)
    }

    pub fn value(&self, x: i64, y: i64) -> i64 {
        self.a * x * x + self.b * x * y + self.c * y * y
    }

    /// Q(z, 1).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        z * z * self.a as f64 + z * self.b as f64 + self.c as f64
    }

    /// Q o g, i.e. (x, y) -> Q(g (x, y)). Roots move by g^{-1}.
    pub fn compose(&self, g: &Mat2) -> QuadForm {
        QuadForm {
            a: self.value(g.a, g.c),
            b: 2 * self.a * g.a * g.b + self.b * (g.a * g.d + g.b * g.c) + 2 * self.c * g.c * g.d,
            c: self.value(g.b, g.d),
        }
    }

    /// The root in the upper half-plane of a definite form.
    pub fn heegner_point(&self) -> Complex64 {
        let s = ((-self.disc()) as f64).sqrt();
        let sgn = self.a.signum() as f64;
        Complex64::new(-self.b as f64, sgn * s) / (2.0 * self.a as f64)
    }

    /// Reduces a positive definite form under SL_2(Z). Returns (R, g) with
    /// R = self o g.
    pub fn reduce(&self) -> (QuadForm, Mat2) {
        assert!(self.disc() < 0 && self.a > 0, "reduce needs a positive definite form");
        let mut q = *self;
        let mut g = Mat2::I;
        loop {
            // bring b into (-a, a]
            let n = (-q.b).div_euclid(2 * q.a);
            let n = if q.b + 2 * q.a * n <= -q.a { n + 1 } else { n };
            let t = Mat2::t(n);
            q = q.compose(&t);
            g = g.mul(&t);
            if q.a > q.c {
                q = q.compose(&Mat2::S);
                g = g.mul(&Mat2::S);
            } else {
                break;
            }
        }
        if q.a == q.c && q.b < 0 {
            q = q.compose(&Mat2::S);
            g = g.mul(&Mat2::S);
        }
        (q, g)
    }
}

/// Elements of SL_2(Z) fixing a reduced positive definite form.
fn reduced_stabilizer(r: &QuadForm) -> Vec<Mat2> {
    let mut out = Vec::new();
    for a in -1..=1 {
        for b in -1..=1 {
            for c in -1..=1 {
                for d in -1..=1 {
                    let g = Mat2::new(a, b, c, d);
                    if g.det() == 1 && r.compose(&g) == *r {
                        out.push(g);
                    }
                }
            }
        }
    }
    out
}

/// Half the order of the stabilizer of Q in Gamma_0(N).
pub fn stabilizer_order(q: &QuadForm, n: i64) -> u32 {
    let q = if q.a < 0 { q.neg() } else { *q };
    let (r, g) = q.reduce();
    let gi = g.inv();
    let count = reduced_stabilizer(&r)
        .iter()
        .filter(|s| g.mul(s).mul(&gi).c % n == 0)
        .count();
    (count / 2) as u32
}

/// Gamma_0(N)-equivalence of positive definite forms.
pub fn gamma0_equivalent(q1: &QuadForm, q2: &QuadForm, n: i64) -> bool {
    let (r1, g1) = q1.reduce();
    let (r2, g2) = q2.reduce();
    if r1 != r2 {
        return false;
    }
    // q1 o gamma = q2 with gamma = g1 s g2^{-1}, s in Stab(r)
    let g2i = g2.inv();
    reduced_stabilizer(&r1)
        .iter()
        .any(|s| g1.mul(s).mul(&g2i).c % n == 0)
}

/// SL_2(Z)-reduced positive definite forms of discriminant d < 0.
pub fn reduced_forms(d: i64) -> Vec<QuadForm> {
    let mut out = Vec::new();
    let amax = isqrt(-d / 3);
    for a in 1..=amax {
        for b in (-a + 1)..=a {
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (c == a && b < 0) {
                continue;
            }
            out.push(QuadForm::new(a, b, c));
        }
    }
    out
}

/// Representatives g of the left cosets g Gamma_0(N) in SL_2(Z).
pub fn gamma0_cosets(n: i64) -> Vec<Mat2> {
    let mut cols: Vec<(i64, i64)> = Vec::new();
    let mut out = Vec::new();
    for c in 0..n {
        for a in 0..n {
            if gcd(gcd(a, c), n) != 1 {
                continue;
            }
            if cols.iter().any(|&(a2, c2)| (a * c2 - c * a2).rem_euclid(n) == 0) {
                continue;
            }
            let (a1, c1) = lift_coprime(a, c, n);
            let (_, x, y) = ext_gcd(a1, c1);
            cols.push((a, c));
            out.push(Mat2::new(a1, -y, c1, x));
        }
    }
    out
}

fn lift_coprime(a: i64, c: i64, n: i64) -> (i64, i64) {
    if n == 1 {
        return (1, 0);
    }
    for t in 0.. {
        for s in 0..=t {
            let (a1, c1) = (a + s * n, c + (t - s) * n);
            if gcd(a1, c1) == 1 {
                return (a1, c1);
            }
        }
    }
    unreachable!()
}

/// Representatives of the Gamma_0(N)-classes of positive definite forms
/// [aN, b, c] of discriminant d with b = r mod 2N, sorted by (a, b, c).
pub fn class_reps(n: i64, d: i64, r: i64) -> Result<Vec<QuadForm>> {
    if n < 1 {
        return invalid("level must be positive");
    }
    if d >= 0 {
        return invalid("discriminant must be negative");
    }
    if (d - r * r).rem_euclid(4 * n) != 0 {
        return invalid(format!("{d} is not congruent to {r}^2 mod {}", 4 * n));
    }
    let cosets = gamma0_cosets(n);
    let mut classes: Vec<QuadForm> = Vec::new();
    for red in reduced_forms(d) {
        let mut cands: Vec<QuadForm> = cosets
            .iter()
            .map(|g| normalize_b(red.compose(g)))
            .filter(|q| q.a % n == 0 && (q.b - r).rem_euclid(2 * n) == 0)
            .collect();
        cands.sort();
        cands.dedup();
        for q in cands {
            if !classes.iter().any(|p| gamma0_equivalent(p, &q, n)) {
                classes.push(q);
            }
        }
    }
    classes.sort();
    Ok(classes)
}

/// Translate by T^m (which lies in Gamma_0(N)) so that -a < b <= a.
fn normalize_b(q: QuadForm) -> QuadForm {
    let m = (q.a - q.b).div_euclid(2 * q.a);
    q.compose(&Mat2::t(m))
}

/// Genus character of a level N form of discriminant divisible by delta:
/// (delta / n) for any n prime to delta represented by [a N1, b, c N2],
/// N1 N2 = N, where the form is [a N, b, c]; zero if gcd(a, b, c, delta) > 1.
pub fn genus_character(delta: i64, q: &QuadForm, n: i64) -> Result<i32> {
    if delta == 1 {
        return Ok(1);
    }
    if q.a % n != 0 || q.disc() % delta != 0 {
        return invalid("form is not of the right level or discriminant");
    }
    let a = q.a / n;
    if gcd(gcd(gcd(a, q.b), q.c), delta) > 1 {
        return Ok(0);
    }
    for n1 in (1..=n).filter(|m| n % m == 0) {
        let f = QuadForm::new(a * n1, q.b, q.c * (n / n1));
        for size in 1..=30i64 {
            for x in -size..=size {
                for y in [-size, size] {
                    for (u, v) in [(x, y), (y, x)] {
                        if gcd(u, v) != 1 {
                            continue;
                        }
                        let m = f.value(u, v);
                        if m != 0 && gcd(m, delta) == 1 {
                            return Ok(kronecker(delta, m));
                        }
                    }
                }
            }
        }
    }
    Err(Error::IllConditioned(format!(
        "no value prime to {delta} found for {q:?}"
    )))
}

/// Element of the dual lattice L' written through integers (a, b, c):
/// X = [[b/2N, c/N], [-a, -b/2N]], with associated form [aN, b, c].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeVector {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub n: i64,
}

impl LatticeVector {
    pub fn from_form(q: &QuadForm, n: i64) -> Result<Self> {
        if q.a % n != 0 {
            return invalid("leading coefficient not divisible by the level");
        }
        Ok(LatticeVector { a: q.a / n, b: q.b, c: q.c, n })
    }

    pub fn to_form(&self) -> QuadForm {
        QuadForm::new(self.a * self.n, self.b, self.c)
    }

    /// Entries of X as floating point numbers, row major.
    pub fn matrix(&self) -> [f64; 4] {
        let n = self.n as f64;
        let h = self.b as f64 / (2.0 * n);
        [h, self.c as f64 / n, -(self.a as f64), -h]
    }

    /// q(X) = -N det X = disc / 4N.
    pub fn norm(&self) -> f64 {
        self.to_form().disc() as f64 / (4.0 * self.n as f64)
    }

    /// p_z(X) = -(X, X(z)) = (aN|z|^2 + bx + c) / (sqrt(2N) y).
    pub fn p_z(&self, z: Complex64) -> f64 {
        let q = self.to_form();
        (q.a as f64 * z.norm_sqr() + q.b as f64 * z.re + q.c as f64) / ((2.0 * self.n as f64).sqrt() * z.im)
    }

    /// (X, Y) = N tr(XY).
    pub fn pairing(&self, o: &LatticeVector) -> f64 {
        let x = self.matrix();
        let y = o.matrix();
        self.n as f64 * (x[0] * y[0] + x[1] * y[2] + x[2] * y[1] + x[3] * y[3])
    }

    /// gamma . X = gamma X gamma^{-1}, for gamma in Gamma_0(N).
    pub fn act(&self, g: &Mat2) -> Result<Self> {
        if g.c % self.n != 0 || g.det() != 1 {
            return invalid("matrix not in Gamma_0(N)");
        }
        // Q_{gamma . X} = Q_X o gamma^{-1}
        LatticeVector::from_form(&self.to_form().compose(&g.inv()), self.n)
    }
}

/// One point of a Heegner divisor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivisorPoint {
    pub re: f64,
    pub im: f64,
    pub weight: f64,
    pub form: [i64; 3],
}

impl DivisorPoint {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn quad_form(&self) -> QuadForm {
        QuadForm::new(self.form[0], self.form[1], self.form[2])
    }
}

/// Twisted Heegner divisor: points alpha_Q for the classes of Q_{D|Delta|, r rho},
/// weighted by chi_Delta(Q) / w_Q.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeegnerDivisor {
    #[serde(rename = "N")]
    pub n: i64,
    #[serde(rename = "Delta")]
    pub delta: i64,
    pub rho: i64,
    #[serde(rename = "D")]
    pub d: i64,
    pub r: i64,
    pub points: Vec<DivisorPoint>,
}

/// Checks the compatibility conditions on (N, Delta, rho, D, r).
pub fn validate_indices(n: i64, delta: i64, rho: i64, d: i64, r: i64) -> Result<()> {
    if n < 1 {
        return invalid("level must be positive");
    }
    if !is_fundamental(delta) {
        return invalid(format!("Delta = {delta} is not a fundamental discriminant"));
    }
    if (delta - rho * rho).rem_euclid(4 * n) != 0 {
        return invalid(format!("Delta = {delta} is not rho^2 mod {}", 4 * n));
    }
    if d >= 0 {
        return invalid("D must be negative");
    }
    if (delta.signum() * d - r * r).rem_euclid(4 * n) != 0 {
        return invalid(format!("sgn(Delta) D = {} is not r^2 mod {}", delta.signum() * d, 4 * n));
    }
    Ok(())
}

pub fn heegner_divisor(n: i64, delta: i64, rho: i64, d: i64, r: i64) -> Result<HeegnerDivisor> {
    validate_indices(n, delta, rho, d, r)?;
    let disc = d * delta.abs();
    let res = (r * rho).rem_euclid(2 * n);
    let mut points = Vec::new();
    for q in class_reps(n, disc, res)? {
        let chi = genus_character(delta, &q, n)?;
        let w = stabilizer_order(&q, n);
        let z = q.heegner_point();
        points.push(DivisorPoint {
            re: z.re,
            im: z.im,
            weight: chi as f64 / w as f64,
            form: [q.a, q.b, q.c],
        });
    }
    Ok(HeegnerDivisor { n, delta, rho, d, r, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_is_equivalence() {
        let q = QuadForm::new(7, 23, 19);
        let (r, g) = q.reduce();
        assert_eq!(q.compose(&g), r);
        assert_eq!(r.disc(), q.disc());
        assert!(r.b.abs() <= r.a && r.a <= r.c);
    }

    #[test]
    fn class_numbers_level_one() {
        assert_eq!(class_reps(1, -3, 1).unwrap(), vec![QuadForm::new(1, 1, 1)]);
        assert_eq!(class_reps(1, -4, 0).unwrap(), vec![QuadForm::new(1, 0, 1)]);
        assert_eq!(class_reps(1, -23, 1).unwrap().len(), 3);
        assert_eq!(stabilizer_order(&QuadForm::new(1, 1, 1), 1), 3);
        assert_eq!(stabilizer_order(&QuadForm::new(1, 0, 1), 1), 2);
        assert_eq!(stabilizer_order(&QuadForm::new(2, 1, 3), 1), 1);
    }

    #[test]
    fn cosets_have_index_size() {
        for (n, idx) in [(1, 1), (2, 3), (3, 4), (4, 6), (5, 6), (6, 12)] {
            assert_eq!(gamma0_cosets(n).len(), idx);
        }
    }

    #[test]
    fn compose_moves_roots() {
        let q = QuadForm::new(2, 1, 3);
        let g = Mat2::new(2, 1, 5, 3);
        let moved = q.compose(&g).heegner_point();
        let expect = g.inv().act(q.heegner_point());
        assert!((moved - expect).norm() < 1e-12);
    }
}

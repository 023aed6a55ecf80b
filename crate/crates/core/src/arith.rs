//! Integer arithmetic: Kronecker symbols, discriminants, square roots modulo
//! 4N and the twisted divisor sums relating Hecke data to Fourier data.

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

/// Returns (g, x, y) with a*x + b*y = g = gcd(a, b) >= 0.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut x0, mut x1) = (1i64, 0i64);
    let (mut y0, mut y1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (x0, x1) = (x1, x0 - q * x1);
        (y0, y1) = (y1, y0 - q * y1);
    }
    if r0 < 0 {
        (-r0, -x0, -y0)
    } else {
        (r0, x0, y0)
    }
}

/// Prime factorization by trial division.
pub fn factorize(n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut n = n;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn mobius(n: u64) -> i32 {
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factorize(n) {
        let len = ds.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                ds.push(ds[i] * pk);
            }
        }
    }
    ds.sort_unstable();
    ds
}

pub fn is_square(n: i64) -> bool {
    if n < 0 {
        return false;
    }
    let r = isqrt(n);
    r * r == n
}

pub fn isqrt(n: i64) -> i64 {
    assert!(n >= 0);
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    let m = m as u128;
    let mut acc = 1u128;
    let mut base = b as u128 % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    acc as u64
}

/// Legendre symbol (a/p) for an odd prime p, by Euler's criterion.
fn legendre(a: i64, p: u64) -> i32 {
    let r = a.rem_euclid(p as i64) as u64;
    if r == 0 {
        return 0;
    }
    if pow_mod(r, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Kronecker symbol (a/n), assembled from the prime factorization of n.
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a.abs() == 1 { 1 } else { 0 };
    }
    let mut s = 1;
    if n < 0 && a < 0 {
        s = -1;
    }
    for (p, e) in factorize(n.unsigned_abs()) {
        let base = if p == 2 {
            if a % 2 == 0 {
                0
            } else {
                match a.rem_euclid(8) {
                    1 | 7 => 1,
                    _ => -1,
                }
            }
        } else {
            legendre(a, p)
        };
        if base == 0 {
            return 0;
        }
        if base == -1 && e % 2 == 1 {
            s = -s;
        }
    }
    s
}

pub fn is_fundamental(d: i64) -> bool {
    if d == 1 {
        return true;
    }
    if d == 0 || is_square(d) {
        return false;
    }
    let squarefree = |m: i64| factorize(m.unsigned_abs()).iter().all(|&(_, e)| e == 1);
    match d.rem_euclid(4) {
        1 => squarefree(d),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && squarefree(m)
        }
        _ => false,
    }
}

/// A fundamental discriminant (1 allowed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discriminant(i64);

impl Discriminant {
    pub fn new(d: i64) -> Result<Self> {
        if is_fundamental(d) {
            Ok(Discriminant(d))
        } else {
            invalid(format!("{d} is not a fundamental discriminant"))
        }
    }

    pub fn value(self) -> i64 {
        self.0
    }

    pub fn chi(self, n: i64) -> i32 {
        kronecker(self.0, n)
    }
}

/// All residues rho mod 2N with rho^2 = delta mod 4N, sorted.
pub fn sqrt_mod_4n(delta: i64, n: i64) -> Vec<i64> {
    (0..2 * n)
        .filter(|r| (r * r - delta).rem_euclid(4 * n) == 0)
        .collect()
}

/// Forward map a -> b with b_n = n^(2k-1) sum_{d|n} (delta/d) d^(-k) a_{n/d}.
/// Index 0 of each slice holds n = 1.
pub fn forward_divisor_sum(a: &[Complex64], k: i32, delta: i64) -> Vec<Complex64> {
    (1..=a.len() as u64)
        .map(|n| {
            let s: Complex64 = divisors(n)
                .into_iter()
                .map(|d| {
                    a[(n / d - 1) as usize] * (kronecker(delta, d as i64) as f64)
                        * (d as f64).powi(-k)
                })
                .sum();
            s * (n as f64).powi(2 * k - 1)
        })
        .collect()
}

/// Inverse of [`forward_divisor_sum`] by Moebius inversion of the completely
/// multiplicative kernel (delta/d) d^(-k).
pub fn invert_divisor_sum(b: &[Complex64], k: i32, delta: i64) -> Vec<Complex64> {
    let beta: Vec<Complex64> = b
        .iter()
        .enumerate()
        .map(|(i, &v)| v / ((i + 1) as f64).powi(2 * k - 1))
        .collect();
    (1..=b.len() as u64)
        .map(|n| {
            divisors(n)
                .into_iter()
                .map(|d| {
                    beta[(n / d - 1) as usize]
                        * (mobius(d) * kronecker(delta, d as i64)) as f64
                        * (d as f64).powi(-k)
                })
                .sum()
        })
        .collect()
}

/// [`forward_divisor_sum`] in exact rational arithmetic.
pub fn forward_divisor_sum_exact(a: &[Ratio<i128>], k: u32, delta: i64) -> Vec<Ratio<i128>> {
    (1..=a.len() as u64)
        .map(|n| {
            let s: Ratio<i128> = divisors(n)
                .into_iter()
                .map(|d| a[(n / d - 1) as usize] * kronecker(delta, d as i64) as i128 / (d as i128).pow(k))
                .sum();
            s * (n as i128).pow(2 * k - 1)
        })
        .collect()
}

/// [`invert_divisor_sum`] in exact rational arithmetic.
pub fn invert_divisor_sum_exact(b: &[Ratio<i128>], k: u32, delta: i64) -> Vec<Ratio<i128>> {
    let beta: Vec<Ratio<i128>> = b.iter().enumerate().map(|(i, &v)| v / ((i + 1) as i128).pow(2 * k - 1)).collect();
    (1..=b.len() as u64)
        .map(|n| {
            divisors(n)
                .into_iter()
                .map(|d| {
                    beta[(n / d - 1) as usize] * (mobius(d) * kronecker(delta, d as i64)) as i128 / (d as i128).pow(k)
                })
                .sum()
        })
        .collect()
}

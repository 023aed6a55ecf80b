use maass_periods::arith::*;
use num_complex::Complex64;
use num_rational::Ratio;
use proptest::prelude::*;

/// Legendre symbol by Euler's criterion, extended to the Kronecker symbol
/// through factorisation of the modulus.
fn kronecker_oracle(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a.abs() == 1 { 1 } else { 0 };
    }
    let mut out = if n < 0 && a < 0 { -1 } else { 1 };
    for (p, e) in factorize(n.unsigned_abs()) {
        let p = p as i64;
        let s: i32 = if p == 2 {
            match a.rem_euclid(8) {
                1 | 7 => 1,
                3 | 5 => -1,
                _ => 0,
            }
        } else {
            let mut acc = 1i64;
            let base = a.rem_euclid(p);
            for _ in 0..(p - 1) / 2 {
                acc = acc * base % p;
            }
            match acc {
                0 => 0,
                1 => 1,
                _ => -1,
            }
        };
        out *= s.pow(e);
    }
    out
}

#[test]
fn kronecker_examples() {
    assert_eq!(kronecker(5, 1), 1);
    assert_eq!(kronecker(5, 5), 0);
    assert_eq!(kronecker(-3, 2), -1);
}

#[test]
fn square_roots_examples() {
    assert_eq!(sqrt_mod_4n(1, 1), vec![1]);
    assert_eq!(sqrt_mod_4n(-3, 1), vec![1]);
    // 5 = 1 mod 4 and 1^2 = 1, so rho = 1 exists
    assert_eq!(sqrt_mod_4n(5, 1), vec![1]);
    assert_eq!(sqrt_mod_4n(-4, 1), vec![0]);
    assert_eq!(sqrt_mod_4n(-3, 3), vec![3]);
}

#[test]
fn invert_small_prefixes() {
    let k = 6;
    let delta = -3;
    let b = [Complex64::new(2.0, 1.0), Complex64::new(-7.0, 0.5)];
    let a = invert_divisor_sum(&b, k, delta);
    assert!((a[0] - b[0]).norm() < 1e-15);
    let want = b[1] / 2f64.powi(2 * k - 1) - b[0] * (kronecker(delta, 2) as f64) * 2f64.powi(-k);
    assert!((a[1] - want).norm() < 1e-15);
}

/// The forward sum by trial division, with the sum of absolute values of
/// its terms as the cancellation scale.
fn forward_oracle(a: &[Complex64], k: i32, delta: i64) -> Vec<(Complex64, f64)> {
    (1..=a.len())
        .map(|n| {
            let mut s = Complex64::new(0.0, 0.0);
            let mut mag = 0.0;
            for d in 1..=n {
                if n % d == 0 {
                    let t = a[n / d - 1] * kronecker(delta, d as i64) as f64 * (d as f64).powi(-k);
                    s += t;
                    mag += t.norm();
                }
            }
            let f = (n as f64).powi(2 * k - 1);
            (s * f, mag * f)
        })
        .collect()
}

proptest! {
    #[test]
    fn kronecker_matches_euler_criterion(a in -200i64..200, n in 1i64..300) {
        prop_assert_eq!(kronecker(a, n), kronecker_oracle(a, n));
    }

    #[test]
    fn kronecker_multiplicative_for_fundamental(
        delta in prop::sample::select(vec![-3i64, -4, -7, -8, 5, 8, 12, -15, 13, -23]),
        m in 1i64..200, n in 1i64..200,
    ) {
        prop_assert_eq!(kronecker(delta, m * n), kronecker(delta, m) * kronecker(delta, n));
    }

    #[test]
    fn square_roots_brute_force(delta in -60i64..60, n in 1i64..8) {
        let want: Vec<i64> = (0..2 * n).filter(|r| (r * r - delta).rem_euclid(4 * n) == 0).collect();
        prop_assert_eq!(sqrt_mod_4n(delta, n), want);
    }

    #[test]
    fn mobius_sums_to_indicator(n in 1u64..2000) {
        let s: i32 = divisors(n).into_iter().map(mobius).sum();
        prop_assert_eq!(s, i32::from(n == 1));
    }

    #[test]
    fn factorisation_multiplies_back(n in 1u64..100_000) {
        let prod: u64 = factorize(n).iter().map(|&(p, e)| p.pow(e)).product();
        prop_assert_eq!(prod, n);
        let count: u32 = factorize(n).iter().map(|&(_, e)| e + 1).product();
        prop_assert_eq!(divisors(n).len() as u32, count);
    }

    #[test]
    fn divisor_sum_round_trip(
        re in prop::collection::vec(-1e3f64..1e3, 10),
        im in prop::collection::vec(-1e3f64..1e3, 10),
        k in 2i32..8,
        delta in prop::sample::select(vec![1i64, -3, -4, 5, -7, 8]),
    ) {
        let b: Vec<Complex64> = re.iter().zip(&im).map(|(&x, &y)| Complex64::new(x, y)).collect();
        let a = invert_divisor_sum(&b, k, delta);
        let back = forward_oracle(&a, k, delta);
        let fwd = forward_divisor_sum(&a, k, delta);
        for ((&(x, mag), y), z) in back.iter().zip(&b).zip(&fwd) {
            prop_assert!((x - y).norm() <= 1e-13 * mag.max(1.0));
            prop_assert!((x - z).norm() <= 1e-13 * mag.max(1.0));
        }
    }

    #[test]
    fn exact_divisor_sum_round_trip(
        num in prop::collection::vec(-50i128..50, 8),
        den in prop::collection::vec(1i128..20, 8),
        k in 2u32..7,
        delta in prop::sample::select(vec![1i64, -3, -4, 5]),
    ) {
        let a: Vec<Ratio<i128>> = num.iter().zip(&den).map(|(&p, &q)| Ratio::new(p, q)).collect();
        let b = forward_divisor_sum_exact(&a, k, delta);
        prop_assert_eq!(invert_divisor_sum_exact(&b, k, delta), a);
    }
}

use maass_periods::quad;
use maass_periods::specfun::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn harmonic_w_matches_general_route() {
    for kappa in [-4.5f64, -0.5, 0.5, 1.5] {
        let s = 1.0 - kappa / 2.0;
        for &y in &[0.1f64, 0.7, 2.0, 3.0, 7.5, 20.0] {
            for y in [y, -y] {
                let general = y.abs().powf(-kappa / 2.0)
                    * whittaker_w(kappa / 2.0 * y.signum(), s - 0.5, y.abs()).unwrap();
                let closed = script_w_harmonic(kappa, y).unwrap();
                assert!(rel(general, closed) < 1e-10, "kappa={kappa} y={y}: {general} vs {closed}");
            }
        }
    }
}

#[test]
fn harmonic_w_examples() {
    assert!(rel(script_w(-4.5, 3.25, 3.0).unwrap(), (-1.5f64).exp()) < 1e-14);
    let v = script_w(-0.5, 1.25, -2.0).unwrap();
    assert!(rel(v, 1f64.exp() * inc_gamma(1.5, 2.0).unwrap()) < 1e-14);
}

#[test]
fn w_zero_index_is_k_bessel() {
    let (z, mu) = (1.5f64, 0.25);
    let w = whittaker_w(0.0, mu, 2.0 * z).unwrap();
    let k = (2.0 * z / std::f64::consts::PI).sqrt() * bessel_k(mu, z);
    assert!(rel(w, k) < 1e-12, "{w} vs {k}");
    // K_{1/2}(z) = sqrt(pi / 2z) e^{-z}
    assert!(rel(bessel_k(0.5, z), (std::f64::consts::PI / (2.0 * z)).sqrt() * (-z).exp()) < 1e-13);
}

#[test]
fn integral_formula_for_w() {
    let pi = std::f64::consts::PI;
    for (kappa, s, alpha, beta) in [
        (0.5, 3.25, 12.0 * pi, 4.0 * pi),
        (0.5, 1.25, 1.0, 1.0),
        (0.5, 3.25, 1.0, 2.0),
        (-0.5, 2.25, 3.0, 0.5),
    ] {
        let (lhs, rhs) = check_integral_w(kappa, s, alpha, beta).unwrap();
        assert!(rel(lhs, rhs) < 1e-6, "({kappa},{s},{alpha},{beta}): {lhs} vs {rhs}");
    }
}

#[test]
fn incomplete_gamma_against_quadrature() {
    let direct = quad::exp_sinh(|t, _| t.powf(4.5) * (-t).exp(), 2.0, 1e-14).unwrap();
    assert!(rel(inc_gamma(5.5, 2.0).unwrap(), direct.value) < 1e-9);
}

#[test]
fn hypergeometric_contiguous_derivative() {
    let (a, b, c, z) = (3.0, 3.5, 6.5, 0.3);
    let g = |z: f64| z.powf(a) * hyp2f1(a, b, c, z).unwrap();
    let h = 1e-3;
    let fd = (8.0 * (g(z + h) - g(z - h)) - (g(z + 2.0 * h) - g(z - 2.0 * h))) / (12.0 * h);
    let exact = a * z.powf(a - 1.0) * hyp2f1(a + 1.0, b, c, z).unwrap();
    assert!(rel(fd, exact) < 1e-9, "{fd} vs {exact}");
}

#[test]
fn m_whittaker_grows() {
    let mut prev = 0.0;
    for i in 0..=90 {
        let v = 1.0 + 0.1 * i as f64;
        let m = script_m(-4.5, 3.25, v).unwrap();
        assert!(m > prev);
        prev = m;
    }
}

proptest! {
    #[test]
    fn gauss_series_binomial_case(z in 0.0f64..0.9, a in 0.1f64..6.0, b in 0.5f64..6.0) {
        let v = hyp2f1(a, b, b, z).unwrap() * (1.0 - z).powf(a);
        prop_assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn legendre_parity(l in 0u32..=12, x in -1.0f64..1.0) {
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((legendre_p_real(l, -x) - sign * legendre_p_real(l, x)).abs() < 1e-13);
    }

    #[test]
    fn script_m_definition(kappa in -5.0f64..-0.5, s in 1.1f64..4.0, v in 0.1f64..8.0) {
        let lhs = script_m(kappa, s, v).unwrap() * v.powf(kappa / 2.0);
        let rhs = whittaker_m(-kappa / 2.0, s - 0.5, v).unwrap();
        prop_assert!(rel(lhs, rhs) < 1e-12);
    }
}

use std::collections::BTreeMap;
use std::f64::consts::PI;

use maass_periods::arith::kronecker;
use maass_periods::maass::*;
use maass_periods::qf::Mat2;
use maass_periods::specfun::{gamma, script_m};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mat_mul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    (0..a.len())
        .map(|i| (0..b[0].len()).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn max_diff(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn word(gens: &[u8]) -> MetaplecticElement {
    gens.iter().fold(MetaplecticElement::t(0), |acc, &g| {
        acc.mul(&match g {
            0 => MetaplecticElement::t(1),
            1 => MetaplecticElement::t(-1),
            _ => MetaplecticElement::s(),
        })
    })
}

#[test]
fn generators_at_level_one() {
    let rep = WeilRep::new(1, false).unwrap();
    let t = weil_matrix(&rep, &MetaplecticElement::t(1));
    assert!(max_diff(&t, &[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 1.0)]]) < 1e-15);
    let s = weil_matrix(&rep, &MetaplecticElement::s());
    let w = e(-1.0 / 8.0) / 2f64.sqrt();
    // rho(S) e_0 = e(-1/8)/sqrt 2 (e_0 + e_1)
    assert!((s[0][0] - w).norm() < 1e-15 && (s[1][0] - w).norm() < 1e-15);
}

#[test]
fn metaplectic_sign_of_s_squared() {
    // (S, sqrt tau)^2 = (-I, i) and (-I, i)^2 = (I, -1)
    let s2 = MetaplecticElement::s().mul(&MetaplecticElement::s());
    assert_eq!(s2.m, Mat2::new(-1, 0, 0, -1));
    let z = s2.mul(&s2);
    assert_eq!(z.m, Mat2::I);
    assert_eq!(z.eps, -1);
    let rep = WeilRep::new(3, true).unwrap();
    let m = weil_matrix(&rep, &z);
    // the center acts through (I, -1) by -1 on a half-integral weight representation
    let neg: Vec<Vec<Complex64>> =
        (0..6).map(|i| (0..6).map(|j| if i == j { c(-1.0, 0.0) } else { c(0.0, 0.0) }).collect()).collect();
    assert!(max_diff(&m, &neg) < 1e-13);
}

fn test_table(rep: WeilRep, weight_times_2: i32, dmin: i64, dmax: i64, f: impl Fn(i64, i64) -> f64) -> CoeffTable {
    let mut t = CoeffTable::new(rep.n, weight_times_2, rep.dual);
    for d in dmin..=dmax {
        for r in 0..2 * rep.n {
            if rep.admissible(d, r) {
                t.insert(d, r, c(f(d, r), 0.0), c(0.0, 0.0));
            }
        }
    }
    t
}

/// Hecke operator on the scalar plus-space coefficients c(D) at level one:
/// c(p^2 D) + ((-1)^lambda D / p) p^(lambda-1) c(D) + p^(2 lambda - 1) c(D / p^2).
fn plus_space_tp(c: &BTreeMap<i64, f64>, p: i64, lambda: i32, d: i64) -> Option<f64> {
    let sign = if lambda.rem_euclid(2) == 0 { 1 } else { -1 };
    let pf = p as f64;
    let mut v = *c.get(&(p * p * d))?;
    v += kronecker(sign * d, p) as f64 * pf.powi(lambda - 1) * c.get(&d)?;
    if d % (p * p) == 0 {
        v += pf.powi(2 * lambda - 1) * c.get(&(d / (p * p))).copied().unwrap_or(0.0);
    }
    Some(v)
}

#[test]
fn hecke_matches_plus_space_formula() {
    for (dual, w2) in [(true, -9), (false, 5), (true, -5)] {
        let rep = WeilRep::new(1, dual).unwrap();
        let table = test_table(rep, w2, -8, 400, |d, _| ((d * 7919) % 101) as f64 - 50.0);
        let scalar: BTreeMap<i64, f64> = table.entries.iter().map(|(&(d, _), &(v, _))| (d, v.re)).collect();
        let lambda = (w2 - 1) / 2;
        for p in [2i64, 3] {
            let t = hecke_tp(&table, p).unwrap();
            let mut checked = 0;
            for (&(d, r), &(v, _)) in &t.entries {
                let want = plus_space_tp(&scalar, p, lambda, d).unwrap();
                assert!((v.re - want).abs() <= 1e-12 * want.abs().max(1.0), "p={p} D={d} r={r}: {} vs {want}", v.re);
                checked += 1;
            }
            assert!(checked > 20);
        }
    }
}

#[test]
fn hecke_term_structure() {
    let rep = WeilRep::new(1, true).unwrap();
    let table = test_table(rep, -9, -1, 200, |d, _| d as f64 + 0.5);
    let kp = -5.0f64;
    // 7 is prime to 2 and 4 does not divide it: two terms
    let want = table.cplus(28, 0).unwrap() + table.cplus(7, 1).unwrap() * (kronecker(-7, 2) as f64 * 2f64.powf(kp - 1.0));
    assert!((hecke_tp_at(&table, 2, 7, 1).unwrap() - want).norm() < 1e-12);
    // (-12 / 2) = 0 and 12 / 4 = 3 keeps the third term
    let want = table.cplus(48, 0).unwrap() + table.cplus(3, 1).unwrap() * 2f64.powf(2.0 * kp - 1.0);
    assert!((hecke_tp_at(&table, 2, 12, 0).unwrap() - want).norm() < 1e-12);
    assert!(matches!(hecke_tp_at(&table, 2, 60, 0), Err(maass_periods::Error::MissingIndex { .. })));
    assert!(hecke_tp_at(&table, 4, 7, 1).is_err());
}

#[test]
fn table_json_round_trip() {
    let rep = WeilRep::new(2, true).unwrap();
    let t = test_table(rep, -7, -7, 30, |d, r| d as f64 * 0.25 + r as f64);
    let s = serde_json::to_string(&t).unwrap();
    let back: CoeffTable = serde_json::from_str(&s).unwrap();
    assert_eq!(back, t);
    assert!(s.contains("\"D\":-1,\"r\":1"));
    assert!(serde_json::from_str::<CoeffTable>(&s.replace("\"D\":-1,\"r\":1", "\"D\":-2,\"r\":1")).is_err());
}

#[test]
fn holomorphic_input_is_recovered() {
    let rep = WeilRep::new(1, false).unwrap();
    let sampler = pointwise(|tau: Complex64| Ok(vec![c(0.0, 0.0), e(tau.re / 4.0) * (-PI * tau.im / 2.0).exp()]));
    let ex = extract_coeffs_two_height(sampler, rep, 5, (0.5, 0.8), (-4, 12), 64).unwrap();
    assert!((ex.table.cplus(1, 1).unwrap() - 1.0).norm() < 1e-12);
    assert!(ex.residuals[&(1, 1)] < 1e-12);
    for (&(d, r), &(p, m)) in &ex.table.entries {
        if (d, r) != (1, 1) {
            assert!(p.norm() < 1e-12 && m.norm() < 1e-12, "({d}, {r}): {p} {m}");
        }
    }
}

/// Sign relating the e_r and e_{-r} components: (-1)^(kappa - sigma/2).
fn component_sign(kappa: f64, dual: bool) -> f64 {
    let e = kappa - if dual { -0.5 } else { 0.5 };
    if (e as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 }
}

#[test]
fn poincare_dominant_term() {
    // at large height only the cosets with c = 0 matter; the sum runs over
    // coprime (c, d) of both signs and is normalised by 1 / Gamma(2s)
    let rep = WeilRep::new(2, true).unwrap();
    let p = PoincareSeries::harmonic(rep, -9, -1, 1).unwrap().with_tol(1e-10);
    let kappa = p.kappa();
    let tau = c(0.3, 8.0);
    let v = p.eval(tau).unwrap();
    let seed = script_m(kappa, p.s, PI * tau.im / 2.0).unwrap() * e(-tau.re / 8.0) / gamma(2.0 * p.s);
    let sign = component_sign(kappa, true);
    assert!((v[1] - seed).norm() < 1e-6 * seed.norm(), "{} vs {seed}", v[1]);
    assert!((v[3] - seed * sign).norm() < 1e-6 * seed.norm(), "{} vs {}", v[3], seed * sign);
    // the even components carry no principal part
    assert!(v[0].norm() < 1e-2 * seed.norm() && v[2].norm() < 1e-2 * seed.norm());
}

#[test]
fn poincare_covariance_under_s() {
    for (n, dual, w2, d, r) in [(1, true, -9, -1, 1), (2, true, -9, -1, 1), (3, false, -11, -3, 3)] {
        let rep = WeilRep::new(n, dual).unwrap();
        let p = PoincareSeries::harmonic(rep, w2, d, r).unwrap().with_tol(1e-10);
        let tau = c(0.3, 1.1);
        let s = MetaplecticElement::s();
        let lhs = p.eval(Mat2::S.act(tau)).unwrap();
        let rho = weil_matrix(&rep, &s);
        let rhs: Vec<Complex64> = apply_matrix(&rho, &p.eval(tau).unwrap()).into_iter().map(|x| x * s.phi(tau).powi(w2)).collect();
        let scale = rhs.iter().map(|x| x.norm()).fold(0.0, f64::max);
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).norm() <= 1e-6 * scale, "N={n}: {a} vs {b}");
        }
    }
}

#[test]
fn poincare_laplace_eigenvalue() {
    let rep = WeilRep::new(1, true).unwrap();
    let s = 3.6;
    let p = PoincareSeries::new(rep, -9, -1, 1, s).unwrap().with_tol(1e-12);
    let kappa = p.kappa();
    let tau = c(0.3, 1.1);
    let lap = laplacian_numeric(&|t| p.eval(t), kappa, tau, 1e-2).unwrap();
    let val = p.eval(tau).unwrap();
    let lambda = s * (1.0 - s) + (kappa * kappa - 2.0 * kappa) / 4.0;
    for (l, v) in lap.iter().zip(&val) {
        assert!((l - v * lambda).norm() <= 1e-5 * (v * lambda).norm().max(1e-8), "{l} vs {}", v * lambda);
    }
}

#[test]
fn poincare_principal_part_and_residuals() {
    for (n, w2, r) in [(1i64, -9, 1i64), (2, -9, 1)] {
        let rep = WeilRep::new(n, true).unwrap();
        let p = PoincareSeries::harmonic(rep, w2, -1, r).unwrap().with_tol(1e-11);
        let ex = extract_coeffs_two_height(|v, us| p.eval_horocycle(v, us), rep, w2, (0.16, 0.2), (-1, 24), 160).unwrap();
        let sign = component_sign(w2 as f64 / 2.0, true);
        let (cr, cnr) = (ex.table.cplus(-1, r).unwrap(), ex.table.cplus(-1, -r).unwrap());
        if (2 * r).rem_euclid(2 * n) == 0 {
            assert!((cr - (1.0 + sign)).norm() < 1e-8, "N={n}: c+(-1, r) = {cr}");
        } else {
            assert!((cr - 1.0).norm() < 1e-8, "N={n}: c+(-1, r) = {cr}");
            assert!((cnr - sign).norm() < 1e-8, "N={n}: c+(-1, -r) = {cnr}");
        }
        let worst = ex.residuals.values().copied().fold(0.0, f64::max);
        assert!(worst <= 1e-6, "N={n}: worst D > 0 residual {worst}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weil_is_unitary_homomorphism(
        n in 1i64..7,
        dual in any::<bool>(),
        w1 in prop::collection::vec(0u8..3, 0..8),
        w2 in prop::collection::vec(0u8..3, 0..8),
    ) {
        let rep = WeilRep::new(n, dual).unwrap();
        let (g1, g2) = (word(&w1), word(&w2));
        let a = weil_matrix(&rep, &g1);
        let b = weil_matrix(&rep, &g2);
        let ab = weil_matrix(&rep, &g1.mul(&g2));
        prop_assert!(max_diff(&mat_mul(&a, &b), &ab) < 1e-12);
        let adj: Vec<Vec<Complex64>> = (0..a.len()).map(|i| (0..a.len()).map(|j| a[j][i].conj()).collect()).collect();
        let id: Vec<Vec<Complex64>> = (0..a.len())
            .map(|i| (0..a.len()).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
            .collect();
        prop_assert!(max_diff(&mat_mul(&a, &adj), &id) < 1e-12);
    }

    #[test]
    fn hecke_operators_commute(seed in prop::collection::vec(-20i64..20, 16)) {
        let rep = WeilRep::new(1, true).unwrap();
        let table = test_table(rep, -9, -4, 1300, |d, _| seed[d.rem_euclid(16) as usize] as f64 + d as f64 * 0.01);
        let t23 = hecke_tp(&hecke_tp(&table, 3).unwrap(), 2).unwrap();
        let t32 = hecke_tp(&hecke_tp(&table, 2).unwrap(), 3).unwrap();
        let t6 = hecke_tm(&table, 6).unwrap();
        let mut common = 0;
        for (k, &(v, _)) in &t23.entries {
            if let Some(&(w, _)) = t32.entries.get(k) {
                prop_assert!((v - w).norm() <= 1e-9 * v.norm().max(1.0));
                prop_assert!((t6.entries[k].0 - v).norm() <= 1e-9 * v.norm().max(1.0));
                common += 1;
            }
        }
        prop_assert!(common > 10);
    }
}

use maass_periods::arith::{gcd, kronecker};
use maass_periods::qf::*;
use proptest::prelude::*;

/// Class number of a fundamental discriminant d < 0 from the Dirichlet
/// formula h = -(w / 2|d|) sum_{a=1}^{|d|} (d/a) a.
fn dirichlet_class_number(d: i64) -> i64 {
    let w = match d {
        -3 => 6,
        -4 => 4,
        _ => 2,
    };
    let s: i64 = (1..=d.abs()).map(|a| kronecker(d, a) as i64 * a).sum();
    -w * s / (2 * d.abs())
}

/// Elements of Gamma_0(N) with entries up to `bound` fixing the root of q,
/// counted modulo +-1.
fn brute_stabilizer(q: &QuadForm, n: i64, bound: i64) -> u32 {
    let mut count = 0;
    for a in -bound..=bound {
        for b in -bound..=bound {
            for c in (-bound..=bound).filter(|c| c % n == 0) {
                for d in -bound..=bound {
                    let g = Mat2::new(a, b, c, d);
                    if g.det() == 1 && q.compose(&g) == *q {
                        count += 1;
                    }
                }
            }
        }
    }
    count / 2
}

fn words() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-3i64..=3, 0..6)
}

/// Alternating product of T^t and [[1, 0], [N t, 1]], an element of Gamma_0(N).
fn gamma0_word(ts: &[i64], n: i64) -> Mat2 {
    ts.iter().enumerate().fold(Mat2::I, |m, (i, &t)| {
        let g = if i % 2 == 0 { Mat2::t(t) } else { Mat2::new(1, 0, n * t, 1) };
        m.mul(&g)
    })
}

#[test]
fn class_reps_examples() {
    assert_eq!(class_reps(1, -3, 1).unwrap(), vec![QuadForm::new(1, 1, 1)]);
    let mut want = vec![QuadForm::new(1, 1, 6), QuadForm::new(2, 1, 3), QuadForm::new(2, -1, 3)];
    want.sort();
    assert_eq!(class_reps(1, -23, 1).unwrap(), want);
    assert_eq!(class_reps(1, -4, 0).unwrap(), vec![QuadForm::new(1, 0, 1)]);
    assert!(class_reps(1, -23, 0).is_err());
}

#[test]
fn stabilizer_examples() {
    assert_eq!(stabilizer_order(&QuadForm::new(1, 0, 1), 1), 2);
    assert_eq!(stabilizer_order(&QuadForm::new(1, 1, 1), 1), 3);
    assert_eq!(stabilizer_order(&QuadForm::new(1, 1, 6), 1), 1);
    // i is fixed by S, which is not in Gamma_0(2)
    assert_eq!(stabilizer_order(&QuadForm::new(2, 2, 1), 2), 2);
}

#[test]
fn genus_character_examples() {
    assert_eq!(genus_character(-3, &QuadForm::new(1, 1, 1), 1).unwrap(), 1);
    // [2, 1, 5] has discriminant -39 and represents 2 and 5, with (-3/2) = (-3/5) = -1
    assert_eq!(genus_character(-3, &QuadForm::new(2, 1, 5), 1).unwrap(), -1);
    assert_eq!(genus_character(-3, &QuadForm::new(1, 1, 10), 1).unwrap(), 1);
}

#[test]
fn heegner_divisor_examples() {
    let div = heegner_divisor(1, 1, 1, -3, 1).unwrap();
    assert_eq!(div.points.len(), 1);
    let p = &div.points[0];
    assert!((p.z() - num_complex::Complex64::new(-0.5, 3f64.sqrt() / 2.0)).norm() < 1e-15);
    assert!((p.weight - 1.0 / 3.0).abs() < 1e-15);

    let div = heegner_divisor(1, -3, 1, -1, 1).unwrap();
    assert_eq!(div.points.len(), 1);
    assert_eq!(div.points[0].form, [1, 1, 1]);
    assert!((div.points[0].weight - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn heegner_divisor_rejects_bad_congruences() {
    assert!(heegner_divisor(1, -3, 1, -2, 1).is_err());
    assert!(heegner_divisor(1, -3, 0, -1, 1).is_err());
    assert!(heegner_divisor(1, -5, 1, -1, 1).is_err());
}

#[test]
fn divisor_weights_sum_to_class_count_over_w() {
    // with Delta = 1 the weights are 1 / w_Q and sum to 2 h / w
    for d in [-3i64, -4, -7, -8, -15, -20, -23, -24] {
        let div = heegner_divisor(1, 1, 1, d, d.rem_euclid(2)).unwrap();
        let total: f64 = div.points.iter().map(|p| p.weight).sum();
        let want = dirichlet_class_number(d) as f64 * 2.0
            / match d {
                -3 => 6.0,
                -4 => 4.0,
                _ => 2.0,
            };
        assert!((total - want).abs() < 1e-12, "d = {d}: {total} vs {want}");
    }
}

#[test]
fn lattice_vector_round_trip() {
    let q = QuadForm::new(6, 5, 3);
    let x = LatticeVector::from_form(&q, 3).unwrap();
    assert_eq!(x.to_form(), q);
    assert!(LatticeVector::from_form(&QuadForm::new(4, 1, 1), 3).is_err());
}

proptest! {
    #[test]
    fn level_one_class_numbers(d in prop::sample::select(vec![-3i64, -4, -7, -8, -11, -15, -19, -20, -23, -24, -31, -35, -39, -40, -47, -51, -52, -55, -56, -59, -71, -84, -199])) {
        let r = d.rem_euclid(2);
        prop_assert_eq!(class_reps(1, d, r).unwrap().len() as i64, dirichlet_class_number(d));
    }

    #[test]
    fn level_n_classes_biject_with_level_one(
        n in prop::sample::select(vec![2i64, 3, 5, 6, 7]),
        d in prop::sample::select(vec![-3i64, -4, -7, -8, -11, -15, -19, -20, -23, -24, -31, -35, -39, -40]),
    ) {
        let roots: Vec<i64> = (0..2 * n).filter(|r| (r * r - d).rem_euclid(4 * n) == 0).collect();
        prop_assume!(gcd(d, n) == 1 && !roots.is_empty());
        for r in roots {
            prop_assert_eq!(class_reps(n, d, r).unwrap().len() as i64, dirichlet_class_number(d));
        }
    }

    #[test]
    fn class_reps_are_inequivalent_and_admissible(
        n in 1i64..6,
        d in prop::sample::select(vec![-3i64, -4, -7, -15, -20, -23, -39]),
    ) {
        for r in (0..2 * n).filter(|r| (r * r - d).rem_euclid(4 * n) == 0) {
            let reps = class_reps(n, d, r).unwrap();
            for (i, p) in reps.iter().enumerate() {
                prop_assert_eq!(p.disc(), d);
                prop_assert_eq!(p.a % n, 0);
                prop_assert_eq!((p.b - r).rem_euclid(2 * n), 0);
                for q in &reps[i + 1..] {
                    prop_assert!(!gamma0_equivalent(p, q, n));
                }
            }
        }
    }

    #[test]
    fn stabilizer_matches_brute_force(
        n in 1i64..5,
        d in prop::sample::select(vec![-3i64, -4, -7, -12, -15, -16, -20, -27]),
    ) {
        for r in (0..2 * n).filter(|r| (r * r - d).rem_euclid(4 * n) == 0) {
            for q in class_reps(n, d, r).unwrap() {
                let bound = 2 * (q.a.abs() + q.b.abs() + q.c.abs());
                prop_assert_eq!(stabilizer_order(&q, n), brute_stabilizer(&q, n, bound), "{:?} at level {}", q, n);
            }
        }
    }

    #[test]
    fn equivalence_under_gamma0(n in 1i64..6, ts in words(), pick in 0usize..8) {
        let d = -39;
        let roots: Vec<i64> = (0..2 * n).filter(|r| (r * r - d).rem_euclid(4 * n) == 0).collect();
        prop_assume!(!roots.is_empty());
        let reps = class_reps(n, d, roots[pick % roots.len()]).unwrap();
        let q = reps[pick % reps.len()];
        let g = gamma0_word(&ts, n);
        let moved = q.compose(&g);
        prop_assert!(gamma0_equivalent(&q, &moved, n));
        prop_assert_eq!(stabilizer_order(&moved, n), stabilizer_order(&q, n));
        prop_assert_eq!(genus_character(-3, &moved, n).unwrap(), genus_character(-3, &q, n).unwrap());
    }

    #[test]
    fn heegner_point_is_root(a in 1i64..20, b in -20i64..20, c in 1i64..20) {
        let q = QuadForm::new(a, b, c);
        prop_assume!(q.disc() < 0);
        let z = q.heegner_point();
        prop_assert!(z.im > 0.0);
        prop_assert!(q.eval(z).norm() < 1e-9 * (a + b.abs() + c) as f64);
        let (r, g) = q.reduce();
        prop_assert_eq!(q.compose(&g), r);
        prop_assert!(r.b.abs() <= r.a && r.a <= r.c);
    }

    #[test]
    fn genus_character_level_one(
        delta in prop::sample::select(vec![-3i64, -4, 5, -7, 8]),
        d in prop::sample::select(vec![-3i64, -4, 5, -7, 8, -8, 12, 13, -15, -20]),
    ) {
        let disc = d * delta;
        prop_assume!(disc < 0);
        for a in 1i64..30 {
            for b in -a..=a {
                if (b * b - disc) % (4 * a) != 0 {
                    continue;
                }
                let q = QuadForm::new(a, b, (b * b - disc) / (4 * a));
                if gcd(gcd(q.a, q.b), q.c) != 1 || gcd(a, delta) != 1 {
                    continue;
                }
                prop_assert_eq!(genus_character(delta, &q, 1).unwrap(), kronecker(delta, a));
                if gcd(q.c, delta) == 1 {
                    prop_assert_eq!(kronecker(delta, q.c), kronecker(delta, a));
                }
            }
        }
    }

    #[test]
    fn lattice_sign_conventions(a in -10i64..10, b in -10i64..10, c in -10i64..10, n in 1i64..4, x in -2.0f64..2.0, y in 0.2f64..3.0) {
        let q = QuadForm::new(a * n, b, c);
        let v = LatticeVector::from_form(&q, n).unwrap();
        let z = num_complex::Complex64::new(x, y);
        // q(X) = disc / 4N and 2N p_z(X)^2 = |Q(z,1)|^2 / y^2 - disc
        prop_assert!((v.norm() - q.disc() as f64 / (4 * n) as f64).abs() < 1e-12);
        let lhs = 2.0 * n as f64 * v.p_z(z).powi(2);
        let rhs = q.eval(z).norm_sqr() / (y * y) - q.disc() as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(1.0), "{} vs {}", lhs, rhs);
    }
}

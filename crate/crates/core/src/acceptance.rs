//! End-to-end numerical checks on the reference configuration
//! N = 1, k = 6, Delta = -3, rho = 1, D = -1, r = 1, one per criterion.
//! Tolerances are fixed here and not configurable.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::algrec::{normalize_coefficient, period_formula_check, recognize_rational_with_error};
use crate::arith::{forward_divisor_sum_exact, invert_divisor_sum_exact};
use crate::cycles::{
    cycle_from_matrix, loop_waypoint, pairing, path_independence_check, projected_loop_prediction,
    raising_hypergeometric_check, GeodesicCycle, PathOptions, PathPolicy,
};
use crate::error::Result;
use crate::maass::{
    extract_coeffs_two_height, hecke_tp, raising_numeric, weil_matrix, CoeffTable, MetaplecticElement,
    PoincareSeries, WeilRep,
};
use crate::merom::{
    fourier_coeffs, predicted_coeffs, residue_at, zeta_normalize, FkdSpec, FormSum, FourierOptions, FourierSeries2k,
    QExpansion,
};
use crate::qf::{LatticeVector, Mat2};
use crate::specfun::{check_integral_w, gamma, script_w_harmonic, whittaker_w};

pub const FOURIER_REL_TOL: f64 = 1e-4;
pub const PAIRING_REL_TOL: f64 = 1e-6;
pub const LOOP_REAL_REL_TOL: f64 = 1e-6;
pub const LOOP_JUMP_REL_TOL: f64 = 1e-4;
pub const HECKE_REL_TOL: f64 = 1e-4;
pub const PERIOD_REL_TOL: f64 = 1e-4;
pub const RECOGNITION_MAX_DEN: i128 = 1_000_000;
pub const SPECIAL_W_REL_TOL: f64 = 1e-10;
pub const INTEGRAL_W_REL_TOL: f64 = 1e-6;
pub const RAISING_REL_TOL: f64 = 1e-4;
pub const MODULARITY_REL_TOL: f64 = 1e-8;
pub const RESIDUE_REL_TOL: f64 = 1e-6;
pub const UNITARY_TOL: f64 = 1e-12;

/// Heights for the Fourier quadrature of the weight 12 form. Poles reach
/// height sqrt(3)/2, and b_6 e^(-2 pi 6 y) drops below double precision
/// relative to the sample values once y is near 2.
pub const FOURIER_HEIGHTS: (f64, f64) = (1.0, 1.25);
/// Horocycle heights and sample count for separating c+ and c- of the
/// Poincare series.
pub const POINCARE_HEIGHTS: (f64, f64) = (0.16, 0.2);
pub const POINCARE_SAMPLES: usize = 160;

const K: u32 = 6;
const DELTA: i64 = -3;
const RHO: i64 = 1;

pub fn reference_spec() -> FkdSpec {
    FkdSpec { k: K, n: 1, d: -1, r: 1, delta: DELTA, rho: RHO }
}

#[derive(Debug, Clone, Serialize)]
pub struct Part {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub parts: Vec<Part>,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let parts: Vec<String> = self
            .parts
            .iter()
            .map(|p| format!("{} {}: {}", if p.passed { "ok" } else { "FAIL" }, p.label, p.detail))
            .collect();
        format!(
            "criterion {} [{}] {} ({:.1}s): {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            parts.join("; ")
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceReport {
    pub results: Vec<CriterionResult>,
    pub seconds: f64,
}

impl AcceptanceReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

fn part(label: impl Into<String>, passed: bool, detail: impl Into<String>) -> Part {
    Part { label: label.into(), passed, detail: detail.into() }
}

fn failed(label: impl Into<String>, err: impl std::fmt::Display) -> Part {
    part(label, false, format!("error: {err}"))
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Data shared between criteria, computed on first use.
pub struct Context {
    form: FormSum,
    table: OnceLock<std::result::Result<(CoeffTable, f64), String>>,
    direct: OnceLock<std::result::Result<FourierSeries2k, String>>,
}

impl Default for Context {
    fn default() -> Self {
        Self::new()
    }
}

impl Context {
    pub fn new() -> Self {
        Context {
            form: FormSum::new(reference_spec()).expect("reference configuration is valid"),
            table: OnceLock::new(),
            direct: OnceLock::new(),
        }
    }

    pub fn form(&self) -> &FormSum {
        &self.form
    }

    /// c+ of the harmonic Poincare series P_{-9/2,-1,1} for 3 <= D <= 110,
    /// with the largest relative two-height residual among them.
    pub fn table(&self) -> std::result::Result<&(CoeffTable, f64), String> {
        self.table
            .get_or_init(|| {
                let rep = WeilRep::new(1, true).map_err(|e| e.to_string())?;
                let p = PoincareSeries::harmonic(rep, -9, -1, 1).map_err(|e| e.to_string())?.with_tol(1e-11);
                let ex = extract_coeffs_two_height(
                    |v, us| p.eval_horocycle(v, us),
                    rep,
                    -9,
                    POINCARE_HEIGHTS,
                    (-4, 110),
                    POINCARE_SAMPLES,
                )
                .map_err(|e| e.to_string())?;
                let worst = ex
                    .residuals
                    .iter()
                    .filter(|((d, _), _)| *d >= 3)
                    .map(|(_, r)| *r)
                    .fold(0.0, f64::max);
                Ok((ex.table, worst))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// b_1..b_6 of the form by quadrature along two horocycles.
    pub fn direct(&self) -> std::result::Result<&FourierSeries2k, String> {
        self.direct
            .get_or_init(|| {
                let opts = FourierOptions { pole_height: 3f64.sqrt() / 2.0, ..FourierOptions::new(FOURIER_HEIGHTS, 6) };
                fourier_coeffs(|z| self.form.eval(z), &opts, K, 1).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }
}

fn poles_for(f: &FormSum, cycle: &GeodesicCycle, opts: &PathOptions, margin: f64) -> Result<Vec<Complex64>> {
    let (x0, x1, y0) = cycle.bounding_box(opts);
    f.poles_in_box(x0 - margin, x1 + margin, y0 / (1.0 + margin))
}

pub fn criterion_1(ctx: &Context) -> Vec<Part> {
    let (table, worst) = match ctx.table() {
        Ok(t) => t,
        Err(e) => return vec![failed("Poincare coefficients", e)],
    };
    let direct = match ctx.direct() {
        Ok(s) => s,
        Err(e) => return vec![failed("Fourier quadrature", e)],
    };
    let pred = match predicted_coeffs(table, K, DELTA, RHO, 6) {
        Ok(p) => p,
        Err(e) => return vec![failed("predicted coefficients", e)],
    };
    let worst_rel = (0..6).map(|i| rel(direct.coeffs[i], pred.coeffs[i])).fold(0.0, f64::max);
    vec![
        part(
            "b_n, n <= 6, quadrature vs Maass coefficients",
            worst_rel <= FOURIER_REL_TOL,
            format!("max rel diff {worst_rel:.2e} (tol {FOURIER_REL_TOL:.0e}), b_1 = {:.6e}", direct.coeffs[0].re),
        ),
        part("two-height separation", true, format!("max c+ residual {worst:.1e}")),
    ]
}

pub fn criterion_2(ctx: &Context) -> Vec<Part> {
    let opts = PathOptions::default();
    let f = ctx.form();
    let mut parts = Vec::new();
    for (g, label) in [
        (Mat2::new(2, 1, 1, 1), "gamma (2,1;1,1)"),
        (Mat2::new(5, 2, 2, 1), "gamma (5,2;2,1)"),
        (Mat2::new(3, 5, 7, 12), "gamma (3,5;7,12)"),
    ] {
        let res = cycle_from_matrix(g).and_then(|cyc| {
            let poles = poles_for(f, &cyc, &opts, 0.0)?;
            pairing(&|z| f.eval(z), &cyc, K, &poles, &opts)
        });
        parts.push(match res {
            Ok(p) => {
                let ratio = p.value.abs() / p.projected.norm();
                part(
                    label,
                    ratio <= PAIRING_REL_TOL,
                    format!("|pairing| / |projected integral| = {ratio:.1e}, |integral| = {:.3e}", p.integral.norm()),
                )
            }
            Err(e) => failed(label, e),
        });
    }
    let spec = FkdSpec { k: 2, n: 1, d: -4, r: 0, delta: 1, rho: 1 };
    let res = FormSum::new(spec).and_then(|f2| {
        let cyc = cycle_from_matrix(Mat2::new(2, 1, 1, 1))?;
        let poles = poles_for(&f2, &cyc, &opts, 0.0)?;
        Ok((f2.spec.vanishes(), pairing(&|z| f2.eval(z), &cyc, 2, &poles, &opts)?))
    });
    parts.push(match res {
        Ok((vanishes, p)) => part(
            "k=2, Delta=1, D=-4 on (2,1;1,1)",
            p.value.abs() <= PAIRING_REL_TOL * p.integral.norm(),
            format!(
                "pairing {:.1e}, integral {:.1e}{}",
                p.value,
                p.integral.norm(),
                if vanishes { " (Q and -Q cancel: the form is identically 0)" } else { "" }
            ),
        ),
        Err(e) => failed("k=2, Delta=1, D=-4", e),
    });
    parts
}

pub fn criterion_3(ctx: &Context) -> Vec<Part> {
    let opts = PathOptions::default();
    let f = ctx.form();
    let run = || -> Result<Vec<Part>> {
        let cyc = cycle_from_matrix(Mat2::new(2, 1, 1, 1))?;
        let poles = poles_for(f, &cyc, &opts, 1.0)?;
        let (z0, z1) = (cyc.base_point, cyc.end_point());
        let mut order = poles.clone();
        let dist = |p: &Complex64| (p - 0.5 * (z0 + z1)).norm();
        order.sort_by(|a, b| dist(a).total_cmp(&dist(b)));
        let (pole, (w, orient)) = order
            .iter()
            .find_map(|&p| loop_waypoint(&cyc, p, &poles, &opts).ok().map(|x| (p, x)))
            .ok_or_else(|| crate::error::Error::IllConditioned("no pole can be isolated by a waypoint".into()))?;
        let (p1, p2) = path_independence_check(
            &|z| f.eval(z),
            &cyc,
            K,
            &poles,
            (PathPolicy::DirectSegment, PathPolicy::Waypoints(vec![w])),
            &opts,
        )?;
        let a = f.pole_coefficient(pole)?;
        let pred = projected_loop_prediction(&cyc, pole, K, a) * orient;
        let jump = p2.projected - p1.projected;
        let scale = p1.projected.norm().max(p2.projected.norm());
        let re_rel = (p2.value - p1.value).abs() / scale;
        let jump_rel = (jump.im - pred.im).abs() / pred.im.abs();
        Ok(vec![
            part(
                "real parts",
                re_rel <= LOOP_REAL_REL_TOL,
                format!("loop around {pole:.4} via {w:.4}: |Re diff| / scale = {re_rel:.1e}"),
            ),
            part(
                "imaginary jump vs residue",
                jump_rel <= LOOP_JUMP_REL_TOL,
                format!("jump {:.10} predicted {:.10} (rel {jump_rel:.1e}, residue coefficient {a:.6})", jump.im, pred.im),
            ),
        ])
    };
    run().unwrap_or_else(|e| vec![failed("path independence", e)])
}

pub fn criterion_4(ctx: &Context) -> Vec<Part> {
    let run = || -> std::result::Result<Part, String> {
        let (table, _) = ctx.table()?;
        let direct = ctx.direct()?;
        let lhs = direct.hecke(2).map_err(|e| e.to_string())?;
        let t2 = hecke_tp(table, 2).map_err(|e| e.to_string())?;
        let rhs = predicted_coeffs(&t2, K, DELTA, RHO, 3).map_err(|e| e.to_string())?.scaled(Complex64::new(2f64.powi(2 * K as i32 - 1), 0.0));
        let worst = (0..3).map(|i| rel(lhs.coeffs[i], rhs.coeffs[i])).fold(0.0, f64::max);
        Ok(part(
            "T_2 on b_n vs table-side T_2, n <= 3",
            worst <= HECKE_REL_TOL,
            format!("max rel diff {worst:.2e} (tol {HECKE_REL_TOL:.0e})"),
        ))
    };
    vec![run().unwrap_or_else(|e| failed("Hecke identity", e))]
}

pub fn criterion_5(ctx: &Context) -> Vec<Part> {
    let mut parts = Vec::new();
    let (table, table_err, direct) = match (ctx.table(), ctx.direct()) {
        (Ok((t, e)), Ok(d)) => (t, *e, d),
        (Err(e), _) | (_, Err(e)) => return vec![failed("inputs", e)],
    };
    let g = QExpansion::ramanujan_delta(400);
    let c_top = match table.cplus(DELTA.abs(), RHO) {
        Ok(c) => c,
        Err(e) => return vec![failed("c+(3, 1)", e)],
    };
    let zeta = match zeta_normalize(direct, &g, DELTA, c_top) {
        Ok(z) => z,
        Err(e) => return vec![failed("zeta", e)],
    };
    let before = normalize_coefficient(direct.coeffs[0], K, DELTA);
    parts.push(part(
        "first coefficient of zeta",
        zeta.coeffs[0] == Complex64::new(0.0, 0.0),
        format!("exactly 0; b_1 / (C i pi^k sqrt Delta) - c+(3,1) = {:.1e}", (before - c_top).norm()),
    ));

    let opts = PathOptions::default();
    let f = ctx.form();
    for (gm, label, gating) in
        [(Mat2::new(2, 1, 1, 1), "period formula on (2,1;1,1)", true), (Mat2::new(3, 5, 7, 12), "period formula on (3,5;7,12)", false)]
    {
        let res = cycle_from_matrix(gm).and_then(|cyc| {
            let poles = poles_for(f, &cyc, &opts, 0.0)?;
            period_formula_check(&|z| f.eval(z), &g, &cyc, K, DELTA, &poles, c_top.re, &opts)
        });
        let label = if gating { label.to_string() } else { format!("{label} (supplementary)") };
        parts.push(match res {
            Ok(pc) => part(
                label,
                pc.relative_residual <= PERIOD_REL_TOL && pc.matching == "i pi^k",
                format!(
                    "c+ = {:.12}, rhs = {:.12} (rel {:.1e}); with pi i^k instead: {:.4}",
                    pc.lhs, pc.rhs_i_pi_k.re, pc.relative_residual, pc.rhs_pi_i_k
                ),
            ),
            Err(e) => failed(label, e),
        });
    }

    let mut rec = Vec::new();
    let mut ok = true;
    for n in 1..=4usize {
        let x = normalize_coefficient(zeta.coeffs[n - 1], K, DELTA);
        // quadrature error of b_n plus the error of c_top times |tau(n)|
        let tau_n = g.coeff(n).and_then(|c| c.to_f64()).unwrap_or(0.0).abs();
        let err = zeta.errors[n - 1] / crate::merom::coefficient_prefactor(K, DELTA).norm() + tau_n * c_top.norm() * table_err;
        let r = recognize_rational_with_error(x.re, err, RECOGNITION_MAX_DEN);
        let imag_ok = x.im.abs() <= 10.0 * err + 1e-12 * x.norm();
        ok &= r.candidate.is_some() && imag_ok;
        rec.push(match r.candidate {
            Some((p, 1)) => format!("{p} (residual {:.1e}, error {err:.1e})", r.residual),
            Some((p, q)) => format!("{p}/{q} (residual {:.1e}, error {err:.1e})", r.residual),
            None => format!("{:.6} unrecognised", x.re),
        });
    }
    parts.push(part("rational recognition, n <= 4", ok, rec.join(", ")));
    parts
}

fn words(max_len: usize) -> Vec<MetaplecticElement> {
    let gens = [MetaplecticElement::t(1), MetaplecticElement::t(-1), MetaplecticElement::s()];
    let mut out = vec![MetaplecticElement::t(0)];
    let mut layer = out.clone();
    for _ in 0..max_len {
        let next: Vec<_> = layer.iter().flat_map(|w| gens.iter().map(move |g| w.mul(g))).collect();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

pub fn criterion_6(_ctx: &Context) -> Vec<Part> {
    let mut parts = Vec::new();

    let mut worst = 0.0f64;
    let mut err = None;
    for kappa in [-4.5, -0.5, 0.5, 1.5] {
        let s = 1.0 - kappa / 2.0;
        for y in [0.1, 0.7, 2.0, 3.0, 7.5, 20.0] {
            for y in [y, -y] {
                let general = whittaker_w(kappa / 2.0 * f64::signum(y), s - 0.5, f64::abs(y))
                    .map(|w| f64::abs(y).powf(-kappa / 2.0) * w);
                match (general, script_w_harmonic(kappa, y)) {
                    (Ok(a), Ok(b)) => worst = worst.max((a - b).abs() / b.abs()),
                    (Err(e), _) | (_, Err(e)) => err = Some(e),
                }
            }
        }
    }
    parts.push(match err {
        Some(e) => failed("special values of W", e),
        None => part("special values of W", worst <= SPECIAL_W_REL_TOL, format!("max rel diff {worst:.1e} over 48 points")),
    });

    let mut worst = 0.0f64;
    let mut err = None;
    for alpha in [1.0, 12.0 * PI] {
        for beta in [1.0, 4.0 * PI] {
            match check_integral_w(0.5, 3.25, alpha, beta) {
                Ok((l, r)) => worst = worst.max((l - r).abs() / r.abs()),
                Err(e) => err = Some(e),
            }
        }
    }
    parts.push(match err {
        Some(e) => failed("integral of W", e),
        None => part("integral of W, 2x2 grid", worst <= INTEGRAL_W_REL_TOL, format!("max rel diff {worst:.1e}")),
    });

    let x = LatticeVector { a: 1, b: 1, c: 1, n: 1 };
    let z = Complex64::new(0.2, 1.1);
    for k in [2, 3] {
        let label = format!("raising the hypergeometric term, k = {k}");
        parts.push(match raising_hypergeometric_check(k, x.norm(), &x, z) {
            Ok((l, r)) => part(label, rel(l, r) <= RAISING_REL_TOL, format!("q(X) = -3/4, rel diff {:.1e}", rel(l, r))),
            Err(e) => failed(label, e),
        });
    }

    let run = || -> Result<f64> {
        let rep = WeilRep::new(1, true)?;
        let s = 3.25;
        let p = PoincareSeries::new(rep, -9, -1, 1, s)?.with_tol(1e-9);
        let p2 = PoincareSeries::new(rep, -5, -1, 1, s)?.with_tol(1e-9);
        let tau = Complex64::new(0.1, 1.2);
        let kappa = -4.5;
        let lhs = raising_numeric(&|t| p.eval(t), kappa, 1, tau, 0.01)?;
        let fac = PI * gamma(s + 1.0 + kappa / 2.0) / gamma(s + kappa / 2.0);
        let rhs = p2.eval(tau)?;
        Ok(lhs.iter().zip(&rhs).map(|(l, r)| rel(*l, r * fac)).fold(0.0, f64::max))
    };
    parts.push(match run() {
        Ok(d) => part("raising the Poincare series, n = 1", d <= RAISING_REL_TOL, format!("max rel diff {d:.1e}")),
        Err(e) => failed("raising the Poincare series", e),
    });
    parts
}

pub fn criterion_7(ctx: &Context) -> Vec<Part> {
    let mut parts = Vec::new();
    let f = ctx.form();

    let run = || -> Result<f64> {
        let mut worst = 0.0f64;
        for z in [Complex64::new(0.13, 0.92), Complex64::new(-0.31, 1.4), Complex64::new(0.45, 0.7)] {
            let v = f.eval_direct(z)?;
            let t = f.eval_direct(z + 1.0)?;
            let s = f.eval_direct(-1.0 / z)? / z.powi(2 * K as i32);
            worst = worst.max(rel(t, v)).max(rel(s, v));
        }
        Ok(worst)
    };
    parts.push(match run() {
        Ok(d) => part("modularity under T and S", d <= MODULARITY_REL_TOL, format!("max rel diff {d:.1e}")),
        Err(e) => failed("modularity", e),
    });

    let run = || -> Result<Vec<String>> {
        let mut out = Vec::new();
        for spec in [reference_spec(), FkdSpec { k: K, n: 1, d: -4, r: 0, delta: DELTA, rho: RHO }] {
            let form = FormSum::new(spec)?;
            let div = form.divisor()?;
            for p in &div.points {
                let z = p.z();
                let w = crate::qf::stabilizer_order(&p.quad_form(), spec.n) as f64;
                let near = form.poles_in_box(z.re - 1.0, z.re + 1.0, 0.5 * z.im)?;
                let res = residue_at(|t| form.eval(t), z, spec.k, 0.2 * z.im, &near)?;
                let d = (res.value / w - p.weight).abs() / p.weight.abs();
                out.push(format!("{}:{d:.1e}", if d <= RESIDUE_REL_TOL { "ok" } else { "bad" }));
            }
        }
        Ok(out)
    };
    parts.push(match run() {
        Ok(v) => part("residues vs divisor weights", v.iter().all(|s| s.starts_with("ok")), v.join(" ")),
        Err(e) => failed("residues", e),
    });

    let a: Vec<Ratio<i128>> = (1..=12).map(|n| Ratio::new((n * n * 7 - 3 * n) as i128 - 11, (n % 5 + 1) as i128)).collect();
    let b = forward_divisor_sum_exact(&a, K, DELTA);
    let back = invert_divisor_sum_exact(&b, K, DELTA);
    parts.push(part("divisor-sum round trip", back == a, "12 rational inputs, exact equality"));

    let mut worst = 0.0f64;
    let mut count = 0;
    for (n, dual) in [(1, true), (1, false), (2, false), (3, true), (5, false), (6, true)] {
        let rep = WeilRep::new(n, dual).expect("positive level");
        for g in words(4) {
            let m = weil_matrix(&rep, &g);
            for i in 0..m.len() {
                for j in 0..m.len() {
                    let dot: Complex64 = (0..m.len()).map(|l| m[i][l] * m[j][l].conj()).sum();
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((dot - target).norm());
                }
            }
            count += 1;
        }
    }
    parts.push(part(
        "Weil matrices unitary",
        worst <= UNITARY_TOL,
        format!("{count} matrices, max |rho rho* - I| = {worst:.1e}"),
    ));
    parts
}

pub const NAMES: [&str; 7] = [
    "Fourier coefficients vs Maass coefficients",
    "cycle pairings vanish",
    "path independence and residue jump",
    "Hecke operator identity",
    "normalised form and period formula",
    "special-function identities",
    "structural invariants",
];

pub fn run_criterion(ctx: &Context, id: u8) -> CriterionResult {
    let t0 = Instant::now();
    let parts = match id {
        1 => criterion_1(ctx),
        2 => criterion_2(ctx),
        3 => criterion_3(ctx),
        4 => criterion_4(ctx),
        5 => criterion_5(ctx),
        6 => criterion_6(ctx),
        7 => criterion_7(ctx),
        _ => vec![part("unknown criterion", false, format!("no criterion {id}"))],
    };
    CriterionResult {
        id,
        name: NAMES.get(id as usize - 1).copied().unwrap_or("unknown"),
        passed: !parts.is_empty() && parts.iter().all(|p| p.passed),
        parts,
        seconds: t0.elapsed().as_secs_f64(),
    }
}

/// Runs the listed criteria in order, calling `report` after each one.
pub fn run(ids: &[u8], mut report: impl FnMut(&CriterionResult)) -> AcceptanceReport {
    let t0 = Instant::now();
    let ctx = Context::new();
    let results = ids
        .iter()
        .map(|&id| {
            let r = run_criterion(&ctx, id);
            report(&r);
            r
        })
        .collect();
    AcceptanceReport { results, seconds: t0.elapsed().as_secs_f64() }
}

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use maass_periods::acceptance::{self, FOURIER_HEIGHTS, POINCARE_HEIGHTS, POINCARE_SAMPLES, RECOGNITION_MAX_DEN};
use maass_periods::algrec::{normalize_coefficient, period_formula_check, recognize_rational_with_error};
use maass_periods::arith::invert_divisor_sum;
use maass_periods::cycles::{pairing, CycleConfig, PathOptions};
use maass_periods::maass::{extract_coeffs_two_height, hecke_tm, CoeffTable, PoincareSeries, WeilRep};
use maass_periods::merom::{
    coefficient_prefactor, eta_for_f, fourier_coeffs, predicted_coeffs, zeta_normalize, EtaForm, FkdSpec, FormSum,
    FourierOptions, FourierSeries2k, MeromFormSpec, QExpansion,
};
use maass_periods::qf::{class_reps, heegner_divisor};

use crate::args::*;
use crate::error::CliError;

type Res<T> = Result<T, CliError>;

const DEFAULT_TOL: f64 = 1e-13;
const POINCARE_TOL: f64 = 1e-11;

struct Form {
    k: u32,
    n: i64,
    delta: i64,
    rho: i64,
    eta: EtaForm,
    /// (D, r) when the form is a single f_{k,D,r}
    single: Option<(i64, i64)>,
}

impl Form {
    fn from_args(a: &FormArgs) -> Res<Form> {
        let k = require(a.k, "k")?;
        let n = require(a.n, "N")?;
        let delta = require(a.delta, "Delta")?;
        let rho = require(a.rho, "rho")?;
        let tol = a.tol.unwrap_or(DEFAULT_TOL);
        if !a.principal_part.is_empty() {
            let spec = MeromFormSpec { k, n, delta, rho, principal_part: a.principal_part.clone(), tol };
            return Ok(Form { k, n, delta, rho, eta: eta_for_f(&spec)?, single: None });
        }
        let (d, r) = (require(a.d, "D")?, require(a.r, "r")?);
        let f = FormSum::new(FkdSpec { k, n, d, r, delta, rho })?.with_tol(tol);
        Ok(Form { k, n, delta, rho, eta: EtaForm { terms: vec![(1.0, f)] }, single: Some((d, r)) })
    }

    fn eval(&self, z: Complex64) -> maass_periods::Result<Complex64> {
        self.eta.eval(z)
    }

    fn eval_with_error(&self, z: Complex64) -> Res<(Complex64, f64)> {
        let mut v = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for (c, f) in &self.eta.terms {
            let e = f.eval_with_error(z)?;
            v += e.value * *c;
            err += e.error * c.abs();
        }
        Ok((v, err))
    }

    fn fourier_options(&self, heights: Option<Pt>, n_max: usize, samples: Option<usize>) -> Res<FourierOptions> {
        let ph = self.eta.pole_height()?;
        let (y1, y2) = match heights {
            Some(Pt(a, b)) => (a, b),
            None if ph < FOURIER_HEIGHTS.0 - 0.1 => FOURIER_HEIGHTS,
            None => (ph + 0.15, ph + 0.4),
        };
        let mut o = FourierOptions { pole_height: ph, ..FourierOptions::new((y1, y2), n_max) };
        if let Some(s) = samples {
            o.samples = s;
        }
        Ok(o)
    }

    fn direct(&self, heights: Option<Pt>, n_max: usize, samples: Option<usize>) -> Res<FourierSeries2k> {
        if n_max == 0 {
            return Ok(empty_series(self.k, self.n));
        }
        let opts = self.fourier_options(heights, n_max, samples)?;
        Ok(fourier_coeffs(|z| self.eval(z), &opts, self.k, self.n)?)
    }

    /// Coefficients of the harmonic Poincare series whose principal part is
    /// q^(D/4N) e_r, for D up to |Delta| n_max^2.
    fn poincare_table(&self, n_max: usize, opts: &PoincareOptions) -> Res<(CoeffTable, f64)> {
        let (d, r) = self.single.ok_or_else(|| {
            CliError::Usage("a principal part list needs an explicit coefficient table (--table)".into())
        })?;
        let rep = WeilRep::new(self.n, self.delta < 0)?;
        let w2 = 3 - 2 * self.k as i32;
        let p = PoincareSeries::harmonic(rep, w2, d, r)?.with_tol(POINCARE_TOL);
        let dmax = self.delta.abs() * (n_max.max(1) as i64).pow(2);
        let heights = opts.poincare_heights.map(|Pt(a, b)| (a, b)).unwrap_or(POINCARE_HEIGHTS);
        let samples = opts.poincare_samples.unwrap_or(POINCARE_SAMPLES);
        let ex = extract_coeffs_two_height(|v, us| p.eval_horocycle(v, us), rep, w2, heights, (d, dmax), samples)?;
        let worst = ex.residuals.values().copied().fold(0.0, f64::max);
        Ok((ex.table, worst))
    }
}

fn empty_series(k: u32, n: i64) -> FourierSeries2k {
    FourierSeries2k { k, n, coeffs: vec![], errors: vec![], height_used: f64::NAN, constant: None }
}

fn c(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn to_value<T: Serialize>(t: &T) -> Res<Value> {
    Ok(serde_json::to_value(t)?)
}

fn read_table(path: &std::path::Path) -> Res<CoeffTable> {
    let s = std::fs::read_to_string(path)?;
    serde_json::from_str(&s).map_err(|e| CliError::Usage(format!("coefficient table {}: {e}", path.display())))
}

fn series_json(s: &FourierSeries2k) -> Value {
    let coeffs: Vec<Value> = s
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, b)| json!({ "n": i + 1, "b": c(*b), "error": s.errors.get(i).copied().unwrap_or(0.0) }))
        .collect();
    json!({
        "k": s.k,
        "N": s.n,
        "height_used": if s.height_used.is_finite() { json!(s.height_used) } else { Value::Null },
        "constant": s.constant.map(c),
        "coeffs": coeffs,
    })
}

pub fn heegner(a: &HeegnerArgs) -> Res<Value> {
    let f = &a.form;
    let (n, delta, rho) = (require(f.n, "N")?, require(f.delta, "Delta")?, require(f.rho, "rho")?);
    if f.principal_part.is_empty() {
        let div = heegner_divisor(n, delta, rho, require(f.d, "D")?, require(f.r, "r")?)?;
        let mut out = json!({ "divisor": to_value(&div)? });
        if f.k.is_some() {
            out["residue_divisor"] = to_value(&Form::from_args(f)?.eta.divisor()?)?;
        }
        Ok(out)
    } else {
        Ok(json!({ "residue_divisor": to_value(&Form::from_args(f)?.eta.divisor()?)? }))
    }
}

pub fn classreps(a: &ClassrepsArgs) -> Res<Value> {
    let forms = class_reps(require(a.n, "N")?, require(a.d, "D")?, require(a.r, "r")?)?;
    let list: Vec<Value> = forms.iter().map(|q| json!({ "form": [q.a, q.b, q.c], "point": c(q.heegner_point()) })).collect();
    Ok(json!({ "count": list.len(), "forms": list }))
}

pub fn eval(a: &EvalArgs) -> Res<Value> {
    if a.z.is_empty() {
        return Err(CliError::Usage("give at least one point with --z x,y".into()));
    }
    let form = Form::from_args(&a.form)?;
    let vals = a
        .z
        .iter()
        .map(|&Pt(x, y)| {
            let (v, err) = form.eval_with_error(Complex64::new(x, y))?;
            Ok(json!({ "z": [x, y], "value": c(v), "error": err }))
        })
        .collect::<Res<Vec<_>>>()?;
    Ok(json!({ "values": vals }))
}

pub fn fourier(a: &FourierArgs) -> Res<Value> {
    let n_max = a.n_max.unwrap_or(6);
    let mode = a.mode.unwrap_or(FourierMode::Direct);
    let form = Form::from_args(&a.form)?;
    match mode {
        FourierMode::Direct => Ok(json!({ "mode": "direct", "series": series_json(&form.direct(a.heights, n_max, a.samples)?) })),
        FourierMode::Predicted => {
            let (table, table_residual) = match &a.table {
                Some(p) => (read_table(p)?, None),
                None => {
                    let (t, w) = form.poincare_table(n_max, &a.poincare)?;
                    (t, Some(w))
                }
            };
            let pred = if n_max == 0 {
                empty_series(form.k, form.n)
            } else {
                predicted_coeffs(&table, form.k, form.delta, form.rho, n_max)?
            };
            let mut out = json!({ "mode": "predicted", "series": series_json(&pred), "table_residual": table_residual });
            if a.compare.unwrap_or(false) {
                let direct = form.direct(a.heights, n_max, a.samples)?;
                let cmp: Vec<Value> = pred
                    .coeffs
                    .iter()
                    .zip(&direct.coeffs)
                    .enumerate()
                    .map(|(i, (p, d))| {
                        json!({ "n": i + 1, "direct": c(*d), "predicted": c(*p), "relative_residual": (d - p).norm() / p.norm().max(1e-300) })
                    })
                    .collect();
                out["comparison"] = Value::Array(cmp);
            }
            Ok(out)
        }
        FourierMode::Invert => {
            let direct = form.direct(a.heights, n_max, a.samples)?;
            let pref = coefficient_prefactor(form.k, form.delta);
            let b: Vec<Complex64> = direct.coeffs.iter().map(|x| x / pref).collect();
            let inv = invert_divisor_sum(&b, form.k as i32, form.delta);
            let list: Vec<Value> = inv
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let m = i as i64 + 1;
                    json!({ "D": form.delta.abs() * m * m, "r": form.rho * m, "cplus": c(*v) })
                })
                .collect();
            Ok(json!({ "mode": "invert", "series": series_json(&direct), "cplus": list }))
        }
    }
}

pub fn poincare(a: &PoincareArgs) -> Res<Value> {
    let n = require(a.n, "N")?;
    let w2 = require(a.weight_times_2, "weight_times_2")?;
    let (d, r) = (require(a.d, "D")?, require(a.r, "r")?);
    let rep = WeilRep::new(n, a.dual.unwrap_or(false))?;
    let p = match a.s {
        Some(s) => PoincareSeries::new(rep, w2, d, r, s)?,
        None => PoincareSeries::harmonic(rep, w2, d, r)?,
    }
    .with_tol(a.tol.unwrap_or(POINCARE_TOL));
    let heights = a.poincare.poincare_heights.map(|Pt(x, y)| (x, y)).unwrap_or(POINCARE_HEIGHTS);
    let samples = a.poincare.poincare_samples.unwrap_or(POINCARE_SAMPLES);
    let ex = extract_coeffs_two_height(|v, us| p.eval_horocycle(v, us), rep, w2, heights, (d, a.d_max.unwrap_or(40)), samples)?;
    let residuals: Vec<Value> =
        ex.residuals.iter().map(|(&(d, r), &res)| json!({ "D": d, "r": r, "residual": res })).collect();
    Ok(json!({ "s": p.s, "table": to_value(&ex.table)?, "residuals": residuals }))
}

pub fn hecke(a: &HeckeArgs) -> Res<Value> {
    let table = read_table(&require(a.table.clone(), "table")?)?;
    let out = hecke_tm(&table, require(a.m, "m")?)?;
    Ok(json!({ "table": to_value(&out)? }))
}

fn cusp_form(k: u32, n: i64, n_terms: usize) -> Res<QExpansion> {
    if k == 6 && n == 1 {
        Ok(QExpansion::ramanujan_delta(n_terms))
    } else {
        Err(CliError::Usage("the normalised cusp form is only available for N = 1, k = 6".into()))
    }
}

pub fn pairing_cmd(a: &PairingArgs) -> Res<Value> {
    let form = Form::from_args(&a.form)?;
    let cfg = CycleConfig {
        gamma: require(a.gamma, "gamma")?.0,
        base_point: a.base_point.map(|Pt(x, y)| [x, y]),
        waypoints: a.waypoints.iter().map(|&Pt(x, y)| [x, y]).collect(),
    };
    let cycle = cfg.build()?;
    let opts = PathOptions::default();
    let (x0, x1, y0) = cycle.bounding_box(&opts);
    let poles = form.eta.poles_in_box(x0 - 1.0, x1 + 1.0, y0 / 2.0)?;
    let p = pairing(&|z| form.eval(z), &cycle, form.k, &poles, &opts)?;
    let mut out = json!({
        "gamma": cfg.gamma,
        "Q": [cycle.q.a, cycle.q.b, cycle.q.c],
        "d_gamma": cycle.d_gamma,
        "base_point": c(cycle.base_point),
        "poles_avoided": poles.iter().map(|p| c(*p)).collect::<Vec<_>>(),
        "pairing": to_value(&p)?,
    });
    if a.period.unwrap_or(false) {
        let c_top = match a.c_top {
            Some(v) => v,
            None => return Err(CliError::Usage("the period formula needs --c-top".into())),
        };
        let g = cusp_form(form.k, form.n, 400)?;
        let pc = period_formula_check(&|z| form.eval(z), &g, &cycle, form.k, form.delta, &poles, c_top, &opts)?;
        out["period"] = to_value(&pc)?;
    }
    Ok(out)
}

pub fn zeta(a: &ZetaArgs) -> Res<Value> {
    let form = Form::from_args(&a.form)?;
    let n_max = a.n_max.unwrap_or(4);
    if n_max == 0 {
        return Err(CliError::Usage("n_max must be at least 1".into()));
    }
    let g = cusp_form(form.k, form.n, 400.max(n_max))?;
    let (c_top, c_err) = match a.c_top {
        Some(v) => (v, 0.0),
        None => {
            let (t, w) = form.poincare_table(1, &a.poincare)?;
            (t.cplus(form.delta.abs(), form.rho)?.re, w)
        }
    };
    let direct = form.direct(a.heights, n_max, None)?;
    let z = zeta_normalize(&direct, &g, form.delta, Complex64::new(c_top, 0.0))?;
    let pref = coefficient_prefactor(form.k, form.delta).norm();
    let max_den = a.max_den.unwrap_or(RECOGNITION_MAX_DEN);
    let list: Vec<Value> = z
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let x = normalize_coefficient(*b, form.k, form.delta);
            let tau = g.coeff(i + 1).map(|t| *t.numer() as f64 / *t.denom() as f64).unwrap_or(0.0).abs();
            let err = z.errors[i] / pref + tau * c_top.abs() * c_err;
            let r = recognize_rational_with_error(x.re, err, max_den);
            json!({ "n": i + 1, "normalized": c(x), "error": err, "recognition": r })
        })
        .collect();
    Ok(json!({ "c_top": c_top, "c_top_residual": c_err, "coefficients": list }))
}

pub fn check(a: &CheckArgs) -> Res<(Value, bool)> {
    let ids: Vec<u8> = if a.criteria.is_empty() { (1..=7).collect() } else { a.criteria.clone() };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=7).contains(&i)) {
        return Err(CliError::Usage(format!("no criterion {bad}; choose from 1..7")));
    }
    let report = acceptance::run(&ids, |r| eprintln!("{}", r.line()));
    let passed = report.passed();
    Ok((json!({ "passed": passed, "report": to_value(&report)? }), passed))
}

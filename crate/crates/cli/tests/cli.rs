use std::process::{Command, Output};

use serde_json::Value;

const REF: [&str; 12] = ["--k", "6", "--N", "1", "--Delta", "-3", "--rho", "1", "--D", "-1", "--r", "1"];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maass-periods")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn heegner_divisor_round_trips_through_json() {
    let v = json_of(&run(&["heegner", "--N", "1", "--Delta", "-3", "--rho", "1", "--D", "-1", "--r", "1"]));
    assert_eq!(v["schema"], "maass-periods/1");
    assert_eq!(v["command"], "heegner");
    let div: maass_periods::qf::HeegnerDivisor = serde_json::from_value(v["result"]["divisor"].clone()).unwrap();
    assert_eq!(div.points.len(), 1);
    let p = &div.points[0];
    assert_eq!(p.form, [1, 1, 1]);
    // the point rho = e^{2 pi i/3} has stabilizer of order 3 in PSL2(Z)
    assert!((p.weight - 1.0 / 3.0).abs() < 1e-15);
    let again = serde_json::to_value(&div).unwrap();
    assert_eq!(again, v["result"]["divisor"]);
}

#[test]
fn residue_divisor_listed_when_k_given() {
    let v = json_of(&run(&["heegner"].iter().chain(REF.iter()).copied().collect::<Vec<_>>()));
    let w = v["result"]["residue_divisor"][0]["weight"].as_f64().unwrap();
    // 3^{5/2} from |d|^{(k-1)/2}, doubled by the +-r fold, over w = 3
    assert!((w - 2.0 * 3f64.powf(2.5) / 3.0).abs() < 1e-12);
}

#[test]
fn incompatible_congruence_exits_2() {
    let out = run(&["heegner", "--N", "1", "--Delta", "-3", "--rho", "1", "--D", "-2", "--r", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid input"));
}

#[test]
fn missing_parameter_exits_2() {
    let out = run(&["classreps", "--N", "1", "--D", "-23"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn parabolic_gamma_rejected() {
    let args: Vec<&str> = ["pairing"].iter().chain(REF.iter()).chain(["--gamma", "1,1,0,1"].iter()).copied().collect();
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hyperbolic"));
}

#[test]
fn class_number_of_minus_23() {
    let v = json_of(&run(&["classreps", "--N", "1", "--D", "-23", "--r", "1"]));
    assert_eq!(v["result"]["count"], 3);
}

#[test]
fn out_file_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.json"), dir.path().join("b.json")];
    for p in &paths {
        let mut args: Vec<&str> = ["eval"].iter().chain(REF.iter()).copied().collect();
        args.extend(["--z", "0.1,1.2", "--z", "-0.3,0.9", "--seed", "7", "--out", p.to_str().unwrap()]);
        let out = run(&args);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    let a = std::fs::read(&paths[0]).unwrap();
    let b = std::fs::read(&paths[1]).unwrap();
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["seed"], 7);
}

#[test]
fn empty_fourier_series() {
    let args: Vec<&str> = ["fourier"].iter().chain(REF.iter()).chain(["--n-max", "0"].iter()).copied().collect();
    let v = json_of(&run(&args));
    assert_eq!(v["result"]["series"]["coeffs"].as_array().unwrap().len(), 0);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // principal part q^{-1/12} (e_1 + e_{-1}) gives twice f_{6,-1,1} halved back to f
    std::fs::write(
        &cfg,
        r#"{"k": 6, "N": 1, "Delta": -3, "rho": 1, "principal_part": [{"D": -1, "r": 1, "c": 2.0}], "z": [[0.0, 5.0]]}"#,
    )
    .unwrap();
    let from_cfg = json_of(&run(&["--config", cfg.to_str().unwrap(), "eval", "--z", "0.1,1.2"]));
    let direct = json_of(&run(&["eval"].iter().chain(REF.iter()).chain(["--z", "0.1,1.2"].iter()).copied().collect::<Vec<_>>()));
    let a = &from_cfg["result"]["values"][0];
    assert_eq!(a["z"], serde_json::json!([0.1, 1.2]));
    for i in 0..2 {
        let x = a["value"][i].as_f64().unwrap();
        let y = direct["result"]["values"][0]["value"][i].as_f64().unwrap();
        assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
    }
}

#[test]
fn period_formula_on_asymmetric_cycle() {
    let c_top = "-1.0736689543773696";
    let mut args: Vec<&str> = ["pairing"].iter().chain(REF.iter()).copied().collect();
    args.extend(["--gamma", "3,5,7,12", "--period", "--c-top", c_top]);
    let v = json_of(&run(&args));
    let p = &v["result"]["period"];
    assert_eq!(p["matching"], "i pi^k");
    assert!(p["relative_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn hecke_on_table_file() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    let mut table = maass_periods::maass::CoeffTable::new(1, -9, true);
    for d in [-1i64, 3, 8, 11, 12, 15, 20, 23, 24, 27, 32, 35, 36] {
        let r = if d.rem_euclid(4) == 0 { 0 } else { 1 };
        table.insert(d, r, num_complex::Complex64::new(d as f64, 0.0), num_complex::Complex64::new(0.0, 0.0));
    }
    std::fs::write(&t, serde_json::to_string(&table).unwrap()).unwrap();
    let v = json_of(&run(&["hecke", "--table", t.to_str().unwrap(), "--m", "2"]));
    let out: maass_periods::maass::CoeffTable = serde_json::from_value(v["result"]["table"].clone()).unwrap();
    let lib = maass_periods::maass::hecke_tm(&table, 2).unwrap();
    assert_eq!(out, lib);
}

#[test]
fn check_rejects_unknown_criterion() {
    let out = run(&["check", "--criteria", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

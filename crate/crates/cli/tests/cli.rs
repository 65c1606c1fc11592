use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn rainbow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rainbow")).args(args).output().expect("binary runs")
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).display().to_string()
}

fn basket() -> String {
    format!("{},{}", data("sim_atos.csv"), data("sim_dassault.csv"))
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn error_record(o: &Output) -> Value {
    assert!(!o.status.success());
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn sure_digital_pays_discounted_unit() {
    let o = rainbow(&["price", "--kind", "digital", "--k", "0.0001", "0.0001", "--spots", "100,120", "--n", "20000"]);
    let v = stdout_json(&o);
    let disc = (-0.025_f64).exp();
    assert!((v["monte_carlo"]["price"].as_f64().unwrap() - disc).abs() < 1e-12);
    assert!((v["reference"]["price"].as_f64().unwrap() - disc).abs() < 1e-12);
    assert_eq!(v["config"]["command"], "price");
    assert_eq!(v["config"]["kind"], "digital");
}

#[test]
fn reproduce_tables_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tables.csv");
    let out = out.to_str().unwrap();
    let args = ["reproduce-tables", "--n", "20000", "--seed", "42", "--format", "csv", "--out", out];
    assert!(rainbow(&args).status.success());
    let first = std::fs::read(out).unwrap();
    assert!(rainbow(&args).status.success());
    let second = std::fs::read(out).unwrap();
    assert_eq!(first, second);
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("# config\ncommand,reproduce-tables\n"));
    assert!(text.contains("Atos regime 1,0.0784577,-0.00723280,0.0603574"));
    assert!(text.contains("seed,42"));
}

#[test]
fn reproduce_tables_ignores_thread_count() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_rainbow"))
            .args(["reproduce-tables", "--n", "8192", "--format", "csv"])
            .env("RAINBOW_THREADS", threads)
            .output()
            .unwrap()
    };
    let (a, b) = (run("1"), run("0"));
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn select_writes_seven_family_columns() {
    let input = basket();
    let o = rainbow(&[
        "select",
        "--input",
        &input,
        "--families",
        "normal,clayton,gumbel,frank,tawn,galambos,husler_reiss",
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let table: Vec<&str> = text.split("\n\n").nth(1).unwrap().lines().collect();
    assert_eq!(table[0], ",Normal,Clayton,Gumbel,Frank,Tawn,Galambos,Husler-Reiss");
    let labels: Vec<&str> = table.iter().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["parameter", "statistic", "p-value", "lnL", "AIC", "BIC"]);
    for line in &table[1..] {
        assert_eq!(line.split(',').count(), 8, "{line}");
    }
    // the simulated basket has Gumbel dependence: extreme-value families beat Clayton and Normal
    let aic: Vec<f64> = table[5].split(',').skip(1).map(|x| x.parse().unwrap()).collect();
    assert!(aic[2] < aic[0] && aic[2] < aic[1]);
}

#[test]
fn select_json_embeds_config_and_rankings() {
    let input = basket();
    let v = stdout_json(&rainbow(&["select", "--input", &input, "--families", "gumbel,clayton"]));
    assert_eq!(v["config"]["families"], serde_json::json!(["gumbel", "clayton"]));
    assert_eq!(v["rankings"]["aic"][0], "gumbel");
    assert_eq!(v["n"], 1533);
}

#[test]
fn gof_reports_p_values() {
    let input = basket();
    let v = stdout_json(&rainbow(&["gof", "--input", &input, "--families", "gumbel,clayton", "--bootstrap", "99"]));
    let tests = v["tests"].as_array().unwrap();
    assert_eq!(tests.len(), 2);
    for t in tests {
        let p = t["p_value"].as_f64().unwrap();
        assert!(p > 0.0 && p < 1.0);
    }
    // Clayton is the wrong tail for this data
    assert!(tests[1]["p_value"].as_f64().unwrap() < 0.05);
}

#[test]
fn ingest_fit_and_calibrate() {
    let input = basket();
    let v = stdout_json(&rainbow(&["ingest", "--input", &input]));
    assert_eq!(v["assets"][0]["asset"], "sim_atos");
    assert_eq!(v["assets"][1]["summary"]["n"], 1533);

    let v = stdout_json(&rainbow(&["fit-margins", "--input", &input]));
    assert_eq!(v["margins"].as_array().unwrap().len(), 2);

    let v = stdout_json(&rainbow(&["calibrate", "--input", &input]));
    for a in v["assets"].as_array().unwrap() {
        assert!((a["expected_growth"].as_f64().unwrap() - 0.025_f64.exp()).abs() < 1e-10);
    }

    let v = stdout_json(&rainbow(&["fit-copula", "--input", &input, "--families", "frank"]));
    assert_eq!(v["fits"][0]["family"], "frank");
}

#[test]
fn price_from_fitted_data_agrees_with_reference() {
    let input = basket();
    let v = stdout_json(&rainbow(&["price", "--input", &input, "--families", "gumbel", "--kind", "call-max", "-k", "120", "--spots", "120,120"]));
    assert!(v["mc_minus_reference_in_se"].as_f64().unwrap().abs() < 4.0);
}

#[test]
fn errors_are_json_records() {
    let e = error_record(&rainbow(&["price", "--kind", "nope"]));
    assert_eq!(e["module"], "cli");

    let e = error_record(&rainbow(&["fit-copula"]));
    assert_eq!(e["module"], "cli");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "date,close\n2020-01-01,10\n2020-01-02,-3\n").unwrap();
    let e = error_record(&rainbow(&["ingest", "--input", bad.to_str().unwrap()]));
    assert_eq!(e["module"], "market_data");

    let e = error_record(&rainbow(&["price", "--kind", "spread", "-k", "10", "--spots", "100,120", "--n", "0"]));
    assert_eq!(e["module"], "pricing");

    let e = error_record(&rainbow(&["bogus"]));
    assert_eq!(e["module"], "cli");
}

#[test]
fn model_file_round_trips_through_price() {
    let v = stdout_json(&rainbow(&["price", "--kind", "call-min", "-k", "110", "--spots", "120,120", "--families", "frank", "--n", "20000"]));
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, serde_json::to_string(&v["model"]).unwrap()).unwrap();
    let w = stdout_json(&rainbow(&["price", "--model", model.to_str().unwrap(), "--kind", "call-min", "-k", "110", "--n", "20000"]));
    assert_eq!(v["monte_carlo"], w["monte_carlo"]);
    assert_eq!(w["config"]["families"], serde_json::json!(["frank"]));
}

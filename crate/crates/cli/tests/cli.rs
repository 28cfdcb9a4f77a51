use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use serde_json::Value;
use torusdet::{Status, VerificationReport};
use torusdet_cli::output::exit_code;

fn torusdet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torusdet")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn type_matches(v: &Value, ty: &str) -> bool {
    match ty {
        "string" => v.is_string(),
        "number" => v.is_number(),
        "object" => v.is_object(),
        "array" => v.is_array(),
        _ => false,
    }
}

/// Checks the subset of JSON Schema used by the report fixture.
fn validate(schema: &Value, v: &Value) -> Result<(), String> {
    if let Some(ty) = schema["type"].as_str() {
        if !type_matches(v, ty) {
            return Err(format!("expected {ty}, found {v}"));
        }
    }
    if let Some(allowed) = schema["enum"].as_array() {
        if !allowed.contains(v) {
            return Err(format!("{v} not in {allowed:?}"));
        }
    }
    if let Some(items) = schema.get("items") {
        for x in v.as_array().unwrap() {
            validate(items, x)?;
        }
    }
    if let Some(obj) = v.as_object() {
        let props = schema["properties"].as_object().cloned().unwrap_or_default();
        for key in schema["required"].as_array().into_iter().flatten() {
            if !obj.contains_key(key.as_str().unwrap()) {
                return Err(format!("missing {key}"));
            }
        }
        for (k, x) in obj {
            match props.get(k) {
                Some(s) => validate(s, x)?,
                None if schema["additionalProperties"] == Value::Bool(false) => return Err(format!("unexpected key {k}")),
                None => {}
            }
        }
    }
    Ok(())
}

fn schema() -> Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/report_schema.json");
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn eta_at_i() {
    let out = torusdet(&["eta", "--tau", "0+1i"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    // η(i) = Γ(1/4) / (2 π^{3/4})
    assert!((v[0]["eta_re"].as_f64().unwrap() - 0.768_225_422_326_056_7).abs() < 1e-14);
}

#[test]
fn detlap_over_a_grid_file() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("g.csv");
    std::fs::write(&grid, "re,im\n0,1\n0.5,0.8660254037844386\n-0.25,2\n").unwrap();
    let g = grid.to_str().unwrap();
    let out = torusdet(&["detlap", "--n", "2", "--q", "1", "--component", "doubleprime", "--tau-grid", g, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2]["tau_re"], -0.25);
    assert_eq!(rows[0]["multiplicity"], 1);
    let csv_out = torusdet(&["detlap", "--n", "2", "--tau-grid", g, "--format", "csv"]);
    let text = String::from_utf8(csv_out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("tau_re,tau_im,n,q,component,multiplicity,log_det,zeta_at_0"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn grid_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x,y\n0,1\n").unwrap();
    let out = torusdet(&["eta", "--tau-grid", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--tau-grid"));
    std::fs::write(&bad, "re,im\n0,-1\n").unwrap();
    assert_eq!(torusdet(&["eta", "--tau-grid", bad.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.csv");
    assert_eq!(torusdet(&["eta", "--tau-grid", missing.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn usage_errors_exit_two() {
    let out = torusdet(&["eta", "--tol", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--tol"));
    assert_eq!(torusdet(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(torusdet(&["verify", "everything"]).status.code(), Some(2));
    assert_eq!(torusdet(&["eta", "--unknown-key", "1"]).status.code(), Some(2));
}

#[test]
fn kronecker_single_report() {
    let out = torusdet(&["verify", "kronecker", "--tau", "0+1i"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    validate(&schema(), &v).unwrap();
    let reps = v.as_array().unwrap();
    assert_eq!(reps.len(), 1);
    assert_eq!(reps[0]["status"], "pass");
    assert!(reps[0]["residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn forced_failure_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = torusdet(&["verify", "exterior", "--tol", "1e-30", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    validate(&schema(), &v).unwrap();
    assert!(v.as_array().unwrap().iter().all(|r| (r["tolerance"].as_f64().unwrap() / 1e-30 - 1.0).abs() < 1e-12));
    let nowhere = dir.path().join("no/such/dir/r.json");
    assert_eq!(torusdet(&["verify", "exterior", "--out", nowhere.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn hessian_report_carries_the_constant() {
    let out = torusdet(&["verify", "hessian", "--n", "1", "--tau0", "0+1i"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let fitted = v.as_array().unwrap().iter().find(|r| r["check"] == "moduli.fitted_constant").unwrap();
    assert!(fitted["notes"].as_str().unwrap().contains("constant=1.000000000"));
}

#[test]
fn quick_suite_report_set() {
    let out = torusdet(&["verify", "all", "--quick"]);
    let v = json(&out);
    validate(&schema(), &v).unwrap();
    let reps = v.as_array().unwrap();
    assert!(reps.len() >= 25);
    let any_fail = reps.iter().any(|r| r["status"] == "fail");
    let any_inc = reps.iter().any(|r| r["status"] == "inconclusive");
    let expect = if any_fail { 1 } else if any_inc { 3 } else { 0 };
    assert_eq!(out.status.code(), Some(expect));
    // pass ⇔ residual ≤ tolerance
    for r in reps {
        let pass = r["residual"].as_f64().unwrap() <= r["tolerance"].as_f64().unwrap();
        assert_eq!(r["status"] == "pass", pass, "{r}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let a = torusdet(&["verify", "spectral", "--quick", "--threads", "1", "--format", "csv"]);
    let b = torusdet(&["verify", "spectral", "--quick", "--threads", "4", "--format", "csv"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

fn status() -> impl Strategy<Value = Status> {
    prop_oneof![Just(Status::Pass), Just(Status::Fail), Just(Status::Inconclusive)]
}

proptest! {
    #[test]
    fn exit_code_contract(statuses in prop::collection::vec(status(), 0..12)) {
        let reps: Vec<VerificationReport> = statuses
            .iter()
            .map(|&s| {
                let mut r = VerificationReport::new("x", "", 0.0, 1.0);
                r.status = s;
                r
            })
            .collect();
        let code = exit_code(&reps);
        let fail = statuses.contains(&Status::Fail);
        let inc = statuses.contains(&Status::Inconclusive);
        prop_assert_eq!(code == 0, !fail && !inc);
        prop_assert_eq!(code == 1, fail);
        prop_assert_eq!(code == 3, inc && !fail);
    }
}

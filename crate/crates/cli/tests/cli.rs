use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn k3bm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_k3bm")).args(args).env_remove("K3BM_JOBS").output().expect("binary runs")
}

fn manifest(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn validator() -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(manifest("schema/output.schema.json")).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn json_ok(args: &[&str]) -> Value {
    let out = k3bm(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let v = validator();
    let errs: Vec<String> = v.iter_errors(&doc).map(|e| e.to_string()).collect();
    assert!(errs.is_empty(), "{args:?}: {errs:?}");
    doc
}

#[test]
fn analyze_known_obstruction() {
    let d = json_ok(&["analyze", "-3", "97", "21728"]);
    let r = &d["result"];
    assert_eq!(r["status"], "Obstructed");
    assert_eq!(r["classification"]["algebraic"]["Generators"], serde_json::json!(["A1"]));
    assert_eq!(r["transcendental_trivial"], true);
    assert_eq!(r["verdict"]["Obstructed"]["by"], serde_json::json!(["A1"]));
}

#[test]
fn analyze_rational_point() {
    let d = json_ok(&["analyze", "1", "1", "1"]);
    assert_eq!(d["result"]["status"], "NotObstructed");
    assert!(d["result"]["verdict"]["NotObstructed"]["certificate"]["RationalPoint"].is_array());
}

#[test]
fn analyze_with_restricted_algebras() {
    let d = json_ok(&["analyze", "28", "2", "686", "--algebras", "B1", "--precision-cap", "30"]);
    assert_eq!(d["result"]["status"], "Obstructed");
    assert_eq!(d["result"]["generator_source"], "user");
    assert_eq!(d["metadata"]["precision_cap"], 30);
    assert_eq!(d["metadata"]["algebras"], serde_json::json!(["B1"]));
    let d = json_ok(&["analyze", "28", "2", "686", "--algebras", "B1", "--verify-fastpaths"]);
    assert_eq!(d["result"]["status"], "Obstructed");
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["analyze", "0", "1", "1"],
        vec!["analyze", "1", "1", "1", "--algebras", "A1"],
        vec!["analyze", "1", "1"],
        vec!["census", "0"],
        vec!["density", "8"],
        vec!["cohomology-verify", "--shape", "6,2,2,6"],
        vec!["frobnicate"],
    ] {
        let out = k3bm(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
    }
    assert_eq!(k3bm(&["--help"]).status.code(), Some(0));
}

#[test]
fn strict_flag() {
    // nothing Unknown here, so --strict changes nothing
    let out = k3bm(&["analyze", "-3", "97", "21728", "--strict"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn census_matches_golden() {
    let dir = std::env::temp_dir().join(format!("k3bm-golden-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("c25.csv");
    let d = json_ok(&["census", "25", "--exhaustive", "--csv", csv.to_str().unwrap()]);
    let golden: Value = serde_json::from_str(&std::fs::read_to_string(manifest("tests/golden/census_25.json")).unwrap()).unwrap();
    assert_eq!(d["result"], golden);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), std::fs::read_to_string(manifest("tests/golden/census_25.csv")).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn census_audit_rows_tally_to_summary() {
    let dir = std::env::temp_dir().join(format!("k3bm-audit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("a.csv");
    let d = json_ok(&["census", "6", "--audit", "--csv", csv.to_str().unwrap(), "--jobs", "2"]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |n: &str| header.iter().position(|h| *h == n).unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let c = &d["result"]["counts"];
    assert_eq!(rows.len() as u64, c["total"].as_u64().unwrap());
    let n = |f: &dyn Fn(&Vec<&str>) -> bool| rows.iter().filter(|r| f(r)).count() as u64;
    assert_eq!(n(&|r| r[col("verdict")] == "Obstructed"), c["obstructed_total"].as_u64().unwrap());
    assert_eq!(n(&|r| r[col("els")] == "1"), c["locally_soluble"].as_u64().unwrap());
    assert_eq!(n(&|r| r[col("nonconstant")] == "1"), c["nonconstant_br"].as_u64().unwrap());
    assert_eq!(d["metadata"]["jobs"], 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn census_deterministic_across_jobs() {
    let a = json_ok(&["census", "12", "--jobs", "1"]);
    let b = json_ok(&["census", "12", "--jobs", "3"]);
    assert_eq!(a["result"], b["result"]);
}

#[test]
fn sampled_census() {
    let d = json_ok(&["census", "12", "--sample", "500", "--seed", "4", "--depth", "brauer"]);
    assert_eq!(d["metadata"]["seed"], 4);
    let (lo, hi) = {
        let iv = &d["result"]["intervals"]["nonconstant_br"];
        (iv[0].as_f64().unwrap(), iv[1].as_f64().unwrap())
    };
    let ex = json_ok(&["census", "12", "--depth", "brauer"]);
    let v = ex["result"]["counts"]["nonconstant_br"].as_f64().unwrap();
    assert!(lo <= v && v <= hi, "{lo} {v} {hi}");
}

#[test]
fn cohomology_verify_reports_agreement() {
    let d = json_ok(&["cohomology-verify", "--q-bound", "40"]);
    assert_eq!(d["result"]["all_agree"], true);
    assert_eq!(d["result"]["d_q"], 2);
    assert_eq!(d["result"]["transcendental"]["gram"], serde_json::json!([[24, 12], [12, 24]]));
    let d = json_ok(&["cohomology-verify", "--shape", "4,4,4,4", "--coeffs", "1,-2,3", "--q", "5,13,17"]);
    assert_eq!(d["result"]["all_agree"], true);
    assert_eq!(d["result"]["counts"].as_array().unwrap().len(), 3);
}

#[test]
fn density_command() {
    let d = json_ok(&["density", "10", "--bound", "20000"]);
    let x = d["result"]["density"].as_f64().unwrap();
    assert!((x - 2.0 / 3.0).abs() < 0.03);
}

#[test]
fn selftest_passes() {
    let d = json_ok(&["selftest"]);
    assert_eq!(d["result"]["passed"], true);
}

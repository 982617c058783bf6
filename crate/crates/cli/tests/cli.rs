use std::process::Command;

use identcert::doc::lint;
use identcert::exit;
use serde_json::Value;

const SCHEMA: &str = include_str!("../../../docs/report.schema.json");

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("identcert").chain(args.iter().copied());
    let code = identcert::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> (i32, Value) {
    let (code, out, err) = run(args);
    assert!(err.is_empty(), "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    check_document(&v);
    (code, v)
}

fn check_document(v: &Value) {
    let schema: Value = serde_json::from_str(SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(v).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "schema errors: {errors:?}");
    let untagged = lint(v);
    assert!(untagged.is_empty(), "numbers without provenance: {untagged:?}");
}

fn secant(v: &Value) -> &Vec<Value> {
    v["secant"]["entries"].as_array().unwrap()
}

#[test]
fn analyze_three_factor_binary_segre() {
    let (code, v) = json(&["analyze", "--spec", "segre:1,1,1", "--h-max", "2"]);
    assert_eq!(code, exit::OK);
    assert_eq!((v["model"]["n"].as_u64(), v["model"]["N"].as_u64()), (Some(3), Some(7)));
    let dims: Vec<u64> = secant(&v).iter().map(|r| r["dim_computed"].as_u64().unwrap()).collect();
    assert_eq!(dims, vec![3, 7]);
    assert!(secant(&v).iter().all(|r| r["defect"] == 0));
    assert_eq!(v["twd"]["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn analyze_quadric_veronese_defect_in_both_fields() {
    for field in ["prime", "rational"] {
        let (_, v) = json(&["analyze", "--spec", "veronese:d=2,n=2", "--h-max", "2", "--field", field]);
        let defects: Vec<u64> = secant(&v).iter().map(|r| r["defect"].as_u64().unwrap()).collect();
        assert_eq!(defects, vec![0, 1], "{field}");
    }
}

#[test]
fn analyze_gaussian_moments_never_defective() {
    let (_, v) = json(&["analyze", "--spec", "gm:d=14", "--h-max", "5"]);
    assert_eq!(secant(&v).len(), 5);
    assert!(secant(&v).iter().all(|r| r["defect"] == 0));
}

#[test]
fn certify_examples() {
    let (code, v) = json(&["certify", "--spec", "segre:1,1,1,1,1", "--mode", "hybrid"]);
    assert_eq!(code, exit::OK);
    assert_eq!(v["result"]["h_ident_max"], 4);
    assert_eq!(v["result"]["agreement"], true);
    assert!(!v["certificates"].as_array().unwrap().is_empty());

    let (code, v) = json(&["certify", "--spec", "segre:1,1,1,1,1,1,1", "--mode", "catalog-only"]);
    assert_eq!(code, exit::OK);
    assert_eq!(v["result"]["h_ident_max"], 15);
    assert!(secant(&v).is_empty());
}

#[test]
fn certify_probe_only_grassmann_reports_flags() {
    let (code, v) = json(&["certify", "--spec", "grass:k=1,n=4", "--mode", "probe-only", "--h", "2"]);
    assert_eq!(code, exit::OK);
    let entries = secant(&v);
    assert_eq!(entries.len(), 2);
    let r2 = &entries[1]["report"];
    // G(1,4) in P^9 has dimension 6: the abstract Sec_2 has dimension 13 and fills
    assert_eq!(r2["fills_ambient"], true);
    assert_eq!(r2["generically_finite"], false);
    assert_eq!(v["result"]["complete"], false);
}

#[test]
fn disagreement_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("empty.json");
    std::fs::write(&kb, r#"{"version": 1, "entries": []}"#).unwrap();
    let (code, v) = json(&[
        "certify",
        "--spec",
        "segre:1,1,1,1,1,1,1",
        "--mode",
        "catalog-only",
        "--kb",
        kb.to_str().unwrap(),
    ]);
    assert_eq!(code, exit::DISAGREEMENT);
    assert_eq!(v["result"]["agreement"], false);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["analyze", "--spec", "cubic:3"][..],
        &["analyze", "--spec", "segre:1"],
        &["analyze", "--spec", "segre:1,1", "--trials", "0"],
        &["analyze", "--spec", "segre:1,1", "--field", "rational", "--modulus", "7"],
        &["analyze", "--spec", "segre:1,1", "--modulus", "4294967297"],
        &["certify", "--spec", "segre:1,1", "--mode", "guess"],
        &["table", "nonsense"],
        &["table", "gaussian", "--d", "20..14"],
        &["frobnicate"],
    ] {
        let (code, _, err) = run(args);
        assert_eq!(code, exit::USAGE, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, exit::OK);
    assert!(out.contains("certify"));
}

#[test]
fn capacity_exits_three() {
    let (code, _, err) = run(&["analyze", "--spec", "segre:1,1,1", "--cap", "10"]);
    assert_eq!(code, exit::CAPACITY);
    assert!(err.contains("capacity"), "{err}");
}

#[test]
fn table_binary_segre() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("t.json");
    let tsv_path = dir.path().join("t.tsv");
    let (code, text, _) = run(&[
        "table",
        "binary-segre",
        "--max-k",
        "7",
        "--out",
        out_path.to_str().unwrap(),
        "--tsv",
        tsv_path.to_str().unwrap(),
    ]);
    assert_eq!(code, exit::OK);
    assert!(text.contains("agreement: 6/6"), "{text}");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    check_document(&v);
    let rows: Vec<(u64, u64)> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["params"]["k"].as_u64().unwrap(), r["certified"]["h_ident_max"].as_u64().unwrap()))
        .collect();
    assert_eq!(rows, vec![(2, 1), (3, 2), (4, 2), (5, 4), (6, 9), (7, 15)]);
    let tsv = std::fs::read_to_string(&tsv_path).unwrap();
    assert_eq!(tsv.lines().count(), 7);
    assert!(tsv.starts_with("params\tspec\tgr"));
}

#[test]
fn table_xkn_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.json");
    let (code, _, _) = run(&["table", "xkn", "--max", "3", "--out", p.to_str().unwrap()]);
    assert_eq!(code, exit::OK);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    check_document(&v);
    for r in v["rows"].as_array().unwrap() {
        let (k, n) = (r["params"]["k"].as_u64().unwrap(), r["params"]["n"].as_u64().unwrap());
        assert_eq!(r["stats"]["gr"].as_u64().unwrap(), (n + 1).pow(k as u32));
        assert_eq!(r["stats"]["perfect"], true);
    }
}

#[test]
fn table_gaussian_range() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.tsv");
    let (code, _, _) = run(&["table", "gaussian", "--d", "14..20", "--out", p.to_str().unwrap()]);
    assert_eq!(code, exit::OK);
    let tsv = std::fs::read_to_string(&p).unwrap();
    let rows: Vec<Vec<&str>> = tsv.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 7);
    for (d, row) in (14u64..=20).zip(&rows) {
        let s = (d + 1) / 3;
        assert_eq!(row[3], s.to_string());
        assert_eq!(row[6], (s - 1).to_string());
        assert_eq!(row[9], "yes");
    }
}

#[test]
fn selftest_is_deterministic() {
    let a = run(&["selftest", "--trials", "1", "--seed", "7"]);
    let b = run(&["selftest", "--trials", "1", "--seed", "7"]);
    assert_eq!(a.0, exit::OK, "{}", a.1);
    assert_eq!(a, b);
    assert_eq!(a.1.lines().filter(|l| l.starts_with("PASS ")).count(), 10);
}

#[test]
fn selftest_rejects_corrupt_knowledge_base() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    std::fs::write(&kb, r#"{"version": 1, "entries": [{"id": "x", "citation": "c", "summary": "s", "where": "bogus_var > 1", "facts": []}]}"#).unwrap();
    let (code, out, err) = run(&["selftest", "--kb", kb.to_str().unwrap()]);
    assert_eq!(code, exit::USAGE);
    assert!(out.is_empty());
    assert!(err.contains("kb.json"), "{err}");
}

#[test]
fn seed_comes_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_identcert"))
        .args(["analyze", "--spec", "segre:1,1", "--h-max", "1"])
        .env("IDENTCERT_SEED", "5")
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["secant"]["entries"][0]["seed"], 5);
}

#[test]
fn out_flag_writes_file_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.json");
    let (code, out, _) = run(&["analyze", "--spec", "segre:1,1", "--out", p.to_str().unwrap()]);
    assert_eq!(code, exit::OK);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    check_document(&v);
}

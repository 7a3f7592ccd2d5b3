use std::path::PathBuf;
use std::process::{Command, Output};

fn vinberg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vinberg")).args(args).output().unwrap()
}

fn write(name: &str, text: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("vinberg-cli-{}-{name}", std::process::id()));
    std::fs::write(&p, text).unwrap();
    p
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn build_reports_dimensions() {
    let spec = write("b.json", r#"{"rank": 3, "dim_v": 8}"#);
    let out = vinberg(&["build", "--spec", spec.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["dim_herm"], 27);
    assert_eq!(v["slot_dims"]["12"], 8);
    assert_eq!(v["clifford"]["gammas"].as_array().unwrap().len(), 8);
}

#[test]
fn eval_request_matches_hand_values() {
    let req = write(
        "r.json",
        r#"{"cone": {"rank": 3, "dim_v": 1},
            "X": {"rank": 3, "diag": [2, 2, 2], "offdiag": {"12": [1], "13": [1], "23": [1]}},
            "op": "d"}"#,
    );
    let out = vinberg(&["eval", "--request", req.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["result"]["d"].as_f64(), Some(4.0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("4.0000000000000000e0"));
}

#[test]
fn sample_then_decompose() {
    let spec = write("s.json", r#"{"rank": 2, "dim_w": 4, "seed": 9}"#);
    let out = vinberg(&["sample", "--spec", spec.to_str().unwrap(), "--index", "3"]);
    assert!(out.status.success());
    let v = json(&out);
    let x = write("x.json", &v["X"].to_string());
    let out = vinberg(&["eval", "--spec", spec.to_str().unwrap(), "--x", x.to_str().unwrap(), "--op", "decompose"]);
    let d = json(&out);
    for (a, b) in d["result"]["element"]["diag"].as_array().unwrap().iter().zip(v["A"]["diag"].as_array().unwrap()) {
        assert!((a.as_f64().unwrap() - b.as_f64().unwrap()).abs() < 1e-12);
    }
}

#[test]
fn exit_codes() {
    let spec = write("e.json", r#"{"rank": 2, "dim_w": 1}"#);
    let s = spec.to_str().unwrap();
    let x = write("ex.json", r#"{"rank": 2, "diag": [1, 1], "offdiag": {"12": [2]}}"#);
    let xs = x.to_str().unwrap();
    assert_eq!(vinberg(&["eval", "--spec", s, "--x", xs, "--op", "membership"]).status.code(), Some(0));
    assert_eq!(vinberg(&["eval", "--spec", s, "--x", xs, "--op", "decompose"]).status.code(), Some(1));
    assert_eq!(vinberg(&["eval", "--spec", s, "--x", xs, "--op", "nope"]).status.code(), Some(2));
    assert_eq!(vinberg(&["build", "--spec", "/nonexistent.json"]).status.code(), Some(2));
    let bad = write("bad.json", r#"{"rank": 2, "dim_w": 1, "colour": 3}"#);
    assert_eq!(vinberg(&["build", "--spec", bad.to_str().unwrap()]).status.code(), Some(2));
    let r4 = write("r4.json", r#"{"rank": 4}"#);
    assert_eq!(vinberg(&["build", "--spec", r4.to_str().unwrap()]).status.code(), Some(3));
    let ind = write("ind.json", r#"{"rank": 3, "dim_v": 2, "signature": [1, 1]}"#);
    let out = write("ind.csv", "");
    let code = vinberg(&["scan", "--spec", ind.to_str().unwrap(), "--eps1", "0", "--eps2", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(code.status.code(), Some(3));
    let r2 = vinberg(&["scan", "--spec", s, "--eps1", "0", "--eps2", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(r2.status.code(), Some(3));
}

#[test]
fn selftest_detects_corruption() {
    let spec = write("c.json", r#"{"rank": 3, "dim_v": 2}"#);
    let s = spec.to_str().unwrap();
    let ok = vinberg(&["selftest", "--spec", s, "--samples", "50"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = vinberg(&["selftest", "--spec", s, "--samples", "50", "--corrupt-gamma"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
}

#[test]
fn scan_writes_header_and_rows() {
    let spec = write("sc.json", r#"{"rank": 3, "dim_v": 1}"#);
    let out = write("sc.csv", "");
    let r = vinberg(&[
        "scan", "--spec", spec.to_str().unwrap(), "--eps1", "-1:1:1", "--eps2", "-0.5:0.5:0.5", "--grid", "10",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "eps1,eps2,classification,witness_x2,witness_x3,min_minor");
    assert_eq!(lines.len(), 1 + 9);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 6));
}

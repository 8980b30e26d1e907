use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn qlnc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlnc")).args(args).output().unwrap()
}

fn qlnc_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qlnc"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn constdepth_butterfly_report() {
    let o = qlnc(&["compile", "--example", "butterfly", "--mode", "constdepth", "--verify"]);
    assert!(o.status.success());
    let v = json(&o);
    let r = &v["report"];
    assert!(r["depth"].as_u64().unwrap() <= 9);
    assert!(r["depth"].as_u64().unwrap() <= r["bound"].as_u64().unwrap());
    assert_eq!(r["verified"], Value::Bool(true));
    assert_eq!(r["independence"], Value::Bool(true));
}

#[test]
fn chain_mode_two_pairs() {
    let net = tmp("plus.json");
    std::fs::write(
        &net,
        r#"{"name":"plus","d":2,
            "nodes":[{"id":1,"role":"transmitter"},{"id":2,"role":"relay"},{"id":5,"role":"relay"},
                     {"id":3,"role":"relay"},{"id":4,"role":"receiver"},{"id":6,"role":"transmitter"},
                     {"id":7,"role":"relay"},{"id":8,"role":"relay"},{"id":9,"role":"receiver"}],
            "edges":[{"from":1,"to":2},{"from":2,"to":5},{"from":5,"to":3},{"from":3,"to":4},
                     {"from":6,"to":7},{"from":7,"to":5},{"from":5,"to":8},{"from":8,"to":9}],
            "multicast":[{"tx":1,"rx":[4]},{"tx":6,"rx":[9]}]}"#,
    )
    .unwrap();
    let o = qlnc(&["compile", "--network", net.to_str().unwrap(), "--mode", "chain", "--verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &json(&o)["report"];
    assert!(r["depth"].as_u64().unwrap() <= 9);
    assert_eq!(r["bound"], 9);
}

#[test]
fn malformed_json_is_rejected() {
    let o = qlnc_stdin(&["verify", "-"], "{\"circuit\": [1,");
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn verify_reads_stdin_and_detects_a_missing_cnot() {
    let o = qlnc(&["compile", "--example", "butterfly", "--mode", "inorder"]);
    let mut v = json(&o);
    let good = serde_json::to_string(&v).unwrap();
    let pass = qlnc_stdin(&["verify", "-"], &good);
    assert!(pass.status.success());
    assert_eq!(json(&pass)["branches_checked"], 4);

    let ops = v["circuit"]["ops"].as_array_mut().unwrap();
    let i = ops.iter().position(|op| op["kind"] == "Cnot").unwrap();
    ops.remove(i);
    let broken = serde_json::to_string(&v).unwrap();
    let fail = qlnc_stdin(&["verify", "-"], &broken);
    assert_eq!(fail.status.code(), Some(1));
    let out = json(&fail);
    assert_eq!(out["pass"], false);
    assert!(out["first_failure"].is_array());
}

#[test]
fn composite_swap_uses_the_tableau_path() {
    let o = qlnc(&["verify", "--example", "composite-swap", "--branches", "sample", "--samples", "32"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["random_measurements"], 15);
    let det = qlnc(&["verify", "--example", "composite-swap", "--branches", "sample", "--samples", "4", "--details"]);
    let b = &json(&det)["branches"][0];
    assert!(b.get("fidelity").is_none());
    assert_eq!(b["tableau_match"], true);
    assert_eq!(b["stab_match"], true);
}

#[test]
fn exhaustive_guard() {
    let o = qlnc(&["verify", "--example", "grid", "--width", "12", "--height", "6", "--mode", "constdepth"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("branches"));
}

#[test]
fn seed_env_fixes_samples() {
    let run = |seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_qlnc"))
            .args(["verify", "--example", "grid", "--width", "6", "--height", "4", "--mode", "constdepth"])
            .args(["--branches", "sample", "--samples", "5", "--details", "--oracle", "tableau"])
            .env("QLNC_SEED", seed)
            .output()
            .unwrap();
        assert!(o.status.success());
        json(&o)["branches"].clone()
    };
    assert_eq!(run("7"), run("7"));
    assert_ne!(run("7"), run("8"));
}

#[test]
fn bench_guard_and_determinism() {
    let o = qlnc(&["bench", "--sizes", "64,100000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("memory guard"));

    let counts = || {
        let o = qlnc(&["bench", "--sizes", "64,128", "--reps", "1", "--seed", "3"]);
        assert!(o.status.success());
        let csv = String::from_utf8(o.stdout).unwrap();
        assert!(csv.starts_with("engine,n,N,op_counts,wall_ns"));
        csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect::<Vec<_>>()
    };
    assert_eq!(counts(), counts());
}

#[test]
fn export_formats() {
    let dot = qlnc(&["export", "--example", "butterfly", "--format", "dot"]);
    let text = String::from_utf8(dot.stdout).unwrap();
    assert!(text.starts_with("digraph"));
    assert!(text.contains("shape=box"));
    let js = json(&qlnc(&["export", "--example", "multicast", "-d", "3"]));
    assert_eq!(js["network"]["d"], 3);
    let circ = qlnc(&["compile", "--example", "butterfly", "--format", "dot"]);
    assert!(String::from_utf8(circ.stdout).unwrap().contains("label="));
}

#[test]
fn run_with_forced_outcomes() {
    let path = tmp("sep.json");
    let o = qlnc(&["compile", "--example", "separation", "-o", path.to_str().unwrap()]);
    assert!(o.status.success());
    let r = qlnc(&["run", path.to_str().unwrap(), "--outcomes", "1,0"]);
    assert!(r.status.success());
    let v = json(&r);
    assert_eq!(v["outcomes"]["0"], 1);
    assert_eq!(v["canonical"]["labels"], serde_json::json!([1, 2, 3, 4, 5, 6]));
}

#[test]
fn unknown_example() {
    let o = qlnc(&["compile", "--example", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("known:"));
}

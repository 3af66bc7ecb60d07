use std::path::Path;
use std::process::{Command, Output};

use pqec::channel::Subchannel;
use serde_json::Value;

fn pqec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqec"))
        .args(args)
        .env_remove("PQEC_TOL")
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn construct_then_check_qubit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q");
    let o = pqec(&["construct", "qubit-rank2", "--seed", "7", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = stdout_json(&o);
    let p_construct = summary["p"].as_f64().unwrap();
    assert!(p_construct > 0.0);
    for f in ["channel.json", "scheme.json", "witness.json", "circuit.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    let ch = out.join("channel.json");
    let o = pqec(&["check", "--channel", p(&ch), "--scheme", p(&out.join("scheme.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["passed"], Value::Bool(true));
    assert!((v["p"].as_f64().unwrap() - p_construct).abs() < 1e-12);

    let o = pqec(&["check", "--channel", p(&ch), "--witness", p(&out.join("witness.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["kind"], "witness");
}

#[test]
fn mismatched_scheme_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(pqec(&["construct", "qubit-rank2", "--seed", "1", "--out", p(&a)]).status.code(), Some(0));
    assert_eq!(pqec(&["construct", "qubit-rank2", "--seed", "2", "--out", p(&b)]).status.code(), Some(0));
    let o = pqec(&["check", "--channel", p(&a.join("channel.json")), "--scheme", p(&b.join("scheme.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["passed"], Value::Bool(false));
}

#[test]
fn isometric_witness_goes_to_deterministic_test() {
    let dir = tempfile::tempdir().unwrap();
    let iso = dir.path().join("iso.json");
    let s = serde_json::json!({ "s_star": {
        "rows": 4, "cols": 2,
        "data": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]
    }});
    std::fs::write(&iso, s.to_string()).unwrap();
    let cases = [(Subchannel::identity(4), 0, true), (Subchannel::depolarizing(4, 1.0).unwrap(), 2, false)];
    for (k, (ch, code, passed)) in cases.into_iter().enumerate() {
        let path = dir.path().join(format!("ch{k}.json"));
        std::fs::write(&path, serde_json::to_string(&ch).unwrap()).unwrap();
        let o = pqec(&["check", "--channel", p(&path), "--witness", p(&iso)]);
        let v = stdout_json(&o);
        assert_eq!(v["kind"], "isometric-code");
        assert_eq!(v["passed"], Value::Bool(passed));
        assert_eq!(o.status.code(), Some(code));
    }
}

#[test]
fn schur_precondition_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = pqec(&["construct", "schur", "--dim", "4", "--rank", "4", "--out", p(&dir.path().join("s"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("precondition"));
}

#[test]
fn every_constructor_runs() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["qubit-rank2", "schur", "er-family", "rank-sat-xi", "rank-sat-xi1", "rank-bound-xi", "rank-bound-xi1"] {
        let o = pqec(&["construct", name, "--out", p(&dir.path().join(name))]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout_json(&o)["constructor"], name);
    }
}

#[test]
fn er_family_reports_magic_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let o = pqec(&["construct", "er-family", "--lambda", "0.5", "0.5", "0.5", "0.5", "--out", p(&dir.path().join("e"))]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert!((v["details"]["p0"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["details"]["p1"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["p"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q");
    assert_eq!(pqec(&["construct", "qubit-rank2", "--out", p(&out)]).status.code(), Some(0));
    let (ch, circ) = (out.join("channel.json"), out.join("circuit.json"));
    let args = [
        "simulate",
        "--channel",
        p(&ch),
        "--circuit",
        p(&circ),
        "--shots",
        "20000",
        "--seed",
        "11",
        "--psi",
        "0.6,0,0,-0.8",
    ];
    let a = stdout_json(&pqec(&args));
    let b = stdout_json(&pqec(&args));
    assert_eq!(a, b);
    assert_eq!(a["shots"], 20000);
    let total: u64 = a["branch_counts"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 20000);
    let f = a["accepted_fidelity_mean"].as_f64().unwrap();
    assert!(f > 1.0 - 1e-9);
}

#[test]
fn bench_csv_is_ordered_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let f1 = dir.path().join("a.csv");
    let f2 = dir.path().join("b.csv");
    for f in [&f1, &f2] {
        let o = pqec(&["bench", "--samples", "6", "--seed", "5", "--out", p(f)]);
        assert_eq!(o.status.code(), Some(0));
    }
    let a = std::fs::read_to_string(&f1).unwrap();
    assert_eq!(a, std::fs::read_to_string(&f2).unwrap());
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("sample,constructor,success,p"));
    let samples: Vec<usize> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(samples.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(samples.last(), Some(&5));
}

#[test]
fn tolerance_from_environment_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_pqec")).arg("demo").env("PQEC_TOL", "-3").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(pqec(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(pqec(&["check", "--channel", "/definitely/missing.json", "--scheme", "/x.json"]).status.code(), Some(1));
    assert_eq!(pqec(&["--help"]).status.code(), Some(0));
}

#[test]
fn identity_scheme_passes_with_certainty() {
    let dir = tempfile::tempdir().unwrap();
    let ch = dir.path().join("ch.json");
    let sch = dir.path().join("s.json");
    let id = Subchannel::identity(2);
    std::fs::write(&ch, serde_json::to_string(&id).unwrap()).unwrap();
    let scheme = serde_json::json!({"encoder": id, "recovery": id, "p": 1.0, "residual": 0.0});
    std::fs::write(&sch, scheme.to_string()).unwrap();
    let o = pqec(&["check", "--channel", p(&ch), "--scheme", p(&sch)]);
    assert_eq!(o.status.code(), Some(0));
    assert!((stdout_json(&o)["p"].as_f64().unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn rank_saturating_pair_checks_at_one_third() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("xi");
    assert_eq!(pqec(&["construct", "rank-sat-xi", "--out", p(&out)]).status.code(), Some(0));
    let o = pqec(&["check", "--channel", p(&out.join("channel.json")), "--scheme", p(&out.join("scheme.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!((stdout_json(&o)["p"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-10);
}

#[test]
fn malformed_json_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(pqec(&["check", "--channel", p(&bad), "--scheme", p(&bad)]).status.code(), Some(1));
    // Well-formed JSON describing a non-contraction is a validation error as well.
    std::fs::write(&bad, r#"{"in_dim":1,"out_dim":1,"kraus":[{"rows":1,"cols":1,"data":[[3.0,0.0]]}]}"#).unwrap();
    assert_eq!(pqec(&["check", "--channel", p(&bad), "--scheme", p(&bad)]).status.code(), Some(1));
}

#[test]
fn er_family_metadata_for_n_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = pqec(&["construct", "er-family", "--lambda", "0.25", "0.5", "0.5", "0.5", "--out", p(&dir.path().join("e"))]);
    let v = stdout_json(&o);
    assert!((v["details"]["p0"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    assert!((v["details"]["p1"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn written_artifacts_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    assert_eq!(pqec(&["construct", "schur", "--dim", "6", "--rank", "3", "--seed", "2", "--out", p(&out)]).status.code(), Some(0));
    let ch_text = std::fs::read_to_string(out.join("channel.json")).unwrap();
    let ch: Subchannel = serde_json::from_str(&ch_text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&ch).unwrap().trim_end(), ch_text.trim_end());
    let scheme_text = std::fs::read_to_string(out.join("scheme.json")).unwrap();
    let scheme: pqec::Scheme = serde_json::from_str(&scheme_text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&scheme).unwrap().trim_end(), scheme_text.trim_end());
    let v = scheme.verify(&ch, 1e-9).unwrap();
    assert!(v.passed);
    assert_eq!(v.p, scheme.success_prob);
}

#[test]
fn bench_qubit_code_always_succeeds() {
    let o = pqec(&["bench", "--dim", "4", "--rank", "2", "--samples", "100", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).filter(|l| l.contains(",qubit-rank2,")).collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|l| l.split(',').nth(2) == Some("true")));
}

#[test]
fn bench_schur_at_rank_bound_fails_precondition() {
    let o = pqec(&["bench", "--family", "schur", "--dim", "4", "--rank", "4", "--samples", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.contains(",schur,false,")));
    let o = pqec(&["bench", "--family", "schur", "--dim", "4", "--rank", "3", "--samples", "10"]);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.contains(",schur,true,")));
}

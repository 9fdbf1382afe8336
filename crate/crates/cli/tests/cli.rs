use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn maximin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maximin")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_instance(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn tail_value_prints_tidy() {
    let out = maximin(&["tail", "s", "--n", "2", "--alpha", "1.0"]);
    assert_eq!(stdout(&out).trim(), "0.25");
}

#[test]
fn tail_inverse_round_trips() {
    let alpha: f64 = stdout(&maximin(&["tail", "inv", "--n", "7", "--beta", "0.1"])).trim().parse().unwrap();
    let s: f64 = stdout(&maximin(&["tail", "s", "--n", "7", "--alpha", &alpha.to_string()])).trim().parse().unwrap();
    assert!((s - 0.1).abs() < 1e-10);
}

#[test]
fn tail_check_reports_both_chains() {
    let v: Value = serde_json::from_str(&stdout(&maximin(&["tail", "check", "--n-max", "39"]))).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["greedy_chain"]["holds"], true);
    assert_eq!(v["chain"]["holds"], false);
}

#[test]
fn exact_solve_on_the_ball() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(dir.path(), "one.json", r#"{"dim":2,"geometry":"ball","points":[[1.0,0.0]]}"#);
    let v: Value = serde_json::from_str(&stdout(&maximin(&["solve", &path, "--exact"]))).unwrap();
    assert!((v["value"].as_f64().unwrap() - 4.0).abs() < 1e-9);
    let x: Vec<f64> = serde_json::from_value(v["x"].clone()).unwrap();
    assert!((x[0] + 1.0).abs() < 1e-9 && x[1].abs() < 1e-9);
}

#[test]
fn exact_solve_reports_inapplicable_instances() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(dir.path(), "line.json", r#"{"dim":1,"geometry":"ball","points":[[1.0],[-1.0]]}"#);
    let out = maximin(&["solve", &path, "--exact"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exact method not applicable"));
    let v: Value = serde_json::from_str(&stdout(&maximin(&["solve", &path, "--oracle", "--budget", "2000"]))).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["relaxation_bound"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn solve_needs_a_method() {
    let out = maximin(&["solve", "missing.json"]);
    assert!(!out.status.success());
    assert!(!maximin(&["solve", "missing.json", "--exact", "--oracle"]).status.success());
}

#[test]
fn unknown_flags_are_rejected() {
    let out = maximin(&["tail", "s", "--n", "2", "--alpha", "1", "--frobnicate"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--frobnicate"));
}

#[test]
fn relax_emits_the_lift() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(
        dir.path(),
        "three.json",
        r#"{"dim":2,"geometry":"ball","points":[[1.0,2.0],[2.0,3.0],[1.0,5.0]]}"#,
    );
    let v: Value = serde_json::from_str(&stdout(&maximin(&["relax", &path, "--lift"]))).unwrap();
    let zeta = v["zeta_star"].as_f64().unwrap();
    assert!((zeta - 10.4721).abs() < 1e-4, "{zeta}");
    assert_eq!(v["lift"].as_array().unwrap().len(), 3);
    assert!((v["lift"][2][2].as_f64().unwrap() * zeta - 1.0).abs() < 1e-12);
    assert!((v["gamma1"].as_f64().unwrap() - 0.8).abs() < 1e-4);
}

#[test]
fn approx_writes_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let ball = write_instance(
        dir.path(),
        "ball.json",
        r#"{"dim":3,"geometry":"ball","points":[[0.1,0.5,-0.3],[0.9,-0.2,0.4],[-0.6,0.3,0.8],[0.2,-0.9,0.1]]}"#,
    );
    let boxed = write_instance(
        dir.path(),
        "box.json",
        r#"{"dim":3,"geometry":"box","points":[[0.1,0.5,-0.3],[0.9,-0.2,0.4]]}"#,
    );
    let csv_path = dir.path().join("runs.csv");
    for (inst, algo) in [(&ball, "ball"), (&ball, "general"), (&boxed, "box"), (&boxed, "general")] {
        stdout(&maximin(&["approx", inst, "--algo", algo, "--runs", "5", "--seed", "3", "--out", csv_path.to_str().unwrap()]));
        let text = fs::read_to_string(&csv_path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "run,f_value,alpha,bound_r,refined_bound,draws");
        let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
        assert_eq!(rows.len(), 5, "{algo}");
        for r in &rows {
            assert!(r[1] >= 0.0 && r[5] >= 1.0);
        }
    }
    assert!(!maximin(&["approx", &boxed, "--algo", "ball"]).status.success());
}

#[test]
fn bench_is_deterministic_with_golden_header() {
    let args = ["bench", "--n", "3", "--m", "4..6", "--runs", "3", "--seed", "11", "--budget", "2000"];
    let a = stdout(&maximin(&args));
    let b = stdout(&maximin(&args));
    assert_eq!(a, b);
    let golden = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/bench_header.csv")).unwrap();
    assert_eq!(a.lines().next().unwrap(), golden.trim_end());
    assert_eq!(a.lines().count(), 4);
    let md = stdout(&maximin(&["bench", "--n", "3", "--m", "4", "--runs", "2", "--budget", "500", "--format", "md"]));
    assert_eq!(md.lines().count(), 3);
    assert!(!maximin(&["bench", "--m", "9..4"]).status.success());
}

#[test]
fn hardness_gen_writes_instance_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.json");
    let printed = stdout(&maximin(&["hardness-gen", "--a", "1,1,1,1,2", "--out", out.to_str().unwrap()]));
    let report_path = printed.trim();
    assert!(report_path.ends_with("h.report.json"));
    let report: Value = serde_json::from_str(&fs::read_to_string(report_path).unwrap()).unwrap();
    assert_eq!(report["identities"]["partition_feasible"], true);
    let inst: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(inst["dim"], 5);
    assert_eq!(inst["points"].as_array().unwrap().len(), 10);
    assert!(!maximin(&["hardness-gen", "--a", "1,0,2", "--out", out.to_str().unwrap()]).status.success());
}

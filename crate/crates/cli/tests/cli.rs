use std::process::{Command, Output};

use extparabola::extension::{build, ConstructionParams};
use extparabola::polytope::HPolytope;
use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extparabola"))
        .args(args)
        .output()
        .expect("cli runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn ine_round_trips_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["build", "--d", "6", "--format", "ine", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("Q_6: 12 facets, 64 vertices"));
    let text = std::fs::read_to_string(dir.path().join("q_n24_d6.ine")).unwrap();
    let back = HPolytope::from_cdd(&text).unwrap();
    let ext = build(ConstructionParams::new(24, 6).unwrap()).unwrap();
    assert_eq!(&back, ext.q());
    assert_eq!(back.to_cdd(), text);
    assert!(!dir.path().join("q_n24_d6.ext").exists());
}

#[test]
fn base_case_build() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["build", "--d", "2", "--n", "8", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("q_n8_d2.ine")).unwrap();
    assert_eq!(HPolytope::from_cdd(&text).unwrap().num_facets(), 4);
    let sidecar: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("q_n8_d2.json")).unwrap()).unwrap();
    assert_eq!(sidecar["M"], 4);
    assert_eq!(sidecar["base"], serde_json::json!(["0", "1/3", "2/3", "1"]));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cli(&["build", "--d", "3"]).status.code(), Some(2));
    assert_eq!(cli(&["run", "--d", "4", "--rule", "nosuch"]).status.code(), Some(2));
    let refused = cli(&["scan", "--M", "100000"]);
    assert_eq!(refused.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("cap"));
    assert_eq!(cli(&["report", "--d", "4", "--seeds", "5..1"]).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn random_rule_retraces_the_first_rule() {
    let dir = tempfile::tempdir().unwrap();
    let read = |rule: &str, seed: &str| {
        let sub = dir.path().join(format!("{rule}{seed}"));
        let out = cli(&["run", "--d", "4", "--rule", rule, "--seed", seed, "--out", sub.to_str().unwrap()]);
        assert!(stdout(&out).contains("visited 16 vertices in 15 moves"));
        let trace: Value = serde_json::from_str(&std::fs::read_to_string(sub.join("trace.json")).unwrap()).unwrap();
        let csv = std::fs::read_to_string(sub.join("trace.csv")).unwrap();
        (trace["steps"].clone(), csv)
    };
    let (first, first_csv) = read("first", "0");
    for (rule, seed) in [("random", "7"), ("last", "0"), ("adversarial", "3")] {
        let (steps, csv) = read(rule, seed);
        assert_eq!(steps, first, "{rule}");
        assert_eq!(csv, first_csv);
    }
    assert_eq!(first_csv.lines().nth(16), Some("15,1,0,0.1"));
}

#[test]
fn iteration_cap_is_a_failure() {
    let out = cli(&["run", "--d", "4", "--max-iter", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("visited 4 vertices in 3 moves"));
}

#[test]
fn scan_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.json");
    let out = cli(&["scan", "--M", "16", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "0 violations / 240 pairs");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(report["M"], 16);
    assert_eq!(report["optimal_checks"], 15);
}

#[test]
fn verify_reports_json() {
    let out = cli(&["verify", "--d", "8"]);
    assert!(out.status.success());
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["construction"]["vertices"], 256);
    assert_eq!(report["levels"].as_array().unwrap().len(), 3);

    let bad = cli(&["verify", "--d", "4", "--inject-fault", "phi-prime"]);
    assert_eq!(bad.status.code(), Some(1));
    let report: Value = serde_json::from_str(&stdout(&bad)).unwrap();
    let failed: Vec<&str> = report["construction"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, vec!["parabola_identity"]);
}

#[test]
fn report_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&[
        "report", "--d", "4,6,8", "--rules", "first,last,random", "--seeds", "1..5", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,d,rule,seed,vertices_visited,edge_moves,loop_iterations,wall_time_ms"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3 * 7);
    for row in &rows {
        let d: u32 = row[1].parse().unwrap();
        assert_eq!(row[4], (1u64 << d).to_string());
    }
    let csv = std::fs::read_to_string(dir.path().join("experiment_d6.csv")).unwrap();
    assert!(csv.starts_with("rule,seed,vertices_visited,edge_moves,loop_iterations,wall_time_ms\n"));
    assert!(csv.contains("\nrandom,5,64,63,63,"));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("experiment.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 3);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rgsim::cli::{SWEEP_HEADER, TRACE_HEADER};

const SWEEP_GOLDEN_HEADER: &str = "mechanism,n,wba,deviator_pc,seed,correct_rounds,cum_master_utility,cum_follower_utility,detection_round,convergence_round,warnings\n";

fn rgsim(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rgsim"))
        .args(args)
        .output()
        .unwrap();
    let text =
        String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    rgsim(&args)
}

#[test]
fn headers_are_fixed() {
    assert_eq!(SWEEP_HEADER.join(",") + "\n", SWEEP_GOLDEN_HEADER);
    assert_eq!(
        TRACE_HEADER.join(","),
        "round,verified,f_count,majority_cheats,master_correct,master_payoff,mean_follower_payoff,punishment_active"
    );
}

#[test]
fn analyze_reports_reference_floors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{}");
    let (code, text) = run("analyze", &cfg, dir.path(), &[]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("EMPTY"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("analysis.json")).unwrap())
            .unwrap();
    let floor = json["mixed_floors"]["value"]["pv_floor_deterrence"]
        .as_f64()
        .unwrap();
    assert!((floor - 1.0 / 6.0).abs() < 1e-12);
    assert_eq!(json["pv_mixed_feasible"], true);
    assert_eq!(json["delta_table"]["value"]["guaranteed_range_empty"], true);

    let (code, _) = run("analyze", &cfg, dir.path(), &["--strict"]);
    assert_eq!(code, 3);
}

#[test]
fn analyze_flags_premise_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"analysis": {"wba": 0.1, "wct": 0.1}}"#);
    let (code, text) = run("analyze", &cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(text.contains("wba > wct"), "{text}");
}

#[test]
fn simulate_compliant_pure_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"scenario": {"n": 9, "wba": 1.0, "deviator_pc": 1.0, "deviator_count": 0,
            "rounds": 100, "seed": 3, "mechanism": {"kind": "rg_pure"}}}"#,
    );
    let (code, text) = run("simulate", &cfg, dir.path(), &["--trace"]);
    assert_eq!(code, 0, "{text}");
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), TRACE_HEADER.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.split(',').nth(4) == Some("true")));
    assert!(!csv.contains('\r'));
}

#[test]
fn simulate_without_trace_writes_only_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        r#"{"scenario": {"n": 27, "wba": 1.0, "deviator_pc": 1.0, "seed": 8, "mechanism": {"kind": "rg_mixed"}}}"#,
    );
    let (code, text) = run("simulate", &cfg, &out, &[]);
    assert_eq!(code, 0, "{text}");
    let files: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(files, vec!["metrics.json"]);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(json["detection_round"], 6);
}

#[test]
fn sweep_n9_grid_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"sweep": {"n_values": [9], "seeds": [5]}}"#);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run("sweep", &cfg, &a, &["--threads", "4"]).0, 0);
    assert_eq!(run("sweep", &cfg, &b, &["--threads", "1"]).0, 0);
    let csv_a = fs::read(a.join("sweep.csv")).unwrap();
    let csv_b = fs::read(b.join("sweep.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.starts_with(SWEEP_GOLDEN_HEADER));
    assert_eq!(text.lines().count(), 1 + 198);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    let bad = write_config(dir.path(), r#"{"unknown_key": 1}"#);
    assert_eq!(run("analyze", &bad, dir.path(), &[]).0, 2);
    let missing = dir.path().join("nope.json");
    assert_eq!(run("analyze", &missing, dir.path(), &[]).0, 2);
    let no_scenario = write_config(dir.path(), "{}");
    assert_eq!(run("simulate", &no_scenario, dir.path(), &[]).0, 2);

    let n9 = write_config(
        dir.path(),
        r#"{"scenario": {"n": 9, "wba": 1.0, "deviator_pc": 1.0, "mechanism": {"kind": "rg_mixed"}}}"#,
    );
    assert_eq!(run("simulate", &n9, dir.path(), &["--strict"]).0, 3);

    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    assert_eq!(run("simulate", &n9, &blocker.join("sub"), &[]).0, 4);
}

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SURVEILLANCE: &str = r#"{
  "units": { "rate": "req/ms", "delay": "ms", "load": "cap*ms/req" },
  "vms": [
    { "id": "m-face", "max_capability": 9.15, "fixed_cost": 1, "proportional_cost": 1 },
    { "id": "m-transcode", "max_capability": 5, "fixed_cost": 1, "proportional_cost": 1 },
    { "id": "m-motion", "max_capability": 5, "fixed_cost": 1, "proportional_cost": 1 }
  ],
  "vnfs": [
    { "id": "face", "load_coefficient": 1 },
    { "id": "transcode", "load_coefficient": 1 },
    { "id": "motion", "load_coefficient": 1 }
  ],
  "services": [
    { "id": "s1", "arrival_rates": { "face": 2, "transcode": 2, "motion": 2 }, "max_delay": 1.1 },
    { "id": "s2", "arrival_rates": { "transcode": 1, "motion": 1 }, "max_delay": 1.1 }
  ],
  "priority_scheme": "per-vnf"
}"#;

/// Both services deployed at full capability, s1 first at transcoding and s2 first at motion detection.
const SURVEILLANCE_STATE: &str = r#"{
  "placement": { "m-face": "face", "m-transcode": "transcode", "m-motion": "motion" },
  "usage": [
    { "service": "s1", "vnf": "face", "vm": "m-face" },
    { "service": "s1", "vnf": "transcode", "vm": "m-transcode" },
    { "service": "s1", "vnf": "motion", "vm": "m-motion" },
    { "service": "s2", "vnf": "transcode", "vm": "m-transcode" },
    { "service": "s2", "vnf": "motion", "vm": "m-motion" }
  ],
  "capabilities": { "m-face": 9.15, "m-transcode": 5, "m-motion": 5 },
  "priorities": {
    "scheme": "per-vnf",
    "values": [
      { "service": "s1", "vnf": "face", "value": 1 },
      { "service": "s1", "vnf": "transcode", "value": 2 },
      { "service": "s2", "vnf": "transcode", "value": 1 },
      { "service": "s1", "vnf": "motion", "value": 1 },
      { "service": "s2", "vnf": "motion", "value": 2 }
    ]
  },
  "cost": 22.15
}"#;

fn flexshare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexshare")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {line}"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn synthetic_per_request_deploy_admits_everything() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = flexshare(&["deploy", "--generate", "synthetic", "--scheme", "per-request", "--out", out_dir]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["admitted"].as_array().unwrap().len(), 3);
    assert!(summary["rejected"].as_array().unwrap().is_empty());

    let state: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("state.json")).unwrap()).unwrap();
    assert_eq!(state["priorities"]["scheme"], "per-request");
    let trace = std::fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    let records: Vec<serde_json::Value> = trace.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(records.len() >= 3);
    assert_eq!(records.iter().filter(|r| r["outcome"] == "admitted").count(), 3);
}

#[test]
fn malformed_scenario_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "bad.json", "{ \"vms\": [");
    let out = flexshare(&["deploy", "--scenario", &path]);
    assert_eq!(code(&out), 2);
    let err = stderr_json(&out);
    assert_eq!(err["error"], "parse");
    assert!(err["message"].as_str().unwrap().contains("line"));
}

#[test]
fn jitter_needs_per_request_priorities() {
    let out = flexshare(&["deploy", "--generate", "synthetic", "--scheme", "per-vnf", "--jitter", "2"]);
    assert_eq!(code(&out), 2);
    assert_eq!(stderr_json(&out)["error"], "usage");
}

#[test]
fn rejection_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "surveillance.json", SURVEILLANCE);
    let out = flexshare(&["deploy", "--scenario", &path, "--scheme", "per-service", "--fail-fast"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stderr_json(&out)["error"], "rejected");
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["rejected"], serde_json::json!(["s2"]));
}

#[test]
fn exhaustive_search_admits_both_surveillance_services() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "surveillance.json", SURVEILLANCE);
    let out = flexshare(&["deploy", "--scenario", &path, "--brute"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((summary["total_cost"].as_f64().unwrap() - 22.0588235).abs() < 1e-5);
}

#[test]
fn compare_csv_has_the_frozen_header_and_one_row_per_cell() {
    let out = flexshare(&["compare", "--generate", "synthetic", "--n-range", "1,1.4,1.8", "--schemes", "per-service,per-vnf,per-request"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,n,scheme,total_cost,shared_services_mean,mu_used_sum,c_max_sum,admissions_ok"
    );
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 9);
    for n in ["1.0", "1.4", "1.8"] {
        let cost = |scheme: &str| -> f64 {
            rows.iter().find(|r| r[1] == n && r[2] == scheme).unwrap()[3].parse().unwrap()
        };
        assert!(cost("per-service") >= cost("per-vnf") - 1e-9, "n={n}");
        assert!(cost("per-vnf") >= cost("per-request") - 1e-9, "n={n}");
    }
}

#[test]
fn compare_is_deterministic_for_a_seed() {
    let args = ["compare", "--generate", "synthetic", "--seed", "9", "--n-range", "1.0:1.4:0.2", "--schemes", "per-vnf,vnf-brute"];
    let a = flexshare(&args);
    let b = flexshare(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn compare_without_schemes_is_a_usage_error() {
    let out = flexshare(&["compare", "--generate", "synthetic", "--schemes", ""]);
    assert_eq!(code(&out), 2);
}

#[test]
fn realistic_schemes_converge_at_double_traffic() {
    let out = flexshare(&["compare", "--generate", "realistic", "--vms", "16", "--n-range", "2", "--schemes", "per-service,per-vnf,per-request"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let costs: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    let (lo, hi) = costs.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    assert!((hi - lo) / lo < 1e-3, "{costs:?}");
}

#[test]
fn surveillance_state_validates_within_two_percent() {
    let dir = TempDir::new().unwrap();
    let scenario = write(dir.path(), "surveillance.json", SURVEILLANCE);
    let state = write(dir.path(), "state.json", SURVEILLANCE_STATE);
    let out = flexshare(&["validate", "--scenario", &scenario, "--state", &state, "--completions", "1000000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "service,vnf,simulated_s,analytic_s,relative_deviation,flagged");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 7);
    for row in rows {
        let relative: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert!(relative < 0.02, "{row}");
        assert!(row.ends_with("false"));
    }
}

#[test]
fn overloaded_state_reports_the_unstable_vm() {
    let dir = TempDir::new().unwrap();
    let scenario = write(dir.path(), "surveillance.json", SURVEILLANCE);
    let overloaded = SURVEILLANCE_STATE.replace("\"m-motion\": 5 }", "\"m-motion\": 2.5 }");
    let state = write(dir.path(), "state.json", &overloaded);
    let out = flexshare(&["validate", "--scenario", &scenario, "--state", &state, "--completions", "10000"]);
    assert_eq!(code(&out), 3);
    let err = stderr_json(&out);
    assert_eq!(err["error"], "unstable");
    assert!(err["message"].as_str().unwrap().contains("m-motion"));
}

#[test]
fn too_few_completions_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let scenario = write(dir.path(), "surveillance.json", SURVEILLANCE);
    let state = write(dir.path(), "state.json", SURVEILLANCE_STATE);
    let out = flexshare(&["validate", "--scenario", &scenario, "--state", &state, "--completions", "9999"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn generated_scenario_reloads() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("realistic.json");
    let path = path.to_str().unwrap();
    let out = flexshare(&["generate", "--generate", "realistic", "--vms", "16", "--avg-factor", "paper", "--out", path]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = flexshare(&["deploy", "--scenario", path, "--n", "0.5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

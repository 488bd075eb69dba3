use std::path::Path;

use serde_json::json;

mod common;
use common::*;

fn toy_config(setups: serde_json::Value, mc_samples: usize) -> serde_json::Value {
    json!({
        "simulation": { "kind": "toy" },
        "setups": setups,
        "monte_carlo": { "samples": mc_samples, "seed": 3 }
    })
}

fn small_setups() -> serde_json::Value {
    json!([
        { "name": "s1", "algorithm": "ours", "samples": 16, "grid_edges": 3, "weights": { "s": 1, "o": 0, "r": 1 }, "seed": 1 },
        { "name": "s5", "algorithm": "grid", "samples": 25, "grid_edges": 5 }
    ])
}

fn explore(dir: &Path, config: &serde_json::Value) -> std::process::Output {
    let path = write_config(dir, "run.json", config);
    odex(&["--out-dir", dir.to_str().unwrap(), "explore", "--config", path.to_str().unwrap()])
}

#[test]
fn explore_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = explore(dir.path(), &toy_config(small_setups(), 2000));
    assert!(out.status.success(), "{}", stderr(&out));
    for name in ["s1", "s5"] {
        for ext in ["points.csv", "trace.jsonl", "report.json"] {
            assert!(dir.path().join(format!("{name}.{ext}")).exists(), "{name}.{ext}");
        }
        assert!(!dir.path().join(format!("{name}.models.json")).exists());
    }
    let s1 = read_json(&dir.path().join("s1.report.json"));
    let c = &s1["characteristics"];
    assert_eq!(c["n"], 16);
    assert_eq!(c["algorithm"], "ours");
    let total = c["R"]["value"].as_f64().unwrap() + c["r_fp"]["value"].as_f64().unwrap() + c["r_fn"]["value"].as_f64().unwrap();
    assert_eq!(total, 1.0);
    let trace = std::fs::read_to_string(dir.path().join("s1.trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 7);

    let s5 = read_json(&dir.path().join("s5.report.json"));
    assert_eq!(s5["characteristics"]["t_best"], 1.0);
    assert_eq!(s5["characteristics"]["t_worst"], -1.0);
    assert_eq!(std::fs::read_to_string(dir.path().join("s5.trace.jsonl")).unwrap(), "");
}

#[test]
fn dump_models_flag_writes_models() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "run.json", &toy_config(small_setups(), 500));
    let out = odex(&["explore", "--config", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap(), "--dump-models"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let models = read_json(&dir.path().join("s1.models.json"));
    assert!(models["support_vectors"].as_u64().unwrap() > 0);
    assert!(models["cv"].is_object() || models["cv"].is_null());
}

#[test]
fn empty_setup_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = explore(dir.path(), &toy_config(json!([]), 100));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("setups"));
}

#[test]
fn unknown_algorithm_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let setups = json!([{ "name": "a", "algorithm": "simplex", "samples": 16, "grid_edges": 3 }]);
    let out = explore(dir.path(), &toy_config(setups, 100));
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("setups[0].algorithm"), "{err}");
    assert!(err.contains("simplex"), "{err}");
}

#[test]
fn malformed_json_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{ \"simulation\": ").unwrap();
    let out = odex(&["explore", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = odex(&["explore", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_round_trip_matches_explore() {
    let dir = tempfile::tempdir().unwrap();
    let out = explore(dir.path(), &toy_config(small_setups(), 2000));
    assert!(out.status.success(), "{}", stderr(&out));
    let rep_dir = dir.path().join("again");
    let points = dir.path().join("s1.points.csv");
    let out = odex(&[
        "report",
        "--points",
        points.to_str().unwrap(),
        "--sim",
        "toy",
        "--mc-n",
        "2000",
        "--seed",
        "3",
        "--out-dir",
        rep_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let a = read_json(&dir.path().join("s1.report.json"))["characteristics"].clone();
    let b = read_json(&rep_dir.join("s1.report.json"))["characteristics"].clone();
    assert_eq!(a["sigma"], b["sigma"]);
    assert_eq!(a["t_best"], b["t_best"]);
    assert_eq!(a["R"], b["R"]);
    assert_eq!(b["algorithm"], serde_json::Value::Null);
}

#[test]
fn report_mc_override_only_touches_mc_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = explore(dir.path(), &toy_config(small_setups(), 2000));
    assert!(out.status.success(), "{}", stderr(&out));
    let points = dir.path().join("s1.points.csv");
    let run = |mc: &str, sub: &str| {
        let d = dir.path().join(sub);
        let out = odex(&["report", "--points", points.to_str().unwrap(), "--mc-n", mc, "--seed", "3", "--out-dir", d.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
        read_json(&d.join("s1.report.json"))["characteristics"].clone()
    };
    let a = run("2000", "a");
    let b = run("500", "b");
    for key in ["n", "valid", "invalid", "sigma", "alpha", "t_best", "t_worst", "fallback_classifier", "hyperparameters"] {
        assert_eq!(a[key], b[key], "{key}");
    }
    assert_eq!(a["R"]["samples"], 2000);
    assert_eq!(b["R"]["samples"], 500);
}

#[test]
fn report_flags_single_class_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("valid.points.csv");
    std::fs::write(&csv, "x1,x2,outcome,target,iteration\n0.5,0.5,valid,0.5,0\n1,1,valid,1,1\n-0.5,-0.2,valid,-0.5,2\n").unwrap();
    let out = odex(&["report", "--points", csv.to_str().unwrap(), "--mc-n", "200", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rep = read_json(&dir.path().join("valid.report.json"));
    assert_eq!(rep["name"], "valid");
    assert_eq!(rep["characteristics"]["fallback_classifier"], true);
}

#[test]
fn report_rejects_malformed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "x1,x2,outcome,target,iteration\n0.5,oops,valid,1,0\n").unwrap();
    let out = odex(&["report", "--points", csv.to_str().unwrap(), "--mc-n", "100"]);
    assert_eq!(out.status.code(), Some(2));
    let out = odex(&["report", "--points", csv.to_str().unwrap(), "--sim", "chemistry"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn benchmark_rows_and_reference() {
    let dir = tempfile::tempdir().unwrap();
    let setups = json!([
        { "name": "ours", "algorithm": "ours", "samples": 20, "grid_edges": 4, "weights": { "s": 2, "o": 0, "r": 1 } },
        { "name": "kb", "algorithm": "kriging-binary", "samples": 20, "grid_edges": 4 },
        { "name": "kc", "algorithm": "kriging-continuous", "samples": 20, "grid_edges": 4 }
    ]);
    let path = write_config(dir.path(), "bench.json", &toy_config(setups, 1000));
    let d = dir.path().to_str().unwrap();
    let out = odex(&["--out-dir", d, "benchmark", "--config", path.to_str().unwrap(), "--n-start", "20", "--n-end", "26", "--n-step", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("benchmark.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    // header, reference, 3 setups x n in {20, 23, 26}
    assert_eq!(lines.len(), 1 + 1 + 9, "{csv}");
    assert!(lines[0].starts_with("setup,algorithm,n,R"));
    assert!(lines[1].starts_with("reference"));
    assert!(dir.path().join("kc_23.points.csv").exists());

    let single = dir.path().join("single");
    let out = odex(&[
        "--out-dir",
        single.to_str().unwrap(),
        "benchmark",
        "--config",
        path.to_str().unwrap(),
        "--n-start",
        "22",
        "--n-end",
        "22",
        "--prefix-mode",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(single.join("benchmark.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 1 + 3);
}

#[test]
fn benchmark_rejects_range_below_grid() {
    let dir = tempfile::tempdir().unwrap();
    let setups = json!([{ "name": "kb", "algorithm": "kriging-binary", "samples": 20, "grid_edges": 4 }]);
    let path = write_config(dir.path(), "bench.json", &toy_config(setups, 100));
    let out = odex(&["benchmark", "--config", path.to_str().unwrap(), "--n-start", "10", "--n-end", "20", "--n-step", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--n-start"));
}

#[test]
fn external_four_dimensional_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "simulation": { "kind": "external", "command": ["python3", fixture("fake4d.py")] },
        "space": { "lower": [-1, -1, -1, -1], "upper": [1, 1, 1, 1] },
        "setups": [
            { "name": "ext", "algorithm": "ours", "samples": 24, "grid_edges": 2, "weights": { "s": 1, "o": 1, "r": 1 }, "seed": 5 },
            { "name": "ext-lhs", "algorithm": "lhs", "samples": 24 }
        ],
        "monte_carlo": { "samples": 1000, "seed": 1 }
    });
    let out = explore(dir.path(), &config);
    assert!(out.status.success(), "{}", stderr(&out));
    let rep = read_json(&dir.path().join("ext.report.json"))["characteristics"].clone();
    assert_eq!(rep["n"], 24);
    assert!(rep["valid"].as_u64().unwrap() > 0);
    assert!(rep["invalid"].as_u64().unwrap() > 0);
    let csv = std::fs::read_to_string(dir.path().join("ext.points.csv")).unwrap();
    assert!(csv.starts_with("x1,x2,x3,x4,"), "{csv}");
    assert_eq!(csv.lines().count(), 25);

    let path = dir.path().join("run.json");
    let again = dir.path().join("again");
    let out = odex(&[
        "report",
        "--points",
        dir.path().join("ext.points.csv").to_str().unwrap(),
        "--sim",
        "external",
        "--config",
        path.to_str().unwrap(),
        "--mc-n",
        "1000",
        "--seed",
        "1",
        "--out-dir",
        again.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let back = read_json(&again.join("ext.report.json"))["characteristics"].clone();
    assert_eq!(back["sigma"], rep["sigma"]);
    assert_eq!(back["t_best"], rep["t_best"]);
    assert_eq!(back["R"], rep["R"]);
}

#[test]
fn simulator_failure_exits_three_and_keeps_partial_points() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("dies.py");
    std::fs::write(
        &script,
        "import sys\nfor i, line in enumerate(sys.stdin):\n    if i == 6:\n        sys.exit(1)\n    print('valid 0.0' if i % 2 else 'invalid', flush=True)\n",
    )
    .unwrap();
    let config = json!({
        "simulation": { "kind": "external", "command": ["python3", script.to_str().unwrap()] },
        "space": { "lower": [0, 0], "upper": [1, 1] },
        "setups": [{ "name": "dies", "algorithm": "lhs", "samples": 10 }],
        "monte_carlo": { "samples": 100 }
    });
    let out = explore(dir.path(), &config);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("dies.points.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);

    let config = json!({
        "simulation": { "kind": "external", "command": ["/nonexistent/simulator"] },
        "space": { "lower": [0, 0], "upper": [1, 1] },
        "setups": [{ "name": "x", "algorithm": "lhs", "samples": 10 }]
    });
    let out = explore(dir.path(), &config);
    assert_eq!(out.status.code(), Some(3));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: [&str; 6] = [
    "--steps",
    "60",
    "--set",
    "users.n_users=12",
    "--set",
    "users.catalog_size=10",
];

fn digeco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_digeco"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file))
        .unwrap_or_else(|e| panic!("{}: {e}", dir.join(file).display()))
}

fn tree(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn validate_default_config() {
    let out = digeco(&["validate"]);
    assert!(out.status.success());
    let cfg: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["steps"], 1000);
    assert_eq!(cfg["users"]["n_users"], 100);
}

#[test]
fn config_errors_exit_one_and_name_the_key() {
    let out = digeco(&["validate", "--set", "evolution.bogus=3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("evolution.bogus"));

    let out = digeco(&["validate", "--set", "network.eta=7"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("network.eta"));
}

#[test]
fn config_file_is_read_and_unknown_fields_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, r#"{"seed": 9, "network": {"eta": 0.25}}"#).unwrap();
    let out = digeco(&["validate", "--config", good.to_str().unwrap()]);
    assert!(out.status.success());
    let cfg: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["seed"], 9);
    assert_eq!(cfg["network"]["eta"], 0.25);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"network": {"etta": 0.25}}"#).unwrap();
    let out = digeco(&["validate", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("etta"));

    let out = digeco(&[
        "validate",
        "--config",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_is_reproducible_and_embeds_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let mut args = vec!["run", "--seed", "42", "--out", d.path().to_str().unwrap()];
        args.extend(SMALL);
        assert!(digeco(&args).status.success());
    }
    let (ta, tb) = (tree(&a.path().join("run")), tree(&b.path().join("run")));
    let names: Vec<_> = ta.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "attr_hist.csv",
            "report.json",
            "size_hist.csv",
            "topology.csv"
        ]
    );
    assert_eq!(ta, tb);

    let report: Value = serde_json::from_str(&read(&a.path().join("run"), "report.json")).unwrap();
    assert_eq!(report["config"]["seed"], 42);
    assert_eq!(report["config"]["users"]["n_users"], 12);
    assert!(report["tool_version"]
        .as_str()
        .unwrap()
        .starts_with("digeco-core"));
    assert!(read(&a.path().join("run"), "topology.csv")
        .starts_with("source_id,dest_id,p,successes,failures\n"));
    assert!(read(&a.path().join("run"), "size_hist.csv").starts_with("bin,observed,expected\n"));
}

#[test]
fn experiment_output_independent_of_parallelism() {
    let serial = tempfile::tempdir().unwrap();
    let parallel = tempfile::tempdir().unwrap();
    for (d, workers) in [(&serial, "1"), (&parallel, "3")] {
        let mut args = vec![
            "experiment",
            "--scenario",
            "modularity_gaussian",
            "--runs",
            "4",
            "--seed",
            "5",
            "--parallel",
            workers,
            "--set",
            "measurement.steps=[30,60]",
            "--out",
            d.path().to_str().unwrap(),
        ];
        args.extend(SMALL);
        let out = digeco(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let dir = serial.path().join("modularity_gaussian");
    let files = tree(&dir);
    assert_eq!(files, tree(&parallel.path().join("modularity_gaussian")));
    assert!(files.iter().any(|(n, _)| n == "attr_hist_30.csv"));

    let report: Value = serde_json::from_str(&read(&dir, "report.json")).unwrap();
    assert_eq!(report["completed_runs"], 4);
    assert_eq!(
        report["config"]["base"]["users"]["modularity_dist"]["kind"],
        "gaussian"
    );
    assert_eq!(report["checkpoints"].as_array().unwrap().len(), 2);
}

#[test]
fn paper_suite_writes_six_reports_with_expected_dof() {
    let out_dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "paper-suite",
        "--runs",
        "2",
        "--out",
        out_dir.path().to_str().unwrap(),
    ];
    args.extend(SMALL);
    let out = digeco(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    for (name, dof) in [
        ("length_uniform", 16),
        ("length_gaussian", 16),
        ("length_power_law", 16),
        ("modularity_uniform", 10),
        ("modularity_gaussian", 10),
        ("modularity_power_law", 10),
    ] {
        let dir = out_dir.path().join(name);
        let report: Value = serde_json::from_str(&read(&dir, "report.json")).unwrap();
        let last = report["checkpoints"]
            .as_array()
            .unwrap()
            .last()
            .unwrap()
            .clone();
        let prop = if dof == 16 { "size" } else { "attributes" };
        assert_eq!(last[prop]["chi_squared"]["dof"], dof, "{name}");
        for f in ["size_hist.csv", "attr_hist.csv", "topology.csv"] {
            assert!(dir.join(f).is_file(), "{name}/{f}");
        }
    }
    let summary = read(out_dir.path(), "summary.csv");
    assert_eq!(summary.lines().count(), 7);
    assert!(summary.starts_with("scenario,property,dof,chi_squared"));
}

#[test]
fn unknown_scenario_is_rejected() {
    let out = digeco(&["experiment", "--scenario", "nope", "--runs", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("length_uniform"));
}

#[test]
fn topology_report_lists_every_connection() {
    let d = tempfile::tempdir().unwrap();
    let mut args = vec!["topology-report", "--out", d.path().to_str().unwrap()];
    args.extend(SMALL);
    assert!(digeco(&args).status.success());
    let dir = d.path().join("topology");
    let csv = read(&dir, "topology.csv");
    assert_eq!(csv.lines().count(), 1 + 12 * 11);
    let report: Value = serde_json::from_str(&read(&dir, "report.json")).unwrap();
    assert_eq!(report["connections"], 132);
}

use rmsdyn_core::scenarios::{case_catalog, catalog_case, metrics, monitored_device};
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn rmsdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmsdyn"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Dotted paths of every leaf where `a` and `b` differ.
fn diff(a: &Value, b: &Value, prefix: &str, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for k in x.keys().chain(y.keys().filter(|k| !x.contains_key(*k))) {
                let p = format!("{prefix}{k}.");
                diff(
                    x.get(k).unwrap_or(&Value::Null),
                    y.get(k).unwrap_or(&Value::Null),
                    &p,
                    out,
                );
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                diff(u, v, &format!("{prefix}{i}."), out);
            }
        }
        _ if a != b => out.push(prefix.trim_end_matches('.').to_string()),
        _ => {}
    }
}

#[test]
fn list_prints_every_catalog_case() {
    let o = rmsdyn(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<String> = stdout(&o)
        .lines()
        .map(|l| l.split_whitespace().next().unwrap().to_string())
        .collect();
    let want: Vec<String> = case_catalog().into_iter().map(|s| s.name).collect();
    assert_eq!(names, want);
}

#[test]
fn base_case_runs_unstable_and_metrics_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = rmsdyn(&[
        "run",
        "--scenario",
        "GFL13-noSynCo",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("unstable"));
    assert!(out.join("GFL13-noSynCo.csv").is_file());
    let m = read_json(&out.join("GFL13-noSynCo.metrics.json"));
    let keys: Vec<&str> = m.as_object().unwrap().keys().map(String::as_str).collect();
    let mut want = vec![
        "nadir_hz",
        "time_to_ufls_s",
        "max_rocof_hz_s",
        "settling_time_s",
        "osc_period_s",
        "verdict",
    ];
    want.sort_unstable();
    let mut keys = keys;
    keys.sort_unstable();
    assert_eq!(keys, want);
    assert_eq!(m["verdict"], "unstable");

    let spec = catalog_case("GFL13-noSynCo").unwrap();
    let r = rmsdyn_core::run(&spec).unwrap();
    let lib = metrics(&r, monitored_device(&spec)).unwrap();
    let parsed: rmsdyn_core::MetricReport = serde_json::from_value(m).unwrap();
    assert_eq!(parsed, lib);
}

#[test]
fn large_condenser_case_runs_stable() {
    let dir = tempfile::tempdir().unwrap();
    let o = rmsdyn(&[
        "run",
        "--scenario",
        "GFL13-synco-S24.75-H4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = read_json(&dir.path().join("GFL13-synco-S24.75-H4.metrics.json"));
    assert_eq!(m["verdict"], "stable");
}

#[test]
fn collapse_is_a_result_not_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = rmsdyn(&[
        "run",
        "--scenario",
        "GF-noSynCo",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        read_json(&dir.path().join("GF-noSynCo.metrics.json"))["verdict"],
        "collapsed"
    );
}

#[test]
fn override_changes_only_the_named_field() {
    let base = rmsdyn(&["validate", "--scenario", "GFL13-synco-S24.75-H4", "--print"]);
    let changed = rmsdyn(&[
        "validate",
        "--scenario",
        "GFL13-synco-S24.75-H4",
        "--print",
        "--set",
        "placements.2.h=2",
    ]);
    assert_eq!(changed.status.code(), Some(0), "{}", stderr(&changed));
    let a: Value = serde_json::from_str(&stdout(&base)).unwrap();
    let b: Value = serde_json::from_str(&stdout(&changed)).unwrap();
    let mut paths = Vec::new();
    diff(&a, &b, "", &mut paths);
    assert_eq!(paths, ["placements.2.h"]);
    assert_eq!(b["placements"][2]["h"], 2.0);
}

#[test]
fn step_and_horizon_flags_are_overrides() {
    let o = rmsdyn(&[
        "validate",
        "--scenario",
        "GFL13-noSynCo",
        "--print",
        "--dt",
        "0.0005",
        "--t-end",
        "3",
    ]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["dt"], 0.0005);
    assert_eq!(v["config"]["t_end"], 3.0);
}

#[test]
fn scenario_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("case.json");
    let first = stdout(&rmsdyn(&["validate", "--scenario", "GF-synco3", "--print"]));
    std::fs::write(&path, &first).unwrap();
    let o = rmsdyn(&["validate", "--scenario", path.to_str().unwrap(), "--print"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), first);
}

#[test]
fn validation_errors_exit_1_with_distinct_messages() {
    let dir = tempfile::tempdir().unwrap();
    let spec = catalog_case("GFL13-noSynCo").unwrap();
    let mut v = serde_json::to_value(&spec).unwrap();
    v["placements"][2]["inirtia"] = 4.0.into();
    let typo = dir.path().join("typo.json");
    std::fs::write(&typo, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"name\": \"x\",\n  \"network\": \n").unwrap();

    let cases: [(&[&str], &str); 5] = [
        (
            &["validate", "--scenario", typo.to_str().unwrap()],
            "inirtia",
        ),
        (
            &["validate", "--scenario", broken.to_str().unwrap()],
            "malformed scenario JSON",
        ),
        (
            &["run", "--scenario", "GFL13-noSynCo-typo"],
            "unknown scenario",
        ),
        (
            &[
                "validate",
                "--scenario",
                "GFL13-noSynCo",
                "--set",
                "placements.2.inirtia=4",
            ],
            "no key",
        ),
        (
            &[
                "validate",
                "--scenario",
                "GFL13-noSynCo",
                "--set",
                "config.dt=-1",
            ],
            "dt must",
        ),
    ];
    for (args, needle) in cases {
        let o = rmsdyn(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains(needle), "{args:?}: {}", stderr(&o));
    }
    let o = rmsdyn(&["validate", "--scenario", broken.to_str().unwrap()]);
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
    assert_eq!(rmsdyn(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    std::fs::write(&file, "").unwrap();
    let o = rmsdyn(&[
        "run",
        "--scenario",
        "GFL13-noSynCo",
        "--t-end",
        "6",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not writable"), "{}", stderr(&o));
}

#[test]
fn run_failure_exits_2() {
    // Loads far beyond the sources leave no operating point to start from.
    let o = rmsdyn(&[
        "run",
        "--scenario",
        "GFL13-noSynCo",
        "--set",
        "network.buses.4.load_p=40",
        "--out",
        tempfile::tempdir().unwrap().path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("run of `GFL13-noSynCo` failed"));
}

#[test]
fn sweep_reports_in_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = rmsdyn(&[
        "sweep",
        "--scenario",
        "GFL13-synco-S24.75-H4",
        "--scenario",
        "GFL13-noSynCo",
        "--vary",
        "config.t_end=7,8",
        "--jobs",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = read_json(&dir.path().join("summary.json"));
    let names: Vec<&str> = summary
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["case"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "GFL13-synco-S24.75-H4@config.t_end=7",
            "GFL13-synco-S24.75-H4@config.t_end=8",
            "GFL13-noSynCo@config.t_end=7",
            "GFL13-noSynCo@config.t_end=8",
        ]
    );
    for n in names {
        assert!(dir.path().join(format!("{n}.metrics.json")).is_file());
        assert!(dir.path().join(format!("{n}.csv")).is_file());
    }
}

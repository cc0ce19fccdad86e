use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_swarm-markers"));
    c.env("SWARM_MARKERS_THREADS", "1");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Canonical scenario JSON with `max_ticks` replaced.
fn scenario_file(dir: &Path, id: &str, max_ticks: usize) -> PathBuf {
    let o = run(&["scenario", id]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
    v["max_ticks"] = max_ticks.into();
    let path = dir.join(format!("{id}.json"));
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn simulate(dir: &Path, scenario: &Path, seed: u64, name: &str) -> PathBuf {
    let out = dir.join(name);
    let o = run(&["simulate", s(scenario), "--seed", &seed.to_string(), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn simulate_is_byte_deterministic() {
    let d = TempDir::new().unwrap();
    let sc = scenario_file(d.path(), "S5", 120);
    let a = fs::read(simulate(d.path(), &sc, 1, "a.csv")).unwrap();
    let b = fs::read(simulate(d.path(), &sc, 1, "b.csv")).unwrap();
    assert_eq!(a, b);
    let c = fs::read(simulate(d.path(), &sc, 2, "c.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn trajectory_has_twenty_sheep_and_one_shepherd_per_tick() {
    let d = TempDir::new().unwrap();
    let sc = scenario_file(d.path(), "S1", 50);
    let text = fs::read_to_string(simulate(d.path(), &sc, 3, "t.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "tick,agent_id,kind,profile,x,y");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let ticks = rows.last().unwrap()[0].parse::<usize>().unwrap() + 1;
    for t in 0..ticks {
        let frame: Vec<_> = rows.iter().filter(|r| r[0] == t.to_string()).collect();
        assert_eq!(frame.iter().filter(|r| r[2] == "sheep").count(), 20);
        assert_eq!(frame.iter().filter(|r| r[2] == "shepherd").count(), 1);
    }
}

#[test]
fn malformed_scenario_is_a_config_error_naming_the_field() {
    let d = TempDir::new().unwrap();
    let sc = scenario_file(d.path(), "S5", 100);
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&sc).unwrap()).unwrap();
    v["goal_radius"] = "wide".into();
    fs::write(&sc, v.to_string()).unwrap();
    let o = run(&["simulate", s(&sc), "--out", s(&d.path().join("x.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("goal_radius"), "{}", stderr(&o));
    assert!(!d.path().join("x.csv").exists());

    fs::write(&sc, "{\"id\": \"S5\",").unwrap();
    let o = run(&["simulate", s(&sc), "--out", s(&d.path().join("x.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_scenario_file_is_a_missing_dependency() {
    let d = TempDir::new().unwrap();
    let o = run(&["simulate", s(&d.path().join("nope.json")), "--out", s(&d.path().join("x.csv"))]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("nope.json"));
}

#[test]
fn markers_window_count_and_columns() {
    let d = TempDir::new().unwrap();
    // ticks 0..=100: 101 frames, stride 5 -> 17 windows
    let sc = scenario_file(d.path(), "S1", 100);
    let traj = simulate(d.path(), &sc, 1, "t.csv");
    let out = d.path().join("f.csv");
    let o = run(&["markers", s(&traj), "--window", "20", "--overlap", "0.75", "--set", "23", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let markers: Vec<String> = (1..=23).map(|i| format!("M{i}")).collect();
    assert_eq!(&header[6..], markers.iter().map(String::as_str).collect::<Vec<_>>().as_slice());
    assert_eq!(lines.count(), 17 * 20);

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("f.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["timing"][0]["n_windows"], 17);
    assert!(manifest["timing"][0]["mean_time_s"].as_f64().unwrap() > 0.0);

    let out42 = d.path().join("f42.csv");
    let o = run(&["markers", s(&traj), "--set", "42", "--out", s(&out42)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let header = fs::read_to_string(&out42).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header.split(',').count(), 6 + 42);
}

#[test]
fn oversized_window_is_a_data_error() {
    let d = TempDir::new().unwrap();
    let sc = scenario_file(d.path(), "S5", 60);
    let traj = simulate(d.path(), &sc, 1, "t.csv");
    let o = run(&["markers", s(&traj), "--window", "100", "--out", s(&d.path().join("f.csv"))]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn markers_needs_run_identity_without_a_manifest() {
    let d = TempDir::new().unwrap();
    let sc = scenario_file(d.path(), "S5", 60);
    let traj = simulate(d.path(), &sc, 4, "t.csv");
    fs::remove_file(d.path().join("t.csv.manifest.json")).unwrap();
    let out = d.path().join("f.csv");
    let o = run(&["markers", s(&traj), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["markers", s(&traj), "--scenario", "S5", "--seed", "4", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(&out).unwrap().lines().nth(1).unwrap().starts_with("S5,4,0,0,A7,"));
}

#[test]
fn eta_outside_unit_interval_is_a_usage_error() {
    let d = TempDir::new().unwrap();
    for eta in ["0", "1.5", "-0.2"] {
        let o = run(&["pipeline", "--attention", "--eta", eta, "--out-dir", s(d.path())]);
        assert_eq!(o.status.code(), Some(2), "eta {eta}: {}", stderr(&o));
    }
    let o = run(&["pipeline", "--ablate", "e3", "--out-dir", s(d.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["pipeline", "--train", "herd", "--out-dir", s(d.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pipeline_without_artifacts_names_the_missing_one() {
    let d = TempDir::new().unwrap();
    let o = run(&["pipeline", "--scenarios", "S2", "--seeds", "7", "--train", "agent", "--out-dir", s(d.path())]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("S2_seed7.csv"), "{}", stderr(&o));
}

fn sha(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

fn pipeline(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["pipeline", "--scenarios", "S3,S5", "--seeds", "1-2", "--budget", "6", "--folds", "3", "--out-dir", s(dir)];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn pipeline_reports_are_reproducible_and_chained() {
    let d = TempDir::new().unwrap();
    let stages = ["--regenerate", "--train", "agent,swarm2", "--ablate", "e1,e2", "--associate", "--attention", "--eta", "0.5"];
    let o = pipeline(d.path(), &stages);
    assert!(o.status.success(), "{}", stderr(&o));

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("pipeline.manifest.json")).unwrap()).unwrap();
    let chain = manifest["chain"].as_str().unwrap().to_string();
    let outputs = manifest["outputs"].as_array().unwrap();
    for out in outputs {
        let path = PathBuf::from(out["path"].as_str().unwrap());
        assert_eq!(sha(&path), out["sha256"].as_str().unwrap(), "{}", path.display());
        if path.extension().is_some_and(|e| e == "csv") {
            let first = fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
            assert_eq!(first, format!("# chain={chain}"));
        }
    }
    for name in [
        "train_agent.csv",
        "train_swarm2.csv",
        "model_agent.json",
        "mi_ranking.csv",
        "ablation_e1.csv",
        "ablation_e2.csv",
        "association_stats.csv",
        "attention_stats.csv",
        "association/S3_seed1.csv",
        "attention/S5_seed2.csv",
    ] {
        let p = d.path().join(name);
        assert!(outputs.iter().any(|o| o["path"] == s(&p)), "{name} not in manifest");
    }
    for input in manifest["inputs"].as_array().unwrap() {
        assert_eq!(sha(Path::new(input["path"].as_str().unwrap())), input["sha256"].as_str().unwrap());
    }

    let stats = fs::read_to_string(d.path().join("attention_stats.csv")).unwrap();
    let lines: Vec<&str> = stats.lines().collect();
    assert_eq!(lines[1], "group,max,min,range,mean,std");
    assert!(lines.iter().any(|l| l.starts_with("S3:A4,")));
    let e1 = fs::read_to_string(d.path().join("ablation_e1.csv")).unwrap();
    assert_eq!(e1.lines().count(), 1 + 1 + 1 + 25);

    let before: Vec<(String, String)> = ["train_agent.csv", "model_agent.json", "ablation_e1.csv", "ablation_e2.csv", "attention_stats.csv", "association_stats.csv"]
        .iter()
        .map(|n| (n.to_string(), sha(&d.path().join(n))))
        .collect();
    let o = pipeline(d.path(), &stages);
    assert!(o.status.success(), "{}", stderr(&o));
    for (name, digest) in before {
        assert_eq!(sha(&d.path().join(&name)), digest, "{name} changed");
    }

    // without --regenerate the trajectories on disk are reused
    let o = pipeline(d.path(), &stages[1..]);
    assert!(o.status.success(), "{}", stderr(&o));
    let reused: Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("pipeline.manifest.json")).unwrap()).unwrap();
    assert_eq!(reused["inputs"], manifest["inputs"]);
}

#[test]
fn sweep_writes_the_window_grid() {
    let d = TempDir::new().unwrap();
    let o = pipeline(d.path(), &["--regenerate", "--sweep", "--train", "agent"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let acc = fs::read_to_string(d.path().join("sweep_agent_accuracy.csv")).unwrap();
    let lines: Vec<&str> = acc.lines().skip(1).collect();
    assert_eq!(lines[0], "window,val_0.75,test_0.75,val_0.5,test_0.5,val_0.25,test_0.25");
    assert_eq!(lines.len(), 6);
    for (row, w) in lines[1..].iter().zip([20, 40, 60, 80, 100]) {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[0], w.to_string());
        assert_eq!(cells.len(), 7);
        for c in &cells[1..] {
            let v: f64 = c.parse().unwrap();
            assert!((0.0..=100.0).contains(&v));
        }
    }
    let timing = fs::read_to_string(d.path().join("sweep_agent_timing.csv")).unwrap();
    assert_eq!(timing.lines().count(), 1 + 1 + 15);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("pipeline.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["timing"].as_array().unwrap().len(), 15);
}

use std::fs;
use std::process::Command;

use irris_harness::topology::parse_topology;

const TINY: &str = "\
name = tiny
M = 4
K = 4
N = 32
N_s = 64
grid = 8x8
power_dbm = 10
drops = 2
baselines = regular-nece, irregular-nece
ats.I_T = 3
ats.Q = 3
nece.I_N = 3
nece.C = 40
nece.C_pr = 8
topologies = true
";

fn irris() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irris"))
}

#[test]
fn run_writes_reproducible_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("tiny.spec");
    fs::write(&spec, TINY).unwrap();
    let mut csvs = Vec::new();
    for (i, workers) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let status = irris()
            .args(["run", spec.to_str().unwrap(), "--no-timing", "--seed", "9", "--workers", workers, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        csvs.push(fs::read_to_string(out.join("results.csv")).unwrap());
        let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["name"], "tiny");
        let grid = fs::read_to_string(out.join("topologies/power_dbm-10-drop0-irregular-nece.txt")).unwrap();
        let (mask, rows, cols) = parse_topology(&grid).unwrap();
        assert_eq!((rows, cols, mask.count()), (8, 8, 32));
        assert_eq!(grid.matches('1').count(), 32);
    }
    assert_eq!(csvs[0], csvs[1]);
    let lines: Vec<&str> = csvs[0].lines().collect();
    assert_eq!(lines[0], "sweep,baseline,drop,wsr,p_tx,seconds,evals");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("10,regular-nece,0,"));
}

#[test]
fn complexity_prints_exact_counts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("c.spec");
    fs::write(&spec, "M = 4\nK = 4\nN = 8\nN_s = 16\nsweep.N_s = 16, 64\n").unwrap();
    let out = irris().args(["complexity", spec.to_str().unwrap()]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("exhaustive = 3294720, proposed = 1872000"), "{text}");
}

#[test]
fn bad_spec_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.spec");
    fs::write(&spec, "M = 4\nnece.C_pr = 500\n").unwrap();
    let out = irris().args(["run", spec.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("C_pr"), "{err}");
}

#[test]
fn preset_print_round_trips() {
    let out = irris().args(["preset", "fig7", "--print"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let spec = irris_harness::ExperimentSpec::parse(&text).unwrap();
    assert_eq!(spec, irris_harness::presets::preset("fig7").unwrap());
}

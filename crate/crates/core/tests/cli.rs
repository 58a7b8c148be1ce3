use std::fs;
use std::path::Path;
use std::process::Command;

use quermass_flow::cli::{main_with, LibraryTrig, TrigKernel};
use quermass_flow::SpaceForm;

fn qflow(args: &[&str], trig: &dyn TrigKernel) -> (i32, String, String) {
    let args: Vec<String> = std::iter::once("qflow").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = main_with(&args, &mut out, &mut err, trig);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SHORT_RUN: &str = "[flow]\ncells = 64\nt_end = 0.02\nsample_dt = 0.005\n";

#[test]
fn binary_runs_the_sphere_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT_RUN);
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_qflow"))
        .args(["flow", "--preset", "sphere", "--config", &cfg, "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    for file in ["trajectory.ndjson", "summary.csv", "final_profile.txt"] {
        assert!(out.join(file).exists(), "{file} missing");
    }
    let ndjson = fs::read_to_string(out.join("trajectory.ndjson")).unwrap();
    let mut lines = ndjson.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert!(header.to_string().contains("\"preset\":\"sphere\""));
    let record: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    for key in ["t", "mu", "W_ell", "omega", "minKappa", "maxKappa", "maxRho", "minU", "tracelessSup"] {
        assert!(record.get(key).is_some(), "record lacks {key}");
    }
    let csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(csv.starts_with("t,omega,tracelessSup,mu,W_ell,sphereFitRadius,sphereFitResidual,maxRho,minU,minSec"));
}

#[test]
fn malformed_config_is_a_usage_error_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[flow]\ncells = 64\nt_end = \"soon\"\n");
    let (code, _, err) = qflow(&["flow", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &LibraryTrig);
    assert_eq!(code, 2);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn unknown_arguments_are_usage_errors() {
    assert_eq!(qflow(&["flow", "--preset", "cube"], &LibraryTrig).0, 2);
    assert_eq!(qflow(&["teleport"], &LibraryTrig).0, 2);
}

#[test]
fn empty_sweep_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[sweep]\nell = []\n");
    let (code, _, err) = qflow(&["sweep", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &LibraryTrig);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn small_sweep_writes_one_row_per_job() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SHORT_RUN}[sweep]\nell = [0, 1]\ncells = [32, 64]\n"));
    let (code, _, err) = qflow(&["sweep", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &LibraryTrig);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(5) == Some("t-end")), "{csv}");
}

#[test]
fn elliptic_solves_report_spheres() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[elliptic]\nfunction = \"norm\"\ncells = 48\nsamples = 2\n");
    let (code, out, err) = qflow(&["elliptic", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &LibraryTrig);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 2, "{out}");
    let ndjson = fs::read_to_string(dir.path().join("elliptic.ndjson")).unwrap();
    for line in ndjson.lines().skip(1) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["report"]["sphere_fit"]["residual"].as_f64().unwrap() < 1e-8, "{line}");
    }
}

#[test]
fn check_passes_with_the_library_kernel() {
    let (code, out, _) = qflow(&["check"], &LibraryTrig);
    assert_eq!(code, 0, "{out}");
}

/// Sine off by one part in a thousand.
struct Skewed;

impl TrigKernel for Skewed {
    fn sc(&self, sf: SpaceForm, r: f64) -> (f64, f64) {
        let (s, c) = sf.sc(r);
        (s * 1.001, c)
    }
}

#[test]
fn check_fails_with_a_broken_kernel() {
    let (code, out, _) = qflow(&["check", "spaceform"], &Skewed);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("FAIL"), "{out}");
}

#[test]
fn same_spec_and_seed_give_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT_RUN);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let (code, _, err) =
            qflow(&["flow", "--preset", "off-center", "--config", &cfg, "--out", out.to_str().unwrap()], &LibraryTrig);
        assert_eq!(code, 0, "{err}");
        outputs.push(fs::read(out.join("trajectory.ndjson")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);

    let mut elliptic = Vec::new();
    for run in ["c", "d"] {
        let out = dir.path().join(run);
        let cfg = write_config(dir.path(), "[elliptic]\ncells = 32\nsamples = 2\nseed = 9\n");
        assert_eq!(qflow(&["elliptic", "--config", &cfg, "--out", out.to_str().unwrap()], &LibraryTrig).0, 0);
        elliptic.push(fs::read(out.join("elliptic.ndjson")).unwrap());
    }
    assert_eq!(elliptic[0], elliptic[1]);
}

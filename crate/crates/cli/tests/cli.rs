use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn coherence(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coherence"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = coherence(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["generate", "--example", "interval-map", "--out", "map.txt"], d);
    let meta = json(&d.join("map.txt.meta.json"));
    assert_eq!(meta["example"], "interval-map");
    assert_eq!(meta["records"], 8100);
    assert_eq!(meta["default_input"].as_array().unwrap().len(), 90);

    ok(
        &["compare", "map.txt", "--runs", "20", "--seed", "3", "--images", "img", "--out", "report.json"],
        d,
    );
    let report = json(&d.join("report.json"));
    assert_eq!(report["provenance"]["example"], "interval-map");
    let default = report["criteria_b"]["default"].as_f64().unwrap();
    assert!((default + 27549.7).abs() < 1.0);
    let sigma2 = report["criteria_a"]["p_tilde_sigma2"].as_f64().unwrap();
    assert!((sigma2 - 1.0).abs() < 1e-9);
    for name in ["P.ppm", "P_red.ppm", "Lambda.ppm"] {
        let bytes = fs::read(d.join("img").join(name)).unwrap();
        assert!(bytes.starts_with(b"P6\n91 91\n255\n"), "{name}");
    }

    let first = fs::read(d.join("report.json")).unwrap();
    ok(&["compare", "map.txt", "--runs", "20", "--seed", "3", "--out", "again.json"], d);
    assert_eq!(first, fs::read(d.join("again.json")).unwrap());
    ok(&["--sequential", "compare", "map.txt", "--runs", "20", "--seed", "3", "--out", "seq.json"], d);
    assert_eq!(first, fs::read(d.join("seq.json")).unwrap());
}

#[test]
fn multirun_writes_csv_exports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["generate", "--example", "three-coherent", "--out", "ex.txt"], d);
    ok(&["multirun", "ex.txt", "--runs", "10", "--trace", "--out", "runs.json"], d);
    let record = json(&d.join("runs.json"));
    assert_eq!(record["runs"].as_array().unwrap().len(), 10);
    let spectra = fs::read_to_string(d.join("runs.json.spectra.csv")).unwrap();
    assert_eq!(spectra.lines().count(), 11);
    assert!(d.join("runs.json.trajectories.csv").exists());
}

#[test]
fn bounds_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("counts.txt"), "2 3 12\n1 1 4\n2 1 1\n1 2 3\n2 2 1\n1 3 1\n2 3 2\n").unwrap();
    fs::write(d.join("gamma.txt"), "1\n1\n2\n").unwrap();
    let out = ok(&["bounds", "counts.txt", "--affiliation", "gamma.txt", "--kappa", "pr"], d);
    let bound: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(bound["kappa_tag"], "pr");
    assert!(bound["lhs"].as_f64().unwrap() <= bound["mid"].as_f64().unwrap() + 1e-12);

    fs::write(d.join("lambda.csv"), "0.5,0.2\n0.5,0.8\n").unwrap();
    ok(
        &["bounds", "counts.txt", "--affiliation", "gamma.txt", "--lambda", "lambda.csv", "--out", "b.json"],
        d,
    );
    assert!(json(&d.join("b.json"))["relaxed_likelihood"].as_f64().unwrap() < 0.0);

    ok(&["render", "counts.txt", "--bottom", "gamma.txt", "--out", "p.ppm"], d);
    assert!(fs::read(d.join("p.ppm")).unwrap().starts_with(b"P6\n4 3\n255\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(coherence(&["compare", "missing.txt"], d).status.code(), Some(2));
    fs::write(d.join("bad.txt"), "# n=2 m=2\nx,y\n1,5\n").unwrap();
    assert_eq!(coherence(&["compare", "bad.txt"], d).status.code(), Some(2));
    assert_eq!(coherence(&["generate", "--example", "nope", "--out", "x"], d).status.code(), Some(2));
    let gyre = ["generate", "--example", "double-gyre", "--step", "0.03", "--out", "g.txt"];
    assert_eq!(coherence(&gyre, d).status.code(), Some(2));
    fs::write(d.join("counts.txt"), "2 2 4\n1 1 2\n2 2 2\n").unwrap();
    fs::write(d.join("gamma.txt"), "1\n").unwrap();
    let short = ["bounds", "counts.txt", "--affiliation", "gamma.txt"];
    assert_eq!(coherence(&short, d).status.code(), Some(2));
}

#[test]
fn small_gyre_generation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "generate", "--example", "double-gyre", "--t1", "1", "--points-per-box", "2", "--seed", "4", "--out",
            "gyre.txt",
        ],
        d,
    );
    let meta = json(&d.join("gyre.txt.meta.json"));
    assert_eq!(meta["records"], 4096);
    assert_eq!(meta["gyre"]["steps"], 100);
    assert_eq!(meta["gyre"]["config"]["A"], 0.25);
}

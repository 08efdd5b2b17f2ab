use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn magscat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magscat")).args(args).env("RUST_LOG", "error").output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn small(extra: &str) -> String {
    format!(r#"{{"lambda": 1.0, "grid": {{"n": 32, "half_width": 8.0}}{extra}}}"#)
}

fn run(dir: &TempDir, cmd: &str, body: &str, out: &str) -> (Output, std::path::PathBuf) {
    let cfg = write_config(dir.path(), &format!("{out}.json"), body);
    let out_dir = dir.path().join(out);
    let o = magscat(&[cmd, "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    (o, out_dir)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let o = magscat(&["verify"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));

    let empty = write_config(dir.path(), "empty.json", "");
    let o = magscat(&["verify", "--config", &empty]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));

    let (o, _) = run(&dir, "direct", r#"{"grid": {"n": 32, "half_width": 8.0}}"#, "nolambda");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config: lambda required"));

    let (o, _) = run(&dir, "cgo", &small(r#", "sweeps": {"h": [0.1, 0.2]}"#), "badsweep");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sweeps.h must be strictly decreasing"));

    assert_eq!(magscat(&["bogus"]).status.code(), Some(2));
}

#[test]
fn free_direct_is_identity() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, "direct", &small(r#", "preset": "free""#), "free");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let header: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("sigma.json")).unwrap()).unwrap();
    assert_eq!(header["identity"], true);
    assert_eq!(header["nodes"], 72);
    let sigma = std::fs::read_to_string(out.join("sigma.csv")).unwrap();
    assert!(sigma.starts_with("q,qp,re,im\n0,0,1e0,0e0\n0,1,0e0,0e0\n"));
    let m = manifest(&out);
    assert_eq!(m["command"], "direct");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert!(m["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["versions"]["magscat_core"].is_string());
}

#[test]
fn weak_potential_direct_is_deterministic_and_born_close() {
    let dir = TempDir::new().unwrap();
    let body = small(r#", "preset": "weak-V""#);
    let (a, out_a) = run(&dir, "direct", &body, "a");
    let (b, out_b) = run(&dir, "direct", &body, "b");
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(b.status.code(), Some(0));
    for f in ["sigma.csv", "born.csv", "farfield.csv", "sphere.csv", "sigma.json"] {
        assert_eq!(std::fs::read(out_a.join(f)).unwrap(), std::fs::read(out_b.join(f)).unwrap(), "{f}");
    }
    let born = std::fs::read_to_string(out_a.join("born.csv")).unwrap();
    let mut lines = born.lines();
    assert!(lines.next().unwrap().ends_with("rel_dev,max_rel_dev"));
    let max: f64 = lines.next().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(max > 0.0 && max < 0.05, "{max}");
    assert!(stdout(&a).contains("Born max relative deviation"));
}

#[test]
fn cgo_presets() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, "cgo", &small(r#", "preset": "free""#), "free");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for i in 0..3 {
        let v = magscat_core::grid::io::read_scalar(out.join(format!("v_h{i}.cgof"))).unwrap();
        assert_eq!(v.max_abs(), 0.0);
        assert!(magscat_core::grid::io::sidecar_path(out.join(format!("v_h{i}.cgof"))).exists());
    }

    let (o, out) = run(&dir, "cgo", &small(r#", "preset": "magnetic-sweep""#), "sweep");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let norms = std::fs::read_to_string(out.join("norms.csv")).unwrap();
    let rows: Vec<&str> = norms.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.ends_with(",1")), "{norms}");

    let (o, out) = run(&dir, "cgo", &small(r#", "preset": "diverging""#), "div");
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("did not converge"));
    let hist = std::fs::read_to_string(out.join("history_h0.csv")).unwrap();
    assert!(hist.lines().count() > 100);
    assert_eq!(manifest(&out)["exit_code"], 3);
}

#[test]
fn cauchy_follows_the_seed() {
    let dir = TempDir::new().unwrap();
    let body = small(r#", "n_sources": 4"#);
    let (a, out_a) = run(&dir, "cauchy", &body, "a");
    let (_, out_b) = run(&dir, "cauchy", &body, "b");
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let cfg = write_config(dir.path(), "c.json", &body);
    let out_c = dir.path().join("c");
    let c = magscat(&["cauchy", "--config", &cfg, "--out", out_c.to_str().unwrap(), "--seed", "5", "--threads", "1"]);
    assert_eq!(c.status.code(), Some(0));
    let read = |p: &Path| std::fs::read(p.join("cauchy.csv")).unwrap();
    assert_eq!(read(&out_a), read(&out_b));
    assert_ne!(read(&out_a), read(&out_c));
    assert_eq!(manifest(&out_c)["seed"], 5);
    assert_eq!(manifest(&out_c)["threads"], 1);
}

#[test]
fn reconstruction_tables() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, "reconstruct", &small(r#", "preset": "pure-gauge", "shell_magnitudes": 1"#), "gauge");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = std::fs::read_to_string(out.join("dA.csv")).unwrap();
    assert!(table.starts_with("xi1,xi2,xi3,component,re_recovered,im_recovered,re_reference,im_reference,rel_err"));
    assert_eq!(table.lines().count(), 1 + 6 * 3);
    assert!(stdout(&o).contains("trivial magnetic field"));

    let (o, out) = run(&dir, "reconstruct", &small(r#", "preset": "generic", "shell_magnitudes": 1"#), "generic");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("dA: max rel_err"));
    assert!(out.join("dA.csv").exists());

    let mismatch = small(r#", "preset": "generic", "recover": ["V"]"#);
    let (o, _) = run(&dir, "reconstruct", &mismatch, "mismatch");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gauge-reduce first"));
}

#[test]
fn verify_reports_every_criterion() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, "verify", &small(""), "verify");
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert_eq!(lines.len(), 11, "{text}");
    let any_fail = lines.iter().any(|l| l.starts_with("FAIL"));
    assert_eq!(o.status.code(), Some(if any_fail { 1 } else { 0 }));
    assert_eq!(std::fs::read_to_string(out.join("report.txt")).unwrap().lines().count(), 11);

    // thresholds a thousand times tighter must flag failures
    let (o, out) = run(&dir, "verify", &small(r#", "tolerances": {"scale": 0.001}"#), "tight");
    assert_eq!(o.status.code(), Some(1));
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    let fails = report.lines().filter(|l| l.starts_with("FAIL")).count();
    assert!(fails >= 8, "{report}");
    assert!(std::fs::read_to_string(out.join("suite.csv")).unwrap().contains(",FAIL"));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn csa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csa")).args(args).output().expect("spawn csa")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
        .display()
        .to_string()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_csa_diagnose_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(dir.path());
    let sim = json(&csa(&["simulate", "--config", &config("experiment1.toml"), "--out", out]));
    assert!((sim["noise"]["achieved_ratio"].as_f64().unwrap() - 0.05).abs() < 1e-9);
    let noisy = PathBuf::from(sim["noisy"].as_str().unwrap());
    assert!(noisy.exists());
    assert!(dir.path().join("mesh.csv").exists());

    let sep = json(&csa(&["separate", path_str(&noisy), "--config", &config("experiment1.toml"), "--out", out]));
    assert_eq!(sep["components"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("components.csv").exists());

    let report = json(&csa(&["csa", path_str(&noisy), "--config", &config("experiment1.toml"), "--out", out]));
    assert_eq!(report["estimates"].as_array().unwrap().len(), 2);
    assert_eq!(report["width_rule"], "literal");

    let cones = dir.path().join("cones.json");
    let diag = json(&csa(&[
        "diagnose",
        path_str(&noisy),
        "--cones",
        path_str(&cones),
        "--component",
        "1",
        "--config",
        &config("experiment1.toml"),
        "--out",
        out,
    ]));
    assert_eq!(diag["support"]["passed"], true);
}

#[test]
fn strict_width_flag_switches_the_rule() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(dir.path());
    let sim = json(&csa(&["simulate", "--config", &config("experiment1.toml"), "--out", out]));
    let noisy = sim["noisy"].as_str().unwrap().to_string();
    let report = json(&csa(&["csa", &noisy, "--config", &config("experiment1.toml"), "--out", out, "--strict-width"]));
    assert_eq!(report["width_rule"], "strict");
    for e in report["estimates"].as_array().unwrap() {
        assert!(e["step2"]["radius"].as_f64().unwrap() < e["step1"]["radius"].as_f64().unwrap());
    }
}

#[test]
fn seed_flag_changes_the_noise_only() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("experiment1.toml");
    json(&csa(&["simulate", "--config", &cfg, "--out", path_str(a.path()), "--seed", "3"]));
    json(&csa(&["simulate", "--config", &cfg, "--out", path_str(b.path()), "--seed", "4"]));
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(a.path(), "farfield_clean.csv"), read(b.path(), "farfield_clean.csv"));
    assert_ne!(read(a.path(), "farfield_noisy.csv"), read(b.path(), "farfield_noisy.csv"));
}

#[test]
fn nearfield_oracle_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let summary = json(&csa(&[
        "nearfield",
        "--oracle",
        "--config",
        &config("nearfield.toml"),
        "--out",
        path_str(dir.path()),
    ]));
    assert_eq!(summary["agreement"], summary["nodes"]);
    assert_eq!(summary["pi_plus_marked"], summary["pi_minus_marked"]);
    assert_eq!(summary["source_nodes_marked"][0], true);
    assert!(dir.path().join("pi_minus.csv").exists());
    assert!(dir.path().join("pi_plus.csv").exists());

    // the trace written above can be fed back in
    let again = json(&csa(&[
        "nearfield",
        "--trace",
        path_str(&dir.path().join("trace.csv")),
        "--config",
        &config("nearfield.toml"),
        "--out",
        path_str(dir.path()),
    ]));
    assert_eq!(again["pi_minus_marked"], summary["pi_minus_marked"]);
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(dir.path());

    let missing = csa(&["csa", "/nonexistent/matrix.csv", "--out", out]);
    assert_eq!(missing.status.code(), Some(1));

    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "[[sources]]\nkind = \"gaussian\"\nposition = [0.0, 0.0, 0.0]\nshift = 0.0\nrate = -1.0\n").unwrap();
    let r = csa(&["simulate", "--config", path_str(&bad_cfg), "--out", out]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("sources[0].rate"));

    let sim = json(&csa(&["simulate", "--config", &config("experiment1.toml"), "--out", out]));
    let noisy = sim["noisy"].as_str().unwrap().to_string();
    let r = csa(&["diagnose", &noisy, "--cone", "1,2,3", "--out", out]);
    assert_eq!(r.status.code(), Some(1));
    let r = csa(&["diagnose", &noisy, "--cone=-1,0,0,0,0", "--out", out]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("radius"));
    let r = csa(&["diagnose", &noisy, "--no-such-flag"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn nearfield_without_section_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = csa(&["nearfield", "--config", &config("experiment1.toml"), "--out", path_str(dir.path())]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("nearfield"));
}

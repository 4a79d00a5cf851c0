use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const WELL: &str =
    "[grid]\nxmin = 0\nxmax = 1\nnx = 512\n\n[run]\nscenario = squarewell\nresidual_dt = 1e-5\noutput_dir = out\n";

fn tsq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn version_prints_package_version() {
    let out = tsq(&["version"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        format!("tsq {}", env!("CARGO_PKG_VERSION"))
    );
}

#[test]
fn validate_accepts_good_and_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.ini", WELL);
    assert_eq!(tsq(&["validate", &good]).status.code(), Some(0));

    let bad = write_config(dir.path(), "bad.ini", "[run]\nscenario = renninger1961\n");
    let out = tsq(&["validate", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("renninger1961"));

    let outside = write_config(
        dir.path(),
        "outside.ini",
        "[grid]\nxmin = -10\nxmax = 10\nnx = 64\nymin = -10\nymax = 10\nny = 64\n\
         [source]\nx = 0\ny = 0\nt = 0\n[detector]\nx = 0\ny = -60\nt = 28\n[run]\nscenario = renninger1960\n",
    );
    let out = tsq(&["validate", &outside]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("detector"));
}

#[test]
fn validate_does_not_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "well.ini", WELL);
    assert!(tsq(&["validate", &cfg]).status.success());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.ini");
    assert_eq!(tsq(&["run", &missing.to_string_lossy()]).status.code(), Some(4));
}

#[test]
fn truncated_support_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "tight.ini",
        "[grid]\nxmin = -70\nxmax = 70\nnx = 128\nymin = -70\nymax = 70\nny = 128\n\
         [source]\nx = 0\ny = 0\nt = 0\n[detector]\nx = 0\ny = -60\nt = 28\n[run]\nscenario = renninger1960\n",
    );
    let out = tsq(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut listings = Vec::new();
    for run in ["a", "b"] {
        let sub = dir.path().join(run);
        fs::create_dir(&sub).unwrap();
        let cfg = write_config(&sub, "well.ini", WELL);
        let out = tsq(&["run", &cfg]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("wall_time = "));
        let mut files: Vec<_> = fs::read_dir(sub.join("out"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        files.sort();
        listings.push((sub.join("out"), files));
    }
    assert_eq!(listings[0].1, listings[1].1);
    assert_eq!(listings[0].1.len(), 21);
    for name in &listings[0].1 {
        assert_eq!(
            fs::read(listings[0].0.join(name)).unwrap(),
            fs::read(listings[1].0.join(name)).unwrap()
        );
    }
}

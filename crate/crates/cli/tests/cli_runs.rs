//! End-to-end CLI runs on small grids: artifact trees, manifests, exit
//! codes and reproducibility.

use std::path::Path;
use std::process::Command;

fn elgrow() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elgrow"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("elgrow-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const GREEN_CONFIG: &str = r#"{
  "command": "green",
  "grid": { "origin": [-2.0, -2.0], "h": 0.06349206349206349, "nx": 64, "ny": 64 },
  "domain": { "shape": "disk", "center": [0.0, 0.0], "radius": 1.0 },
  "operator": { "kind": "laplace" },
  "source": { "w": [0.0, 0.0], "q": 1.0 }
}"#;

#[test]
fn green_run_writes_artifacts_and_manifest() {
    let dir = tempdir("green");
    let cfg = write_config(&dir, "green.json", GREEN_CONFIG);
    let out = dir.join("out");
    let status = elgrow()
        .args(["green", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    assert!(status.success());
    for f in [
        "green_total.pgm",
        "green_total.csv",
        "normal_derivative.csv",
        "solver_report.json",
        "manifest.json",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "green");
    assert!(manifest["checks"][0]["passed"].as_bool().unwrap());
    assert!(manifest["wall_time_s"].as_f64().unwrap() > 0.0);
}

#[test]
fn repeated_runs_are_bit_identical() {
    let dir = tempdir("repeat");
    let cfg = write_config(&dir, "green.json", GREEN_CONFIG);
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out in [&a, &b] {
        let status = elgrow()
            .args(["green", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .args(["--quiet", "--seedless"])
            .status()
            .unwrap();
        assert!(status.success());
    }
    for f in ["green_total.pgm", "green_total.csv", "normal_derivative.csv"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert_eq!(x, y, "artifact {f} differs between runs");
    }
}

#[test]
fn malformed_configs_exit_one_with_diagnostics() {
    let dir = tempdir("bad");
    // Unknown key.
    let cfg = write_config(
        &dir,
        "bad.json",
        r#"{ "command": "green", "bogus_key": 1 }"#,
    );
    let out = elgrow()
        .args(["green", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bogus_key"), "stderr: {stderr}");
    assert!(stderr.contains("line"), "no position diagnostic: {stderr}");

    // Broken coefficient expression.
    let cfg = write_config(
        &dir,
        "badexpr.json",
        r#"{
  "command": "green",
  "domain": { "shape": "disk", "center": [0.0, 0.0], "radius": 1.0 },
  "operator": { "kind": "schrodinger", "coefficient": "1 + frob(2)" },
  "source": { "w": [0.0, 0.0], "q": 1.0 }
}"#,
    );
    let out = elgrow()
        .args(["green", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Missing config for a command that needs one.
    let out = elgrow().arg("grow").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn grow_run_produces_log_and_snapshots() {
    let dir = tempdir("grow");
    let cfg = write_config(
        &dir,
        "grow.json",
        r#"{
  "command": "grow",
  "grid": { "origin": [-2.0, -2.0], "h": 0.06349206349206349, "nx": 64, "ny": 64 },
  "domain": { "shape": "disk", "center": [0.0, 0.0], "radius": 1.0 },
  "operator": { "kind": "laplace" },
  "source": { "w": [0.0, 0.0], "q": 1.0 },
  "run": { "mode": "strong", "t_end": 0.15, "snapshot_stride": 2 }
}"#,
    );
    let out = dir.join("out");
    let status = elgrow()
        .args(["grow", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    assert!(status.success());
    let log = std::fs::read_to_string(out.join("run_log.csv")).unwrap();
    assert!(log.starts_with("step,t,area,rate,"));
    assert!(log.lines().count() > 2);
    assert!(out.join("mask_0001.pgm").exists());
    assert!(out.join("boundary_0001.csv").exists());
}

#[test]
fn grid_override_changes_the_resolution() {
    let dir = tempdir("override");
    let cfg = write_config(&dir, "green.json", GREEN_CONFIG);
    let out = dir.join("out");
    let status = elgrow()
        .args(["green", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--grid-n", "48", "--quiet"])
        .status()
        .unwrap();
    assert!(status.success());
    let pgm = std::fs::read_to_string(out.join("green_total.pgm")).unwrap();
    assert!(pgm.lines().nth(2).unwrap().starts_with("48 48"));
}

#[test]
fn command_mismatch_is_a_config_error() {
    let dir = tempdir("mismatch");
    let cfg = write_config(&dir, "green.json", GREEN_CONFIG);
    let out = elgrow()
        .args(["balayage", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

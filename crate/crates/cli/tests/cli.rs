//! End-to-end checks of the `cdlift` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cdlift_core::sim::scenario::hover_scenario;
use tempfile::TempDir;

fn cdlift(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdlift"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CDLIFT_OUT_DIR")
        .output()
        .expect("spawn cdlift")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Writes the canonical scenario and returns its path.
fn canonical(dir: &TempDir) -> PathBuf {
    let o = cdlift(&["gen-paper-scenario"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    dir.path().join("canonical.toml")
}

fn hover_file(dir: &TempDir, duration: f64) -> PathBuf {
    let path = dir.path().join("hover.toml");
    fs::write(&path, hover_scenario(duration).to_toml_string()).unwrap();
    path
}

fn edited(dir: &TempDir, from: &str, to: &str) -> PathBuf {
    let text = fs::read_to_string(canonical(dir)).unwrap();
    assert!(text.contains(from), "pattern {from} not in generated scenario");
    let path = dir.path().join("edited.toml");
    fs::write(&path, text.replace(from, to)).unwrap();
    path
}

#[test]
fn generated_scenario_carries_the_reference_parameters() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(canonical(&dir)).unwrap();
    for needle in [
        "quad.mass = 0.468",
        "0.008801",
        "quad.drag = [0.25, 0.25, 0.25]",
        "payload.mass = 10.0",
        "cables.stiffness = 100.0",
        "payload.drag = [4.0, 4.0, 4.0]",
        "payload.pretension = ",
    ] {
        assert!(text.contains(needle), "missing {needle}");
    }
    let agents = text.lines().find(|l| l.starts_with("agents.positions")).unwrap();
    assert_eq!(agents.matches('[').count() - 1, 20);
}

#[test]
fn canonical_scenario_validates() {
    let dir = TempDir::new().unwrap();
    let path = canonical(&dir);
    let o = cdlift(&["validate", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("20 agents"));
}

#[test]
fn collinear_leaders_are_rejected_with_the_time() {
    let dir = TempDir::new().unwrap();
    // Leader 3 ends on the line through the other leaders' final waypoints.
    let path = edited(&dir, "[15.0, 10.0, 50.0]]", "[15.0, 70.0, 50.0]]");
    let o = cdlift(&["validate", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("t = 20"), "{err}");
    assert!(err.contains("degenerate"), "{err}");
}

#[test]
fn follower_outside_the_triangle_is_rejected() {
    let dir = TempDir::new().unwrap();
    let path = edited(&dir, "[18.5553, -16.4474, 50.0]", "[40.0, 40.0, 50.0]");
    let o = cdlift(&["validate", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("follower 4"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_invalid() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, format!("{}\nsim.dtt = 1\n", hover_scenario(1.0).to_toml_string())).unwrap();
    let o = cdlift(&["validate", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sim.dtt"));
}

#[test]
fn missing_file_is_invalid() {
    let dir = TempDir::new().unwrap();
    let o = cdlift(&["validate", "nope.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hover_run_writes_trace_and_metrics() {
    let dir = TempDir::new().unwrap();
    let path = hover_file(&dir, 20.0);
    let o = cdlift(&["run", path.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2001);
    let metrics = fs::read_to_string(dir.path().join("metrics.txt")).unwrap();
    // Statistics exclude the sample taken at the end time.
    assert!(metrics.contains("samples = 2000"));
    assert!(metrics.contains("observer = standard"));
}

#[test]
fn runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let path = hover_file(&dir, 2.0);
    let p = path.to_str().unwrap();
    let render = |tag: &str| {
        let trace = dir.path().join(format!("{tag}.csv"));
        let metrics = dir.path().join(format!("{tag}.txt"));
        let o = cdlift(
            &[
                "run",
                p,
                "--set",
                "sim.noise=true",
                "--out",
                trace.to_str().unwrap(),
                "--metrics",
                metrics.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        (fs::read(trace).unwrap(), fs::read(metrics).unwrap())
    };
    assert_eq!(render("a"), render("b"));
}

#[test]
fn literal_flag_is_reported() {
    let dir = TempDir::new().unwrap();
    let path = hover_file(&dir, 1.0);
    let o = cdlift(
        &["metrics", path.to_str().unwrap(), "--flag", "lqg.literal_innovation"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("observer = literal"));
}

#[test]
fn seed_override_is_echoed() {
    let dir = TempDir::new().unwrap();
    let path = hover_file(&dir, 0.5);
    let o = cdlift(&["metrics", path.to_str().unwrap(), "--seed", "7"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("seed = 7"));
}

#[test]
fn bad_override_is_invalid() {
    let dir = TempDir::new().unwrap();
    let path = hover_file(&dir, 0.5);
    let o = cdlift(&["metrics", path.to_str().unwrap(), "--set", "sim.dt"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn aborted_mission_exits_with_three() {
    let dir = TempDir::new().unwrap();
    // Attachment-point noise as configured drives a cable past the
    // allocation's cosine guard within seconds.
    let path = canonical(&dir);
    let o = cdlift(&["metrics", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("aborted"));
}

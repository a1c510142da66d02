use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geomech-lab")).args(args).output().expect("binary runs")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run_config(sub: &str, cfg: &Path, out: &Path) -> Output {
    lab(&[sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn scatter_three_charges_one_capture() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("scatter", &config("scatter.toml"), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for i in 0..3 {
        let csv = fs::read_to_string(dir.path().join(format!("charge_{i:03}.csv"))).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "t,r1,r2,r3,p1,p2,p3,H,j1,j2,j3,Mstar,phase");
    }
    let events = json(&dir.path().join("events.json"));
    let events = events.as_array().unwrap();
    assert_eq!(events.len(), 1, "{events:?}");
    assert_eq!(events[0]["kind"], "capture");
    // the charge launched exactly at the critical angular momentum
    assert_eq!(events[0]["trajectory"], 1);
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["experiment"], "scatter");
    assert_eq!(m["trajectories"].as_array().unwrap().len(), 3);
    assert_eq!(m["trajectories"][1]["phase"], "captured");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let files = ["charge_000.csv", "charge_001.csv", "charge_002.csv", "events.json"];
    let snapshot = || {
        assert_eq!(run_config("scatter", &config("scatter.toml"), dir.path()).status.code(), Some(0));
        let mut manifest = json(&dir.path().join("manifest.json"));
        manifest.as_object_mut().unwrap().remove("wall_time_seconds");
        let bytes: Vec<Vec<u8>> = files.iter().map(|f| fs::read(dir.path().join(f)).unwrap()).collect();
        (bytes, manifest)
    };
    let first = snapshot();
    assert_eq!(snapshot(), first);
}

#[test]
fn closure_check_passes_on_the_double_monopole() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("closure-check", &config("closure.toml"), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("closure.csv")).unwrap();
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn closure_check_fails_with_exit_3_past_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(config("closure.toml")).unwrap().replace("tolerance = 1e-6", "tolerance = 1e-15");
    let cfg = dir.path().join("tight.toml");
    fs::write(&cfg, src).unwrap();
    let o = run_config("closure-check", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("exceeds"));
}

#[test]
fn empty_initials_are_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(config("scatter.toml")).unwrap().replace("j = [2.04, 2.0, 2.5]", "j = []");
    let cfg = dir.path().join("empty.toml");
    fs::write(&cfg, src).unwrap();
    let o = run_config("scatter", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no initial conditions"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_report_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(config("scatter.toml")).unwrap().replace("theta = 1.0", "thetta = 1.0");
    let cfg = dir.path().join("typo.toml");
    fs::write(&cfg, &src).unwrap();
    let o = run_config("scatter", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let line = src.lines().position(|l| l.starts_with("thetta")).unwrap() + 1;
    let err = stderr(&o);
    assert!(err.contains(&format!("line {line}")) && err.contains("thetta"), "{err}");
}

#[test]
fn missing_config_and_wrong_subcommand_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("scatter", &dir.path().join("absent.toml"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run_config("shift", &config("scatter.toml"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scatter"));
}

#[test]
fn singular_approach_exits_3_with_an_event_dump() {
    // |j| below |θ|+|e| crosses M* = 0 away from the critical point
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(config("scatter.toml")).unwrap().replace("j = [2.04, 2.0, 2.5]", "j = [1.9]").replace("alpha = 1.0", "alpha = 2.5");
    let cfg = dir.path().join("below.toml");
    fs::write(&cfg, src).unwrap();
    let o = run_config("scatter", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("singular-approach"), "{}", stderr(&o));
    assert!(dir.path().join("out/manifest.json").exists());
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("brackets.toml");
    let run = |seed: &str, out: &str| {
        let o = lab(&["brackets", "--config", cfg.to_str().unwrap(), "--out", dir.path().join(out).to_str().unwrap(), "--seed", seed]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read_to_string(dir.path().join(out).join("brackets.csv")).unwrap()
    };
    let (a, b, c) = (run("1", "a"), run("1", "b"), run("2", "c"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 1 + 1 + 20);
}

#[test]
fn every_shipped_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (sub, name) in [
        ("simulate", "simulate.toml"),
        ("simulate", "planar.toml"),
        ("capture", "capture.toml"),
        ("brackets", "brackets_planar.toml"),
    ] {
        let o = run_config(sub, &config(name), &dir.path().join(name));
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        assert!(dir.path().join(name).join("manifest.json").exists());
    }
}

#[test]
fn each_subcommand_has_help() {
    for sub in ["simulate", "scatter", "shift", "capture", "closure-check", "brackets"] {
        let o = lab(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let text = String::from_utf8_lossy(&o.stdout);
        assert!(text.contains("--config") && text.contains("--seed") && text.contains("--out"), "{sub}");
    }
}

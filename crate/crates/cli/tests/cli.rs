use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
schema_version = 1
command = "simulate"

[grid]
n = 15

[gamma]
kind = "p_power"
p = 3.0

[beta]
kind = "sign"

[noise]
kind = "additive"
modes = 3
amplitude = 0.5

[initial]
kind = "sine"

[solver]
dt = 1e-3
t_final = 0.01
paths = 3
seed = 5
"#;

fn spdelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spdelab")).args(args).output().expect("binary runs")
}

fn run_config(dir: &Path, command: &str, text: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, text).unwrap();
    let out = dir.join("out");
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    spdelab(&args)
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("out/summary.json")).unwrap()).unwrap()
}

fn error_record(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("out/error.json")).unwrap()).unwrap()
}

#[test]
fn verify_passes_with_built_in_defaults() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = spdelab(&["verify", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(tmp.path());
    assert_eq!(s["status"], "pass");
    assert_eq!(s["command"], "verify");
    assert!(out.join("verify.csv").exists());
}

#[test]
fn small_simulation_writes_every_artifact() {
    let tmp = TempDir::new().unwrap();
    let o = run_config(tmp.path(), "simulate", SMALL, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(tmp.path());
    assert_eq!(s["schema_version"], 1);
    for a in s["artifacts"].as_array().unwrap() {
        assert!(tmp.path().join("out").join(a.as_str().unwrap()).exists(), "{a}");
    }
    let ledger = fs::read_to_string(tmp.path().join("out/ledger.csv")).unwrap();
    assert!(ledger.starts_with("time,dt,kinetic,dissipation,correction,reaction,martingale,"));
    // One path, ten steps.
    assert_eq!(ledger.lines().count(), 11);
}

#[test]
fn unknown_kind_is_a_config_error_naming_the_key() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL.replace("kind = \"sign\"", "kind = \"frobnicate\"");
    let o = run_config(tmp.path(), "simulate", &text, &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_record(tmp.path());
    assert_eq!(e["kind"], "config");
    assert_eq!(e["key"], "beta.kind");
    assert_eq!(e["exit_code"], 2);
}

#[test]
fn unknown_field_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL.replace("seed = 5", "seed = 5\nsead = 6");
    let o = run_config(tmp.path(), "simulate", &text, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(error_record(tmp.path())["key"].as_str().unwrap().starts_with("solver"));
}

#[test]
fn command_mismatch_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let o = run_config(tmp.path(), "depend", SMALL, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(tmp.path())["key"], "command");
}

#[test]
fn picard_interval_too_long_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let text = r#"
schema_version = 1
command = "picard"

[noise]
kind = "multiplicative"
coefficients = [0.5, 0.2]
sigma = { kind = "clip", scale = 1.0 }

[initial]
kind = "sine"

[solver]
dt = 1e-2
t_final = 2.0

[picard]
tau = 2.0
"#;
    let o = run_config(tmp.path(), "picard", text, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(error_record(tmp.path())["key"].as_str().unwrap().starts_with("picard"));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let missing = tmp.path().join("nope.toml");
    let o = spdelab(&["simulate", "--config", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_record(tmp.path())["kind"], "io");
}

#[test]
fn failing_checks_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let text = r#"
schema_version = 1
command = "simulate"

[grid]
n = 31

[initial]
kind = "sine"

[solver]
lambda = 0.5
dt = 1e-3
t_final = 0.01

[oracle]
kind = "heat"
levels = 2

[tolerances]
heat_error = 1e-12
"#;
    let o = run_config(tmp.path(), "simulate", text, &[]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(tmp.path())["status"], "fail");
}

#[test]
fn zero_data_gives_a_zero_trajectory() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL.replace("kind = \"sine\"", "kind = \"zero\"").replace(
        "kind = \"additive\"\nmodes = 3\namplitude = 0.5",
        "kind = \"none\"",
    );
    let o = run_config(tmp.path(), "simulate", &text, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(tmp.path().join("out/trajectory.csv")).unwrap();
    let value = rdr.headers().unwrap().iter().position(|h| h == "value").unwrap();
    let mut rows = 0;
    for r in rdr.records() {
        assert_eq!(r.unwrap()[value].parse::<f64>().unwrap(), 0.0);
        rows += 1;
    }
    assert_eq!(rows, 11 * 15);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    run_config(a.path(), "simulate", SMALL, &[]);
    run_config(b.path(), "simulate", SMALL, &[]);
    for f in ["ledger.csv", "trajectory.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_override_changes_the_sample() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    run_config(a.path(), "simulate", SMALL, &[]);
    run_config(b.path(), "simulate", SMALL, &["--seed", "6"]);
    let read = |d: &TempDir| fs::read(d.path().join("out/trajectory.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
    assert_eq!(summary(b.path())["config"]["solver"]["seed"], 6);
}

#[test]
fn disabled_tables_are_header_only() {
    let tmp = TempDir::new().unwrap();
    let text = format!("{SMALL}\n[output]\nledger_paths = 0\ntrajectory_paths = 0\n");
    let o = run_config(tmp.path(), "simulate", &text, &[]);
    assert_eq!(o.status.code(), Some(0));
    let traj = fs::read_to_string(tmp.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(traj, "time,node,x,y,value,path\n");
    assert_eq!(fs::read_to_string(tmp.path().join("out/ledger.csv")).unwrap().lines().count(), 1);
}

#[test]
fn resolved_config_round_trips() {
    let tmp = TempDir::new().unwrap();
    run_config(tmp.path(), "simulate", SMALL, &[]);
    let first = summary(tmp.path())["config"].clone();
    let cfg = spdelab_cli::parse_config(SMALL).unwrap();
    let again = spdelab_cli::parse_config(&cfg.to_toml()).unwrap();
    assert_eq!(serde_json::to_value(&again).unwrap(), first);
}

#[test]
fn checked_in_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        spdelab_cli::parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 8);
}

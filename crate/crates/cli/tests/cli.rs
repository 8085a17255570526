use std::path::Path;
use std::process::{Command, Output};

fn lindyna(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lindyna"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_csv_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "boyan.cfg",
        "env.name = boyan\nalg.name = td0, dyna-mg\nrun.episodes = 10\nrun.seeds = 3\n",
    );
    let out = dir.path().join("out");
    let result = lindyna(&["run", &cfg, "--out", out.to_str().unwrap(), "--jobs", "2"]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let csv = std::fs::read_to_string(out.join("dyna-mg.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("episode,mean,stderr,n_runs,n_diverged"));
    assert_eq!(lines.count(), 10);
    assert!(out.join("td0.meta").exists());
}

#[test]
fn seeds_override_changes_run_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.cfg", "env.name = boyan\nalg.name = td0\nrun.episodes = 2\n");
    let out = dir.path().join("out");
    let result = lindyna(&["run", &cfg, "--out", out.to_str().unwrap(), "--seeds", "4"]);
    assert!(result.status.success());
    let csv = std::fs::read_to_string(out.join("td0.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",4,0"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "env.name = boyan\nalg.name = td0\nalg.typo = 3\n");
    let result = lindyna(&["run", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&result.stderr).contains("alg.typo"));

    let missing = lindyna(&["run", "/nonexistent/config.cfg"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn run_rejects_grids_and_sweep_accepts_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "grid.cfg",
        "env.name = boyan\nalg.name = td0\nschedule.alpha0 = 0.1, 1\nrun.episodes = 5\nrun.seeds = 2\n",
    );
    let out = dir.path().join("out");
    assert_eq!(lindyna(&["run", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(1));
    let sweep = lindyna(&["sweep", &cfg, "--out", out.to_str().unwrap()]);
    assert!(sweep.status.success());
    assert!(out.join("sweep_summary.csv").exists());
    assert!(String::from_utf8_lossy(&sweep.stdout).contains("best td0"));
}

#[test]
fn strict_exits_with_two_on_divergence() {
    let dir = tempfile::tempdir().unwrap();
    // A constant step of 50 on Boyan features overshoots and blows up.
    let cfg = write_config(
        dir.path(),
        "div.cfg",
        "env.name = boyan\nalg.name = td0\nschedule.mode = constant\nschedule.alpha0 = 50\nrun.episodes = 20\nrun.seeds = 2\n",
    );
    let out = dir.path().join("out");
    let lenient = lindyna(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(lenient.status.success());
    let strict = lindyna(&["run", &cfg, "--out", out.to_str().unwrap(), "--strict"]);
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn verify_passes() {
    let result = lindyna(&["verify"]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 4);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fclloop(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fclloop"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FCLLOOP_CONFIG")
        .output()
        .unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/replay")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_is_deterministic_and_verifiable() {
    let dir = tempfile::tempdir().unwrap();
    let a = fclloop(&["simulate", "--am", "builtin:reference_good", "--seed", "3"], dir.path());
    let b = fclloop(&["simulate", "--am", "builtin:reference_good", "--seed", "3"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let o = fclloop(&["simulate", "--am", "builtin:faulty_never_attack", "--out", "t.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), r#"{"win":false,"dragon_hp_end":50,"steps_survived":30,"wheat_end":119}"#);

    let o = fclloop(&["verify", "--trace", "t.json", "--variant", "metrics", "--out", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("Verification failed on 1 of 1 test runs."));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["accepted"], false);
}

#[test]
fn simulate_reports_protocol_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let o = fclloop(&["simulate", "--am", "builtin:faulty_crash", "--out", "t.json"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("KeyError"));
}

#[test]
fn verify_suite_accepts_the_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = fclloop(&["verify", "--suite", "--am", "builtin:reference_good", "--jobs", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("Verification passed on all 5 test runs."));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.fcl"), "constraint \"c\" at start:\n  F[>=1, 3](x.hp > 0)\n").unwrap();
    let o = fclloop(&["verify", "--suite", "--am", "builtin:reference_good", "--constraints", "bad.fcl"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.fcl:2:"), "{}", String::from_utf8_lossy(&o.stderr));

    assert_eq!(fclloop(&["verify", "--trace", "missing.json"], dir.path()).status.code(), Some(2));
    assert_eq!(fclloop(&["simulate", "--am", "builtin:nope"], dir.path()).status.code(), Some(2));
    assert_eq!(fclloop(&["frobnicate"], dir.path()).status.code(), Some(2));
    std::fs::write(dir.path().join("c.toml"), "horizn = 3\n").unwrap();
    assert_eq!(
        fclloop(&["--config", "c.toml", "simulate", "--am", "builtin:reference_good"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn config_changes_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "horizon = 5\n").unwrap();
    let o = fclloop(
        &["--config", "c.toml", "simulate", "--am", "builtin:faulty_never_attack", "--out", "t.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(r#""steps_survived":5"#), "{}", stdout(&o));
}

#[test]
fn vibe_with_replay_converges() {
    let dir = tempfile::tempdir().unwrap();
    let gen = format!("replay:{}", fixture("seq3"));
    let o = fclloop(&["vibe", "--generator", &gen, "--run-dir", "run", "--jobs", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("converged after 3 of 10 iterations"));
    assert!(dir.path().join("run/iter-3/report.txt").is_file());

    let o = fclloop(&["vibe", "--generator", &gen, "--run-dir", "short", "--max-iter", "2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn vibe_without_a_reachable_generator_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "[generator]\nbase_url = \"http://127.0.0.1:9\"\nmodel = \"m\"\nauth_env = \"FCLLOOP_TEST_NO_SUCH_TOKEN\"\n",
    )
    .unwrap();
    let o = fclloop(&["--config", "c.toml", "vibe", "--generator", "http", "--run-dir", "run"], dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn experiment_writes_csv_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let gen = format!("replay:{}", fixture("seq3"));
    let o = fclloop(
        &[
            "experiment", "--generator", &gen, "--attempts", "1", "--variants", "generic,full",
            "--out", "out/results.csv", "--runs-dir", "runs",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    assert_eq!(csv, "variant,attempt,converged,iterations\ngeneric,1,true,3\nfull,1,true,3\n");
    let hist: PathBuf = dir.path().join("out/results.histogram.json");
    let hist: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(hist).unwrap()).unwrap();
    assert_eq!(hist, serde_json::json!({"full": {"3": 1}, "generic": {"3": 1}}));
}

use std::fs;
use std::process::Command;

fn cil() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cil"))
}

fn write_config(dir: &std::path::Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn schema_violation_reports_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"env": {"env": "plane_ticket", "k": 1, "T": 10}, "train": {"learning_rate": 0.1}}"#,
    );
    let out = cil().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("train"), "{err}");
    assert!(err.contains("learning_rate"), "{err}");
}

#[test]
fn wrong_type_reports_nested_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"env": {"env": "plane_ticket", "k": "one", "T": 10}}"#);
    let out = cil().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("env.k"));
}

#[test]
fn run_prints_csv_and_seed_override_applies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"env": {"env": "plane_ticket", "k": 1, "T": 30}, "methods": ["bc", "iv_residual"],
            "n_traj": 3, "eval_episodes": 2, "seeds": [0, 1], "train": {"epochs": 1}, "row_diagnostics": false}"#,
    );
    let out = cil()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .args(["--seed", "7", "--jobs", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines[0].starts_with("method,env,k_true,k_given,seed"));
    assert_eq!(lines.len(), 1 + 4);
    assert!(lines[1..].iter().any(|l| l.contains(",7,")));
    assert!(!lines[1..].iter().any(|l| l.split(',').nth(4) == Some("0")));
}

#[test]
fn sweep_requires_axis_and_anchors_print() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"env": {"env": "plane_ticket", "k": 1, "T": 30}, "methods": ["bc"], "n_traj": 3, "eval_episodes": 2}"#,
    );
    let out = cil().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());

    let out = cil().args(["anchors", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("k=1\tJ_random="), "{stdout}");
}

#[test]
fn profile_flag_changes_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"env": {"env": "plane_ticket", "k": 1, "T": 20}, "methods": ["bc"], "n_traj": 2, "K": 1,
            "eval_episodes": 1, "train": {"epochs": 1}, "row_diagnostics": false}"#,
    );
    for profile in ["desk", "paper_defaults"] {
        let out = cil()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join("out"))
            .args(["--profile", profile])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read_dir(dir.path().join("out")).unwrap().count(), 2);
}

use std::fs;
use std::path::Path;

use cil_core::eval::csv_out::read_rows;
use cil_core::experiment::manifest::Manifest;
use cil_core::experiment::{self, ExperimentConfig, ResolvedConfig, RunOptions};

fn resolve(text: &str) -> ResolvedConfig {
    ExperimentConfig::from_json(text).unwrap().resolve().unwrap()
}

#[test]
fn documented_examples_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples");
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let text = fs::read_to_string(&p).unwrap();
        let cfg = ExperimentConfig::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        cfg.resolve().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert!(n >= 3);
}

#[test]
fn zero_noise_bc_matches_clean_expert() {
    let cfg = resolve(
        r#"{"env": {"env": "linear_gaussian", "k": 1, "T": 100,
                    "params": {"sigma_eps": 0.0, "sigma_o": 0.0}},
            "methods": ["bc"], "n_traj": 10, "eval_episodes": 10}"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let s = experiment::run(&cfg, dir.path(), RunOptions::default()).unwrap();
    assert!(!s.failed(), "{:?}", s.manifest.failures);
    let rows = read_rows(&s.dir.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    let sr = rows[0].scaled_reward.unwrap();
    assert!((sr - 1.0).abs() < 0.02, "scaled reward {sr}");
    // rewards lie in [0, 1], so T bounds any gap
    assert!(rows[0].gap_bound.unwrap() < 1e-2 * 100.0, "{:?}", rows[0].gap_bound);
}

#[test]
fn sweep_row_count_is_cartesian() {
    let cfg = resolve(
        r#"{"env": {"env": "plane_ticket", "k": 1, "T": 40},
            "methods": ["dml_il", "iv_residual", "bc", "bc_seq"], "n_traj": 4, "eval_episodes": 2,
            "seeds": [0, 1, 2, 3, 4], "sweep": {"axis": "k", "values": [1, 5, 10, 20]},
            "train": {"epochs": 1}, "row_diagnostics": false}"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let s = experiment::sweep(&cfg, dir.path(), RunOptions::default()).unwrap();
    assert!(!s.failed(), "{:?}", s.manifest.failures);
    let rows = read_rows(&s.dir.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 80);
    assert_eq!(s.manifest.rows_written, 80);
    for k in [1, 5, 10, 20] {
        assert_eq!(rows.iter().filter(|r| r.k_true == k && r.k_given == k).count(), 20);
    }
}

#[test]
fn resume_after_interruption_reproduces_rows() {
    let cfg = resolve(
        r#"{"env": {"env": "plane_ticket", "k": 3, "T": 40},
            "methods": ["dml_il", "bc"], "n_traj": 4, "eval_episodes": 3,
            "seeds": [0, 1], "sweep": {"axis": "k_given", "values": [3, 1]},
            "train": {"epochs": 2}}"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let full = experiment::sweep(&cfg, dir.path(), RunOptions::default()).unwrap();
    let csv = full.dir.join("results.csv");
    let expected = fs::read(&csv).unwrap();

    // simulate a kill after three cells
    let keep = 3;
    let text = String::from_utf8(expected.clone()).unwrap();
    let truncated: String = text.split_inclusive('\n').take(keep + 1).collect();
    fs::write(&csv, truncated).unwrap();
    let mpath = full.dir.join("manifest.json");
    let mut m = Manifest::load(&mpath).unwrap();
    m.completed.truncate(keep);
    m.rows_written = keep;
    m.finished_at = None;
    m.save(&mpath).unwrap();

    let resumed = experiment::sweep(&cfg, dir.path(), RunOptions { resume: true, jobs: 0 }).unwrap();
    assert_eq!(resumed.manifest.rows_written, 8);
    assert_eq!(fs::read(&csv).unwrap(), expected);
}

#[test]
fn rerun_without_resume_starts_fresh() {
    let cfg = resolve(
        r#"{"env": {"env": "plane_ticket", "k": 1, "T": 30}, "methods": ["bc"],
            "n_traj": 3, "eval_episodes": 2, "train": {"epochs": 1}, "row_diagnostics": false}"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let a = experiment::run(&cfg, dir.path(), RunOptions::default()).unwrap();
    let first = fs::read(a.dir.join("results.csv")).unwrap();
    let b = experiment::run(&cfg, dir.path(), RunOptions { resume: false, jobs: 1 }).unwrap();
    assert_eq!(fs::read(b.dir.join("results.csv")).unwrap(), first);
    assert_eq!(read_rows(&b.dir.join("results.csv")).unwrap().len(), 1);
}

#[test]
fn artifacts_carry_the_config_hash() {
    let cfg = resolve(
        r#"{"env": {"env": "linear_gaussian", "k": 1, "T": 40}, "methods": ["dml_il"],
            "n_traj": 4, "eval_episodes": 3, "train": {"epochs": 2}}"#,
    );
    let other = resolve(
        r#"{"env": {"env": "linear_gaussian", "k": 1, "T": 41}, "methods": ["dml_il"],
            "n_traj": 4, "eval_episodes": 3, "train": {"epochs": 2}}"#,
    );
    let hash = cfg.hash().unwrap();
    assert_ne!(hash, other.hash().unwrap());
    let dir = tempfile::tempdir().unwrap();
    let s = experiment::run(&cfg, dir.path(), RunOptions::default()).unwrap();
    assert!(s.dir.ends_with(&hash));
    for sub in ["checkpoints", "diagnostics"] {
        for e in fs::read_dir(s.dir.join(sub)).unwrap() {
            let text = fs::read_to_string(e.unwrap().path()).unwrap();
            assert!(text.contains(&hash), "{sub} artifact lacks the hash");
        }
    }
    assert_eq!(Manifest::load(&s.dir.join("manifest.json")).unwrap().config_hash, hash);
}

#[test]
fn diagnose_flags_missing_observable_confounder() {
    let cfg = resolve(
        r#"{"env": {"env": "linear_gaussian", "k": 1, "T": 60, "params": {"beta": 0.0}},
            "methods": ["dml_il"], "n_traj": 6, "eval_episodes": 3, "train": {"epochs": 3},
            "diagnose": {"permutations": 50, "gap_episodes": 10, "skip_horizon": true}}"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let (_, reports) = experiment::diagnose(&cfg, dir.path(), RunOptions::default()).unwrap();
    let d = reports[0].diagnostics.as_ref().unwrap();
    assert!(d.no_observable_confounder);
    assert_eq!(d.delta_hat, 0.0);
}

#[test]
fn diagnose_on_plane_ticket_is_partial() {
    let cfg = resolve(
        r#"{"env": {"env": "plane_ticket", "k": 1, "T": 40}, "methods": ["bc"],
            "n_traj": 4, "eval_episodes": 2, "train": {"epochs": 1},
            "diagnose": {"permutations": 20, "skip_horizon": true}}"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let (_, reports) = experiment::diagnose(&cfg, dir.path(), RunOptions::default()).unwrap();
    assert!(reports[0].diagnostics.is_none());
    assert!(!reports[0].flags.is_empty());
}

//! Config-driven pipelines: run, sweep, diagnose and anchors.

pub mod config;
pub mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{DiagnoseSpec, ExperimentConfig, Profile, ResolvedConfig, SweepAxis, SweepSpec, TrainOverrides};
pub use manifest::{Failure, Manifest};

use crate::approx::{Checkpoint, TrainConfig};
use crate::baselines::{train_bc, train_bc_seq, train_iv_residual, StatePolicy};
use crate::cmr::moment::cmr_error;
use crate::cmr::{
    dml_il_train, gap_bound_diagnostic, ill_posedness_lb, select_horizon, CmrDiagnostics, CmrEstimate, HistoryPolicy,
    HorizonOptions, HorizonSelection, Method, Policy,
};
use crate::demos::{extract_windows, generate_demonstrations, DemonstrationSet};
use crate::envs::{Env, EnvKind, EnvSpec};
use crate::eval::{evaluate_policy, gap_report, measure_gap, reward_anchors, CsvAppender, EvalOptions, ResultRow, RewardAnchors};
use crate::rng::derive_seed;
use crate::{par, Error, Result};

/// A trained imitator of any method.
#[derive(Clone, Debug)]
pub enum Trained {
    History(HistoryPolicy),
    State(StatePolicy),
}

impl Trained {
    pub fn policy(&self) -> &dyn Policy {
        match self {
            Trained::History(p) => p,
            Trained::State(p) => p,
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        match self {
            Trained::History(p) => p.checkpoint(),
            Trained::State(p) => p.checkpoint(),
        }
    }
}

/// Trains `method` on the censored view of `demos`.
pub fn train_method(
    method: Method,
    demos: &DemonstrationSet,
    k: usize,
    lookback: usize,
    folds: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Trained> {
    let demos = demos.censored();
    Ok(match method {
        Method::DmlIl => Trained::History(dml_il_train(&demos, k, lookback, folds, cfg, seed)?.policy),
        Method::Bc => Trained::State(train_bc(&demos, cfg, seed)?),
        Method::BcSeq => Trained::History(train_bc_seq(&demos, lookback, cfg, seed)?),
        Method::IvResidual => Trained::State(train_iv_residual(&demos, k, lookback, folds, cfg, seed)?),
    })
}

/// Seeds of the pieces of one cell.
pub fn demo_seed(seed: u64) -> u64 {
    derive_seed(seed, "demos", 0)
}
pub fn train_seed(seed: u64, method: Method) -> u64 {
    derive_seed(seed, method.as_str(), 0)
}
pub fn holdout_seed(seed: u64) -> u64 {
    derive_seed(seed, "holdout", 0)
}

/// One point of the experiment grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub method: Method,
    pub k_true: usize,
    pub k_given: usize,
    pub seed: u64,
}

impl Cell {
    pub fn id(&self) -> String {
        format!("{}-k{}-kg{}-s{}", self.method.as_str(), self.k_true, self.k_given, self.seed)
    }
}

/// Per-cell diagnostics written next to the checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellDiagnostics {
    pub config_hash: String,
    pub cell: Cell,
    pub cmr: Option<CmrEstimate>,
    pub bound: Option<CmrDiagnostics>,
    pub flags: Vec<String>,
}

struct CellOutput {
    row: ResultRow,
    checkpoint: Checkpoint,
    diagnostics: CellDiagnostics,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub resume: bool,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

/// Where a finished pipeline left its artifacts.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl RunSummary {
    pub fn failed(&self) -> bool {
        !self.manifest.failures.is_empty()
    }
}

fn env_for(cfg: &ResolvedConfig, k_true: usize) -> EnvSpec {
    let mut spec = cfg.env.clone();
    spec.k = k_true;
    spec
}

fn eval_options(cfg: &ResolvedConfig, warmup: usize) -> EvalOptions {
    EvalOptions {
        episodes: cfg.eval_episodes,
        warmup,
        seed: cfg.eval_seed,
    }
}

pub fn cells(cfg: &ResolvedConfig) -> Vec<Cell> {
    let points: Vec<(usize, usize)> = match &cfg.sweep {
        None => vec![(cfg.env.k, cfg.k_given)],
        Some(s) => s
            .values
            .iter()
            .map(|&v| match s.axis {
                SweepAxis::K => (v, v),
                SweepAxis::KGiven => (cfg.env.k, v),
            })
            .collect(),
    };
    let mut out = Vec::new();
    for (k_true, k_given) in points {
        for &method in &cfg.methods {
            for &seed in &cfg.seeds {
                out.push(Cell {
                    method,
                    k_true,
                    k_given,
                    seed,
                });
            }
        }
    }
    out
}

/// Shared warm-up: the longest look-back in the grid.
fn grid_warmup(cfg: &ResolvedConfig, cells: &[Cell]) -> usize {
    cells.iter().map(|c| cfg.lookback_for(c.k_given)).max().unwrap_or(1)
}

fn anchors_path(dir: &Path, spec: &EnvSpec) -> Result<PathBuf> {
    let key = serde_json::to_string(spec)?;
    let h = hex::encode(sha2::Sha256::digest(key.as_bytes()));
    Ok(dir.join(format!("anchors-{}.json", &h[..12])))
}

use sha2::Digest as _;

/// Reward anchors for `spec`, cached in `dir`.
pub fn cached_anchors(dir: &Path, spec: &EnvSpec, opts: &EvalOptions) -> Result<RewardAnchors> {
    let path = anchors_path(dir, spec)?;
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(a) = serde_json::from_str::<RewardAnchors>(&text) {
            if a.options == *opts {
                return Ok(a);
            }
        }
    }
    let a = reward_anchors(&Env::new(spec.clone())?, opts)?;
    fs::write(&path, serde_json::to_string_pretty(&a)? + "\n")?;
    Ok(a)
}

fn run_cell(cfg: &ResolvedConfig, hash: &str, cell: &Cell, anchors: &RewardAnchors, warmup: usize) -> Result<CellOutput> {
    let started = Instant::now();
    let spec = env_for(cfg, cell.k_true);
    let env = Env::new(spec.clone())?;
    let lookback = cfg.lookback_for(cell.k_given);
    let demos = generate_demonstrations(&spec, cfg.n_traj, spec.horizon, demo_seed(cell.seed))?;
    let trained = train_method(
        cell.method,
        &demos,
        cell.k_given,
        lookback,
        cfg.folds,
        &cfg.train,
        train_seed(cell.seed, cell.method),
    )?;
    let policy = trained.policy();
    let report = evaluate_policy(&env, policy, &eval_options(cfg, warmup), anchors)?;
    let mut diag = CellDiagnostics {
        config_hash: hash.to_string(),
        cell: cell.clone(),
        cmr: None,
        bound: None,
        flags: Vec::new(),
    };
    let mut gap = None;
    if cfg.row_diagnostics {
        let n_hold = (cfg.n_traj / 2).max(2);
        let holdout = generate_demonstrations(&spec, n_hold, spec.horizon, holdout_seed(cell.seed))?;
        let windows = extract_windows(&holdout.censored(), cell.k_given, lookback)?;
        diag.cmr = Some(cmr_error(policy, &windows, &cfg.train, derive_seed(cell.seed, "cmr", 0))?);
        if env.kind() == EnvKind::LinearGaussian {
            let d = gap_bound_diagnostic(policy, &env, &holdout, cell.k_given, &cfg.train, derive_seed(cell.seed, "bound", 0))?;
            let g = measure_gap(&env, policy, cfg.diagnose.gap_episodes, derive_seed(cfg.eval_seed, "gap", 0))?;
            let merged = gap_report(report.clone(), d, &g);
            gap = Some((merged.diagnostics.gap_bound, g.gap));
            diag.bound = Some(merged.diagnostics);
        } else {
            diag.flags.push(format!("gap bound unsupported on {}", env.kind().as_str()));
        }
    }
    let row = ResultRow {
        method: cell.method.as_str().into(),
        env: spec.env.as_str().into(),
        k_true: cell.k_true,
        k_given: cell.k_given,
        seed: cell.seed,
        avg_reward: report.avg_reward,
        scaled_reward: report.scaled_reward,
        action_mse: report.action_mse,
        cmr_error: diag.cmr.as_ref().map(|c| c.cmr_error),
        gap_bound: gap.map(|g| g.0),
        gap_measured: gap.map(|g| g.1),
        runtime_s: cfg.timing.then(|| started.elapsed().as_secs_f64()),
    };
    Ok(CellOutput {
        row,
        checkpoint: Checkpoint {
            config_hash: Some(hash.to_string()),
            ..trained.checkpoint()
        },
        diagnostics: diag,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Prepares `out/<config_hash>`, honouring `resume`.
fn prepare_dir(cfg: &ResolvedConfig, out: &Path, resume: bool) -> Result<(PathBuf, String, Manifest)> {
    let hash = cfg.hash()?;
    let dir = out.join(&hash);
    fs::create_dir_all(dir.join("checkpoints"))?;
    fs::create_dir_all(dir.join("diagnostics"))?;
    let manifest_path = dir.join("manifest.json");
    let previous = if resume { Manifest::load(&manifest_path).ok() } else { None };
    let manifest = match previous {
        Some(m) if m.config_hash == hash => m.resumed(),
        _ => {
            for stale in ["results.csv", "manifest.json"] {
                let p = dir.join(stale);
                if p.exists() {
                    fs::remove_file(p)?;
                }
            }
            Manifest::new(&hash, cfg.profile)
        }
    };
    write_json(&dir.join("config.json"), cfg)?;
    Ok((dir, hash, manifest))
}

fn execute(cfg: &ResolvedConfig, out: &Path, opts: RunOptions) -> Result<RunSummary> {
    let (dir, hash, mut manifest) = prepare_dir(cfg, out, opts.resume)?;
    let manifest_path = dir.join("manifest.json");
    let grid = cells(cfg);
    let warmup = grid_warmup(cfg, &grid);
    let mut anchors = Vec::new();
    for c in &grid {
        if !anchors.iter().any(|(k, _)| *k == c.k_true) {
            let a = cached_anchors(&dir, &env_for(cfg, c.k_true), &eval_options(cfg, warmup))?;
            anchors.push((c.k_true, a));
        }
    }
    let anchor_for = |k: usize| &anchors.iter().find(|(kk, _)| *kk == k).expect("anchors computed per k").1;
    let todo: Vec<Cell> = grid.into_iter().filter(|c| !manifest.completed.contains(&c.id())).collect();
    let mut csv = CsvAppender::open(&dir.join("results.csv"))?;
    manifest.save(&manifest_path)?;
    let chunk = if opts.jobs == 0 { rayon_width() } else { opts.jobs };
    for batch in todo.chunks(chunk.max(1)) {
        let outputs = par::with_jobs(opts.jobs, || {
            par::map_slice(batch, |c| run_cell(cfg, &hash, c, anchor_for(c.k_true), warmup))
        });
        for (cell, out) in batch.iter().zip(outputs) {
            let id = cell.id();
            match out {
                Ok(o) => {
                    write_json(&dir.join("checkpoints").join(format!("{id}.json")), &o.checkpoint)?;
                    write_json(&dir.join("diagnostics").join(format!("{id}.json")), &o.diagnostics)?;
                    csv.append(&o.row)?;
                    manifest.rows_written += 1;
                    manifest.completed.push(id);
                }
                Err(e) => {
                    fs::write(dir.join(format!("{id}.failed")), format!("{e}\n"))?;
                    manifest.failures.push(Failure { cell: id, error: e.to_string() });
                }
            }
            manifest.save(&manifest_path)?;
        }
    }
    manifest.finish();
    manifest.save(&manifest_path)?;
    Ok(RunSummary { dir, manifest })
}

fn rayon_width() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Per seed and method: demos, training, evaluation, one CSV row.
pub fn run(cfg: &ResolvedConfig, out: &Path, opts: RunOptions) -> Result<RunSummary> {
    if cfg.sweep.is_some() {
        return Err(Error::InvalidConfig("sweep: use the sweep pipeline for configs with a sweep axis".into()));
    }
    execute(cfg, out, opts)
}

/// Cartesian product of sweep axis, methods and seeds.
pub fn sweep(cfg: &ResolvedConfig, out: &Path, opts: RunOptions) -> Result<RunSummary> {
    if cfg.sweep.is_none() {
        return Err(Error::InvalidConfig("sweep: missing sweep axis".into()));
    }
    execute(cfg, out, opts)
}

/// Diagnostics of one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub config_hash: String,
    pub seed: u64,
    pub method: Method,
    pub cmr: CmrEstimate,
    pub diagnostics: Option<CmrDiagnostics>,
    pub horizon: Option<HorizonSelection>,
    pub flags: Vec<String>,
}

fn diagnose_seed(cfg: &ResolvedConfig, hash: &str, seed: u64) -> Result<DiagnoseReport> {
    let spec = cfg.env.clone();
    let env = Env::new(spec.clone())?;
    let k = cfg.k_given;
    let lookback = cfg.lookback_for(k);
    let demos = generate_demonstrations(&spec, cfg.n_traj, spec.horizon, demo_seed(seed))?;
    let holdout = generate_demonstrations(&spec, (cfg.n_traj / 2).max(2), spec.horizon, holdout_seed(seed))?;
    let trained: Vec<(Method, Trained)> = cfg
        .methods
        .iter()
        .map(|&m| Ok((m, train_method(m, &demos, k, lookback, cfg.folds, &cfg.train, train_seed(seed, m))?)))
        .collect::<Result<_>>()?;
    let (method, main) = &trained[0];
    let policy = main.policy();
    let windows = extract_windows(&holdout.censored(), k, lookback)?;
    let cmr = cmr_error(policy, &windows, &cfg.train, derive_seed(seed, "cmr", 0))?;
    let mut flags = Vec::new();
    let diagnostics = if env.kind() == EnvKind::LinearGaussian {
        let mut d = gap_bound_diagnostic(policy, &env, &holdout, k, &cfg.train, derive_seed(seed, "bound", 0))?;
        let g = measure_gap(&env, policy, cfg.diagnose.gap_episodes, derive_seed(cfg.eval_seed, "gap", 0))?;
        d.gap_measured = Some(g.gap);
        d.gap_se = Some(g.se);
        let candidates: Vec<&dyn Policy> = trained.iter().map(|(_, t)| t.policy()).collect();
        let nu = ill_posedness_lb(&candidates, &env, &holdout, k, lookback, &cfg.train, derive_seed(seed, "nu", 0))?;
        d.nu_lb = Some(nu.nu_lb);
        if nu.infinite {
            d.flags.push("infinite_ill_posedness".into());
        }
        Some(d)
    } else {
        flags.push(format!("oracle quantities unsupported on {}", env.kind().as_str()));
        None
    };
    let horizon = if cfg.diagnose.skip_horizon {
        None
    } else {
        let k_max = cfg.diagnose.k_max.unwrap_or(k + 2);
        let sel = select_horizon(
            &demos.censored(),
            k_max,
            cfg.diagnose.significance,
            &cfg.train,
            HorizonOptions {
                permutations: cfg.diagnose.permutations,
                extra_lookback: 3,
            },
            derive_seed(seed, "horizon", 0),
        )?;
        if sel.failed {
            flags.push("no candidate horizon passed the independence test".into());
        }
        Some(sel)
    };
    let diagnostics = diagnostics.map(|mut d| {
        if let Some(h) = &horizon {
            d.k_selected = Some(h.k_hat);
            d.p_values = h.p_values.clone();
        }
        d
    });
    Ok(DiagnoseReport {
        config_hash: hash.to_string(),
        seed,
        method: *method,
        cmr,
        diagnostics,
        horizon,
        flags,
    })
}

/// Writes `diagnostics/diagnose-s<seed>.json` per seed.
pub fn diagnose(cfg: &ResolvedConfig, out: &Path, opts: RunOptions) -> Result<(RunSummary, Vec<DiagnoseReport>)> {
    let (dir, hash, mut manifest) = prepare_dir(cfg, out, false)?;
    let manifest_path = dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    let results = par::with_jobs(opts.jobs, || par::map_slice(&cfg.seeds, |&s| diagnose_seed(cfg, &hash, s)));
    let mut reports = Vec::new();
    for (seed, r) in cfg.seeds.iter().zip(results) {
        let id = format!("diagnose-s{seed}");
        match r {
            Ok(rep) => {
                write_json(&dir.join("diagnostics").join(format!("{id}.json")), &rep)?;
                manifest.completed.push(id);
                manifest.rows_written += 1;
                reports.push(rep);
            }
            Err(e) => {
                fs::write(dir.join(format!("{id}.failed")), format!("{e}\n"))?;
                manifest.failures.push(Failure { cell: id, error: e.to_string() });
            }
        }
    }
    manifest.finish();
    manifest.save(&manifest_path)?;
    Ok((RunSummary { dir, manifest }, reports))
}

/// Computes (or reads) the anchors of every env in the grid.
pub fn anchors(cfg: &ResolvedConfig, out: &Path) -> Result<Vec<(usize, RewardAnchors)>> {
    let hash = cfg.hash()?;
    let dir = out.join(hash);
    fs::create_dir_all(&dir)?;
    let grid = cells(cfg);
    let opts = eval_options(cfg, grid_warmup(cfg, &grid));
    let mut ks: Vec<usize> = grid.iter().map(|c| c.k_true).collect();
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter()
        .map(|k| Ok((k, cached_anchors(&dir, &env_for(cfg, k), &opts)?)))
        .collect()
}

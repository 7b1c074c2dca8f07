//! DML-IL with K-fold cross-fitting.

use super::policy::{HistoryPolicy, Method};
use super::rollout::{fit_rollout_model_with, RolloutModel, WindowScalers};
use super::stage2::{fit_policy_stage2_parts, PolicyInput, Stage2Part};
use crate::approx::TrainConfig;
use crate::demos::folds::complement;
use crate::demos::{extract_windows, kfold_partition, DemonstrationSet, WindowSet};
use crate::par;
use crate::rng::{derive_rng, derive_seed};
use crate::Result;

#[derive(Clone, Debug)]
pub struct DmlFit {
    pub policy: HistoryPolicy,
    /// One model per fold; model `i` was fit on the complement of `folds[i]`.
    pub rollouts: Vec<RolloutModel>,
    pub folds: Vec<Vec<usize>>,
    pub rollout_traces: Vec<Vec<f64>>,
    pub policy_trace: Vec<f64>,
}

/// Fits the roll-out models of every fold and returns the per-fold instrument
/// sets they complete.
pub fn cross_fit_rollouts(
    windows: &WindowSet,
    n_traj: usize,
    folds_k: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(Vec<RolloutModel>, Vec<Vec<f64>>, Vec<Vec<usize>>, Vec<WindowSet>)> {
    let scalers = WindowScalers::fit(windows)?;
    let folds = if folds_k == 1 {
        vec![(0..n_traj).collect::<Vec<_>>()]
    } else {
        kfold_partition(n_traj, folds_k, derive_seed(seed, "folds", 0))?
    };
    let fitted = par::try_map_range(folds.len(), |i| {
        // a single fold both trains and consumes its model
        let train = if folds_k == 1 {
            windows.clone()
        } else {
            windows.select(&complement(n_traj, &folds[i]))
        };
        fit_rollout_model_with(&train, &scalers, cfg, &mut derive_rng(seed, "rollout", i as u64))
    })?;
    let (models, traces) = fitted.into_iter().unzip();
    let held: Vec<WindowSet> = if folds_k == 1 {
        vec![windows.clone()]
    } else {
        folds.iter().map(|f| windows.select(f)).collect()
    };
    Ok((models, traces, folds, held))
}

pub(crate) fn two_stage(
    demos: &DemonstrationSet,
    k: usize,
    lookback: usize,
    folds_k: usize,
    input: PolicyInput,
    method: Method,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<DmlFit> {
    let windows = extract_windows(demos, k, lookback)?;
    let (rollouts, rollout_traces, folds, held) = cross_fit_rollouts(&windows, demos.len(), folds_k, cfg, seed)?;
    let parts: Vec<Stage2Part<'_>> = rollouts
        .iter()
        .zip(&held)
        .map(|(rollout, instruments)| Stage2Part { rollout, instruments })
        .collect();
    let fit = fit_policy_stage2_parts(&parts, input, method, cfg, &mut derive_rng(seed, "stage2", 0))?;
    Ok(DmlFit {
        policy: fit.params,
        rollouts,
        folds,
        rollout_traces,
        policy_trace: fit.trace,
    })
}

/// DML-IL. `folds_k = 1` is the plain two-stage fit on the whole dataset.
pub fn dml_il_train(
    demos: &DemonstrationSet,
    k: usize,
    lookback: usize,
    folds_k: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<DmlFit> {
    two_stage(demos, k, lookback, folds_k, PolicyInput::History, Method::DmlIl, cfg, seed)
}

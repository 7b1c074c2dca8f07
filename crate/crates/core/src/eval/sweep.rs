//! Misspecified-horizon study: DML-IL trained with a given `k̄` on data whose
//! true horizon is `k`.

use serde::{Deserialize, Serialize};

use super::{evaluate_policy, reward_anchors, EvalOptions};
use crate::approx::TrainConfig;
use crate::cmr::Method;
use crate::demos::generate_demonstrations;
use crate::envs::{Env, EnvSpec};
use crate::experiment::train_method;
use crate::rng::derive_seed;
use crate::{par, stats};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub n_traj: usize,
    pub folds: usize,
    /// Look-back is `k̄ + extra_lookback`.
    pub extra_lookback: usize,
    pub eval: EvalOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisspecCell {
    pub k_given: usize,
    pub seed: u64,
    pub scaled_reward: f64,
    pub action_mse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisspecSummary {
    pub k_given: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisspecTable {
    pub k_true: usize,
    pub cells: Vec<MisspecCell>,
    pub summary: Vec<MisspecSummary>,
}

impl MisspecTable {
    /// `k̄ | mean (std)` lines.
    pub fn render(&self) -> String {
        let mut out = format!("misspecified k (true k={})\tscaled reward\n", self.k_true);
        for s in &self.summary {
            out.push_str(&format!("{}\t{:.4} ({:.4})\n", s.k_given, s.mean, s.std));
        }
        out
    }
}

/// Trains and evaluates DML-IL for every `(k̄, seed)`. Demonstrations depend
/// on the seed only, so every `k̄` sees the same data.
pub fn misspecification_sweep(
    env_spec: &EnvSpec,
    given_ks: &[usize],
    cfg: &TrainConfig,
    seeds: &[u64],
    settings: &SweepSettings,
) -> Result<MisspecTable> {
    if seeds.len() < 2 {
        return Err(Error::InvalidConfig("the sweep aggregates over at least two seeds".into()));
    }
    if let Some(&bad) = given_ks.iter().find(|&&k| k == 0 || k > env_spec.k) {
        return Err(Error::InvalidConfig(format!("given k {bad} outside [1, {}]", env_spec.k)));
    }
    let env = Env::new(env_spec.clone())?;
    let anchors = reward_anchors(&env, &settings.eval)?;
    let jobs: Vec<(usize, u64)> = given_ks
        .iter()
        .flat_map(|&k| seeds.iter().map(move |&s| (k, s)))
        .collect();
    let cells = par::try_map_range(jobs.len(), |j| {
        let (k_given, seed) = jobs[j];
        let demos = generate_demonstrations(env_spec, settings.n_traj, env_spec.horizon, derive_seed(seed, "demos", 0))?;
        let trained = train_method(
            Method::DmlIl,
            &demos,
            k_given,
            k_given + settings.extra_lookback,
            settings.folds,
            cfg,
            derive_seed(seed, "train", 0),
        )?;
        let rep = evaluate_policy(&env, trained.policy(), &settings.eval, &anchors)?;
        Ok::<_, Error>(MisspecCell {
            k_given,
            seed,
            scaled_reward: rep.scaled_reward.unwrap_or(f64::NAN),
            action_mse: rep.action_mse,
        })
    })?;
    let summary = given_ks
        .iter()
        .map(|&k| {
            let v: Vec<f64> = cells.iter().filter(|c| c.k_given == k).map(|c| c.scaled_reward).collect();
            MisspecSummary {
                k_given: k,
                mean: stats::mean(&v),
                std: stats::std_dev(&v),
                median: stats::median(&v),
            }
        })
        .collect();
    Ok(MisspecTable {
        k_true: env_spec.k,
        cells,
        summary,
    })
}

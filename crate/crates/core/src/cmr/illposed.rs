//! Candidate-set lower bound on the ill-posedness `ν(Π, k)`.

use serde::{Deserialize, Serialize};

use super::moment::cmr_error;
use super::policy::{predict_windows, Policy};
use crate::approx::TrainConfig;
use crate::demos::{extract_windows, DemonstrationSet};
use crate::envs::Env;
use crate::rng::derive_seed;
use crate::stats;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IllPosedness {
    /// `max_π ‖π_E - π‖₂ / ε(π)` over admissible candidates.
    pub nu_lb: f64,
    /// Per-candidate ratio; `None` for candidates equal to the expert.
    pub ratios: Vec<Option<f64>>,
    pub expert_distance: Vec<f64>,
    pub cmr_errors: Vec<f64>,
    /// Some candidate had zero CMR error with non-zero distance.
    pub infinite: bool,
}

/// RMS of `π_E(s_t, u^o_t) - π(h_t)` over expert windows. Needs hidden fields.
pub fn expert_distance(
    policy: &dyn Policy,
    env: &Env,
    demos: &DemonstrationSet,
    k: usize,
    lookback: usize,
) -> Result<f64> {
    let windows = extract_windows(demos, k, lookback)?;
    let pred = predict_windows(policy, &windows)?;
    let mut sq = Vec::with_capacity(windows.len());
    for (w, p) in windows.windows.iter().zip(pred.outer_iter()) {
        let j = w.t - 1;
        let pe = env.expert_action(demos.state(w.trajectory, j), demos.uo(w.trajectory, j)?)?;
        sq.push(pe.iter().zip(p.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
    }
    Ok(stats::mean(&sq).sqrt())
}

pub fn ill_posedness_lb(
    candidates: &[&dyn Policy],
    env: &Env,
    demos: &DemonstrationSet,
    k: usize,
    lookback: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<IllPosedness> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("ill-posedness needs candidates".into()));
    }
    let windows = extract_windows(&demos.censored(), k, lookback)?;
    let mut out = IllPosedness {
        nu_lb: 0.0,
        ratios: Vec::new(),
        expert_distance: Vec::new(),
        cmr_errors: Vec::new(),
        infinite: false,
    };
    for (i, c) in candidates.iter().enumerate() {
        let num = expert_distance(*c, env, demos, k, lookback)?;
        let eps = cmr_error(*c, &windows, cfg, derive_seed(seed, "nu", i as u64))?.cmr_error;
        out.expert_distance.push(num);
        out.cmr_errors.push(eps);
        let ratio = if num == 0.0 {
            None
        } else if eps == 0.0 {
            out.infinite = true;
            Some(f64::INFINITY)
        } else {
            Some(num / eps)
        };
        if let Some(r) = ratio {
            out.nu_lb = out.nu_lb.max(r);
        }
        out.ratios.push(ratio);
    }
    Ok(out)
}

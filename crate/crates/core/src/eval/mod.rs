//! Online evaluation, reward anchors, gap measurement and result tables.

pub mod csv_out;
pub mod sweep;

use serde::{Deserialize, Serialize};

pub use csv_out::{CsvAppender, ResultRow};
pub use sweep::{misspecification_sweep, MisspecCell, MisspecTable, SweepSettings};

use crate::cmr::{CmrDiagnostics, Policy};
use crate::envs::{Actor, Env, ExpertActor, Observation, RolloutOptions};
use crate::rng::{derive_seed, Rng};
use crate::{par, stats};
use crate::{Error, Result};

/// Drives an [`Env`] with a trained policy fed from the observed history.
pub struct ImitatorActor<'a> {
    pub policy: &'a dyn Policy,
}

impl Actor for ImitatorActor<'_> {
    fn act(&mut self, obs: &Observation<'_>, _rng: &mut Rng) -> Result<Vec<f64>> {
        Ok(self.policy.predict(&obs.history.window(self.policy.lookback())))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub episodes: usize,
    /// Leading steps of every episode left out of the metrics.
    pub warmup: usize,
    pub seed: u64,
}

impl EvalOptions {
    pub fn episode_seed(&self, i: usize) -> u64 {
        derive_seed(self.seed, "eval", i as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean per-episode return over scored steps.
    pub avg_reward: f64,
    /// Set once reward anchors are applied.
    pub scaled_reward: Option<f64>,
    pub action_mse: f64,
    pub log10_action_mse: f64,
    pub episodes: usize,
    pub reward_std: f64,
    /// Episodes that diverged; they are excluded from every metric.
    pub diverged: Vec<usize>,
    pub returns: Vec<f64>,
}

struct Episode {
    ret: f64,
    sq_err: f64,
    scored: usize,
}

fn run_episode(env: &Env, actor: &mut dyn Actor, seed: u64, opts: &EvalOptions, rollout: RolloutOptions) -> Result<Episode> {
    let ro = env.rollout(actor, seed, rollout)?;
    let mut ep = Episode {
        ret: 0.0,
        sq_err: 0.0,
        scored: 0,
    };
    for (st, intended) in ro.trajectory.steps.iter().zip(&ro.intended).skip(opts.warmup) {
        ep.ret += st.r;
        let pe = env.expert_action(&st.s, st.uo)?;
        ep.sq_err += pe.iter().zip(intended).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        ep.scored += 1;
    }
    Ok(ep)
}

/// Raw returns and action errors of the actor built by `make_actor` per
/// episode. Scaled reward is left unset; see [`RewardAnchors::scale`].
pub fn evaluate_actor<A, F>(env: &Env, make_actor: F, opts: &EvalOptions, rollout: RolloutOptions) -> Result<EvalReport>
where
    A: Actor,
    F: Fn() -> A + Sync + Send,
{
    if opts.episodes == 0 {
        return Err(Error::InvalidConfig("evaluation needs at least one episode".into()));
    }
    if opts.warmup >= env.horizon() {
        return Err(Error::InvalidConfig(format!(
            "warm-up {} leaves no scored steps in horizon {}",
            opts.warmup,
            env.horizon()
        )));
    }
    let outcomes = par::map_range(opts.episodes, |i| {
        let mut actor = make_actor();
        run_episode(env, &mut actor, opts.episode_seed(i), opts, rollout)
    });
    let mut diverged = Vec::new();
    let mut returns = Vec::new();
    let (mut sq, mut n) = (Vec::new(), 0usize);
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(ep) => {
                returns.push(ep.ret);
                sq.push(ep.sq_err);
                n += ep.scored;
            }
            Err(Error::Diverged { .. }) => diverged.push(i),
            Err(e) => return Err(e),
        }
    }
    if returns.is_empty() {
        return Err(Error::InvalidConfig(format!("all {} evaluation episodes diverged", opts.episodes)));
    }
    let action_mse = stats::pairwise_sum(&sq) / n as f64;
    Ok(EvalReport {
        avg_reward: stats::mean(&returns),
        scaled_reward: None,
        action_mse,
        log10_action_mse: action_mse.log10(),
        episodes: returns.len(),
        reward_std: if returns.len() > 1 { stats::std_dev(&returns) } else { 0.0 },
        diverged,
        returns,
    })
}

/// Evaluates `policy` in the confounded env and scales by `anchors`.
pub fn evaluate_policy(env: &Env, policy: &dyn Policy, opts: &EvalOptions, anchors: &RewardAnchors) -> Result<EvalReport> {
    let mut rep = evaluate_actor(env, || ImitatorActor { policy }, opts, RolloutOptions::default())?;
    rep.scaled_reward = Some(anchors.scale(rep.avg_reward)?);
    Ok(rep)
}

/// The expert acting in the confounded env: the noised-expert ceiling.
pub fn evaluate_noised_expert(env: &Env, opts: &EvalOptions, anchors: &RewardAnchors) -> Result<EvalReport> {
    let mut rep = evaluate_actor(env, || ExpertActor { env }, opts, RolloutOptions::default())?;
    rep.scaled_reward = Some(anchors.scale(rep.avg_reward)?);
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardAnchors {
    pub j_random: f64,
    pub j_clean_expert: f64,
    pub options: EvalOptions,
}

impl RewardAnchors {
    pub fn new(j_random: f64, j_clean_expert: f64, options: EvalOptions) -> Self {
        Self {
            j_random,
            j_clean_expert,
            options,
        }
    }

    /// `(J - J_random) / (J_clean_expert - J_random)`.
    pub fn scale(&self, j: f64) -> Result<f64> {
        let span = self.j_clean_expert - self.j_random;
        if span == 0.0 || !span.is_finite() {
            return Err(Error::InvalidConfig("reward anchors coincide".into()));
        }
        Ok((j - self.j_random) / span)
    }
}

/// `J_random` from the uniform policy in the confounded env and
/// `J_clean_expert` from the expert with `u^ε` forced to zero.
pub fn reward_anchors(env: &Env, opts: &EvalOptions) -> Result<RewardAnchors> {
    let random = evaluate_actor(env, || env.random_actor(), opts, RolloutOptions::default())?;
    let clean = evaluate_actor(
        env,
        || ExpertActor { env },
        opts,
        RolloutOptions {
            clean: true,
            action_noise: true,
        },
    )?;
    Ok(RewardAnchors::new(random.avg_reward, clean.avg_reward, *opts))
}

/// Imitation gap `J(π_E) - J(π̂)` on rewards mapped to `[0, 1]`, from paired
/// episodes (same seeds for expert and imitator) over the full horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapMeasurement {
    pub gap: f64,
    pub se: f64,
    pub episodes: usize,
}

pub fn measure_gap(env: &Env, policy: &dyn Policy, episodes: usize, seed: u64) -> Result<GapMeasurement> {
    let (lo, hi) = env
        .reward_bounds()
        .ok_or_else(|| Error::UnsupportedEnv(format!("{} has unbounded rewards", env.kind().as_str())))?;
    let opts = EvalOptions {
        episodes,
        warmup: 0,
        seed,
    };
    let expert = evaluate_actor(env, || ExpertActor { env }, &opts, RolloutOptions::default())?;
    let imitator = evaluate_actor(env, || ImitatorActor { policy }, &opts, RolloutOptions::default())?;
    if !expert.diverged.is_empty() || !imitator.diverged.is_empty() {
        return Err(Error::InvalidConfig("gap measurement hit diverged episodes".into()));
    }
    let diffs: Vec<f64> = expert
        .returns
        .iter()
        .zip(&imitator.returns)
        .map(|(e, i)| (e - i) / (hi - lo))
        .collect();
    Ok(GapMeasurement {
        gap: stats::mean(&diffs),
        se: if diffs.len() > 1 { stats::std_err(&diffs) } else { 0.0 },
        episodes,
    })
}

/// Slack allowed on the bound: relative factor and Monte-Carlo SEs.
pub const GAP_RELATIVE_SLACK: f64 = 0.1;
pub const GAP_SE_SLACK: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub eval: EvalReport,
    pub diagnostics: CmrDiagnostics,
    pub violated: bool,
}

/// Joins an evaluation with the bound diagnostics, filling in the measured
/// gap and flagging `gap > bound·(1 + 0.1) + 3 SE`.
pub fn gap_report(eval: EvalReport, mut diagnostics: CmrDiagnostics, gap: &GapMeasurement) -> GapReport {
    diagnostics.gap_measured = Some(gap.gap);
    diagnostics.gap_se = Some(gap.se);
    let limit = diagnostics.gap_bound * (1.0 + GAP_RELATIVE_SLACK) + GAP_SE_SLACK * gap.se;
    let violated = gap.gap > limit;
    if violated {
        diagnostics.flags.push("gap_bound_violated".into());
    }
    GapReport {
        eval,
        diagnostics,
        violated,
    }
}

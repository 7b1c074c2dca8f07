//! Demonstration sets, the censored view, history windows and folds.

pub mod folds;
pub mod io;
pub mod windows;

use serde::{Deserialize, Serialize};

pub use folds::kfold_partition;
pub use windows::{extract_windows, HistoryWindow, WindowSet};

use crate::envs::{Env, EnvSpec, StepRecord};
use crate::par;
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub episode_seed: u64,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Expert demonstrations. A censored set only exposes states and actions.
#[derive(Clone, Debug, PartialEq)]
pub struct DemonstrationSet {
    trajectories: Vec<Trajectory>,
    censored: bool,
    env_spec: EnvSpec,
}

impl DemonstrationSet {
    pub fn new(env_spec: EnvSpec, trajectories: Vec<Trajectory>) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::InvalidConfig("demonstration set needs N >= 1".into()));
        }
        Ok(Self {
            trajectories,
            censored: false,
            env_spec,
        })
    }

    /// The training view: hidden confounders and rewards become unreadable.
    pub fn censored(&self) -> Self {
        let mut out = self.clone();
        out.censored = true;
        for tr in &mut out.trajectories {
            for st in &mut tr.steps {
                st.uo = f64::NAN;
                st.ueps = f64::NAN;
                st.r = f64::NAN;
            }
        }
        out
    }

    pub fn is_censored(&self) -> bool {
        self.censored
    }

    pub fn env_spec(&self) -> &EnvSpec {
        &self.env_spec
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn horizon(&self, i: usize) -> usize {
        self.trajectories[i].steps.len()
    }

    pub fn total_steps(&self) -> usize {
        self.trajectories.iter().map(|t| t.steps.len()).sum()
    }

    pub fn episode_seed(&self, i: usize) -> u64 {
        self.trajectories[i].episode_seed
    }

    pub fn state_dim(&self) -> usize {
        self.trajectories[0].steps.first().map_or(0, |s| s.s.len())
    }

    pub fn action_dim(&self) -> usize {
        self.trajectories[0].steps.first().map_or(0, |s| s.a.len())
    }

    /// State of trajectory `i` at 0-based step `j`.
    pub fn state(&self, i: usize, j: usize) -> &[f64] {
        &self.trajectories[i].steps[j].s
    }

    pub fn action(&self, i: usize, j: usize) -> &[f64] {
        &self.trajectories[i].steps[j].a
    }

    /// Full records including hidden fields; fails on a censored set.
    pub fn full(&self, i: usize) -> Result<&Trajectory> {
        if self.censored {
            return Err(Error::Censored("uo/ueps/r"));
        }
        Ok(&self.trajectories[i])
    }

    pub fn uo(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.full(i)?.steps[j].uo)
    }

    pub fn ueps(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.full(i)?.steps[j].ueps)
    }

    pub fn reward(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.full(i)?.steps[j].r)
    }

    /// Keeps the listed trajectories, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let trajectories = idx.iter().map(|&i| self.trajectories[i].clone()).collect();
        let mut out = Self::new(self.env_spec.clone(), trajectories)?;
        out.censored = self.censored;
        Ok(out)
    }

    pub(crate) fn raw(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub(crate) fn from_raw(env_spec: EnvSpec, trajectories: Vec<Trajectory>, censored: bool) -> Result<Self> {
        let mut out = Self::new(env_spec, trajectories)?;
        out.censored = censored;
        Ok(out)
    }
}

/// `n_traj` expert episodes of length `horizon`; trajectory `i` uses the seed
/// derived from `(seed, "demo", i)`.
pub fn generate_demonstrations(
    env_spec: &EnvSpec,
    n_traj: usize,
    horizon: usize,
    seed: u64,
) -> Result<DemonstrationSet> {
    let mut spec = env_spec.clone();
    spec.horizon = horizon;
    let env = Env::new(spec.clone())?;
    let trajectories = par::try_map_range(n_traj, |i| {
        env.expert_trajectory(derive_seed(seed, "demo", i as u64))
            .map_err(|e| e.in_trajectory(i))
    })?;
    DemonstrationSet::new(spec, trajectories)
}

//! Experiment configuration and its profile-resolved form.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::approx::{Stage2Target, TrainConfig};
use crate::cmr::Method;
use crate::envs::EnvSpec;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    PaperDefaults,
    Desk,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::PaperDefaults => "paper_defaults",
            Profile::Desk => "desk",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Profile::PaperDefaults, Profile::Desk].into_iter().find(|p| p.as_str() == s)
    }

    pub fn train(self) -> TrainConfig {
        match self {
            Profile::PaperDefaults => TrainConfig::paper(),
            Profile::Desk => TrainConfig::desk(),
        }
    }

    pub fn n_traj(self) -> usize {
        match self {
            Profile::PaperDefaults => 40,
            Profile::Desk => 20,
        }
    }

    pub fn folds(self) -> usize {
        match self {
            Profile::PaperDefaults => 5,
            Profile::Desk => 1,
        }
    }

    pub fn eval_episodes(self) -> usize {
        50
    }
}

/// Per-field overrides of the profile's training hyperparameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage2_target: Option<Stage2Target>,
}

impl TrainOverrides {
    pub fn apply(&self, mut base: TrainConfig) -> TrainConfig {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { base.$f = v; } )* };
        }
        set!(lr, weight_decay, batch_size, epochs, hidden, layers, components, completions, stage2_target);
        base
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// True horizon; the given horizon follows it.
    K,
    /// Given horizon, with the true horizon fixed by `env.k`.
    KGiven,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
}

fn default_significance() -> f64 {
    0.05
}
fn default_permutations() -> usize {
    1000
}
fn default_gap_episodes() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSpec {
    /// Largest candidate horizon; defaults to `k_given + 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default = "default_significance")]
    pub significance: f64,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default = "default_gap_episodes")]
    pub gap_episodes: usize,
    /// Skip horizon selection.
    #[serde(default)]
    pub skip_horizon: bool,
}

impl Default for DiagnoseSpec {
    fn default() -> Self {
        Self {
            k_max: None,
            significance: default_significance(),
            permutations: default_permutations(),
            gap_episodes: default_gap_episodes(),
            skip_horizon: false,
        }
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::DmlIl]
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_true() -> bool {
    true
}
fn is_false(b: &bool) -> bool {
    !*b
}

/// The experiment file as written by the user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_given: Option<usize>,
    /// Look-back `L`; defaults to `k_given + 3`.
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub lookback: Option<usize>,
    /// Cross-fitting folds `K`.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_episodes: Option<usize>,
    /// Seed of the evaluation episodes and reward anchors, shared by every
    /// method so their returns are paired.
    #[serde(default)]
    pub eval_seed: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub paper_defaults: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnose: Option<DiagnoseSpec>,
    /// Compute CMR errors (and, on the linear-Gaussian env, the gap bound)
    /// for every result row.
    #[serde(default = "default_true")]
    pub row_diagnostics: bool,
    /// Record wall time per row. Rows are then no longer reproducible.
    #[serde(default, skip_serializing_if = "is_false")]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(s);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::InvalidConfig(format!("{path}: {}", e.into_inner()))
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn profile(&self) -> Profile {
        if self.paper_defaults {
            Profile::PaperDefaults
        } else {
            Profile::Desk
        }
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let profile = self.profile();
        self.env.validate()?;
        let k_given = self.k_given.unwrap_or(self.env.k);
        let train = self.train.clone().unwrap_or_default().apply(profile.train());
        train.validate()?;
        let r = ResolvedConfig {
            profile,
            env: self.env.clone(),
            methods: self.methods.clone(),
            k_given,
            lookback: self.lookback,
            folds: self.folds.unwrap_or(profile.folds()),
            train,
            n_traj: self.n_traj.unwrap_or(profile.n_traj()),
            eval_episodes: self.eval_episodes.unwrap_or(profile.eval_episodes()),
            eval_seed: self.eval_seed,
            seeds: self.seeds.clone(),
            sweep: self.sweep.clone(),
            diagnose: self.diagnose.clone().unwrap_or_default(),
            row_diagnostics: self.row_diagnostics,
            timing: self.timing,
        };
        r.validate()?;
        Ok(r)
    }
}

/// Every knob with profile defaults filled in. Its JSON form is hashed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub profile: Profile,
    pub env: EnvSpec,
    pub methods: Vec<Method>,
    pub k_given: usize,
    pub lookback: Option<usize>,
    pub folds: usize,
    pub train: TrainConfig,
    pub n_traj: usize,
    pub eval_episodes: usize,
    pub eval_seed: u64,
    pub seeds: Vec<u64>,
    pub sweep: Option<SweepSpec>,
    pub diagnose: DiagnoseSpec,
    pub row_diagnostics: bool,
    pub timing: bool,
}

impl ResolvedConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.methods.is_empty() {
            return bad("methods: at least one method is required".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds: at least one seed is required".into());
        }
        if self.k_given == 0 {
            return bad("k_given: must be >= 1".into());
        }
        if self.folds == 0 || self.folds > self.n_traj {
            return bad(format!("K: must be in [1, n_traj = {}]", self.n_traj));
        }
        if self.n_traj < 2 {
            return bad("n_traj: must be >= 2".into());
        }
        if self.eval_episodes == 0 {
            return bad("eval_episodes: must be >= 1".into());
        }
        if let Some(l) = self.lookback {
            if l <= self.k_given {
                return bad(format!("L: must exceed k_given = {}", self.k_given));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() || s.values.contains(&0) {
                return bad("sweep.values: need positive values".into());
            }
            if s.axis == SweepAxis::KGiven && s.values.iter().any(|&v| v > self.env.k) {
                return bad(format!("sweep.values: given k must not exceed env.k = {}", self.env.k));
            }
        }
        if !(self.diagnose.significance > 0.0 && self.diagnose.significance < 1.0) {
            return bad("diagnose.significance: must be in (0, 1)".into());
        }
        Ok(())
    }

    pub fn lookback_for(&self, k_given: usize) -> usize {
        self.lookback.unwrap_or(k_given + 3)
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_string(self)?;
        let digest = Sha256::digest(json.as_bytes());
        Ok(hex::encode(digest)[..16].to_string())
    }
}

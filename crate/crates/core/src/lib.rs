//! Causal imitation learning when the demonstrator's actions are corrupted by
//! temporally correlated noise.
//!
//! The crate is organised around the learning pipeline:
//!
//! * [`envs`]: confounded MDP simulators (plane ticket, linear-Gaussian) and
//!   the expert / random action sources.
//! * [`demos`]: demonstration sets, the censored training view, history
//!   windows and trajectory-level folds.
//! * [`approx`]: feed-forward regressors, mixture density networks, AdamW and
//!   a finite-difference gradient checker.
//! * [`cmr`]: DML-IL (roll-out model, policy regression, cross-fitting) and the
//!   conditional-moment diagnostics.
//! * [`baselines`]: BC, BC-SEQ and the state-only IV baseline.
//! * [`eval`]: online evaluation, reward anchors, sweeps and gap reports.
//! * [`experiment`]: config-driven runner used by the `cil` binary.

pub mod approx;
pub mod baselines;
pub mod cmr;
pub mod demos;
pub mod envs;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod par;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

#[cfg(test)]
mod properties;

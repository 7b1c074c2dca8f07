//! The imitation-gap bound assembled from its measurable parts.

use serde::{Deserialize, Serialize};

use super::illposed::expert_distance;
use super::moment::cmr_error;
use super::policy::Policy;
use super::tv::{tv_centered_gaussians, tv_stability_constant};
use crate::approx::TrainConfig;
use crate::demos::{extract_windows, DemonstrationSet};
use crate::envs::oracle::LinearGaussianOracle;
use crate::envs::{Env, EnvKind};
use crate::{Error, Result};

/// How `δ̂` is read: TV between the marginal law of `β·u^o` and the law of
/// its history predictor `β·E[u^o | h_t]`, averaged over scored steps.
pub const DELTA_READING: &str = "tv(law(beta*uo), law(beta*E[uo|h_t])) averaged over t";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// `T²(c‖π_E - π̂‖₂ + 2δ̂)`.
    General,
    /// No confounding noise: `T²(2ε/√dim(A) + 2δ̂)` with `ε = ‖π_E - π̂‖₂`.
    NoConfoundingNoise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmrDiagnostics {
    pub cmr_error: f64,
    pub cmr_noise_floor: f64,
    /// Candidate-set lower bound on the ill-posedness, when computed.
    pub nu_lb: Option<f64>,
    /// `‖π_E - π̂‖₂ / ε` for the diagnosed policy.
    pub nu_policy: f64,
    pub expert_distance: f64,
    pub delta_hat: f64,
    pub delta_reading: String,
    pub c: f64,
    pub horizon: usize,
    pub bound_form: BoundForm,
    pub gap_bound: f64,
    pub gap_measured: Option<f64>,
    pub gap_se: Option<f64>,
    pub k_selected: Option<usize>,
    pub p_values: Vec<f64>,
    /// `β = 0`: the expert ignores `u^o`.
    pub no_observable_confounder: bool,
    pub flags: Vec<String>,
}

/// `T²(c·distance + 2δ̂)`, or the no-noise form when `σ = 0`.
pub fn assemble_bound(horizon: usize, sigma: f64, action_dim: usize, distance: f64, delta_hat: f64) -> (BoundForm, f64, f64) {
    let t2 = (horizon * horizon) as f64;
    if sigma > 0.0 {
        let c = tv_stability_constant(sigma);
        (BoundForm::General, c, t2 * (c * distance + 2.0 * delta_hat))
    } else {
        let c = 2.0 / (action_dim as f64).sqrt();
        (BoundForm::NoConfoundingNoise, c, t2 * (c * distance + 2.0 * delta_hat))
    }
}

/// `δ̂` on the linear-Gaussian env for a policy of look-back `lookback`.
pub fn delta_hat(env: &Env, lookback: usize) -> Result<f64> {
    let spec = env
        .linear()
        .ok_or_else(|| Error::UnsupportedEnv(format!("{} has no Gaussian posterior for u^o", env.kind().as_str())))?;
    if spec.beta == 0.0 || spec.sigma_o == 0.0 {
        return Ok(0.0);
    }
    let oracle = LinearGaussianOracle::new(spec);
    let steps: Vec<usize> = (lookback..=spec.horizon).collect();
    if steps.is_empty() {
        return Err(Error::EmptyWindows {
            lookback,
            horizon: spec.horizon,
        });
    }
    let total: f64 = steps
        .iter()
        .map(|&t| {
            let v = oracle.uo_predictor_variance(t, lookback).max(0.0);
            tv_centered_gaussians(spec.sigma_o, v.sqrt())
        })
        .sum();
    Ok(total / steps.len() as f64)
}

/// Builds the diagnostics for `policy` from held-out, uncensored expert
/// demonstrations of the linear-Gaussian env.
pub fn gap_bound_diagnostic(
    policy: &dyn Policy,
    env: &Env,
    demos: &DemonstrationSet,
    k: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<CmrDiagnostics> {
    if env.kind() != EnvKind::LinearGaussian {
        return Err(Error::UnsupportedEnv(format!(
            "gap bound needs the linear_gaussian oracle, got {}",
            env.kind().as_str()
        )));
    }
    let lookback = policy.lookback().max(k + 1);
    let windows = extract_windows(&demos.censored(), k, lookback)?;
    let est = cmr_error(policy, &windows, cfg, seed)?;
    let distance = expert_distance(policy, env, demos, k, lookback)?;
    let delta = delta_hat(env, policy.lookback())?;
    let sigma = env.action_noise_std();
    let (bound_form, c, gap_bound) = assemble_bound(env.horizon(), sigma, env.action_dim(), distance, delta);
    let mut flags = Vec::new();
    if est.degenerate_instruments {
        flags.push("degenerate_instruments".to_string());
    }
    let nu_policy = if est.cmr_error > 0.0 {
        distance / est.cmr_error
    } else if distance > 0.0 {
        flags.push("infinite_ill_posedness".to_string());
        f64::INFINITY
    } else {
        0.0
    };
    Ok(CmrDiagnostics {
        cmr_error: est.cmr_error,
        cmr_noise_floor: est.noise_floor,
        nu_lb: None,
        nu_policy,
        expert_distance: distance,
        delta_hat: delta,
        delta_reading: DELTA_READING.to_string(),
        c,
        horizon: env.horizon(),
        bound_form,
        gap_bound,
        gap_measured: None,
        gap_se: None,
        k_selected: None,
        p_values: Vec::new(),
        no_observable_confounder: env.linear().is_some_and(|s| s.beta == 0.0),
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parts_give_zero_bound() {
        let (form, _, b) = assemble_bound(50, 0.5, 1, 0.0, 0.0);
        assert_eq!(form, BoundForm::General);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn noiseless_form_uses_dimension_factor() {
        let (form, c, b) = assemble_bound(10, 0.0, 4, 0.3, 0.1);
        assert_eq!(form, BoundForm::NoConfoundingNoise);
        assert_eq!(c, 1.0);
        assert!((b - 100.0 * (0.3 + 0.2)).abs() < 1e-12);
    }

    #[test]
    fn general_form_matches_parts() {
        let (_, c, b) = assemble_bound(20, 0.25, 1, 0.1, 0.05);
        assert_eq!(c, 2.0);
        assert!((b - 400.0 * (0.2 + 0.1)).abs() < 1e-12);
    }
}

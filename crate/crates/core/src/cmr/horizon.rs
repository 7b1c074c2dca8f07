//! Choosing the confounding horizon by residual independence tests.

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dml::dml_il_train;
use super::moment::{residuals, split_by_group};
use crate::approx::{rows_to_array, TrainConfig};
use crate::demos::{extract_windows, DemonstrationSet};
use crate::rng::{derive_rng, derive_seed};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonSelection {
    pub k_hat: usize,
    /// Bonferroni-adjusted p-value per candidate `k = 1..=k_max`.
    pub p_values: Vec<f64>,
    /// No candidate passed; `k_hat` falls back to `k_max`.
    pub failed: bool,
}

/// Per-coordinate permutation p-values of `|corr(residual_d, z_j)|`, testing
/// every residual dimension against every instrument coordinate. The same
/// permutations are shared by all pairs.
pub fn permutation_pvalues(res: &Array2<f64>, z: &Array2<f64>, permutations: usize, seed: u64) -> Vec<f64> {
    let n = res.nrows();
    let centre = |m: &Array2<f64>| -> Vec<Vec<f64>> {
        (0..m.ncols())
            .map(|j| {
                let c = m.column(j);
                let mu = c.sum() / n as f64;
                let v: Vec<f64> = c.iter().map(|x| x - mu).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    v.iter().map(|x| x / norm).collect()
                } else {
                    vec![0.0; n]
                }
            })
            .collect()
    };
    let rc = centre(res);
    let zc = centre(z);
    let dot = |a: &[f64], b: &[f64], perm: Option<&[usize]>| -> f64 {
        match perm {
            None => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Some(p) => p.iter().zip(b).map(|(&i, y)| a[i] * y).sum(),
        }
    };
    let observed: Vec<f64> = rc
        .iter()
        .flat_map(|r| zc.iter().map(move |zj| (r, zj)))
        .map(|(r, zj)| dot(r, zj, None).abs())
        .collect();
    let mut exceed = vec![0usize; observed.len()];
    let mut rng = derive_rng(seed, "permutation", 0);
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..permutations {
        perm.shuffle(&mut rng);
        let mut idx = 0;
        for r in &rc {
            for zj in &zc {
                if dot(r, zj, Some(&perm)).abs() >= observed[idx] - 1e-12 {
                    exceed[idx] += 1;
                }
                idx += 1;
            }
        }
    }
    exceed
        .iter()
        .map(|&e| (1 + e) as f64 / (1 + permutations) as f64)
        .collect()
}

/// Bonferroni-adjusted smallest p-value.
pub fn bonferroni_min(p: &[f64]) -> f64 {
    let m = p.iter().copied().fold(1.0, f64::min);
    (m * p.len() as f64).min(1.0)
}

/// Generic selection: `residuals_for(k)` returns held-out residuals and the
/// matching instruments `h_{t-k}` for candidate `k`.
pub fn select_horizon_with<F>(k_max: usize, significance: f64, permutations: usize, seed: u64, mut residuals_for: F) -> Result<HorizonSelection>
where
    F: FnMut(usize) -> Result<(Array2<f64>, Array2<f64>)>,
{
    let mut p_values = Vec::with_capacity(k_max);
    let mut k_hat = None;
    for k in 1..=k_max {
        let (r, z) = residuals_for(k)?;
        let p = bonferroni_min(&permutation_pvalues(&r, &z, permutations, derive_seed(seed, "horizon", k as u64)));
        if k_hat.is_none() && p >= significance {
            k_hat = Some(k);
        }
        p_values.push(p);
    }
    Ok(HorizonSelection {
        k_hat: k_hat.unwrap_or(k_max),
        p_values,
        failed: k_hat.is_none(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorizonOptions {
    pub permutations: usize,
    /// Look-back is `k + extra_lookback`.
    pub extra_lookback: usize,
}

impl Default for HorizonOptions {
    fn default() -> Self {
        Self {
            permutations: 1000,
            extra_lookback: 3,
        }
    }
}

/// For each candidate `k`, fits a DML-IL pilot on half of the trajectories
/// and tests its residuals on the other half against every coordinate of
/// `h_{t-k}`. Returns the smallest `k` that passes.
pub fn select_horizon(
    demos: &DemonstrationSet,
    k_max: usize,
    significance: f64,
    cfg: &TrainConfig,
    opts: HorizonOptions,
    seed: u64,
) -> Result<HorizonSelection> {
    let groups: Vec<usize> = (0..demos.len()).collect();
    let (fit, eval) = split_by_group(&groups, derive_seed(seed, "horizon-split", 0));
    let fit_demos = demos.subset(&fit)?;
    let eval_demos = demos.subset(&eval)?;
    select_horizon_with(k_max, significance, opts.permutations, seed, |k| {
        let lookback = k + opts.extra_lookback;
        let pilot = dml_il_train(&fit_demos, k, lookback, 1, cfg, derive_seed(seed, "pilot", k as u64))?;
        let windows = extract_windows(&eval_demos, k, lookback)?;
        let r = residuals(&pilot.policy, &windows)?;
        let z: Vec<Vec<f64>> = windows.windows.iter().map(|w| w.instrument.clone()).collect();
        Ok((r, rows_to_array(&z)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    #[test]
    fn detects_strong_dependence() {
        let mut rng = derive_rng(1, "t", 0);
        let n = 300;
        let z = Array2::from_shape_fn((n, 2), |_| rng.sample::<f64, _>(StandardNormal));
        let r = Array2::from_shape_fn((n, 1), |(i, _)| 0.5 * z[[i, 1]] + rng.sample::<f64, _>(StandardNormal));
        let p = permutation_pvalues(&r, &z, 500, 3);
        assert!(p[1] < 0.01, "{p:?}");
    }

    #[test]
    fn null_rejection_rate_matches_level() {
        let alpha = 0.05;
        let runs = 200;
        let mut rejections = 0;
        for s in 0..runs {
            let mut rng = derive_rng(s, "null", 0);
            let z = Array2::from_shape_fn((100, 3), |_| rng.sample::<f64, _>(StandardNormal));
            let r = Array2::from_shape_fn((100, 1), |_| rng.sample::<f64, _>(StandardNormal));
            if bonferroni_min(&permutation_pvalues(&r, &z, 199, s)) < alpha {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / runs as f64;
        // Bonferroni is conservative; the rate should not exceed alpha much
        assert!(rate <= alpha + 3.0 * (alpha * (1.0 - alpha) / runs as f64).sqrt(), "{rate}");
    }
}

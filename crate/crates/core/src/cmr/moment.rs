//! Estimates of the conditional moment `‖E[a_t - π(h_t) | instrument]‖₂`.
//!
//! An auxiliary regressor `g` of the same MLP family is fit to the residuals
//! on one half of the trajectories and its RMS is read off on the other
//! half. The noise floor repeats the procedure on exogenous Gaussian
//! residuals of matched variance.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::policy::{predict_windows, Policy};
use crate::approx::{fit_mse, gather_rows, rows_to_array, Standardizer, TrainConfig};
use crate::demos::windows::window_dim;
use crate::demos::{DemonstrationSet, WindowSet};
use crate::rng::{derive_rng, derive_seed};
use crate::stats;
use crate::{Error, Result};

/// Synthetic-noise fits averaged into the floor.
pub const FLOOR_REPS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmrEstimate {
    pub cmr_error: f64,
    pub noise_floor: f64,
    pub residual_rms: f64,
    /// Every instrument coordinate is constant on the fit half.
    pub degenerate_instruments: bool,
    pub n_fit: usize,
    pub n_eval: usize,
}

/// Residuals paired with instruments and the trajectory each row came from.
#[derive(Clone, Debug)]
pub struct MomentData {
    pub residuals: Array2<f64>,
    pub instruments: Array2<f64>,
    pub groups: Vec<usize>,
}

/// Splits rows into (fit, eval) by trajectory; a single trajectory is split
/// by row index instead.
pub fn split_by_group(groups: &[usize], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut ids: Vec<usize> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        let half = groups.len() / 2;
        return ((0..half).collect(), (half..groups.len()).collect());
    }
    ids.shuffle(&mut derive_rng(seed, "moment-split", 0));
    let fit_ids: std::collections::HashSet<usize> = ids[..ids.len() / 2].iter().copied().collect();
    let (mut fit, mut eval) = (Vec::new(), Vec::new());
    for (i, g) in groups.iter().enumerate() {
        if fit_ids.contains(g) {
            fit.push(i);
        } else {
            eval.push(i);
        }
    }
    (fit, eval)
}

fn column_rms(m: &Array2<f64>) -> Vec<f64> {
    (0..m.ncols())
        .map(|j| {
            let c = m.column(j);
            let r = (c.mapv(|v| v * v).sum() / c.len().max(1) as f64).sqrt();
            if r > 0.0 {
                r
            } else {
                1.0
            }
        })
        .collect()
}

/// Fits `g(z) ≈ E[r | z]` on `fit` rows and returns `‖g(z_i)‖²` on `eval` rows.
fn fitted_sq_norms(
    residuals: &Array2<f64>,
    instruments: &Array2<f64>,
    fit: &[usize],
    eval: &[usize],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let zf = gather_rows(instruments, fit);
    let scaler = Standardizer::fit(&zf);
    let zf = scaler.transform(&zf);
    let ze = scaler.transform(&gather_rows(instruments, eval));
    let rf = gather_rows(residuals, fit);
    // scale by RMS, not std, so a constant conditional mean survives
    let rs = column_rms(&rf);
    let mut rf_scaled = rf.clone();
    for mut row in rf_scaled.outer_iter_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v /= rs[j];
        }
    }
    let g = fit_mse(&zf, &rf_scaled, cfg, &mut derive_rng(seed, "moment-g", 0))?.params;
    let pred = g.forward_batch(ze.view())?;
    Ok(pred
        .outer_iter()
        .map(|row| row.iter().enumerate().map(|(j, v)| (v * rs[j]).powi(2)).sum())
        .collect())
}

fn gaussian_like(residuals: &Array2<f64>, seed: u64) -> Array2<f64> {
    let mut rng = derive_rng(seed, "moment-noise", 0);
    let stds: Vec<f64> = (0..residuals.ncols())
        .map(|j| stats::std_dev(&residuals.column(j).to_vec()))
        .collect();
    Array2::from_shape_fn(residuals.dim(), |(_, j)| stds[j] * rng.sample::<f64, _>(StandardNormal))
}

fn instruments_degenerate(instruments: &Array2<f64>, rows: &[usize]) -> bool {
    let z = gather_rows(instruments, rows);
    (0..z.ncols()).all(|j| {
        let c = z.column(j);
        c.iter().all(|&v| v == c[0])
    })
}

/// CMR error and noise floor for arbitrary residual / instrument pairs.
pub fn estimate_moment(data: &MomentData, cfg: &TrainConfig, seed: u64) -> Result<CmrEstimate> {
    let n = data.residuals.nrows();
    if n < 4 || data.instruments.nrows() != n || data.groups.len() != n {
        return Err(Error::InvalidConfig("moment estimate needs >= 4 aligned rows".into()));
    }
    let (fit, eval) = split_by_group(&data.groups, seed);
    let residual_rms = (data.residuals.mapv(|v| v * v).sum() / n as f64).sqrt();
    let degenerate_instruments = instruments_degenerate(&data.instruments, &fit);
    let mut out = CmrEstimate {
        cmr_error: 0.0,
        noise_floor: 0.0,
        residual_rms,
        degenerate_instruments,
        n_fit: fit.len(),
        n_eval: eval.len(),
    };
    if residual_rms == 0.0 {
        return Ok(out);
    }
    let sq = fitted_sq_norms(&data.residuals, &data.instruments, &fit, &eval, cfg, seed)?;
    out.cmr_error = stats::mean(&sq).sqrt();
    let mut floor = 0.0;
    for rep in 0..FLOOR_REPS {
        let s = derive_seed(seed, "moment-floor", rep as u64);
        let noise = gaussian_like(&data.residuals, s);
        let sq = fitted_sq_norms(&noise, &data.instruments, &fit, &eval, cfg, s)?;
        floor += stats::mean(&sq).sqrt();
    }
    out.noise_floor = floor / FLOOR_REPS as f64;
    Ok(out)
}

/// Residuals `a_t - π(h_t)` on held-out windows, one row per window.
pub fn residuals(policy: &dyn Policy, windows: &WindowSet) -> Result<Array2<f64>> {
    let pred = predict_windows(policy, windows)?;
    let targets: Vec<Vec<f64>> = windows.windows.iter().map(|w| w.target.clone()).collect();
    Ok(rows_to_array(&targets) - pred)
}

/// `ε ≈ ‖E[a_t - π(h_t) | h_{t-k}]‖₂` on held-out windows.
pub fn cmr_error(policy: &dyn Policy, windows: &WindowSet, cfg: &TrainConfig, seed: u64) -> Result<CmrEstimate> {
    let inst: Vec<Vec<f64>> = windows.windows.iter().map(|w| w.instrument.clone()).collect();
    let data = MomentData {
        residuals: residuals(policy, windows)?,
        instruments: rows_to_array(&inst),
        groups: windows.windows.iter().map(|w| w.trajectory).collect(),
    };
    estimate_moment(&data, cfg, seed)
}

/// Moment norms of one policy under nested instruments at several lags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagProfile {
    pub lags: Vec<usize>,
    pub errors: Vec<f64>,
    /// 95% bootstrap interval of `errors[j+1] - errors[j]`.
    pub diff_ci: Vec<(f64, f64)>,
    /// No consecutive difference is significantly positive.
    pub non_increasing: bool,
}

/// Instrument at lag `lag` for the window ending at 0-based step `end`: every
/// state from `end - max_lag - span + 1` to `end - lag` with the actions in
/// between. All lags share the start, so larger lags see sub-histories.
fn nested_instrument(demos: &DemonstrationSet, traj: usize, end: usize, lag: usize, max_lag: usize, span: usize) -> Vec<f64> {
    let start = end + 1 - max_lag - span;
    let stop = end - lag;
    let mut out = Vec::new();
    for j in start..=stop {
        out.extend_from_slice(demos.state(traj, j));
        if j < stop {
            out.extend_from_slice(demos.action(traj, j));
        }
    }
    out
}

pub fn cmr_lag_profile(
    policy: &dyn Policy,
    demos: &DemonstrationSet,
    lags: &[usize],
    span: usize,
    cfg: &TrainConfig,
    seed: u64,
    n_boot: usize,
) -> Result<LagProfile> {
    let max_lag = *lags.iter().max().ok_or_else(|| Error::InvalidConfig("no lags".into()))?;
    if span == 0 || lags.contains(&0) {
        return Err(Error::InvalidConfig("lags and span must be >= 1".into()));
    }
    let lp = policy.lookback();
    let (ds, da) = (demos.state_dim(), demos.action_dim());
    let first_end = (max_lag + span - 1).max(lp - 1);
    let mut res_rows = Vec::new();
    let mut groups = Vec::new();
    let mut inst_rows: Vec<Vec<Vec<f64>>> = vec![Vec::new(); lags.len()];
    for i in 0..demos.len() {
        for end in first_end..demos.horizon(i) {
            let mut w = Vec::with_capacity(window_dim(lp, ds, da));
            for j in (end + 1 - lp)..=end {
                w.extend_from_slice(demos.state(i, j));
                if j < end {
                    w.extend_from_slice(demos.action(i, j));
                }
            }
            let pred = policy.predict(&w);
            res_rows.push(demos.action(i, end).iter().zip(&pred).map(|(a, p)| a - p).collect::<Vec<f64>>());
            groups.push(i);
            for (li, &lag) in lags.iter().enumerate() {
                inst_rows[li].push(nested_instrument(demos, i, end, lag, max_lag, span));
            }
        }
    }
    if res_rows.len() < 4 {
        return Err(Error::EmptyWindows {
            lookback: first_end + 1,
            horizon: demos.horizon(0),
        });
    }
    let residuals = rows_to_array(&res_rows);
    let (fit, eval) = split_by_group(&groups, seed);
    let mut sq_by_lag = Vec::with_capacity(lags.len());
    for (li, rows) in inst_rows.iter().enumerate() {
        let inst = rows_to_array(rows);
        sq_by_lag.push(fitted_sq_norms(&residuals, &inst, &fit, &eval, cfg, derive_seed(seed, "lag", li as u64))?);
    }
    let errors: Vec<f64> = sq_by_lag.iter().map(|sq| stats::mean(sq).sqrt()).collect();

    // cluster bootstrap over held-out trajectories, shared across lags
    let eval_groups: Vec<usize> = eval.iter().map(|&r| groups[r]).collect();
    let mut ids = eval_groups.clone();
    ids.dedup();
    let members: Vec<Vec<usize>> = ids
        .iter()
        .map(|g| (0..eval_groups.len()).filter(|&p| eval_groups[p] == *g).collect())
        .collect();
    let mut rng = derive_rng(seed, "lag-bootstrap", 0);
    let mut diffs: Vec<Vec<f64>> = vec![Vec::with_capacity(n_boot); lags.len().saturating_sub(1)];
    for _ in 0..n_boot {
        let picks: Vec<usize> = (0..members.len()).map(|_| rng.random_range(0..members.len())).collect();
        let errs: Vec<f64> = sq_by_lag
            .iter()
            .map(|sq| {
                let (mut s, mut c) = (0.0, 0usize);
                for &m in &picks {
                    for &p in &members[m] {
                        s += sq[p];
                        c += 1;
                    }
                }
                (s / c.max(1) as f64).sqrt()
            })
            .collect();
        for j in 0..diffs.len() {
            diffs[j].push(errs[j + 1] - errs[j]);
        }
    }
    let diff_ci: Vec<(f64, f64)> = diffs
        .iter()
        .map(|d| (stats::quantile(d, 0.025), stats::quantile(d, 0.975)))
        .collect();
    let non_increasing = diff_ci.iter().all(|&(lo, _)| lo <= 0.0);
    Ok(LagProfile {
        lags: lags.to_vec(),
        errors,
        diff_ci,
        non_increasing,
    })
}

//! Stage 2: policy regression on generated histories.

use ndarray::{s, Array2};

use super::policy::{HistoryPolicy, Method};
use super::rollout::{hcat_prefix, RolloutModel};
use crate::approx::train::{abort, epoch_batches};
use crate::approx::{gather_rows, Fitted, MlpParams, Stage2Target, TrainConfig};
use crate::demos::WindowSet;
use crate::rng::Rng;
use crate::{Error, Result};

/// Which part of a generated history the policy consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyInput {
    /// The whole regressor `ĥ_t`.
    History,
    /// Only the current state `ŝ_t`.
    State,
}

/// Instruments completed by one roll-out model.
pub struct Stage2Part<'a> {
    pub rollout: &'a RolloutModel,
    pub instruments: &'a WindowSet,
}

/// Fits the policy on completions of `instruments` drawn from `rollout`.
pub fn fit_policy_stage2(
    rollout: &RolloutModel,
    instruments: &WindowSet,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<Fitted<HistoryPolicy>> {
    let parts = [Stage2Part { rollout, instruments }];
    fit_policy_stage2_parts(&parts, PolicyInput::History, Method::DmlIl, cfg, rng)
}

/// Stage 2 over several (roll-out model, instrument set) pairs, as used by
/// cross-fitting. Every mini-batch holds instruments of a single part and is
/// completed by that part's model; parts alternate within an epoch. Fresh
/// completions are drawn for every batch.
pub fn fit_policy_stage2_parts(
    parts: &[Stage2Part<'_>],
    input: PolicyInput,
    method: Method,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<Fitted<HistoryPolicy>> {
    cfg.validate()?;
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidConfig("stage 2 needs at least one part".into()))?
        .rollout;
    if parts.iter().all(|p| p.instruments.is_empty()) {
        return Err(Error::EmptyWindows {
            lookback: first.lookback,
            horizon: 0,
        });
    }
    for p in parts {
        if p.rollout.scalers != first.scalers || p.instruments.k != first.k {
            return Err(Error::InvalidConfig(
                "stage 2 parts must share k and scalers".into(),
            ));
        }
    }
    let seg_dim = first.segment_dim();
    let da = first.action_dim;
    let cut = seg_dim - da;
    let reg_dim = first.regressor_dim();
    let (in_off, lookback) = match input {
        PolicyInput::History => (0, first.lookback),
        PolicyInput::State => (reg_dim - first.state_dim, 1),
    };
    let in_dim = reg_dim - in_off;
    let z: Vec<Array2<f64>> = parts
        .iter()
        .map(|p| p.rollout.standardize_instruments(p.instruments))
        .collect();
    let n_total: usize = z.iter().map(|m| m.nrows()).sum();
    let dims = MlpParams::architecture(in_dim, cfg.hidden, cfg.layers, da);
    let mut mlp = MlpParams::init(&dims, rng);
    let mut opt = cfg.optimizer(mlp.data.len());
    let reps = cfg.completions;
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let per_part: Vec<Vec<Vec<usize>>> = z
            .iter()
            .map(|m| epoch_batches(m.nrows(), cfg.batch_size, rng))
            .collect();
        let rounds = per_part.iter().map(|b| b.len()).max().unwrap_or(0);
        let mut schedule = Vec::new();
        for r in 0..rounds {
            for (p, batches) in per_part.iter().enumerate() {
                if let Some(b) = batches.get(r) {
                    schedule.push((p, b));
                }
            }
        }
        let mut total = 0.0;
        for (bi, (p, idx)) in schedule.into_iter().enumerate() {
            let model = parts[p].rollout;
            let zb = gather_rows(&z[p], idx);
            let b = zb.nrows();
            let zrep = if reps == 1 {
                zb.clone()
            } else {
                let rows: Vec<usize> = (0..b).flat_map(|i| std::iter::repeat_n(i, reps)).collect();
                gather_rows(&zb, &rows)
            };
            let seg = model.sample_standardized(&zrep, rng).map_err(|e| abort(epoch, bi, e))?;
            let reg = hcat_prefix(&zrep, &seg, cut);
            let x = reg.slice(s![.., in_off..]).to_owned();
            let cache = mlp.forward_cached(x.view()).map_err(|e| abort(epoch, bi, e))?;
            let mut d_out = Array2::zeros(cache.output.dim());
            let mut loss = 0.0;
            match cfg.stage2_target {
                Stage2Target::Independent => {
                    let tgt = model.sample_standardized(&zb, rng).map_err(|e| abort(epoch, bi, e))?;
                    for i in 0..b {
                        for j in 0..da {
                            let mean = (0..reps).map(|r| cache.output[[i * reps + r, j]]).sum::<f64>() / reps as f64;
                            let diff = mean - tgt[[i, cut + j]];
                            loss += diff * diff;
                            for r in 0..reps {
                                d_out[[i * reps + r, j]] = 2.0 * diff / (b * reps) as f64;
                            }
                        }
                    }
                    loss /= b as f64;
                }
                Stage2Target::Joint => {
                    let rows = b * reps;
                    for i in 0..rows {
                        for j in 0..da {
                            let diff = cache.output[[i, j]] - seg[[i, cut + j]];
                            loss += diff * diff;
                            d_out[[i, j]] = 2.0 * diff / rows as f64;
                        }
                    }
                    loss /= rows as f64;
                }
            }
            if !loss.is_finite() {
                return Err(abort(epoch, bi, Error::NonFiniteLoss { sample: 0 }));
            }
            let grad = mlp.backward(&cache, &d_out);
            opt.step(&mut mlp.data, &grad).map_err(|e| abort(epoch, bi, e))?;
            total += loss * b as f64;
        }
        trace.push(total / n_total as f64);
    }
    let scalers = &first.scalers;
    Ok(Fitted {
        params: HistoryPolicy {
            mlp,
            lookback,
            input_scaler: scalers.regressor_tail(in_dim),
            output_scaler: scalers.action.clone(),
            method,
        },
        trace,
    })
}

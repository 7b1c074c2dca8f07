//! Mini-batch training loops.

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adamw::AdamW;
use super::mdn::MixtureDensityParams;
use super::mlp::{gather_rows, mse_loss_grad, MlpParams};
use crate::rng::Rng;
use crate::{Error, Result};

/// How Stage 2 draws the regression target for a generated history.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage2Target {
    /// Target action from a completion drawn independently of the histories
    /// fed to the policy (conditionally independent given the instrument).
    Independent,
    /// Target action from the same joint draw as the history.
    Joint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub hidden: usize,
    pub layers: usize,
    pub components: usize,
    /// Generated histories per instrument per Stage-2 step.
    pub completions: usize,
    pub stage2_target: Stage2Target,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl TrainConfig {
    pub fn paper() -> Self {
        Self {
            lr: 1e-4,
            weight_decay: 1e-4,
            batch_size: 64,
            epochs: 150,
            hidden: 256,
            layers: 2,
            components: 5,
            completions: 1,
            stage2_target: Stage2Target::Independent,
        }
    }

    pub fn desk() -> Self {
        Self {
            lr: 1e-3,
            epochs: 50,
            hidden: 64,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("train.{m}")));
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return bad("lr must be positive");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be >= 0");
        }
        if self.batch_size == 0 || self.hidden == 0 || self.components == 0 || self.completions == 0 {
            return bad("batch_size, hidden, components and completions must be >= 1");
        }
        Ok(())
    }

    pub fn optimizer(&self, n_params: usize) -> AdamW {
        AdamW::new(n_params, self.lr, self.weight_decay)
    }
}

/// Fitted model with its per-epoch mean training loss.
#[derive(Clone, Debug)]
pub struct Fitted<P> {
    pub params: P,
    pub trace: Vec<f64>,
}

/// Shuffled mini-batches of `0..n` for one epoch.
pub fn epoch_batches(n: usize, batch: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks(batch.max(1)).map(|c| c.to_vec()).collect()
}

pub(crate) fn abort(epoch: usize, batch: usize, e: Error) -> Error {
    Error::TrainingAborted {
        epoch,
        batch,
        reason: e.to_string(),
    }
}

/// Least-squares regression `x -> y`.
pub fn fit_mse(x: &Array2<f64>, y: &Array2<f64>, cfg: &TrainConfig, rng: &mut Rng) -> Result<Fitted<MlpParams>> {
    cfg.validate()?;
    if x.nrows() == 0 || x.nrows() != y.nrows() {
        return Err(Error::InvalidConfig(format!(
            "regression needs matching non-empty data ({} inputs, {} targets)",
            x.nrows(),
            y.nrows()
        )));
    }
    let dims = MlpParams::architecture(x.ncols(), cfg.hidden, cfg.layers, y.ncols());
    let mut params = MlpParams::init(&dims, rng);
    let mut opt = cfg.optimizer(params.data.len());
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut total = 0.0;
        for (b, idx) in epoch_batches(x.nrows(), cfg.batch_size, rng).iter().enumerate() {
            let xb = gather_rows(x, idx);
            let yb = gather_rows(y, idx);
            let (loss, grad) = mse_loss_grad(&params, xb.view(), yb.view()).map_err(|e| abort(epoch, b, e))?;
            opt.step(&mut params.data, &grad).map_err(|e| abort(epoch, b, e))?;
            total += loss * idx.len() as f64;
        }
        trace.push(total / x.nrows() as f64);
    }
    Ok(Fitted { params, trace })
}

/// Maximum-likelihood mixture density fit of `y | x`.
pub fn fit_mdn(x: &Array2<f64>, y: &Array2<f64>, cfg: &TrainConfig, rng: &mut Rng) -> Result<Fitted<MixtureDensityParams>> {
    cfg.validate()?;
    if x.nrows() == 0 || x.nrows() != y.nrows() {
        return Err(Error::InvalidConfig("density fit needs matching non-empty data".into()));
    }
    let mut params = MixtureDensityParams::init(x.ncols(), cfg.hidden, cfg.layers, cfg.components, y.ncols(), rng);
    let mut opt = cfg.optimizer(params.net.data.len());
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut total = 0.0;
        for (b, idx) in epoch_batches(x.nrows(), cfg.batch_size, rng).iter().enumerate() {
            let xb = gather_rows(x, idx);
            let yb = gather_rows(y, idx);
            let (loss, grad) = params.nll_loss_grad(xb.view(), yb.view()).map_err(|e| abort(epoch, b, e))?;
            opt.step(&mut params.net.data, &grad).map_err(|e| abort(epoch, b, e))?;
            total += loss * idx.len() as f64;
        }
        trace.push(total / x.nrows() as f64);
    }
    Ok(Fitted { params, trace })
}

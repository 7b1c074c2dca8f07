//! Reference imitators: BC, BC-SEQ and a state-only IV baseline solved by
//! the same two-stage machinery as DML-IL.

use crate::approx::{fit_mse, rows_to_array, Checkpoint, Fitted, Standardizer, TrainConfig};
use crate::cmr::dml::two_stage;
use crate::cmr::{HistoryPolicy, Method, Policy, PolicyInput};
use crate::demos::{extract_windows, DemonstrationSet};
use crate::rng::derive_rng;
use crate::{Error, Result};

/// A policy of the current state only.
#[derive(Clone, Debug, PartialEq)]
pub struct StatePolicy {
    inner: HistoryPolicy,
}

impl StatePolicy {
    pub fn new(inner: HistoryPolicy) -> Result<Self> {
        if inner.lookback != 1 {
            return Err(Error::ShapeMismatch {
                what: "state policy look-back",
                expected: 1,
                got: inner.lookback,
            });
        }
        Ok(Self { inner })
    }

    pub fn method(&self) -> Method {
        self.inner.method
    }

    pub fn as_history(&self) -> &HistoryPolicy {
        &self.inner
    }

    pub fn checkpoint(&self) -> Checkpoint {
        self.inner.checkpoint()
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        Self::new(HistoryPolicy::from_checkpoint(c)?)
    }
}

impl Policy for StatePolicy {
    fn lookback(&self) -> usize {
        1
    }

    fn predict(&self, window: &[f64]) -> Vec<f64> {
        self.inner.predict(window)
    }

    fn predict_batch(&self, windows: &ndarray::Array2<f64>) -> ndarray::Array2<f64> {
        self.inner.predict_batch(windows)
    }
}

fn regress(
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    lookback: usize,
    method: Method,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Fitted<HistoryPolicy>> {
    let (x, y) = (rows_to_array(&x), rows_to_array(&y));
    let (sx, sy) = (Standardizer::fit(&x), Standardizer::fit(&y));
    let fit = fit_mse(&sx.transform(&x), &sy.transform(&y), cfg, &mut derive_rng(seed, method.as_str(), 0))?;
    Ok(Fitted {
        params: HistoryPolicy {
            mlp: fit.params,
            lookback,
            input_scaler: sx,
            output_scaler: sy,
            method,
        },
        trace: fit.trace,
    })
}

/// Behavioural cloning: squared-error regression of `a_t` on `s_t` over
/// every recorded step.
pub fn train_bc(demos: &DemonstrationSet, cfg: &TrainConfig, seed: u64) -> Result<StatePolicy> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for i in 0..demos.len() {
        for j in 0..demos.horizon(i) {
            x.push(demos.state(i, j).to_vec());
            y.push(demos.action(i, j).to_vec());
        }
    }
    StatePolicy::new(regress(x, y, 1, Method::Bc, cfg, seed)?.params)
}

/// BC on histories of look-back `lookback`: estimates `E[a_t | h_t]`.
pub fn train_bc_seq(demos: &DemonstrationSet, lookback: usize, cfg: &TrainConfig, seed: u64) -> Result<HistoryPolicy> {
    if lookback < 2 {
        return Err(Error::InvalidConfig("BC-SEQ needs look-back >= 2".into()));
    }
    let windows = extract_windows(demos, 1, lookback)?;
    let x = windows.windows.iter().map(|w| w.regressor.clone()).collect();
    let y = windows.windows.iter().map(|w| w.target.clone()).collect();
    Ok(regress(x, y, lookback, Method::BcSeq, cfg, seed)?.params)
}

/// Solves `E[a_t - π(s_t) | h_{t-k}] = 0` with a state-only policy.
pub fn train_iv_residual(
    demos: &DemonstrationSet,
    k: usize,
    lookback: usize,
    folds_k: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<StatePolicy> {
    let fit = two_stage(demos, k, lookback, folds_k, PolicyInput::State, Method::IvResidual, cfg, seed)?;
    StatePolicy::new(fit.policy)
}

//! Trained policies and the interface shared by all imitators.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::approx::{Checkpoint, MlpParams, Standardizer};
use crate::demos::windows::window_dim;
use crate::demos::WindowSet;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DmlIl,
    Bc,
    BcSeq,
    IvResidual,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::DmlIl => "dml_il",
            Method::Bc => "bc",
            Method::BcSeq => "bc_seq",
            Method::IvResidual => "iv_residual",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Method::DmlIl, Method::Bc, Method::BcSeq, Method::IvResidual]
            .into_iter()
            .find(|m| m.as_str() == s)
    }
}

/// A deterministic map from the last `lookback` steps of observed history,
/// interleaved as `(s_{t-L+1}, a_{t-L+1}, ..., s_t)`, to an action.
pub trait Policy: Send + Sync {
    fn lookback(&self) -> usize;

    fn predict(&self, window: &[f64]) -> Vec<f64>;

    /// One prediction per row.
    fn predict_batch(&self, windows: &Array2<f64>) -> Array2<f64> {
        let rows: Vec<Vec<f64>> = windows
            .outer_iter()
            .map(|r| self.predict(&r.to_vec()))
            .collect();
        crate::approx::rows_to_array(&rows)
    }
}

/// Policy inputs for every window: the trailing `policy.lookback()` steps of
/// each regressor.
pub fn policy_inputs(policy: &dyn Policy, windows: &WindowSet) -> Result<Array2<f64>> {
    let lp = policy.lookback();
    if lp > windows.lookback {
        return Err(Error::ShapeMismatch {
            what: "policy look-back",
            expected: windows.lookback,
            got: lp,
        });
    }
    let d = window_dim(lp, windows.state_dim, windows.action_dim);
    let full = windows.regressor_dim();
    let rows: Vec<Vec<f64>> = windows
        .windows
        .iter()
        .map(|w| w.regressor[full - d..].to_vec())
        .collect();
    Ok(crate::approx::rows_to_array(&rows))
}

/// Predictions for every window in the set.
pub fn predict_windows(policy: &dyn Policy, windows: &WindowSet) -> Result<Array2<f64>> {
    Ok(policy.predict_batch(&policy_inputs(policy, windows)?))
}

/// MLP on standardized inputs, returning actions in raw units.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryPolicy {
    pub mlp: MlpParams,
    pub lookback: usize,
    pub input_scaler: Standardizer,
    pub output_scaler: Standardizer,
    pub method: Method,
}

impl HistoryPolicy {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: crate::approx::checkpoint::CHECKPOINT_VERSION,
            method: self.method.as_str().into(),
            kind: "mlp".into(),
            dims: self.mlp.dims.clone(),
            components: None,
            params: self.mlp.data.clone(),
            input_scaler: self.input_scaler.clone(),
            output_scaler: self.output_scaler.clone(),
            lookback: self.lookback,
            config_hash: None,
        }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let method = Method::parse(&c.method)
            .ok_or_else(|| Error::Format(format!("unknown method tag `{}`", c.method)))?;
        if c.kind != "mlp" || c.params.len() != MlpParams::param_count(&c.dims) {
            return Err(Error::Format("checkpoint does not hold an MLP policy".into()));
        }
        Ok(Self {
            mlp: MlpParams {
                dims: c.dims.clone(),
                data: c.params.clone(),
            },
            lookback: c.lookback,
            input_scaler: c.input_scaler.clone(),
            output_scaler: c.output_scaler.clone(),
            method,
        })
    }

    /// Prediction in standardized output units for standardized inputs.
    pub fn predict_standardized(&self, x: &Array2<f64>) -> Array2<f64> {
        self.mlp
            .forward_batch(x.view())
            .expect("policy input width fixed at construction")
    }
}

impl Policy for HistoryPolicy {
    fn lookback(&self) -> usize {
        self.lookback
    }

    fn predict(&self, window: &[f64]) -> Vec<f64> {
        let z = self.input_scaler.transform_vec(window);
        let out = self.mlp.forward(&z).expect("policy input width fixed at construction");
        self.output_scaler.inverse_vec(&out)
    }

    fn predict_batch(&self, windows: &Array2<f64>) -> Array2<f64> {
        let z = self.input_scaler.transform(windows);
        self.output_scaler.inverse(&self.predict_standardized(&z))
    }
}

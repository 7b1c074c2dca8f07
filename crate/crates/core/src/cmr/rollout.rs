//! Stage 1: the roll-out model `(h_t, a_t) ~ M(h_{t-k})`.

use ndarray::{s, Array2};

use crate::approx::{fit_mdn, rows_to_array, MixtureDensityParams, Standardizer, TrainConfig};
use crate::demos::WindowSet;
use crate::rng::Rng;
use crate::{Error, Result};

/// Standardization shared by the roll-out model and the policy it trains.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowScalers {
    pub regressor: Standardizer,
    pub action: Standardizer,
    pub instrument_dim: usize,
}

impl WindowScalers {
    pub fn fit(windows: &WindowSet) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::EmptyWindows {
                lookback: windows.lookback,
                horizon: 0,
            });
        }
        let reg: Vec<Vec<f64>> = windows.windows.iter().map(|w| w.regressor.clone()).collect();
        let act: Vec<Vec<f64>> = windows.windows.iter().map(|w| w.target.clone()).collect();
        Ok(Self {
            regressor: Standardizer::fit(&rows_to_array(&reg)),
            action: Standardizer::fit(&rows_to_array(&act)),
            instrument_dim: windows.instrument_dim(),
        })
    }

    pub fn instrument(&self) -> Standardizer {
        self.regressor.slice(0..self.instrument_dim)
    }

    pub fn segment(&self) -> Standardizer {
        self.regressor
            .slice(self.instrument_dim..self.regressor.dim())
            .concat(&self.action)
    }

    /// Scaler of the trailing `dim` regressor coordinates.
    pub fn regressor_tail(&self, dim: usize) -> Standardizer {
        let d = self.regressor.dim();
        self.regressor.slice(d - dim..d)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutModel {
    pub mdn: MixtureDensityParams,
    pub k: usize,
    pub lookback: usize,
    pub state_dim: usize,
    pub action_dim: usize,
    pub scalers: WindowScalers,
}

impl RolloutModel {
    pub fn instrument_dim(&self) -> usize {
        self.scalers.instrument_dim
    }

    pub fn segment_dim(&self) -> usize {
        self.mdn.dim
    }

    pub fn regressor_dim(&self) -> usize {
        self.scalers.regressor.dim()
    }

    /// Standardized instruments of a window set.
    pub fn standardize_instruments(&self, windows: &WindowSet) -> Array2<f64> {
        let rows: Vec<Vec<f64>> = windows.windows.iter().map(|w| w.instrument.clone()).collect();
        self.scalers.instrument().transform(&rows_to_array(&rows))
    }

    /// Standardized segment draws, one per row of standardized instruments.
    pub fn sample_standardized(&self, z: &Array2<f64>, rng: &mut Rng) -> Result<Array2<f64>> {
        self.mdn.sample_batch(z.view(), rng)
    }

    /// One completion `(a_{t-k}, ..., s_t, a_t)` in raw units.
    pub fn sample_segment(&self, instrument: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        let z = self.scalers.instrument().transform_vec(instrument);
        let y = self.mdn.sample(&z, rng)?;
        Ok(self.scalers.segment().inverse_vec(&y))
    }

    /// Mixture mean of the completion in raw units.
    pub fn mean_segment(&self, instrument: &[f64]) -> Result<Vec<f64>> {
        let z = self.scalers.instrument().transform_vec(instrument);
        let y = self.mdn.mixture(&z)?.mean();
        Ok(self.scalers.segment().inverse_vec(&y))
    }

    /// Mean held-out log-likelihood in standardized units.
    pub fn mean_loglik(&self, windows: &WindowSet) -> Result<f64> {
        let (z, y) = standardized_pairs(&self.scalers, windows);
        self.mdn.mean_loglik(z.view(), y.view())
    }
}

fn standardized_pairs(scalers: &WindowScalers, windows: &WindowSet) -> (Array2<f64>, Array2<f64>) {
    let inst: Vec<Vec<f64>> = windows.windows.iter().map(|w| w.instrument.clone()).collect();
    let seg: Vec<Vec<f64>> = windows.windows.iter().map(|w| windows.segment(w)).collect();
    (
        scalers.instrument().transform(&rows_to_array(&inst)),
        scalers.segment().transform(&rows_to_array(&seg)),
    )
}

/// Fits the roll-out model with scalers computed from `windows`.
pub fn fit_rollout_model(windows: &WindowSet, cfg: &TrainConfig, rng: &mut Rng) -> Result<(RolloutModel, Vec<f64>)> {
    let scalers = WindowScalers::fit(windows)?;
    fit_rollout_model_with(windows, &scalers, cfg, rng)
}

/// Maximum-likelihood fit of the missing segment given the instrument.
pub fn fit_rollout_model_with(
    windows: &WindowSet,
    scalers: &WindowScalers,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<(RolloutModel, Vec<f64>)> {
    if windows.is_empty() {
        return Err(Error::EmptyWindows {
            lookback: windows.lookback,
            horizon: 0,
        });
    }
    let (z, y) = standardized_pairs(scalers, windows);
    let fit = fit_mdn(&z, &y, cfg, rng)?;
    let model = RolloutModel {
        mdn: fit.params,
        k: windows.k,
        lookback: windows.lookback,
        state_dim: windows.state_dim,
        action_dim: windows.action_dim,
        scalers: scalers.clone(),
    };
    Ok((model, fit.trace))
}

/// `[a | b[:, ..cols]]`.
pub(crate) fn hcat_prefix(a: &Array2<f64>, b: &Array2<f64>, cols: usize) -> Array2<f64> {
    let mut out = Array2::zeros((a.nrows(), a.ncols() + cols));
    out.slice_mut(s![.., ..a.ncols()]).assign(a);
    out.slice_mut(s![.., a.ncols()..]).assign(&b.slice(s![.., ..cols]));
    out
}

//! Diagonal-Gaussian mixture density network.
//!
//! The trunk's raw output row is `[logits (C) | means (C·D) | log-stds (C·D)]`.
//! Log-stds are clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::MlpParams;
use crate::rng::Rng;
use crate::{Error, Result};

pub const LOG_STD_MIN: f64 = -7.0;
pub const LOG_STD_MAX: f64 = 2.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureDensityParams {
    pub net: MlpParams,
    pub components: usize,
    pub dim: usize,
}

/// Mixture parameters for one condition.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    pub log_weights: Vec<f64>,
    pub means: Vec<f64>,
    pub log_stds: Vec<f64>,
    pub dim: usize,
}

pub fn head_width(components: usize, dim: usize) -> usize {
    components * (1 + 2 * dim)
}

fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

impl Mixture {
    fn from_raw(raw: ArrayView1<'_, f64>, c: usize, d: usize) -> Self {
        let logits: Vec<f64> = raw.iter().take(c).copied().collect();
        let lse = log_sum_exp(&logits);
        Mixture {
            log_weights: logits.iter().map(|l| l - lse).collect(),
            means: raw.iter().skip(c).take(c * d).copied().collect(),
            log_stds: raw
                .iter()
                .skip(c + c * d)
                .take(c * d)
                .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
                .collect(),
            dim: d,
        }
    }

    pub fn components(&self) -> usize {
        self.log_weights.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    /// Per-component joint log-densities `log w_c + log N(y; μ_c, σ_c)`.
    fn joint(&self, y: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..self.components())
            .map(|c| {
                let mut acc = self.log_weights[c];
                for j in 0..d {
                    let s = self.log_stds[c * d + j];
                    let z = (y[j] - self.means[c * d + j]) * (-s).exp();
                    acc += -HALF_LN_2PI - s - 0.5 * z * z;
                }
                acc
            })
            .collect()
    }

    pub fn log_density(&self, y: &[f64]) -> f64 {
        log_sum_exp(&self.joint(y))
    }

    pub fn mean(&self) -> Vec<f64> {
        let w = self.weights();
        let d = self.dim;
        (0..d)
            .map(|j| (0..w.len()).map(|c| w[c] * self.means[c * d + j]).sum())
            .collect()
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = self.components() - 1;
        for (c, lw) in self.log_weights.iter().enumerate() {
            acc += lw.exp();
            if u < acc {
                pick = c;
                break;
            }
        }
        let d = self.dim;
        (0..d)
            .map(|j| {
                let e: f64 = rng.sample(StandardNormal);
                self.means[pick * d + j] + self.log_stds[pick * d + j].exp() * e
            })
            .collect()
    }
}

impl MixtureDensityParams {
    pub fn init(input: usize, hidden: usize, layers: usize, components: usize, dim: usize, rng: &mut Rng) -> Self {
        let dims = MlpParams::architecture(input, hidden, layers, head_width(components, dim));
        Self {
            net: MlpParams::init(&dims, rng),
            components,
            dim,
        }
    }

    pub fn mixture(&self, x: &[f64]) -> Result<Mixture> {
        let raw = self.net.forward(x)?;
        Ok(Mixture::from_raw(ArrayView1::from(&raw[..]), self.components, self.dim))
    }

    pub fn mixtures(&self, x: ArrayView2<'_, f64>) -> Result<Vec<Mixture>> {
        let raw = self.net.forward_batch(x)?;
        Ok(raw
            .outer_iter()
            .map(|r| Mixture::from_raw(r, self.components, self.dim))
            .collect())
    }

    pub fn loglik(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_target(y.len())?;
        Ok(self.mixture(x)?.log_density(y))
    }

    pub fn sample(&self, x: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        Ok(self.mixture(x)?.sample(rng))
    }

    /// One draw per row of `x`, rows processed in order.
    pub fn sample_batch(&self, x: ArrayView2<'_, f64>, rng: &mut Rng) -> Result<Array2<f64>> {
        let mix = self.mixtures(x)?;
        let mut out = Array2::zeros((x.nrows(), self.dim));
        for (i, m) in mix.iter().enumerate() {
            for (j, v) in m.sample(rng).into_iter().enumerate() {
                out[[i, j]] = v;
            }
        }
        Ok(out)
    }

    fn check_target(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(Error::ShapeMismatch {
                what: "mdn target",
                expected: self.dim,
                got: d,
            });
        }
        Ok(())
    }

    /// Mean log-likelihood over a batch.
    pub fn mean_loglik(&self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<f64> {
        self.check_target(y.ncols())?;
        let mix = self.mixtures(x)?;
        let total: f64 = mix
            .iter()
            .zip(y.outer_iter())
            .map(|(m, row)| m.log_density(row.as_slice().expect("contiguous row")))
            .sum();
        Ok(total / x.nrows() as f64)
    }

    /// Mean negative log-likelihood and its gradient.
    pub fn nll_loss_grad(&self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<(f64, Vec<f64>)> {
        self.check_target(y.ncols())?;
        let cache = self.net.forward_cached(x)?;
        let (c, d) = (self.components, self.dim);
        let b = x.nrows() as f64;
        let mut d_out = Array2::zeros(cache.output.dim());
        let mut total = 0.0;
        for (i, raw) in cache.output.outer_iter().enumerate() {
            let m = Mixture::from_raw(raw, c, d);
            let yi = y.row(i);
            let yi = yi.as_slice().expect("contiguous row");
            let joint = m.joint(yi);
            let lp = log_sum_exp(&joint);
            if !lp.is_finite() {
                return Err(Error::NonFiniteLoss { sample: i });
            }
            total -= lp;
            let mut g = d_out.row_mut(i);
            for k in 0..c {
                let resp = (joint[k] - lp).exp();
                g[k] = (m.log_weights[k].exp() - resp) / b;
                for j in 0..d {
                    let s = m.log_stds[k * d + j];
                    let inv_var = (-2.0 * s).exp();
                    let diff = yi[j] - m.means[k * d + j];
                    g[c + k * d + j] = -resp * diff * inv_var / b;
                    let raw_s = raw[c + c * d + k * d + j];
                    if raw_s > LOG_STD_MIN && raw_s < LOG_STD_MAX {
                        g[c + c * d + k * d + j] = -resp * (diff * diff * inv_var - 1.0) / b;
                    }
                }
            }
        }
        Ok((total / b, self.net.backward(&cache, &d_out)))
    }
}

//! Fully connected ReLU regressor with a flat parameter buffer.
//!
//! Layer `l` maps `dims[l] -> dims[l+1]`; its weight is stored row-major as a
//! `dims[l] x dims[l+1]` block followed by the bias. Every layer but the last
//! applies a ReLU.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

/// Activations kept for the backward pass.
pub struct ForwardCache {
    /// Input to each layer; `acts[0]` is the batch itself.
    acts: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

fn layer_len(i: usize, o: usize) -> usize {
    i * o + o
}

impl MlpParams {
    pub fn param_count(dims: &[usize]) -> usize {
        dims.windows(2).map(|w| layer_len(w[0], w[1])).sum()
    }

    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        Self {
            dims: dims.to_vec(),
            data: vec![0.0; Self::param_count(dims)],
        }
    }

    /// `in -> hidden -> ... -> out` with `layers` hidden layers.
    pub fn architecture(input: usize, hidden: usize, layers: usize, output: usize) -> Vec<usize> {
        let mut d = vec![input];
        d.extend(std::iter::repeat_n(hidden, layers));
        d.push(output);
        d
    }

    /// Weights and biases uniform on `±1/sqrt(fan_in)`.
    pub fn init(dims: &[usize], rng: &mut Rng) -> Self {
        let mut p = Self::zeros(dims);
        let mut off = 0;
        for w in dims.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for x in &mut p.data[off..off + layer_len(w[0], w[1])] {
                *x = bound * (2.0 * rng.random::<f64>() - 1.0);
            }
            off += layer_len(w[0], w[1]);
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("dims non-empty")
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len() - 1
    }

    fn offset(&self, layer: usize) -> usize {
        self.dims[..=layer]
            .windows(2)
            .map(|w| layer_len(w[0], w[1]))
            .sum()
    }

    pub fn weight(&self, layer: usize) -> ArrayView2<'_, f64> {
        let (i, o) = (self.dims[layer], self.dims[layer + 1]);
        let off = self.offset(layer);
        ArrayView2::from_shape((i, o), &self.data[off..off + i * o]).expect("weight shape")
    }

    pub fn bias(&self, layer: usize) -> ArrayView1<'_, f64> {
        let (i, o) = (self.dims[layer], self.dims[layer + 1]);
        let off = self.offset(layer) + i * o;
        ArrayView1::from(&self.data[off..off + o])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::ShapeMismatch {
                what: "mlp input",
                expected: self.input_dim(),
                got: cols,
            });
        }
        Ok(())
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, f64>) -> Result<ForwardCache> {
        self.check_input(x.ncols())?;
        let mut acts = Vec::with_capacity(self.n_layers());
        let mut h = x.to_owned();
        for l in 0..self.n_layers() {
            let mut z = h.dot(&self.weight(l));
            z += &self.bias(l);
            if l + 1 < self.n_layers() {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(h);
            h = z;
        }
        Ok(ForwardCache { acts, output: h })
    }

    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x)?.output)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        Ok(self.forward_batch(view)?.row(0).to_vec())
    }

    /// Reverse-mode gradient of a loss whose derivative w.r.t. the outputs is
    /// `d_out` (same shape as the forward output).
    pub fn backward(&self, cache: &ForwardCache, d_out: &Array2<f64>) -> Vec<f64> {
        let mut grad = vec![0.0; self.data.len()];
        let mut delta = d_out.clone();
        for l in (0..self.n_layers()).rev() {
            let input = &cache.acts[l];
            let (i, o) = (self.dims[l], self.dims[l + 1]);
            let off = self.offset(l);
            let gw = input.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            for (g, v) in grad[off..off + i * o].iter_mut().zip(gw.iter()) {
                *g = *v;
            }
            for (g, v) in grad[off + i * o..off + i * o + o].iter_mut().zip(gb.iter()) {
                *g = *v;
            }
            if l > 0 {
                let mut back = delta.dot(&self.weight(l).t());
                // input of layer l is relu(z_{l-1}); its derivative is 1 where positive
                ndarray::Zip::from(&mut back)
                    .and(input)
                    .for_each(|d, &a| {
                        if a <= 0.0 {
                            *d = 0.0
                        }
                    });
                delta = back;
            }
        }
        grad
    }

    /// Signs of hidden pre-activations for one input (used to detect kinks).
    pub fn activation_pattern(&self, x: &[f64]) -> Vec<bool> {
        let mut h = Array1::from(x.to_vec());
        let mut out = Vec::new();
        for l in 0..self.n_layers() - 1 {
            let mut z = h.dot(&self.weight(l));
            z += &self.bias(l);
            out.extend(z.iter().map(|&v| v > 0.0));
            z.mapv_inplace(|v| v.max(0.0));
            h = z;
        }
        out
    }
}

/// Mean over the batch of the squared error summed over output dims, and its
/// gradient.
pub fn mse_loss_grad(
    params: &MlpParams,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Result<(f64, Vec<f64>)> {
    let cache = params.forward_cached(x)?;
    if y.dim() != cache.output.dim() {
        return Err(Error::ShapeMismatch {
            what: "mse target",
            expected: cache.output.ncols(),
            got: y.ncols(),
        });
    }
    let b = x.nrows() as f64;
    let diff = &cache.output - &y;
    let mut loss = 0.0;
    for (i, row) in diff.outer_iter().enumerate() {
        let l = row.dot(&row);
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss { sample: i });
        }
        loss += l;
    }
    let d_out = diff.mapv(|v| 2.0 * v / b);
    Ok((loss / b, params.backward(&cache, &d_out)))
}

pub fn mse(params: &MlpParams, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<f64> {
    let out = params.forward_batch(x)?;
    let diff = &out - &y;
    Ok(diff.mapv(|v| v * v).sum() / x.nrows() as f64)
}

/// Rows `idx` of `m`.
pub fn gather_rows(m: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), m.ncols()));
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).assign(&m.row(i));
    }
    out
}

/// Builds a row-major matrix from equally sized rows.
pub fn rows_to_array(rows: &[Vec<f64>]) -> Array2<f64> {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut out = Array2::zeros((rows.len(), cols));
    for (i, r) in rows.iter().enumerate() {
        out.slice_mut(s![i, ..]).assign(&ArrayView1::from(&r[..]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use ndarray::array;

    /// Straight-line evaluator written independently of the matrix code.
    fn naive_forward(p: &MlpParams, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        let mut off = 0;
        for l in 0..p.dims.len() - 1 {
            let (i, o) = (p.dims[l], p.dims[l + 1]);
            let mut z = vec![0.0; o];
            for (j, zj) in z.iter_mut().enumerate() {
                let mut acc = p.data[off + i * o + j];
                for (r, hr) in h.iter().enumerate() {
                    acc += hr * p.data[off + r * o + j];
                }
                *zj = if l + 2 < p.dims.len() { acc.max(0.0) } else { acc };
            }
            off += i * o + o;
            h = z;
        }
        h
    }

    #[test]
    fn zero_params_give_zero() {
        let p = MlpParams::zeros(&[3, 4, 4, 2]);
        assert_eq!(p.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_path() {
        let p = MlpParams {
            dims: vec![1, 1, 1],
            data: vec![1.0, 0.0, 1.0, 0.0],
        };
        assert_eq!(p.forward(&[2.5]).unwrap(), vec![2.5]);
    }

    #[test]
    fn shape_mismatch() {
        let p = MlpParams::zeros(&[3, 2]);
        assert!(matches!(p.forward(&[1.0]), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn matches_naive_evaluator() {
        let mut rng = rng_from(12);
        let p = MlpParams::init(&[5, 7, 6, 3], &mut rng);
        for i in 0..20 {
            let x: Vec<f64> = (0..5).map(|j| ((i * 5 + j) as f64).sin()).collect();
            let a = p.forward(&x).unwrap();
            let b = naive_forward(&p, &x);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn one_parameter_linear_gradient() {
        let p = MlpParams {
            dims: vec![1, 1],
            data: vec![0.0, 0.0],
        };
        let (loss, g) = mse_loss_grad(&p, array![[1.0]].view(), array![[2.0]].view()).unwrap();
        assert_eq!(loss, 4.0);
        assert_eq!(g[0], -4.0);
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let mut rng = rng_from(2);
        let p = MlpParams::init(&[2, 5, 5, 1], &mut rng);
        let x = array![[0.1, 0.2], [-0.4, 1.0], [2.0, -1.0]];
        let y = p.forward_batch(x.view()).unwrap();
        let (loss, g) = mse_loss_grad(&p, x.view(), y.view()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_finite_loss_names_sample() {
        let p = MlpParams {
            dims: vec![1, 1],
            data: vec![1.0, 0.0],
        };
        let x = array![[1.0], [f64::INFINITY]];
        let y = array![[0.0], [0.0]];
        assert!(matches!(
            mse_loss_grad(&p, x.view(), y.view()),
            Err(Error::NonFiniteLoss { sample: 1 })
        ));
    }
}

//! Exact Gaussian conditioning for expert data of the linear-Gaussian env.
//!
//! Every variable of an expert episode is a linear form in independent
//! zero-mean Gaussian draws (u^o, the q draws behind u^ε, the process noise
//! w). Conditional expectations given any window are then linear in that
//! window, with coefficients from the joint covariance.

use nalgebra::{DMatrix, DVector};

use super::LinearGaussianSpec;

/// Linear form over the base draws.
pub type Form = Vec<f64>;

#[derive(Clone, Debug)]
pub struct LinearGaussianOracle {
    spec: LinearGaussianSpec,
    var: Vec<f64>,
    s: Vec<Form>,
    a: Vec<Form>,
    ueps: Vec<Form>,
    uo: Form,
}

fn axpy(out: &mut [f64], c: f64, x: &[f64]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += c * v;
    }
}

impl LinearGaussianOracle {
    pub fn new(spec: &LinearGaussianSpec) -> Self {
        let k = spec.k;
        let horizon = spec.horizon;
        let n = 1 + k + 2 * horizon;
        let q_var = spec.sigma_eps * spec.sigma_eps * k as f64;
        let mut var = vec![0.0; n];
        var[0] = spec.sigma_o * spec.sigma_o;
        let unit = |i: usize| {
            let mut f = vec![0.0; n];
            f[i] = 1.0;
            f
        };
        // indices of the draws currently in the u^ε buffer
        let mut buffer: std::collections::VecDeque<usize> = (1..=k).collect();
        for i in 1..=k {
            var[i] = q_var;
        }
        let uo = unit(0);
        let mut z = vec![0.0; n];
        let mut a_prev = vec![0.0; n];
        let (mut s_all, mut a_all, mut e_all) = (Vec::new(), Vec::new(), Vec::new());
        for t in 1..=horizon {
            let qi = k + 2 * t - 1;
            let wi = k + 2 * t;
            var[qi] = q_var;
            var[wi] = spec.sigma_w * spec.sigma_w;
            buffer.pop_front();
            buffer.push_back(qi);
            let mut ueps = vec![0.0; n];
            for &b in &buffer {
                ueps[b] = 1.0 / k as f64;
            }
            let mut z_new = vec![0.0; n];
            axpy(&mut z_new, spec.gamma, &z);
            axpy(&mut z_new, 1.0, &a_prev);
            z_new[wi] += 1.0;
            z = z_new;
            let mut s = z.clone();
            axpy(&mut s, spec.c_s, &ueps);
            let mut a = vec![0.0; n];
            axpy(&mut a, spec.alpha, &s);
            axpy(&mut a, spec.beta, &uo);
            axpy(&mut a, spec.c_a, &ueps);
            a_prev = a.clone();
            s_all.push(s);
            a_all.push(a);
            e_all.push(ueps);
        }
        Self {
            spec: *spec,
            var,
            s: s_all,
            a: a_all,
            ueps: e_all,
            uo,
        }
    }

    pub fn spec(&self) -> &LinearGaussianSpec {
        &self.spec
    }

    pub fn cov(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.var)
            .map(|((a, b), v)| a * b * v)
            .sum()
    }

    /// State at 1-based time t.
    pub fn state(&self, t: usize) -> &Form {
        &self.s[t - 1]
    }

    pub fn action(&self, t: usize) -> &Form {
        &self.a[t - 1]
    }

    pub fn ueps(&self, t: usize) -> &Form {
        &self.ueps[t - 1]
    }

    pub fn uo(&self) -> &Form {
        &self.uo
    }

    /// Forms of `(s_{t-L+1}, a_{t-L+1}, ..., a_{t-1}, s_t)`.
    pub fn window(&self, t: usize, lookback: usize) -> Vec<Form> {
        assert!(lookback >= 1 && t >= lookback, "window needs t >= L");
        let mut out = Vec::with_capacity(2 * lookback - 1);
        for u in (t + 1 - lookback)..=t {
            out.push(self.state(u).clone());
            if u < t {
                out.push(self.action(u).clone());
            }
        }
        out
    }

    /// Coefficients `b` with `E[target | given] = b · given`.
    pub fn regression(&self, target: &[f64], given: &[Form]) -> Vec<f64> {
        let m = given.len();
        let gram = DMatrix::from_fn(m, m, |i, j| self.cov(&given[i], &given[j]));
        let rhs = DVector::from_fn(m, |i, _| self.cov(&given[i], target));
        let svd = gram.svd(true, true);
        let tol = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
        match svd.solve(&rhs, tol) {
            Ok(b) => b.iter().copied().collect(),
            Err(_) => vec![0.0; m],
        }
    }

    /// Form of `E[target | given]`.
    pub fn conditional(&self, target: &[f64], given: &[Form]) -> Form {
        let b = self.regression(target, given);
        let mut out = vec![0.0; target.len()];
        for (c, g) in b.iter().zip(given) {
            axpy(&mut out, *c, g);
        }
        out
    }

    /// Coefficients of `π_h(h_t) = α s_t + β E[u^o | h_t]` on the window.
    pub fn history_policy(&self, t: usize, lookback: usize) -> Vec<f64> {
        let w = self.window(t, lookback);
        let mut b: Vec<f64> = self
            .regression(&self.uo, &w)
            .into_iter()
            .map(|c| self.spec.beta * c)
            .collect();
        *b.last_mut().expect("non-empty window") += self.spec.alpha;
        b
    }

    /// Coefficients of `E[u^ε_t | h_t]` on the window.
    pub fn ueps_given_history(&self, t: usize, lookback: usize) -> Vec<f64> {
        self.regression(self.ueps(t), &self.window(t, lookback))
    }

    /// Coefficients of `E[a_t | h_t]`.
    pub fn action_given_history(&self, t: usize, lookback: usize) -> Vec<f64> {
        self.regression(self.action(t), &self.window(t, lookback))
    }

    /// Slope of `E[a_t | s_t]`.
    pub fn action_given_state(&self, t: usize) -> f64 {
        self.regression(self.action(t), std::slice::from_ref(self.state(t)))[0]
    }

    /// Variance of the predictor `E[u^o | h_t]`.
    pub fn uo_predictor_variance(&self, t: usize, lookback: usize) -> f64 {
        let f = self.conditional(&self.uo, &self.window(t, lookback));
        self.cov(&f, &f)
    }

    pub fn variance(&self, f: &[f64]) -> f64 {
        self.cov(f, f)
    }
}

/// Applies window coefficients to a concrete window.
pub fn apply(coeffs: &[f64], window: &[f64]) -> f64 {
    coeffs.iter().zip(window).map(|(c, x)| c * x).sum()
}

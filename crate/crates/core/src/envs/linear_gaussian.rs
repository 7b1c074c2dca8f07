//! Linear-Gaussian environment with closed-form conditionals.
//!
//! ```text
//! z_t = γ z_{t-1} + a_{t-1} + w_t        z_0 = 0, a_0 = 0
//! s_t = z_t + c_s u^ε_t
//! a_t = α s_t + β u^o + c_a u^ε_t        (expert)
//! ```
//!
//! u^o ~ N(0, σ_o²) is fixed per episode and u^ε is a k-draw moving average
//! with Var(u^ε) = σ_ε². Rewards lie in (0, 1].

use super::confounder::{per_draw_std, ConfounderState, Draw};
use super::spec::{EnvSpec, LinearGaussianParams};
use crate::rng::Rng;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearGaussianSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c_s: f64,
    pub c_a: f64,
    pub sigma_o: f64,
    pub sigma_eps: f64,
    pub sigma_w: f64,
    pub k: usize,
    pub horizon: usize,
    pub action_low: f64,
    pub action_high: f64,
    pub overflow_guard: f64,
}

impl LinearGaussianSpec {
    pub fn from_spec(spec: &EnvSpec) -> Result<Self> {
        let p: LinearGaussianParams = spec.linear_params()?;
        Ok(Self {
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            c_s: p.c_s,
            c_a: spec.noise_scale(),
            sigma_o: p.sigma_o,
            sigma_eps: p.sigma_eps,
            sigma_w: p.sigma_w,
            k: spec.k,
            horizon: spec.horizon,
            action_low: p.action_low,
            action_high: p.action_high,
            overflow_guard: p.overflow_guard,
        })
    }

    pub fn confounders(&self, rng: &mut Rng) -> Result<ConfounderState> {
        let uo = Draw::Normal { std: self.sigma_o }.sample(rng);
        ConfounderState::fixed_uo(
            uo,
            self.k,
            Draw::Normal {
                std: per_draw_std(self.sigma_eps, self.k),
            },
            rng,
        )
    }

    pub fn expert_action(&self, s: f64, uo: f64) -> f64 {
        self.alpha * s + self.beta * uo
    }

    pub fn latent_step(&self, z_prev: f64, a_prev: f64, rng: &mut Rng) -> f64 {
        let w = Draw::Normal { std: self.sigma_w }.sample(rng);
        self.gamma * z_prev + a_prev + w
    }

    pub fn observe(&self, z: f64, ueps: f64) -> f64 {
        z + self.c_s * ueps
    }

    /// `exp(-(a - π_E(s, u^o))² / 2)`.
    pub fn reward(&self, s: f64, uo: f64, a: f64) -> f64 {
        let d = a - self.expert_action(s, uo);
        (-0.5 * d * d).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expert_arithmetic() {
        let spec = EnvSpec::linear_gaussian(1, 10, LinearGaussianParams::default());
        let lg = LinearGaussianSpec::from_spec(&spec).unwrap();
        assert_eq!(lg.expert_action(2.0, -1.0), 0.0);
        assert_eq!(lg.reward(1.0, 0.5, lg.expert_action(1.0, 0.5)), 1.0);
    }
}

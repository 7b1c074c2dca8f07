//! Confounded MDP simulators and built-in action sources.

pub mod confounder;
pub mod linear_gaussian;
pub mod oracle;
pub mod plane_ticket;
pub mod spec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use confounder::{confounder_step, ConfounderState, Draw, MovingAverage, UoProcess};
pub use linear_gaussian::LinearGaussianSpec;
pub use plane_ticket::{plane_ticket_step, PlaneTicket};
pub use spec::{EnvKind, EnvSpec, LinearGaussianParams, PlaneTicketParams};

use crate::demos::Trajectory;
use crate::rng::{derive_rng, Rng};
use crate::{Error, Result};

/// One environment step with its hidden fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub uo: f64,
    pub ueps: f64,
    pub r: f64,
}

#[derive(Clone, Debug)]
enum Model {
    Plane(PlaneTicket),
    Linear(LinearGaussianSpec),
}

/// A validated, ready-to-simulate environment.
#[derive(Clone, Debug)]
pub struct Env {
    spec: EnvSpec,
    model: Model,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RolloutOptions {
    /// Force u^ε to zero (the "un-noised" environment). Random draws are still
    /// consumed so u^o paths match the confounded run with the same seed.
    pub clean: bool,
    /// Add `noise_scale · u^ε` to every executed action.
    pub action_noise: bool,
}

impl Default for RolloutOptions {
    fn default() -> Self {
        Self {
            clean: false,
            action_noise: true,
        }
    }
}

/// What an action source sees at time t. Imitators must only read the state
/// and the observed history; `expert_uo` exists for the built-in expert.
pub struct Observation<'a> {
    pub t: usize,
    pub state: &'a [f64],
    pub history: &'a History,
    expert_uo: f64,
}

impl Observation<'_> {
    pub fn expert_uo(&self) -> f64 {
        self.expert_uo
    }
}

pub trait Actor {
    fn act(&mut self, obs: &Observation<'_>, rng: &mut Rng) -> Result<Vec<f64>>;
}

/// Observed states and executed actions of the current episode.
#[derive(Clone, Debug, Default)]
pub struct History {
    states: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    action_dim: usize,
}

impl History {
    pub fn new(action_dim: usize) -> Self {
        Self {
            states: Vec::new(),
            actions: Vec::new(),
            action_dim,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn push_state(&mut self, s: Vec<f64>) {
        self.states.push(s);
    }

    pub fn push_action(&mut self, a: Vec<f64>) {
        self.actions.push(a);
    }

    /// Interleaved `(s_{t-L+1}, a_{t-L+1}, ..., a_{t-1}, s_t)`. Missing states
    /// repeat the first state and missing actions are zero.
    pub fn window(&self, lookback: usize) -> Vec<f64> {
        let n = self.states.len() as isize;
        let mut out = Vec::new();
        for j in 0..lookback as isize {
            let idx = n - lookback as isize + j;
            let s = &self.states[idx.max(0) as usize];
            out.extend_from_slice(s);
            if j + 1 < lookback as isize {
                if idx < 0 {
                    out.extend(std::iter::repeat_n(0.0, self.action_dim));
                } else {
                    out.extend_from_slice(&self.actions[idx as usize]);
                }
            }
        }
        out
    }
}

pub struct ExpertActor<'a> {
    pub env: &'a Env,
}

impl Actor for ExpertActor<'_> {
    fn act(&mut self, obs: &Observation<'_>, _rng: &mut Rng) -> Result<Vec<f64>> {
        self.env.expert_action(obs.state, obs.expert_uo)
    }
}

/// Uniform over the action bounds.
pub struct RandomActor {
    pub low: f64,
    pub high: f64,
    pub dim: usize,
}

impl Actor for RandomActor {
    fn act(&mut self, _obs: &Observation<'_>, rng: &mut Rng) -> Result<Vec<f64>> {
        Ok((0..self.dim)
            .map(|_| random_action(self.low, self.high, rng))
            .collect())
    }
}

fn random_action(low: f64, high: f64, rng: &mut Rng) -> f64 {
    low + (high - low) * rng.random::<f64>()
}

/// One draw from the env's random policy.
pub fn random_policy(env: &Env, rng: &mut Rng) -> Vec<f64> {
    let (low, high) = env.action_bounds();
    (0..env.action_dim())
        .map(|_| random_action(low, high, rng))
        .collect()
}

/// Full rollout plus the actions the actor intended before noise.
#[derive(Clone, Debug)]
pub struct Rollout {
    pub trajectory: Trajectory,
    pub intended: Vec<Vec<f64>>,
}

impl Env {
    pub fn new(spec: EnvSpec) -> Result<Self> {
        spec.validate()?;
        let model = match spec.env {
            EnvKind::PlaneTicket => Model::Plane(PlaneTicket::from_spec(&spec)?),
            EnvKind::LinearGaussian => Model::Linear(LinearGaussianSpec::from_spec(&spec)?),
        };
        Ok(Self { spec, model })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn kind(&self) -> EnvKind {
        self.spec.env
    }

    pub fn state_dim(&self) -> usize {
        1
    }

    pub fn action_dim(&self) -> usize {
        1
    }

    pub fn horizon(&self) -> usize {
        self.spec.horizon
    }

    pub fn noise_scale(&self) -> f64 {
        self.spec.noise_scale()
    }

    /// Std of the additive action noise `noise_scale · u^ε`.
    pub fn action_noise_std(&self) -> f64 {
        let ueps_std = match &self.model {
            Model::Plane(p) => p.params.ueps_std,
            Model::Linear(l) => l.sigma_eps,
        };
        self.noise_scale().abs() * ueps_std
    }

    pub fn linear(&self) -> Option<&LinearGaussianSpec> {
        match &self.model {
            Model::Linear(l) => Some(l),
            Model::Plane(_) => None,
        }
    }

    pub fn action_bounds(&self) -> (f64, f64) {
        match &self.model {
            Model::Plane(_) => (-1.0, 1.0),
            Model::Linear(l) => (l.action_low, l.action_high),
        }
    }

    /// Known reward range, when bounded.
    pub fn reward_bounds(&self) -> Option<(f64, f64)> {
        match &self.model {
            Model::Plane(_) => None,
            Model::Linear(_) => Some((0.0, 1.0)),
        }
    }

    pub fn expert_action(&self, s: &[f64], uo: f64) -> Result<Vec<f64>> {
        match &self.model {
            Model::Plane(_) => Ok(vec![plane_ticket::expert_action(s[0], uo)?]),
            Model::Linear(l) => Ok(vec![l.expert_action(s[0], uo)]),
        }
    }

    pub fn reward(&self, s: &[f64], uo: f64, a: &[f64]) -> f64 {
        match &self.model {
            Model::Plane(_) => plane_ticket::reward(s[0], uo, a[0]),
            Model::Linear(l) => l.reward(s[0], uo, a[0]),
        }
    }

    pub fn random_actor(&self) -> RandomActor {
        let (low, high) = self.action_bounds();
        RandomActor {
            low,
            high,
            dim: self.action_dim(),
        }
    }

    /// Simulates one episode. Environment noise and actor randomness come from
    /// separate streams derived from `episode_seed`.
    pub fn rollout(
        &self,
        actor: &mut dyn Actor,
        episode_seed: u64,
        opts: RolloutOptions,
    ) -> Result<Rollout> {
        let mut env_rng = derive_rng(episode_seed, "env", 0);
        let mut actor_rng = derive_rng(episode_seed, "actor", 0);
        let mut conf = match &self.model {
            Model::Plane(p) => p.confounders(&mut env_rng)?,
            Model::Linear(l) => l.confounders(&mut env_rng)?,
        };
        let horizon = self.spec.horizon;
        let noise_scale = self.noise_scale();
        let mut history = History::new(self.action_dim());
        let mut steps = Vec::with_capacity(horizon);
        let mut intended_all = Vec::with_capacity(horizon);
        let (mut s_prev, mut z_prev, mut a_prev) = (0.0, 0.0, 0.0);
        for t in 1..=horizon {
            let (uo, mut ueps) = conf.step(&mut env_rng);
            if opts.clean {
                ueps = 0.0;
            }
            let s = match &self.model {
                Model::Plane(_) => plane_ticket::transition(s_prev, uo, ueps),
                Model::Linear(l) => {
                    let z = l.latent_step(z_prev, a_prev, &mut env_rng);
                    if !z.is_finite() || z.abs() > l.overflow_guard {
                        return Err(Error::Diverged {
                            step: t,
                            magnitude: z.abs(),
                        });
                    }
                    z_prev = z;
                    l.observe(z, ueps)
                }
            };
            if !s.is_finite() {
                return Err(Error::Diverged {
                    step: t,
                    magnitude: s.abs(),
                });
            }
            history.push_state(vec![s]);
            let obs = Observation {
                t,
                state: std::slice::from_ref(&s),
                history: &history,
                expert_uo: uo,
            };
            let intended = actor.act(&obs, &mut actor_rng)?;
            if intended.len() != self.action_dim() {
                return Err(Error::ShapeMismatch {
                    what: "action",
                    expected: self.action_dim(),
                    got: intended.len(),
                });
            }
            let noise = if opts.action_noise {
                noise_scale * ueps
            } else {
                0.0
            };
            let a: Vec<f64> = intended.iter().map(|x| x + noise).collect();
            let r = self.reward(&[s], uo, &a);
            history.push_action(a.clone());
            s_prev = s;
            a_prev = a[0];
            steps.push(StepRecord {
                t,
                s: vec![s],
                a,
                uo,
                ueps,
                r,
            });
            intended_all.push(intended);
        }
        Ok(Rollout {
            trajectory: Trajectory {
                episode_seed,
                steps,
            },
            intended: intended_all,
        })
    }

    /// Expert episode in the confounded env.
    pub fn expert_trajectory(&self, episode_seed: u64) -> Result<Trajectory> {
        let mut actor = ExpertActor { env: self };
        Ok(self
            .rollout(&mut actor, episode_seed, RolloutOptions::default())?
            .trajectory)
    }
}

/// Linear-Gaussian episode driven by `actor`.
pub fn linear_gaussian_rollout(
    spec: &EnvSpec,
    actor: &mut dyn Actor,
    episode_seed: u64,
) -> Result<Trajectory> {
    if spec.env != EnvKind::LinearGaussian {
        return Err(Error::UnsupportedEnv(spec.env.as_str().into()));
    }
    let env = Env::new(spec.clone())?;
    Ok(env
        .rollout(actor, episode_seed, RolloutOptions::default())?
        .trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lg(params: LinearGaussianParams, k: usize, t: usize) -> Env {
        Env::new(EnvSpec::linear_gaussian(k, t, params)).unwrap()
    }

    #[test]
    fn recorded_actions_decompose_exactly() {
        for env in [
            Env::new(EnvSpec::plane_ticket(3, 100)).unwrap(),
            lg(LinearGaussianParams::default(), 2, 100),
        ] {
            let tr = env.expert_trajectory(9).unwrap();
            for st in &tr.steps {
                let pe = env.expert_action(&st.s, st.uo).unwrap()[0];
                assert_eq!(pe + env.noise_scale() * st.ueps, st.a[0]);
            }
        }
    }

    #[test]
    fn all_zero_linear_trajectory() {
        let p = LinearGaussianParams {
            sigma_o: 0.0,
            sigma_eps: 0.0,
            sigma_w: 0.0,
            ..Default::default()
        };
        let tr = lg(p, 1, 30).expert_trajectory(3).unwrap();
        assert!(tr
            .steps
            .iter()
            .all(|s| s.s[0] == 0.0 && s.a[0] == 0.0 && s.uo == 0.0 && s.ueps == 0.0));
    }

    #[test]
    fn divergence_is_reported() {
        let p = LinearGaussianParams {
            alpha: 3.0,
            gamma: 1.0,
            overflow_guard: 1e3,
            ..Default::default()
        };
        let err = lg(p, 1, 500).expert_trajectory(1).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err}");
    }

    #[test]
    fn same_seed_same_trajectory() {
        let env = Env::new(EnvSpec::plane_ticket(5, 50)).unwrap();
        assert_eq!(
            env.expert_trajectory(17).unwrap(),
            env.expert_trajectory(17).unwrap()
        );
        assert_ne!(
            env.expert_trajectory(17).unwrap(),
            env.expert_trajectory(18).unwrap()
        );
    }

    #[test]
    fn clean_mode_keeps_uo_path() {
        let env = Env::new(EnvSpec::plane_ticket(2, 40)).unwrap();
        let mut ex = ExpertActor { env: &env };
        let noisy = env.rollout(&mut ex, 5, RolloutOptions::default()).unwrap();
        let clean = env
            .rollout(
                &mut ex,
                5,
                RolloutOptions {
                    clean: true,
                    ..Default::default()
                },
            )
            .unwrap();
        for (a, b) in noisy.trajectory.steps.iter().zip(&clean.trajectory.steps) {
            assert_eq!(a.uo, b.uo);
            assert_eq!(b.ueps, 0.0);
        }
    }

    #[test]
    fn history_window_pads_at_start() {
        let mut h = History::new(1);
        h.push_state(vec![2.0]);
        assert_eq!(h.window(3), vec![2.0, 0.0, 2.0, 0.0, 2.0]);
        h.push_action(vec![0.5]);
        h.push_state(vec![3.0]);
        assert_eq!(h.window(3), vec![2.0, 0.0, 2.0, 0.5, 3.0]);
        assert_eq!(h.window(1), vec![3.0]);
    }

    #[test]
    fn random_policy_respects_bounds() {
        let env = Env::new(EnvSpec::plane_ticket(1, 10)).unwrap();
        let mut rng = crate::rng::rng_from(4);
        let xs: Vec<f64> = (0..100_000).map(|_| random_policy(&env, &mut rng)[0]).collect();
        assert!(xs.iter().all(|x| (-1.0..1.0).contains(x)));
        let m = crate::stats::mean(&xs);
        // Uniform[-1,1] has std 1/sqrt(3).
        assert!(m.abs() < 4.0 * (1.0 / 3f64.sqrt()) / (1e5f64).sqrt(), "{m}");
    }
}

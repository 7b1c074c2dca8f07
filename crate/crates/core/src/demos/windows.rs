//! History windows.
//!
//! A regressor of look-back `L` ending at `s_t` is the interleaved sequence
//! `(s_{t-L+1}, a_{t-L+1}, ..., a_{t-1}, s_t)`. Its instrument is the prefix
//! that ends at `s_{t-k}`: `L-k` states and `L-k-1` actions. The missing
//! segment `(a_{t-k}, ..., s_t)` together with the target `a_t` is what the
//! roll-out model generates.

use super::DemonstrationSet;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryWindow {
    pub instrument: Vec<f64>,
    pub regressor: Vec<f64>,
    pub target: Vec<f64>,
    /// 1-based time of `s_t`.
    pub t: usize,
    /// Index of the source trajectory.
    pub trajectory: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowSet {
    pub windows: Vec<HistoryWindow>,
    pub k: usize,
    pub lookback: usize,
    pub state_dim: usize,
    pub action_dim: usize,
}

/// Dimension of an interleaved window with `n` states and `n-1` actions.
pub fn window_dim(n: usize, state_dim: usize, action_dim: usize) -> usize {
    n * state_dim + n.saturating_sub(1) * action_dim
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn regressor_dim(&self) -> usize {
        window_dim(self.lookback, self.state_dim, self.action_dim)
    }

    pub fn instrument_dim(&self) -> usize {
        window_dim(self.lookback - self.k, self.state_dim, self.action_dim)
    }

    /// Missing segment plus target: `k (dim s + dim a) + dim a`.
    pub fn segment_dim(&self) -> usize {
        self.regressor_dim() - self.instrument_dim() + self.action_dim
    }

    /// Missing segment of `w` followed by its target.
    pub fn segment(&self, w: &HistoryWindow) -> Vec<f64> {
        let mut out = w.regressor[self.instrument_dim()..].to_vec();
        out.extend_from_slice(&w.target);
        out
    }

    /// Splits a generated segment into `(regressor, target)` given the instrument.
    pub fn complete(&self, instrument: &[f64], segment: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let cut = segment.len() - self.action_dim;
        let mut reg = instrument.to_vec();
        reg.extend_from_slice(&segment[..cut]);
        (reg, segment[cut..].to_vec())
    }

    /// Windows whose source trajectory is in `trajectories`.
    pub fn select(&self, trajectories: &[usize]) -> WindowSet {
        let mut keep = vec![false; self.windows.iter().map(|w| w.trajectory + 1).max().unwrap_or(0)];
        for &t in trajectories {
            if t < keep.len() {
                keep[t] = true;
            }
        }
        WindowSet {
            windows: self
                .windows
                .iter()
                .filter(|w| keep.get(w.trajectory).copied().unwrap_or(false))
                .cloned()
                .collect(),
            ..self.empty_like()
        }
    }

    pub fn empty_like(&self) -> WindowSet {
        WindowSet {
            windows: Vec::new(),
            k: self.k,
            lookback: self.lookback,
            state_dim: self.state_dim,
            action_dim: self.action_dim,
        }
    }

    /// Current states `s_t`, one per window.
    pub fn current_states(&self) -> Vec<Vec<f64>> {
        let d = self.regressor_dim();
        self.windows
            .iter()
            .map(|w| w.regressor[d - self.state_dim..].to_vec())
            .collect()
    }
}

/// One window per trajectory and time `t` in `L..=T`. Uses only observed
/// states and actions.
pub fn extract_windows(demos: &DemonstrationSet, k: usize, lookback: usize) -> Result<WindowSet> {
    if k == 0 || lookback < k + 1 {
        return Err(Error::InvalidConfig(format!(
            "look-back L={lookback} must be at least k+1 with k={k} >= 1"
        )));
    }
    let (ds, da) = (demos.state_dim(), demos.action_dim());
    let mut set = WindowSet {
        windows: Vec::new(),
        k,
        lookback,
        state_dim: ds,
        action_dim: da,
    };
    let inst_dim = set.instrument_dim();
    let mut shortest = usize::MAX;
    for i in 0..demos.len() {
        let horizon = demos.horizon(i);
        shortest = shortest.min(horizon);
        if horizon < lookback {
            continue;
        }
        for end in (lookback - 1)..horizon {
            let start = end + 1 - lookback;
            let mut reg = Vec::with_capacity(set.regressor_dim());
            for j in start..=end {
                reg.extend_from_slice(demos.state(i, j));
                if j < end {
                    reg.extend_from_slice(demos.action(i, j));
                }
            }
            set.windows.push(HistoryWindow {
                instrument: reg[..inst_dim].to_vec(),
                regressor: reg,
                target: demos.action(i, end).to_vec(),
                t: end + 1,
                trajectory: i,
            });
        }
    }
    if set.windows.is_empty() {
        return Err(Error::EmptyWindows {
            lookback,
            horizon: shortest,
        });
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demos::{generate_demonstrations, Trajectory};
    use crate::envs::{EnvSpec, StepRecord};

    fn toy(n: usize) -> DemonstrationSet {
        let steps = (1..=n)
            .map(|t| StepRecord {
                t,
                s: vec![t as f64],
                a: vec![10.0 * t as f64],
                uo: 0.0,
                ueps: 0.0,
                r: 0.0,
            })
            .collect();
        DemonstrationSet::new(
            EnvSpec::plane_ticket(1, n),
            vec![Trajectory {
                episode_seed: 0,
                steps,
            }],
        )
        .unwrap()
        .censored()
    }

    #[test]
    fn hand_enumeration() {
        let w = extract_windows(&toy(3), 1, 2).unwrap();
        assert_eq!(w.len(), 2);
        let last = &w.windows[1];
        assert_eq!(last.t, 3);
        assert_eq!(last.regressor, vec![2.0, 20.0, 3.0]);
        assert_eq!(last.instrument, vec![2.0]);
        assert_eq!(last.target, vec![30.0]);
        assert_eq!(w.segment(last), vec![20.0, 3.0, 30.0]);
    }

    #[test]
    fn window_count_formula() {
        for k in 1..4 {
            for lookback in (k + 1)..8 {
                let w = extract_windows(&toy(10), k, lookback).unwrap();
                assert_eq!(w.len(), 10 - lookback + 1);
                assert_eq!(w.instrument_dim(), w.regressor_dim() - k * 2);
                assert_eq!(w.segment_dim(), k * 2 + 1);
                for x in &w.windows {
                    assert_eq!(&x.regressor[..x.instrument.len()], &x.instrument[..]);
                    assert_eq!(x.instrument.len(), w.instrument_dim());
                }
            }
        }
    }

    #[test]
    fn minimum_length_boundary() {
        let w = extract_windows(&toy(5), 2, 5).unwrap();
        assert_eq!(w.len(), 1);
        assert!(matches!(
            extract_windows(&toy(5), 2, 6),
            Err(Error::EmptyWindows { .. })
        ));
        assert!(extract_windows(&toy(5), 2, 2).is_err());
    }

    #[test]
    fn windows_reconstruct_source() {
        let d = generate_demonstrations(&EnvSpec::plane_ticket(2, 30), 3, 30, 5).unwrap();
        let w = extract_windows(&d.censored(), 2, 5).unwrap();
        for x in &w.windows {
            let j = x.t - 1;
            assert_eq!(x.regressor[x.regressor.len() - 1], d.state(x.trajectory, j)[0]);
            assert_eq!(x.target[0], d.action(x.trajectory, j)[0]);
            // the first window also carries the warm-up steps
            if x.t == 5 {
                for u in 0..5 {
                    assert_eq!(x.regressor[2 * u], d.state(x.trajectory, u)[0]);
                }
            }
            let (reg, tgt) = w.complete(&x.instrument, &w.segment(x));
            assert_eq!((reg, tgt), (x.regressor.clone(), x.target.clone()));
        }
    }
}

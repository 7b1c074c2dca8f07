//! Moving-average noise processes for the confounders u^o and u^ε.

use std::collections::VecDeque;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::rng::Rng;
use crate::{Error, Result};

/// Distribution of the individual draws held in a buffer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Draw {
    Uniform { low: f64, high: f64 },
    Normal { std: f64 },
}

impl Draw {
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match *self {
            Draw::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Draw::Normal { std } => std * rng.sample::<f64, _>(StandardNormal),
        }
    }
}

/// Fixed-length FIFO of i.i.d. draws whose mean is the process value.
#[derive(Clone, Debug)]
pub struct MovingAverage {
    buf: VecDeque<f64>,
    draw: Draw,
}

impl MovingAverage {
    pub fn new(len: usize, draw: Draw, rng: &mut Rng) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidConfig("buffer length must be >= 1".into()));
        }
        let buf = (0..len).map(|_| draw.sample(rng)).collect();
        Ok(Self { buf, draw })
    }

    /// Buffer filled with explicit values (mostly for tests).
    pub fn from_values(values: Vec<f64>, draw: Draw) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("buffer length must be >= 1".into()));
        }
        Ok(Self {
            buf: values.into(),
            draw,
        })
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.buf.iter().sum::<f64>() / self.buf.len() as f64
    }

    /// Drops the oldest draw, appends a fresh one and returns the new mean.
    pub fn push(&mut self, rng: &mut Rng) -> f64 {
        let x = self.draw.sample(rng);
        self.push_value(x)
    }

    pub fn push_value(&mut self, x: f64) -> f64 {
        self.buf.pop_front();
        self.buf.push_back(x);
        self.mean()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.buf.iter().copied()
    }
}

/// Source of the expert-observable confounder.
#[derive(Clone, Debug)]
pub enum UoProcess {
    MovingAverage(MovingAverage),
    /// Drawn once per episode and held fixed.
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub struct ConfounderState {
    pub uo: UoProcess,
    pub ueps: MovingAverage,
}

impl ConfounderState {
    /// Both buffers pre-filled with `m` (resp. `k`) draws.
    pub fn moving_average(
        m: usize,
        uo_draw: Draw,
        k: usize,
        ueps_draw: Draw,
        rng: &mut Rng,
    ) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::InvalidConfig(format!(
                "influence horizon M={m} and confounding horizon k={k} must be >= 1"
            )));
        }
        let uo = UoProcess::MovingAverage(MovingAverage::new(m, uo_draw, rng)?);
        let ueps = MovingAverage::new(k, ueps_draw, rng)?;
        Ok(Self { uo, ueps })
    }

    pub fn fixed_uo(uo: f64, k: usize, ueps_draw: Draw, rng: &mut Rng) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("confounding horizon k must be >= 1".into()));
        }
        Ok(Self {
            uo: UoProcess::Fixed(uo),
            ueps: MovingAverage::new(k, ueps_draw, rng)?,
        })
    }

    pub fn k(&self) -> usize {
        self.ueps.len()
    }

    /// Advances both processes by one step and returns `(u^o_t, u^ε_t)`.
    pub fn step(&mut self, rng: &mut Rng) -> (f64, f64) {
        let uo = match &mut self.uo {
            UoProcess::MovingAverage(ma) => ma.push(rng),
            UoProcess::Fixed(v) => *v,
        };
        let ueps = self.ueps.push(rng);
        (uo, ueps)
    }
}

/// Free-function form of [`ConfounderState::step`].
pub fn confounder_step(state: &mut ConfounderState, rng: &mut Rng) -> (f64, f64) {
    state.step(rng)
}

/// Per-draw std that keeps `Var(u^ε) = base_std²` for a k-draw average.
pub fn per_draw_std(base_std: f64, k: usize) -> f64 {
    base_std * (k as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use crate::stats;

    #[test]
    fn rejects_zero_horizons() {
        let mut rng = rng_from(0);
        let d = Draw::Normal { std: 1.0 };
        assert!(ConfounderState::moving_average(0, d, 1, d, &mut rng).is_err());
        assert!(ConfounderState::moving_average(1, d, 0, d, &mut rng).is_err());
        assert!(ConfounderState::fixed_uo(0.0, 0, d, &mut rng).is_err());
    }

    #[test]
    fn zero_buffers_give_zero() {
        let zero = Draw::Normal { std: 0.0 };
        let mut st = ConfounderState {
            uo: UoProcess::MovingAverage(
                MovingAverage::from_values(vec![0.0; 30], Draw::Uniform { low: 0.0, high: 0.0 })
                    .unwrap(),
            ),
            ueps: MovingAverage::from_values(vec![0.0; 3], zero).unwrap(),
        };
        let mut rng = rng_from(1);
        assert_eq!(st.step(&mut rng), (0.0, 0.0));
    }

    #[test]
    fn k1_value_is_the_fresh_draw() {
        let mut rng = rng_from(3);
        let mut ma = MovingAverage::new(1, Draw::Normal { std: 1.0 }, &mut rng).unwrap();
        let v = ma.push_value(0.375);
        assert_eq!(v, 0.375);
        assert_eq!(ma.values().collect::<Vec<_>>(), vec![0.375]);
    }

    #[test]
    fn exactly_one_element_replaced() {
        let mut rng = rng_from(5);
        let mut ma = MovingAverage::new(4, Draw::Normal { std: 1.0 }, &mut rng).unwrap();
        let before: Vec<f64> = ma.values().collect();
        ma.push(&mut rng);
        let after: Vec<f64> = ma.values().collect();
        assert_eq!(&before[1..], &after[..3]);
    }

    #[test]
    fn variance_is_k_invariant() {
        for k in [1usize, 5, 20] {
            let mut rng = rng_from(11 + k as u64);
            let draw = Draw::Normal { std: per_draw_std(0.1, k) };
            let mut ma = MovingAverage::new(k, draw, &mut rng).unwrap();
            let xs: Vec<f64> = (0..200_000).map(|_| ma.push(&mut rng)).collect();
            let v = stats::variance(&xs);
            assert!((v - 0.01).abs() < 0.0006, "k={k} var={v}");
        }
    }
}

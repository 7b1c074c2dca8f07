//! Property tests spanning several modules.

use crate::approx::Standardizer;
use crate::cmr::tv::tv_centered_gaussians;
use crate::cmr::tv_shifted_gaussian;
use crate::demos::{extract_windows, generate_demonstrations};
use crate::envs::EnvSpec;
use ndarray::Array2;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn windows_cover_every_admissible_step(k in 1usize..5, extra in 1usize..4, t in 12usize..30, n in 1usize..4, seed in 0u64..1000) {
        let lookback = k + extra;
        let d = generate_demonstrations(&EnvSpec::plane_ticket(k, t), n, t, seed).unwrap();
        let w = extract_windows(&d.censored(), k, lookback).unwrap();
        prop_assert_eq!(w.len(), n * (t - lookback + 1));
        for win in &w.windows {
            let j = win.t - 1;
            prop_assert_eq!(win.target.as_slice(), d.action(win.trajectory, j));
            prop_assert_eq!(win.regressor.last(), d.state(win.trajectory, j).last());
            prop_assert!(win.regressor.starts_with(&win.instrument));
            let (reg, tgt) = w.complete(&win.instrument, &w.segment(win));
            prop_assert_eq!(reg, win.regressor.clone());
            prop_assert_eq!(tgt, win.target.clone());
        }
    }

    #[test]
    fn standardizer_round_trips(rows in 2usize..20, seed in 0u64..1000) {
        let x = Array2::from_shape_fn((rows, 3), |(i, j)| (((i * 31 + j * 17) as u64 ^ seed) % 97) as f64 * 0.37 - 10.0);
        let s = Standardizer::fit(&x);
        let back = s.inverse(&s.transform(&x));
        for (a, b) in x.iter().zip(back.iter()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn tv_is_bounded_and_monotone(d in 0.0f64..6.0, step in 0.001f64..1.0, sigma in 0.1f64..3.0) {
        let a = tv_shifted_gaussian(d, sigma);
        let b = tv_shifted_gaussian(d + step, sigma);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a);
        prop_assert!(a <= d / (2.0 * sigma) + 1e-12);
    }

    #[test]
    fn tv_between_centered_gaussians_is_symmetric(s1 in 0.05f64..4.0, s2 in 0.05f64..4.0) {
        let ab = tv_centered_gaussians(s1, s2);
        prop_assert!((ab - tv_centered_gaussians(s2, s1)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!(tv_centered_gaussians(s1, s1).abs() < 1e-12);
    }
}

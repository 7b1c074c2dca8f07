//! Total-variation helpers for Gaussian noise.

use crate::stats::phi;

/// TV distance between `N(a₁, σ²I)` and `N(a₂, σ²I)` with `‖a₁ - a₂‖ = delta`:
/// `2Φ(delta / 2σ) - 1`.
pub fn tv_shifted_gaussian(delta: f64, sigma: f64) -> f64 {
    assert!(delta >= 0.0 && sigma >= 0.0, "delta and sigma must be non-negative");
    if delta == 0.0 {
        return 0.0;
    }
    if sigma == 0.0 {
        return 1.0;
    }
    2.0 * phi(delta / (2.0 * sigma)) - 1.0
}

/// TV-stability constant used for noise of std `sigma`: the standard normal
/// is ½-TV stable and the constant scales as `1/σ`.
pub fn tv_stability_constant(sigma: f64) -> f64 {
    if sigma > 0.0 {
        0.5 / sigma
    } else {
        f64::INFINITY
    }
}

/// TV distance between the centred Gaussians `N(0, s1²)` and `N(0, s2²)`.
pub fn tv_centered_gaussians(s1: f64, s2: f64) -> f64 {
    let (a, b) = if s1 >= s2 { (s1, s2) } else { (s2, s1) };
    if a == b {
        return 0.0;
    }
    if b == 0.0 {
        return 1.0;
    }
    // densities cross at ±x with x² = 2a²b² ln(a/b) / (a² - b²)
    let x = (2.0 * a * a * b * b * (a / b).ln() / (a * a - b * b)).sqrt();
    2.0 * (phi(x / b) - phi(x / a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(tv_shifted_gaussian(0.0, 1.0), 0.0);
        assert_eq!(tv_shifted_gaussian(1.0, 0.0), 1.0);
        assert!((tv_shifted_gaussian(2.0, 1.0) - 0.682_689_492_137_086).abs() < 1e-12);
        assert_eq!(tv_stability_constant(1.0), 0.5);
    }

    #[test]
    fn centered_gaussians_by_quadrature() {
        for &(a, b) in &[(1.0, 0.5), (1.5, 1.4), (2.0, 0.1)] {
            let n = 200_001;
            let (lo, hi) = (-20.0, 20.0);
            let h = (hi - lo) / (n - 1) as f64;
            let pdf = |x: f64, s: f64| (-(x * x) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
            let tv: f64 = (0..n).map(|i| {
                let x = lo + i as f64 * h;
                (pdf(x, a) - pdf(x, b)).abs()
            }).sum::<f64>() * h * 0.5;
            assert!((tv - tv_centered_gaussians(a, b)).abs() < 1e-4, "{a} {b}: {tv}");
        }
        assert_eq!(tv_centered_gaussians(1.0, 1.0), 0.0);
        assert_eq!(tv_centered_gaussians(1.0, 0.0), 1.0);
    }
}

//! Central finite-difference gradient checks.

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub checked: usize,
    pub skipped: usize,
}

/// Relative error with an absolute floor so that coordinates where both
/// derivatives vanish do not divide by zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-7)
}

/// Compares `analytic` against `(f(θ + h e_i) - f(θ - h e_i)) / 2h`.
///
/// `smooth(θ⁺, θ⁻)` may return false to exclude a coordinate whose stencil
/// crosses a non-differentiable point (e.g. a ReLU kink).
pub fn check_gradient<F, S>(f: F, theta: &[f64], analytic: &[f64], h: f64, mut smooth: S) -> GradCheck
where
    F: Fn(&[f64]) -> f64,
    S: FnMut(&[f64], &[f64]) -> bool,
{
    let mut worst = (0.0, 0);
    let mut skipped = 0;
    let mut plus = theta.to_vec();
    let mut minus = theta.to_vec();
    for i in 0..theta.len() {
        plus[i] = theta[i] + h;
        minus[i] = theta[i] - h;
        if smooth(&plus, &minus) {
            let num = (f(&plus) - f(&minus)) / (2.0 * h);
            let e = rel_err(analytic[i], num);
            if e > worst.0 {
                worst = (e, i);
            }
        } else {
            skipped += 1;
        }
        plus[i] = theta[i];
        minus[i] = theta[i];
    }
    GradCheck {
        max_rel_err: worst.0,
        worst_index: worst.1,
        checked: theta.len() - skipped,
        skipped,
    }
}

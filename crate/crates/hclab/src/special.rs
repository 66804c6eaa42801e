//! Thin wrappers over the special functions used for closed-form constants,
//! plus the sphere-measure formulas shared by weights and norms.

use std::f64::consts::PI;

pub(crate) fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub(crate) fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub(crate) fn digamma(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

/// Euler Beta function B(a, b), valid for a, b > 0.
pub(crate) fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Regularized lower incomplete Beta I_x(a, b).
pub(crate) fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    statrs::function::beta::beta_reg(a, b, x)
}

/// Regularized lower incomplete Gamma P(a, x).
pub(crate) fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    statrs::function::gamma::gamma_lr(a, x)
}

/// Surface measure of the unit sphere in R^n. The n = 1 sphere is the
/// two-point set {-1, +1} with counting measure, total mass 2.
pub(crate) fn sphere_area(n: usize) -> f64 {
    assert!(n >= 1);
    if n == 1 {
        2.0
    } else {
        let nf = n as f64;
        2.0 * PI.powf(nf / 2.0) / gamma(nf / 2.0)
    }
}

/// Integral of |theta_1|^lambda over the unit sphere in R^n (surface
/// measure). Reduces to 2 for n = 1 under the two-point convention, for
/// every lambda; infinite for lambda <= -1 in higher dimensions.
pub(crate) fn axis_abs_moment(n: usize, lambda: f64) -> f64 {
    assert!(n >= 1);
    if n == 1 {
        return 2.0;
    }
    if lambda <= -1.0 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    2.0 * PI.powf((nf - 1.0) / 2.0) * gamma((lambda + 1.0) / 2.0) / gamma((lambda + nf) / 2.0)
}

/// Volume of the unit ball in R^n.
pub(crate) fn ball_volume(n: usize) -> f64 {
    assert!(n >= 1);
    let nf = n as f64;
    PI.powf(nf / 2.0) / gamma(1.0 + nf / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_areas_match_closed_forms() {
        assert_relative_eq!(sphere_area(1), 2.0);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, max_relative = 1e-14);
    }

    #[test]
    fn ball_volumes_match_closed_forms() {
        assert_relative_eq!(ball_volume(1), 2.0, max_relative = 1e-13);
        assert_relative_eq!(ball_volume(2), PI, max_relative = 1e-14);
        assert_relative_eq!(ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-14);
        // sigma(S_n) = n * Omega_n ties the two formulas together.
        for n in 1..=5 {
            assert_relative_eq!(
                sphere_area(n),
                n as f64 * ball_volume(n),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn axis_moment_reduces_to_elementary_integrals() {
        // n = 2: integral over the circle of |cos|^lambda equals
        // 4 * int_0^{pi/2} cos^lambda, lambda = 1 gives 4.
        assert_relative_eq!(axis_abs_moment(2, 1.0), 4.0, max_relative = 1e-13);
        assert_relative_eq!(axis_abs_moment(2, 0.0), 2.0 * PI, max_relative = 1e-13);
        // n = 3, lambda = 1: 2*pi*int_{-1}^{1} |u| du ... = 2*pi.
        assert_relative_eq!(axis_abs_moment(3, 1.0), 2.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(axis_abs_moment(3, 0.0), 4.0 * PI, max_relative = 1e-13);
    }

    #[test]
    fn beta_agrees_with_gamma_ratio() {
        assert_relative_eq!(beta(0.5, 2.0), 4.0 / 3.0, max_relative = 1e-13);
        assert_relative_eq!(beta(1.0, 1.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(beta(2.0, 3.0), 1.0 / 12.0, max_relative = 1e-13);
    }

    #[test]
    fn incomplete_functions_hit_reference_points() {
        // I_x(1, 1) = x for the uniform case.
        assert_relative_eq!(reg_inc_beta(1.0, 1.0, 0.3), 0.3, max_relative = 1e-13);
        // P(1, x) = 1 - e^{-x}.
        assert_relative_eq!(
            reg_lower_gamma(1.0, 2.0),
            1.0 - (-2.0f64).exp(),
            max_relative = 1e-13
        );
    }
}

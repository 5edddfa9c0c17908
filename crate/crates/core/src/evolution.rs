//! First-order Dyson propagator and the exact time-ordered propagator used as
//! the reference for every closed-form result.

use crate::error::{Error, Result};
use crate::linalg::{c64, matrix_exponential, operator_norm, Mat4};
use crate::model::{bound_from_margin, convergence_margin, h_max, hamiltonian_at, integrated_hamiltonian, SystemParams};

/// Successive step-doubled products must agree to this spectral-norm distance.
pub const STEP_DOUBLING_TOL: f64 = 1e-10;
pub const MAX_DOUBLINGS: usize = 20;
const MIN_STEPS: usize = 64;

/// `U⁽¹⁾(t) = I - i ∫₀ᵗ H`. Not unitary in general.
pub fn dyson1_propagator(p: &SystemParams, t: f64) -> Mat4 {
    Mat4::identity() - integrated_hamiltonian(p, t).scale(c64(0.0, 1.0))
}

/// Ordered product of midpoint exponentials over `[t_start, t_end]` with a
/// fixed number of steps. Later steps multiply from the left.
pub fn midpoint_product(p: &SystemParams, t_start: f64, t_end: f64, steps: usize) -> Mat4 {
    let steps = steps.max(1);
    let dt = (t_end - t_start) / steps as f64;
    let mut u = Mat4::identity();
    for k in 0..steps {
        let mid = t_start + (k as f64 + 0.5) * dt;
        let step = matrix_exponential(&hamiltonian_at(p, mid).scale(c64(0.0, -dt)));
        u = step * u;
    }
    u
}

/// Converged time-ordered propagator over `[t_start, t_end]`. Steps start at
/// `max(64, ceil(40 (t_end - t_start)(1 + H_max)))` and double until two
/// successive products agree to [`STEP_DOUBLING_TOL`].
pub fn exact_propagator_window(p: &SystemParams, t_start: f64, t_end: f64) -> Result<Mat4> {
    let span = t_end - t_start;
    if span == 0.0 {
        return Ok(Mat4::identity());
    }
    let bound = h_max(p, t_end.abs().max(t_start.abs()), 64);
    let mut steps = MIN_STEPS.max((40.0 * span.abs() * (1.0 + bound)).ceil() as usize);
    let mut previous = midpoint_product(p, t_start, t_end, steps);
    let mut last_difference = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        steps *= 2;
        let next = midpoint_product(p, t_start, t_end, steps);
        last_difference = operator_norm(&(next - previous));
        if last_difference < STEP_DOUBLING_TOL {
            return Ok(next);
        }
        previous = next;
    }
    Err(Error::NoConvergence {
        doublings: MAX_DOUBLINGS,
        steps,
        last_difference,
    })
}

pub fn exact_propagator(p: &SystemParams, t: f64) -> Result<Mat4> {
    exact_propagator_window(p, 0.0, t)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorReport {
    pub u_dyson: Mat4,
    pub u_exact: Mat4,
    /// Spectral norm of `u_exact - u_dyson`.
    pub error_observed: f64,
    /// `(H_max t)² / 2`.
    pub error_bound: f64,
    /// `H_max t`.
    pub margin: f64,
}

impl PropagatorReport {
    pub fn within_bound(&self) -> bool {
        self.error_observed <= self.error_bound + 1e-8
    }
}

pub fn propagator_report(p: &SystemParams, t: f64) -> Result<PropagatorReport> {
    let u_dyson = dyson1_propagator(p, t);
    let u_exact = exact_propagator(p, t)?;
    let margin = convergence_margin(p, t);
    Ok(PropagatorReport {
        u_dyson,
        u_exact,
        error_observed: operator_norm(&(u_exact - u_dyson)),
        error_bound: bound_from_margin(margin),
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{C64, Mat4};
    use crate::model::tests::quadrature_of_hamiltonian;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn zeeman_only() -> SystemParams {
        SystemParams::quiet().with_c(0.1)
    }

    #[test]
    fn dyson_identity_at_zero() {
        assert_eq!(dyson1_propagator(&SystemParams::reference(), 0.0), Mat4::identity());
    }

    #[test]
    fn dyson_zeeman_diagonal() {
        // H = diag(-0.1, 0, 0, 0.1), so I - iH t = diag(1 + 0.1i, 1, 1, 1 - 0.1i)
        let u = dyson1_propagator(&zeeman_only(), 1.0);
        let expected = Mat4::diag([c64(1.0, 0.1), c64(1.0, 0.0), c64(1.0, 0.0), c64(1.0, -0.1)]);
        assert!(u.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn dyson_matches_quadrature_in_reference_regime() {
        let p = SystemParams::reference();
        let t = 6.352;
        let expected = Mat4::identity() - quadrature_of_hamiltonian(&p, t).scale(c64(0.0, 1.0));
        assert!(dyson1_propagator(&p, t).approx_eq(&expected, 1e-10));
    }

    #[test]
    fn exact_identity_at_zero() {
        assert_eq!(exact_propagator(&SystemParams::reference(), 0.0).unwrap(), Mat4::identity());
    }

    #[test]
    fn exact_constant_hamiltonian() {
        let p = SystemParams::reference().with_drives(0.0, 0.0);
        let t = 3.3;
        let expected = matrix_exponential(&hamiltonian_at(&p, 0.0).scale(c64(0.0, -t)));
        for steps in [1, 7, 100] {
            assert!(midpoint_product(&p, 0.0, t, steps).approx_eq(&expected, 1e-10));
        }
        assert!(exact_propagator(&p, t).unwrap().approx_eq(&expected, 1e-10));
    }

    #[test]
    fn report_at_zero() {
        let r = propagator_report(&SystemParams::reference(), 0.0).unwrap();
        assert_eq!((r.error_observed, r.error_bound, r.margin), (0.0, 0.0, 0.0));
    }

    #[test]
    fn report_zeeman_remainder() {
        let r = propagator_report(&zeeman_only(), 1.0).unwrap();
        let x: f64 = 0.1;
        // |e^{ix} - (1 + ix)| for x = 0.1, the only non-zero diagonal entries
        let remainder = (C64::from_polar(1.0, x) - c64(1.0, x)).norm();
        assert!((r.error_observed - remainder).abs() < 1e-12);
        assert!((r.error_bound - 0.005).abs() < 1e-14);
        assert!((r.margin - 0.1).abs() < 1e-14);
        assert!(r.within_bound());
    }

    #[test]
    fn report_reference_regime_short_time() {
        let r = propagator_report(&SystemParams::reference(), 0.5).unwrap();
        assert!(r.margin < 1.0);
        assert!(r.error_observed <= r.error_bound, "{} > {}", r.error_observed, r.error_bound);
    }

    #[test]
    fn short_time_error_scales_quadratically() {
        let p = SystemParams::reference().with_alpha(0.4);
        let ratios: Vec<f64> = [2e-2, 1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&t| {
                let r = propagator_report(&p, t).unwrap();
                r.error_observed / (t * t)
            })
            .collect();
        for w in ratios.windows(2) {
            assert!(((w[0] - w[1]) / w[1]).abs() < 0.05, "{ratios:?}");
        }
    }

    #[test]
    fn composition_over_split_interval() {
        let p = SystemParams::reference().with_alpha(PI / 4.0);
        let (t1, t2) = (1.3, 0.9);
        let whole = exact_propagator(&p, t1 + t2).unwrap();
        let first = exact_propagator(&p, t1).unwrap();
        let second = exact_propagator_window(&p, t1, t1 + t2).unwrap();
        assert!(whole.approx_eq(&(second * first), 1e-8));
    }

    fn params_strategy() -> impl Strategy<Value = SystemParams> {
        (-1.0..1.0f64, -0.8..0.8f64, -0.8..0.8f64, -0.8..0.8f64, 0.3..2.0f64, 0.0..(2.0 * PI))
            .prop_map(|(c, j, ox, oy, omega, alpha)| SystemParams {
                j,
                omega_x: ox,
                omega_y: oy,
                omega,
                alpha,
                ..SystemParams::quiet()
            }
            .with_c(c))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn exact_is_unitary(p in params_strategy(), t in 0.0..3.0f64) {
            let u = exact_propagator(&p, t).unwrap();
            prop_assert!((u.adjoint() * u).approx_eq(&Mat4::identity(), 1e-10));
        }

        #[test]
        fn composition(p in params_strategy(), t1 in 0.0..1.5f64, t2 in 0.0..1.5f64) {
            let whole = exact_propagator(&p, t1 + t2).unwrap();
            let split = exact_propagator_window(&p, t1, t1 + t2).unwrap() * exact_propagator(&p, t1).unwrap();
            prop_assert!(whole.approx_eq(&split, 1e-8));
        }
    }
}

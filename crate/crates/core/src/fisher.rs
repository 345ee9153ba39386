//! Classical and quantum Fisher information for the frequency shift.
//!
//! Resolving the delay gives
//! `F = gamma^2 * int C(t) t^2 beta_nu(delta_omega * t) dt`, which equals the
//! quantum bound `2 gamma^2 tau^2` at `nu = 1` and tends to
//! `2 gamma^2 tau^2 (1 - sqrt(1 - nu^2))` for large `tau * delta_omega`.
//! Counting bunches and coincidences without timing gives a closed form
//! that vanishes once the fringes wash out.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{envelope_c, ModelParams};
use crate::quadrature::{simpson_refine, QuadratureSpec};

/// How a Fisher-information value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherMethod {
    ClosedFormNuOne,
    QuadratureGaussian,
    AsymptoticLargeShift,
    NonResolvingGaussian,
    QuantumBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    /// Fisher information, ns^2.
    pub value: f64,
    pub method: FisherMethod,
    /// Zero for closed forms.
    pub quadrature_nodes: usize,
    pub est_abs_error: f64,
    /// Set when a detector efficiency below one was ignored.
    pub efficiency_ignored: bool,
}

impl FisherReport {
    fn exact(value: f64, method: FisherMethod) -> Self {
        Self {
            value,
            method,
            quadrature_nodes: 0,
            est_abs_error: 0.0,
            efficiency_ignored: false,
        }
    }
}

/// `nu^2 sin^2(xi) / (1 - nu^2 cos^2(xi))`, pi-periodic, in `[0, nu^2]`.
///
/// At `nu = 1` the value is 1 everywhere, including the removable
/// singularities at multiples of pi.
pub fn beta_nu(xi: f64, nu: f64) -> f64 {
    if nu >= 1.0 {
        return 1.0;
    }
    let (s, c) = xi.sin_cos();
    let s2 = s * s;
    let nu2 = nu * nu;
    // 1 - nu^2 cos^2 = sin^2 + (1 - nu^2) cos^2, both terms nonnegative.
    let denom = s2 + (1.0 - nu2) * c * c;
    if denom == 0.0 {
        return 0.0;
    }
    nu2 * s2 / denom
}

/// Period average of [`beta_nu`]: `1 - sqrt(1 - nu^2)`.
pub fn beta_mean(nu: f64) -> f64 {
    let nu2 = nu * nu;
    // Same value, without cancellation for small nu.
    nu2 / (1.0 + (1.0 - nu2).max(0.0).sqrt())
}

/// Quantum Fisher information matrices for the single-photon frequencies
/// and for the (sum, difference) pair obtained through the Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiMatrices {
    /// `H(omega1, omega2) = 4 tau^2 I`.
    pub frequencies: [[f64; 2]; 2],
    /// `J H J^T` with `J = [[1, 1], [1, -1]] / 2`.
    pub sum_difference: [[f64; 2]; 2],
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn qfi_matrices(tau: f64) -> QfiMatrices {
    let diag = 4.0 * tau * tau;
    let frequencies = [[diag, 0.0], [0.0, diag]];
    let jacobian = [[0.5, 0.5], [0.5, -0.5]];
    let transposed = [[0.5, 0.5], [0.5, -0.5]];
    let sum_difference = mat_mul(&mat_mul(&jacobian, &frequencies), &transposed);
    QfiMatrices {
        frequencies,
        sum_difference,
    }
}

/// Quantum Fisher information of the shift, `H = 2 tau^2`.
pub fn qfi(tau: f64) -> Result<FisherReport> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidParams(format!("tau must be > 0, got {tau}")));
    }
    let h = qfi_matrices(tau).sum_difference[1][1];
    Ok(FisherReport::exact(h, FisherMethod::QuantumBound))
}

/// Information density per delay, `C(dt) dt^2 beta_nu(delta_omega dt)`.
pub fn fi_contribution(delta_t: f64, params: &ModelParams) -> f64 {
    envelope_c(delta_t, params) * delta_t * delta_t * beta_nu(params.delta_omega * delta_t, params.nu)
}

/// Upper envelope of [`fi_contribution`], `nu^2 C(dt) dt^2`.
pub fn fi_contribution_bound(delta_t: f64, params: &ModelParams) -> f64 {
    params.nu * params.nu * envelope_c(delta_t, params) * delta_t * delta_t
}

/// Fisher information of a time-resolving measurement.
pub fn fi_resolving(params: &ModelParams, quadrature: &QuadratureSpec) -> Result<FisherReport> {
    params.validate()?;
    quadrature.validate()?;
    let tau = params.tau;
    let gamma2 = params.gamma * params.gamma;
    if params.nu >= 1.0 {
        return Ok(FisherReport::exact(
            gamma2 * 2.0 * tau * tau,
            FisherMethod::ClosedFormNuOne,
        ));
    }

    let half_width = quadrature.support_sigmas * params.delay_sigma();
    let dw = params.delta_omega.abs();
    let step = if dw > 0.0 {
        (PI / (16.0 * dw)).min(tau / 32.0)
    } else {
        tau / 32.0
    };
    let abs_tol = quadrature.rel_tol * 2.0 * tau * tau;
    // The integrand is even in t: integrate one half and double.
    let half = simpson_refine(
        |t| fi_contribution(t, params),
        0.0,
        half_width,
        step,
        abs_tol / 2.0,
        quadrature.max_nodes,
    )?;
    Ok(FisherReport {
        value: gamma2 * 2.0 * half.value,
        method: FisherMethod::QuadratureGaussian,
        quadrature_nodes: half.nodes,
        est_abs_error: gamma2 * 2.0 * half.est_abs_error,
        efficiency_ignored: false,
    })
}

/// Large-shift limit `2 gamma^2 tau^2 (1 - sqrt(1 - nu^2))`.
pub fn fi_asymptotic(params: &ModelParams) -> FisherReport {
    let value = params.gamma * params.gamma * 2.0 * params.tau * params.tau * beta_mean(params.nu);
    FisherReport::exact(value, FisherMethod::AsymptoticLargeShift)
}

/// Below this `|tau * delta_omega|` the `nu = 1` non-resolving value is
/// replaced by its limit `2 tau^2`.
const NON_RESOLVING_SERIES_THRESHOLD: f64 = 1e-6;

/// Fisher information when only the event class is recorded:
/// `4 nu^2 tau^4 dw^2 / (exp(2 tau^2 dw^2) - nu^2)`. Stated for ideal
/// detectors; an efficiency below one is ignored and flagged.
pub fn fi_nonresolving(params: &ModelParams) -> Result<FisherReport> {
    params.validate()?;
    let tau = params.tau;
    let nu2 = params.nu * params.nu;
    let x = params.tau_delta_omega();
    let value = if params.nu >= 1.0 && x.abs() < NON_RESOLVING_SERIES_THRESHOLD {
        2.0 * tau * tau
    } else {
        let x2 = x * x;
        // exp(2x^2) - nu^2 = expm1(2x^2) + (1 - nu^2)
        let denom = (2.0 * x2).exp_m1() + (1.0 - nu2);
        if denom.is_infinite() {
            0.0
        } else {
            4.0 * nu2 * tau * tau * x2 / denom
        }
    };
    Ok(FisherReport {
        efficiency_ignored: params.gamma < 1.0,
        ..FisherReport::exact(value, FisherMethod::NonResolvingGaussian)
    })
}

/// Cramér-Rao standard deviation `1 / sqrt(n F)`.
pub fn crlb_sigma(fisher: &FisherReport, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("number of samples must be >= 1".into()));
    }
    if !(fisher.value > 0.0) {
        return Err(Error::NotIdentifiable(
            "parameter not identifiable under this configuration (Fisher information is 0)".into(),
        ));
    }
    Ok(1.0 / (n as f64 * fisher.value).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(tau: f64, nu: f64, gamma: f64, dw: f64) -> ModelParams {
        ModelParams::new(tau, nu, gamma, dw).unwrap()
    }

    #[test]
    fn beta_examples() {
        assert_relative_eq!(beta_nu(PI / 2.0, 0.7), 0.49, max_relative = 1e-15);
        assert_eq!(beta_nu(1.3, 0.0), 0.0);
        assert_eq!(beta_nu(0.0, 1.0), 1.0);
        assert_eq!(beta_nu(3.0 * PI, 1.0), 1.0);
        assert_relative_eq!(beta_nu(3.0, 0.7), 0.018_774_649_967_993_001, max_relative = 1e-13);
        assert_relative_eq!(beta_nu(0.4, 0.8), beta_nu(0.4 + PI, 0.8), max_relative = 1e-12);
    }

    #[test]
    fn beta_mean_examples() {
        assert_eq!(beta_mean(1.0), 1.0);
        assert_eq!(beta_mean(0.0), 0.0);
        assert_relative_eq!(beta_mean(0.6), 0.2, max_relative = 1e-15);
    }

    #[test]
    fn qfi_values() {
        assert_eq!(qfi(1.0).unwrap().value, 2.0);
        assert_eq!(qfi(10.0).unwrap().value, 200.0);
        let m = qfi_matrices(1.0);
        assert_eq!(m.frequencies, [[4.0, 0.0], [0.0, 4.0]]);
        assert_eq!(m.sum_difference, [[2.0, 0.0], [0.0, 2.0]]);
        assert!(qfi(0.0).is_err());
    }

    #[test]
    fn contribution_examples() {
        assert_eq!(fi_contribution(0.0, &p(1.0, 0.7, 1.0, 3.0)), 0.0);
        let q = p(1.0, 1.0, 1.0, 3.0);
        assert_relative_eq!(
            fi_contribution(1.4, &q),
            envelope_c(1.4, &q) * 1.96,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            fi_contribution(1.0, &p(1.0, 0.7, 1.0, 3.0)),
            0.004_124_708_829_370_788_8,
            max_relative = 1e-13
        );
    }

    #[test]
    fn resolving_closed_form_and_zero() {
        let r = fi_resolving(&p(1.0, 1.0, 1.0, 7.0), &QuadratureSpec::default()).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.method, FisherMethod::ClosedFormNuOne);
        let r = fi_resolving(&p(1.0, 0.0, 1.0, 2.0), &QuadratureSpec::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn resolving_quadrature_matches_high_precision_reference() {
        // Reference values from adaptive arbitrary-precision quadrature.
        let cases = [
            (0.7, 3.0, 0.571_714_314_291_437_8),
            (0.7, 0.5, 0.757_175_143_757_529_6),
            (0.7, 1.0, 0.632_790_122_561_569_3),
            (0.9, 0.1, 0.362_607_710_623_294_2),
            (0.3, 1.0, 0.103_654_044_916_486_94),
        ];
        for (nu, dw, expected) in cases {
            let r = fi_resolving(&p(1.0, nu, 1.0, dw), &QuadratureSpec::default()).unwrap();
            assert_eq!(r.method, FisherMethod::QuadratureGaussian);
            assert_relative_eq!(r.value, expected, max_relative = 1e-8);
            assert!(r.est_abs_error <= 2e-8);
        }
    }

    #[test]
    fn quadrature_failure_is_reported() {
        let spec = QuadratureSpec {
            max_nodes: 64,
            ..QuadratureSpec::default()
        };
        let err = fi_resolving(&p(1.0, 0.7, 1.0, 30.0), &spec).unwrap_err();
        assert!(matches!(err, Error::QuadratureNotConverged { .. }));
    }

    #[test]
    fn asymptotic_examples() {
        assert_eq!(fi_asymptotic(&p(1.0, 1.0, 1.0, 0.0)).value, 2.0);
        assert_relative_eq!(fi_asymptotic(&p(1.0, 0.6, 1.0, 0.0)).value, 0.4, max_relative = 1e-15);
        assert_relative_eq!(
            fi_asymptotic(&p(2.0, 0.7, 0.5, 0.0)).value,
            0.571_714_314_291_43,
            max_relative = 1e-13
        );
    }

    #[test]
    fn nonresolving_examples() {
        let r = fi_nonresolving(&p(1.0, 1.0, 1.0, 0.0)).unwrap();
        assert_eq!(r.value, 2.0);
        assert_relative_eq!(
            fi_nonresolving(&p(1.0, 1.0, 1.0, 1e-3)).unwrap().value,
            2.0,
            max_relative = 1e-5
        );
        assert_relative_eq!(
            fi_nonresolving(&p(1.0, 1.0, 1.0, 1.0)).unwrap().value,
            0.626_070_570_998_662_6,
            max_relative = 1e-14
        );
        assert_eq!(fi_nonresolving(&p(1.0, 0.5, 1.0, 0.0)).unwrap().value, 0.0);
        assert_eq!(fi_nonresolving(&p(1.0, 0.5, 1.0, 100.0)).unwrap().value, 0.0);
        assert!(fi_nonresolving(&p(1.0, 0.5, 0.8, 1.0)).unwrap().efficiency_ignored);
    }

    #[test]
    fn crlb_examples() {
        let f = fi_resolving(&p(100.0, 1.0, 1.0, 0.0), &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(
            crlb_sigma(&f, 1000).unwrap(),
            2.236_067_977_499_79e-4,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            crlb_sigma(&FisherReport::exact(2.0, FisherMethod::QuantumBound), 1).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2
        );
        let zero = FisherReport::exact(0.0, FisherMethod::QuadratureGaussian);
        assert!(matches!(crlb_sigma(&zero, 10), Err(Error::NotIdentifiable(_))));
    }
}

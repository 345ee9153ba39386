//! Composite Simpson quadrature with successive step halving.
//!
//! Each refinement halves the step and reuses every previous node, so a
//! level costs only the new midpoints. The difference between two levels,
//! divided by 15, estimates the error of the finer one; the returned value
//! carries the matching Richardson correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings for the Fisher-information integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Half-width of the integration support in units of `sqrt(2) * tau`.
    pub support_sigmas: f64,
    /// Tolerance on the estimated absolute error, relative to `2 tau^2`.
    pub rel_tol: f64,
    /// Refinement stops with an error once this many nodes are in use.
    pub max_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            support_sigmas: 12.0,
            rel_tol: 1e-8,
            max_nodes: 1 << 22,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.support_sigmas.is_finite() && self.support_sigmas > 0.0) {
            return Err(Error::Config(format!(
                "support_sigmas must be > 0, got {}",
                self.support_sigmas
            )));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(Error::Config(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if self.max_nodes < 5 {
            return Err(Error::Config(format!("max_nodes must be >= 5, got {}", self.max_nodes)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub nodes: usize,
    pub est_abs_error: f64,
}

/// Integrate `f` over `[a, b]` starting from a step no larger than
/// `max_step`, halving until the error estimate drops below `abs_tol`.
pub fn simpson_refine<F>(
    f: F,
    a: f64,
    b: f64,
    max_step: f64,
    abs_tol: f64,
    max_nodes: usize,
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::Config(format!("invalid integration interval [{a}, {b}]")));
    }
    if !(max_step > 0.0) {
        return Err(Error::Config(format!("initial step must be > 0, got {max_step}")));
    }

    let width = b - a;
    let mut intervals = ((width / max_step).ceil() as usize).max(2);
    if intervals % 2 == 1 {
        intervals += 1;
    }
    if intervals + 1 > max_nodes {
        return Err(Error::QuadratureNotConverged {
            nodes: intervals + 1,
            est_abs_error: f64::INFINITY,
            tolerance: abs_tol,
        });
    }

    let mut h = width / intervals as f64;
    let ends = f(a) + f(b);
    // Interior nodes split into even and odd positions of the current grid.
    let mut even = 0.0;
    let mut odd = 0.0;
    for i in 1..intervals {
        let v = f(a + i as f64 * h);
        if i % 2 == 0 {
            even += v;
        } else {
            odd += v;
        }
    }
    let mut previous = h / 3.0 * (ends + 2.0 * even + 4.0 * odd);

    loop {
        let next_intervals = intervals * 2;
        let nodes = next_intervals + 1;
        if nodes > max_nodes {
            return Err(Error::QuadratureNotConverged {
                nodes: intervals + 1,
                est_abs_error: f64::INFINITY,
                tolerance: abs_tol,
            });
        }
        let half = h / 2.0;
        let mut midpoints = 0.0;
        for i in 0..intervals {
            midpoints += f(a + (2 * i + 1) as f64 * half);
        }
        even += odd;
        odd = midpoints;
        intervals = next_intervals;
        h = half;

        let current = h / 3.0 * (ends + 2.0 * even + 4.0 * odd);
        let est_abs_error = (current - previous).abs() / 15.0;
        if est_abs_error <= abs_tol {
            return Ok(QuadratureResult {
                value: current + (current - previous) / 15.0,
                nodes,
                est_abs_error,
            });
        }
        if nodes * 2 - 1 > max_nodes {
            return Err(Error::QuadratureNotConverged {
                nodes,
                est_abs_error,
                tolerance: abs_tol,
            });
        }
        previous = current;
    }
}

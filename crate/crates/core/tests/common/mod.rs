//! Independent reference computations used by the integration tests.
//!
//! Nothing here calls into the crate's density, Fisher or estimator code.

#![allow(dead_code)]

use std::f64::consts::PI;

/// `(C(t) / 2) (1 + sign * nu * cos(w t))` written out from scratch.
pub fn ref_density(sign: f64, t: f64, tau: f64, nu: f64, w: f64) -> f64 {
    let c = (-t * t / (4.0 * tau * tau)).exp() / (4.0 * PI * tau * tau).sqrt();
    0.5 * c * (1.0 + sign * nu * (w * t).cos())
}

/// Trapezoid sum of `f` on a uniform grid over `[a, b]` with `n` intervals.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + i as f64 * h);
    }
    s * h
}

/// Fisher information from its definition, `sum_X int (d_w p)^2 / p dt`,
/// with the derivative taken by central finite differences of the density
/// and the delay integral by a dense trapezoid sum.
pub fn fisher_by_finite_differences(tau: f64, nu: f64, w: f64) -> f64 {
    let dw = 1e-5 * w.abs().max(1.0);
    let half = 12.0 * std::f64::consts::SQRT_2 * tau;
    let step = (tau / 400.0).min(2.0 * PI / (w.abs().max(1e-12) * 200.0));
    let n = ((2.0 * half / step).ceil() as usize).max(1000);
    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        total += trapezoid(
            |t| {
                let p = ref_density(sign, t, tau, nu, w);
                if p == 0.0 {
                    return 0.0;
                }
                let d = (ref_density(sign, t, tau, nu, w + dw) - ref_density(sign, t, tau, nu, w - dw)) / (2.0 * dw);
                d * d / p
            },
            -half,
            half,
            n,
        );
    }
    total
}

/// Log-likelihood of two-photon events `(sign, dt)` at candidate `w`,
/// as the log of per-event densities accumulated one by one.
pub fn ref_log_likelihood(events: &[(f64, f64)], tau: f64, nu: f64, w: f64) -> f64 {
    events
        .iter()
        .map(|&(sign, t)| ref_density(sign, t, tau, nu, w).ln())
        .sum()
}

/// Chi-square statistic after merging adjacent cells until every expected
/// count is at least `min_expected`. Returns `(statistic, cells)`.
pub fn chi_square_merged(observed: &[f64], expected: &[f64], min_expected: f64) -> (f64, usize) {
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        o_acc += o;
        e_acc += e;
        if e_acc >= min_expected {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    let stat = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    (stat, cells.len())
}

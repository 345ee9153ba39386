//! Maximum-likelihood estimation of `|delta_omega|` and the Monte-Carlo
//! harness that compares its variance with the Cramér-Rao bound.
//!
//! The record density depends on the shift only through
//! `cos(delta_omega * dt)`, so the sign of the shift is not estimable and the
//! search runs over `[0, omega_max]`. Nuisance parameters (`tau`, `nu`,
//! `gamma`) are taken as known.

use std::f64::consts::PI;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::fi_resolving;
use crate::model::{envelope_c, outcome_ladder, DetectionOutcome, ModelParams};
use crate::quadrature::QuadratureSpec;
use crate::sampler::{draw_batch, stream_rng, SamplerConfig, TrialRecord};

pub const DEFAULT_COARSE_GRID_POINTS: usize = 2048;

/// Search-domain bound `pi / (4 dt_eff)`, where `dt_eff` is the detector
/// bin or, without quantization, `tau / 100`.
pub fn default_omega_max(tau: f64, quantization: Option<f64>) -> f64 {
    let dt_eff = quantization.unwrap_or(tau / 100.0);
    PI / (4.0 * dt_eff)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Upper end of the search domain, rad/ns.
    pub omega_max: f64,
    pub coarse_grid_points: usize,
    /// Golden-section tolerance; `None` means `1e-9 * omega_max`.
    pub refine_tol: Option<f64>,
    /// Known `tau`, `nu`, `gamma`; the shift field is ignored.
    pub assumed: ModelParams,
}

impl EstimatorConfig {
    pub fn new(assumed: ModelParams, omega_max: f64) -> Self {
        Self {
            omega_max,
            coarse_grid_points: DEFAULT_COARSE_GRID_POINTS,
            refine_tol: None,
            assumed,
        }
    }

    pub fn refine_tol(&self) -> f64 {
        self.refine_tol.unwrap_or(1e-9 * self.omega_max)
    }

    pub fn grid_step(&self) -> f64 {
        self.omega_max / (self.coarse_grid_points - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.assumed.validate()?;
        if !(self.omega_max.is_finite() && self.omega_max > 0.0) {
            return Err(Error::Config(format!("omega_max must be > 0, got {}", self.omega_max)));
        }
        if self.coarse_grid_points < 3 {
            return Err(Error::Config(format!(
                "coarse_grid_points must be >= 3, got {}",
                self.coarse_grid_points
            )));
        }
        let tol = self.refine_tol();
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::Config(format!("refine_tol must be > 0, got {tol}")));
        }
        Ok(())
    }
}

/// Log-likelihood of a batch at one candidate shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogLikelihood {
    Finite(f64),
    /// The candidate assigns zero probability to this trial.
    Impossible {
        trial_index: u64,
    },
}

impl LogLikelihood {
    pub fn value(&self) -> f64 {
        match self {
            LogLikelihood::Finite(v) => *v,
            LogLikelihood::Impossible { .. } => f64::NEG_INFINITY,
        }
    }
}

/// Sum over trials of the log-probability (two-photon: log-density) under
/// the candidate shift. Uninformative trials add shift-independent constants.
pub fn log_likelihood(records: &[TrialRecord], candidate_omega: f64, assumed: &ModelParams) -> Result<LogLikelihood> {
    assumed.validate()?;
    if !records.iter().any(|r| r.outcome.is_two_photon()) {
        return Err(not_identifiable_from_batch());
    }
    let ladder = outcome_ladder(assumed);
    let mut total = 0.0;
    for r in records {
        let p = match r.outcome {
            DetectionOutcome::ZeroPhoton => ladder.zero,
            DetectionOutcome::OnePhoton => ladder.one,
            DetectionOutcome::TwoPhoton { class, delta_t } => {
                let factor = 1.0 + assumed.nu * class.sign() * (candidate_omega * delta_t).cos();
                ladder.two * 0.5 * envelope_c(delta_t, assumed) * factor
            }
        };
        if !(p > 0.0) {
            return Ok(LogLikelihood::Impossible {
                trial_index: r.trial_index,
            });
        }
        total += p.ln();
    }
    Ok(LogLikelihood::Finite(total))
}

fn not_identifiable_from_batch() -> Error {
    Error::NotIdentifiable("parameter not identifiable from this batch (no two-photon events)".into())
}

/// Shift-dependent part of the log-likelihood,
/// `sum_i ln(1 + s_i cos(omega dt_i))` with `s_i = nu * sign(class_i)`.
struct ShiftKernel {
    delta_t: Vec<f64>,
    weight: Vec<f64>,
}

/// Factors multiplied together before taking one logarithm in the grid scan.
const SCAN_CHUNK: usize = 16;
/// Grid steps between exact re-evaluations of the rotated cosine.
const SCAN_RESYNC: usize = 64;

impl ShiftKernel {
    fn new(records: &[TrialRecord], nu: f64) -> Self {
        let (delta_t, weight) = records
            .iter()
            .filter_map(|r| match r.outcome {
                DetectionOutcome::TwoPhoton { class, delta_t } => Some((delta_t, nu * class.sign())),
                _ => None,
            })
            .unzip();
        Self { delta_t, weight }
    }

    fn len(&self) -> usize {
        self.delta_t.len()
    }

    fn max_abs_delay(&self) -> f64 {
        self.delta_t.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    fn eval(&self, omega: f64) -> f64 {
        let mut total = 0.0;
        for (&dt, &w) in self.delta_t.iter().zip(&self.weight) {
            let factor = 1.0 + w * (omega * dt).cos();
            if !(factor > 0.0) {
                return f64::NEG_INFINITY;
            }
            total += factor.ln();
        }
        total
    }

    /// Values at `omega_k = k * step` for `k < points`.
    fn scan(&self, step: f64, points: usize) -> Vec<f64> {
        let mut out = vec![0.0; points];
        let mut product = vec![1.0; points];
        for (chunk_dt, chunk_w) in self.delta_t.chunks(SCAN_CHUNK).zip(self.weight.chunks(SCAN_CHUNK)) {
            product.iter_mut().for_each(|p| *p = 1.0);
            for (&dt, &w) in chunk_dt.iter().zip(chunk_w) {
                let (rot_s, rot_c) = (step * dt).sin_cos();
                let (mut s, mut c) = (0.0, 1.0);
                for (k, p) in product.iter_mut().enumerate() {
                    if k % SCAN_RESYNC == 0 {
                        (s, c) = (k as f64 * step * dt).sin_cos();
                    }
                    *p *= (1.0 + w * c).max(0.0);
                    (s, c) = (s * rot_c + c * rot_s, c * rot_c - s * rot_s);
                }
            }
            for (o, p) in out.iter_mut().zip(&product) {
                *o += p.ln();
            }
        }
        out
    }
}

/// Maximize `f` on `[lo, hi]`, assumed unimodal there.
fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    /// Estimated `|delta_omega|`, rad/ns.
    pub omega_hat: f64,
    /// Full log-likelihood at `omega_hat`, including uninformative trials.
    pub log_likelihood: f64,
    pub n_informative: usize,
    /// The maximizer lies within one coarse grid step of a domain edge.
    pub boundary_flag: bool,
}

/// Coarse grid scan over `[0, omega_max]`, then golden-section refinement
/// inside the bracket around the best grid point.
pub fn mle(records: &[TrialRecord], config: &EstimatorConfig) -> Result<EstimationResult> {
    config.validate()?;
    let kernel = ShiftKernel::new(records, config.assumed.nu);
    if kernel.len() == 0 {
        return Err(not_identifiable_from_batch());
    }

    let step = config.grid_step();
    let max_delay = kernel.max_abs_delay();
    if max_delay > 0.0 && step >= PI / (2.0 * max_delay) {
        let required = (config.omega_max * 2.0 * max_delay / PI).floor() as usize + 2;
        return Err(Error::Config(format!(
            "coarse grid too sparse: spacing {step:.3e} rad/ns must be < pi/(2 max|dt|) = {:.3e}; use at least {required} coarse_grid_points for omega_max {}",
            PI / (2.0 * max_delay),
            config.omega_max
        )));
    }

    let points = config.coarse_grid_points;
    let scan = kernel.scan(step, points);
    let mut best = 0;
    for (k, v) in scan.iter().enumerate() {
        if *v > scan[best] {
            best = k;
        }
    }
    if scan[best] == f64::NEG_INFINITY {
        return Err(Error::NotIdentifiable(
            "every candidate shift assigns zero probability to some event".into(),
        ));
    }

    let grid_omega = if best == points - 1 {
        config.omega_max
    } else {
        best as f64 * step
    };
    let grid_value = kernel.eval(grid_omega);
    let lo = best.saturating_sub(1) as f64 * step;
    let hi = ((best + 1) as f64 * step).min(config.omega_max);
    let (refined, refined_value) = golden_section_max(|w| kernel.eval(w), lo, hi, config.refine_tol());
    let omega_hat = if refined_value > grid_value {
        refined
    } else {
        grid_omega
    };

    let total = log_likelihood(records, omega_hat, &config.assumed)?.value();
    Ok(EstimationResult {
        omega_hat,
        log_likelihood: total,
        n_informative: kernel.len(),
        boundary_flag: omega_hat <= step || omega_hat >= config.omega_max - step,
    })
}

/// Estimator statistics at one `(nu, tau*dw, N)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub params: ModelParams,
    pub n_events: u64,
    pub repetitions: usize,
    pub failed_repetitions: usize,
    pub mean_estimate: f64,
    /// Unbiased sample variance of the estimates.
    pub variance: f64,
    /// Fisher information per repetition used for the bound.
    pub fisher: f64,
    /// `variance * n_events * F`.
    pub variance_crb_ratio: f64,
    /// `(mean - |dw|) / |dw|`; NaN at zero shift.
    pub bias_fraction: f64,
    /// Average number of two-photon events per repetition.
    pub mean_informative: f64,
    pub seed: u64,
}

/// Seed of the `index`-th child run of a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    stream_rng(master, index).next_u64()
}

/// Repeat sampling and estimation `repetitions` times. Results do not
/// depend on the number of worker threads.
pub fn monte_carlo(
    params: &ModelParams,
    n_events: u64,
    repetitions: usize,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<MonteCarloSummary> {
    params.validate()?;
    config.validate()?;
    if repetitions < 2 {
        return Err(Error::Config(format!("repetitions must be >= 2, got {repetitions}")));
    }
    if n_events == 0 {
        return Err(Error::Config("n_events must be >= 1".into()));
    }
    let fisher = fi_resolving(params, &QuadratureSpec::default())?.value;

    let outcomes: Vec<Result<EstimationResult>> = (0..repetitions)
        .into_par_iter()
        .map(|rep| {
            let sampler = SamplerConfig {
                keep_uninformative: false,
                ..SamplerConfig::new(*params, n_events, derive_seed(seed, rep as u64))
            };
            let batch = draw_batch(&sampler)?;
            mle(&batch.records, config)
        })
        .collect();

    let mut estimates = Vec::with_capacity(repetitions);
    let mut informative = 0usize;
    let mut failed = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok(r) => {
                estimates.push(r.omega_hat);
                informative += r.n_informative;
            }
            Err(e) if e.is_numerical() => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if failed * 100 > repetitions {
        return Err(Error::TooManyFailures { failed, repetitions });
    }
    let n = estimates.len();
    if n < 2 {
        return Err(Error::TooManyFailures { failed, repetitions });
    }
    let mean = estimates.iter().sum::<f64>() / n as f64;
    let variance = estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let truth = params.delta_omega.abs();
    Ok(MonteCarloSummary {
        params: *params,
        n_events,
        repetitions,
        failed_repetitions: failed,
        mean_estimate: mean,
        variance,
        fisher,
        variance_crb_ratio: variance * n_events as f64 * fisher,
        bias_fraction: (mean - truth) / truth,
        mean_informative: informative as f64 / n as f64,
        seed,
    })
}

pub const SUMMARY_CSV_HEADER: [&str; 10] = [
    "nu",
    "tau_domega",
    "n_events",
    "repetitions",
    "mean",
    "variance",
    "var_crb_ratio",
    "bias_fraction",
    "failed",
    "seed",
];

impl MonteCarloSummary {
    pub fn csv_row(&self) -> [String; 10] {
        [
            self.params.nu.to_string(),
            self.params.tau_delta_omega().to_string(),
            self.n_events.to_string(),
            self.repetitions.to_string(),
            self.mean_estimate.to_string(),
            self.variance.to_string(),
            self.variance_crb_ratio.to_string(),
            self.bias_fraction.to_string(),
            self.failed_repetitions.to_string(),
            self.seed.to_string(),
        ]
    }
}

//! Outcome probabilities of a two-photon interference measurement.
//!
//! Two single photons with Gaussian temporal amplitudes (standard deviation
//! `tau` of `|psi(t)|^2`) and a frequency shift `delta_omega` meet on a
//! balanced beam splitter. Time-resolving detectors record whether the
//! photons left through the same port ([`EventClass::Bunch`]) or different
//! ports ([`EventClass::Coincidence`]) together with the delay `t2 - t1`.
//!
//! Units: time in ns, angular frequency in rad/ns.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Envelope family of the beat note. Only Gaussian photons are wired in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    #[default]
    Gaussian,
}

/// Physical configuration of the interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Temporal standard deviation of each photon, ns.
    pub tau: f64,
    /// Indistinguishability in every degree of freedom except time.
    pub nu: f64,
    /// Per-detector efficiency.
    pub gamma: f64,
    /// Frequency shift `omega2 - omega1`, rad/ns.
    pub delta_omega: f64,
    #[serde(default)]
    pub envelope: Envelope,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            tau: 1.0,
            nu: 1.0,
            gamma: 1.0,
            delta_omega: 0.0,
            envelope: Envelope::Gaussian,
        }
    }
}

impl ModelParams {
    pub fn new(tau: f64, nu: f64, gamma: f64, delta_omega: f64) -> Result<Self> {
        let params = Self {
            tau,
            nu,
            gamma,
            delta_omega,
            envelope: Envelope::Gaussian,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParams(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.nu) {
            return Err(Error::InvalidParams(format!("nu must lie in [0, 1], got {}", self.nu)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidParams(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if !self.delta_omega.is_finite() {
            return Err(Error::InvalidParams(format!(
                "delta_omega must be finite, got {}",
                self.delta_omega
            )));
        }
        Ok(())
    }

    pub fn with_delta_omega(self, delta_omega: f64) -> Self {
        Self { delta_omega, ..self }
    }

    pub fn with_nu(self, nu: f64) -> Self {
        Self { nu, ..self }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    /// Dimensionless shift `tau * delta_omega`.
    pub fn tau_delta_omega(&self) -> f64 {
        self.tau * self.delta_omega
    }

    /// Standard deviation of the delay marginal `C`, i.e. `sqrt(2) * tau`.
    pub fn delay_sigma(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.tau
    }
}

/// Which output ports fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventClass {
    /// Both photons left through the same port.
    Bunch,
    /// The photons left through different ports.
    Coincidence,
}

impl EventClass {
    /// Interference sign: `+1` for bunching, `-1` for coincidences.
    pub fn sign(self) -> f64 {
        match self {
            EventClass::Bunch => 1.0,
            EventClass::Coincidence => -1.0,
        }
    }

    pub const ALL: [EventClass; 2] = [EventClass::Bunch, EventClass::Coincidence];
}

/// Result of one repetition of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DetectionOutcome {
    ZeroPhoton,
    OnePhoton,
    TwoPhoton { class: EventClass, delta_t: f64 },
}

impl DetectionOutcome {
    pub fn is_two_photon(&self) -> bool {
        matches!(self, DetectionOutcome::TwoPhoton { .. })
    }
}

/// Squared single-photon amplitude `|psi(t)|^2`: a centred Gaussian of
/// variance `tau^2`.
pub fn photon_intensity(t: f64, tau: f64) -> f64 {
    (-(t * t) / (2.0 * tau * tau)).exp() / (2.0 * PI * tau * tau).sqrt()
}

/// Beat envelope `C(dt) = exp(-dt^2 / 4 tau^2) / sqrt(4 pi tau^2)`, the
/// shift-independent marginal density of the detection delay.
pub fn envelope_c(delta_t: f64, params: &ModelParams) -> f64 {
    let tau = params.tau;
    match params.envelope {
        Envelope::Gaussian => (-(delta_t * delta_t) / (4.0 * tau * tau)).exp() / (4.0 * PI * tau * tau).sqrt(),
    }
}

/// Joint density of detection times `(t1, t2)` for a given event class.
pub fn joint_density_t1t2(t1: f64, t2: f64, class: EventClass, params: &ModelParams) -> f64 {
    let delta_t = t2 - t1;
    let weight = photon_intensity(t1, params.tau) * photon_intensity(t2, params.tau);
    0.5 * weight * interference_factor(class, delta_t, params)
}

/// Density of `(class, delta_t)` given the model, i.e.
/// `C(dt) / 2 * (1 + nu * sign(class) * cos(delta_omega * dt))`.
pub fn density_dt(class: EventClass, delta_t: f64, params: &ModelParams) -> f64 {
    0.5 * envelope_c(delta_t, params) * interference_factor(class, delta_t, params)
}

/// `1 + nu * sign * cos(delta_omega * dt)`, clamped at zero against rounding.
fn interference_factor(class: EventClass, delta_t: f64, params: &ModelParams) -> f64 {
    (1.0 + params.nu * class.sign() * (params.delta_omega * delta_t).cos()).max(0.0)
}

/// Probabilities of detecting zero, one or two photons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeLadder {
    pub zero: f64,
    pub one: f64,
    pub two: f64,
}

impl OutcomeLadder {
    pub fn total(&self) -> f64 {
        self.zero + self.one + self.two
    }
}

pub fn outcome_ladder(params: &ModelParams) -> OutcomeLadder {
    let g = params.gamma;
    OutcomeLadder {
        zero: (1.0 - g) * (1.0 - g),
        one: 2.0 * g * (1.0 - g),
        two: g * g,
    }
}

/// Probability of an uninformative outcome, or the density (1/ns) of a
/// two-photon outcome.
pub fn outcome_probability(outcome: &DetectionOutcome, params: &ModelParams) -> f64 {
    let ladder = outcome_ladder(params);
    match *outcome {
        DetectionOutcome::ZeroPhoton => ladder.zero,
        DetectionOutcome::OnePhoton => ladder.one,
        DetectionOutcome::TwoPhoton { class, delta_t } => ladder.two * density_dt(class, delta_t, params),
    }
}

/// Time-resolution condition that failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionCondition {
    /// `delta_t * margin <= 1 / |delta_omega|`
    BeatPeriod,
    /// `delta_t * margin <= tau`
    CoherenceTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionStatus {
    Ok,
    /// Failed conditions, beat-period condition first.
    Violated(Vec<ResolutionCondition>),
}

/// Advisory check that the detector resolution is fine enough for the
/// delay fringes and the photon duration. `margin` turns "much smaller
/// than" into a factor; 10 is the customary choice.
pub fn resolution_check(params: &ModelParams, delta_t_resolution: f64, margin: f64) -> Result<ResolutionStatus> {
    if !(margin.is_finite() && margin > 1.0) {
        return Err(Error::Config(format!("resolution margin must be > 1, got {margin}")));
    }
    if !(delta_t_resolution.is_finite() && delta_t_resolution > 0.0) {
        return Err(Error::Config(format!(
            "time resolution must be > 0, got {delta_t_resolution}"
        )));
    }
    let scaled = delta_t_resolution * margin;
    let mut failed = Vec::new();
    // Compare `scaled * |dw| <= 1` rather than `scaled <= 1 / |dw|`.
    if scaled * params.delta_omega.abs() > 1.0 + 1e-12 {
        failed.push(ResolutionCondition::BeatPeriod);
    }
    if scaled > params.tau * (1.0 + 1e-12) {
        failed.push(ResolutionCondition::CoherenceTime);
    }
    Ok(if failed.is_empty() {
        ResolutionStatus::Ok
    } else {
        ResolutionStatus::Violated(failed)
    })
}

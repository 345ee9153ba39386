//! Seeded synthetic measurement records.
//!
//! A repetition first picks how many photons were detected from the
//! efficiency ladder. For two detections the delay is drawn from its
//! shift-independent marginal `C` (a centred Gaussian with standard
//! deviation `sqrt(2) tau`), then the event class is a Bernoulli draw with
//! `P(bunch | dt) = (1 + nu cos(delta_omega dt)) / 2`. The composition
//! reproduces the two-class delay density exactly.
//!
//! Every trial owns an independent ChaCha stream selected by its index, so
//! batches do not depend on how trials are scheduled.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{outcome_ladder, DetectionOutcome, EventClass, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub params: ModelParams,
    pub n_events: u64,
    pub seed: u64,
    /// Detector time bin, ns. Delays are rounded to the nearest multiple.
    pub quantization: Option<f64>,
    pub keep_uninformative: bool,
}

impl SamplerConfig {
    pub fn new(params: ModelParams, n_events: u64, seed: u64) -> Self {
        Self {
            params,
            n_events,
            seed,
            quantization: None,
            keep_uninformative: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_events == 0 {
            return Err(Error::Config("n_events must be >= 1".into()));
        }
        if let Some(q) = self.quantization {
            if !(q.is_finite() && q > 0.0) {
                return Err(Error::Config(format!("quantization must be > 0, got {q}")));
            }
        }
        Ok(())
    }
}

/// One stored repetition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub outcome: DetectionOutcome,
}

/// Tally of every drawn repetition, stored or not.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub zero_photon: u64,
    pub one_photon: u64,
    pub bunch: u64,
    pub coincidence: u64,
}

impl OutcomeCounts {
    pub fn two_photon(&self) -> u64 {
        self.bunch + self.coincidence
    }

    pub fn total(&self) -> u64 {
        self.zero_photon + self.one_photon + self.two_photon()
    }

    fn add(&mut self, outcome: &DetectionOutcome) {
        match outcome {
            DetectionOutcome::ZeroPhoton => self.zero_photon += 1,
            DetectionOutcome::OnePhoton => self.one_photon += 1,
            DetectionOutcome::TwoPhoton {
                class: EventClass::Bunch,
                ..
            } => self.bunch += 1,
            DetectionOutcome::TwoPhoton {
                class: EventClass::Coincidence,
                ..
            } => self.coincidence += 1,
        }
    }

    pub fn from_records(records: &[TrialRecord]) -> Self {
        let mut counts = Self::default();
        for r in records {
            counts.add(&r.outcome);
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub config: SamplerConfig,
    pub records: Vec<TrialRecord>,
    pub counts: OutcomeCounts,
}

impl SampleBatch {
    pub fn outcomes(&self) -> impl Iterator<Item = &DetectionOutcome> + '_ {
        self.records.iter().map(|r| &r.outcome)
    }
}

/// Independent generator for `(seed, stream)`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_trial(config: &SamplerConfig, trial_index: u64) -> DetectionOutcome {
    let params = &config.params;
    let ladder = outcome_ladder(params);
    let mut rng = stream_rng(config.seed, trial_index);

    let u: f64 = rng.gen();
    if u < ladder.zero {
        return DetectionOutcome::ZeroPhoton;
    }
    if u < ladder.zero + ladder.one {
        return DetectionOutcome::OnePhoton;
    }

    let z: f64 = rng.sample(StandardNormal);
    let delta_t = params.delay_sigma() * z;
    let p_bunch = 0.5 * (1.0 + params.nu * (params.delta_omega * delta_t).cos());
    let class = if rng.gen::<f64>() < p_bunch {
        EventClass::Bunch
    } else {
        EventClass::Coincidence
    };
    let delta_t = match config.quantization {
        Some(step) => (delta_t / step).round() * step,
        None => delta_t,
    };
    DetectionOutcome::TwoPhoton { class, delta_t }
}

pub fn draw_batch(config: &SamplerConfig) -> Result<SampleBatch> {
    config.validate()?;
    let outcomes: Vec<DetectionOutcome> = (0..config.n_events)
        .into_par_iter()
        .map(|i| draw_trial(config, i))
        .collect();

    let mut counts = OutcomeCounts::default();
    let mut records = Vec::with_capacity(outcomes.len());
    for (i, outcome) in outcomes.into_iter().enumerate() {
        counts.add(&outcome);
        if config.keep_uninformative || outcome.is_two_photon() {
            records.push(TrialRecord {
                trial_index: i as u64,
                outcome,
            });
        }
    }
    Ok(SampleBatch {
        config: *config,
        records,
        counts,
    })
}

/// Per-class binned frequencies of the recorded delays.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub bunch: Vec<f64>,
    pub coincidence: Vec<f64>,
    /// Two-photon events the frequencies are normalized by.
    pub n_two_photon: u64,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

pub fn empirical_histogram(outcomes: &[TrialRecord], bins: usize, range: (f64, f64)) -> Result<Histogram> {
    let (lo, hi) = range;
    if bins < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {bins}")));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::Config(format!("degenerate histogram range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / bins as f64;
    let mut bunch = vec![0u64; bins];
    let mut coinc = vec![0u64; bins];
    let mut n_two = 0u64;
    for r in outcomes {
        if let DetectionOutcome::TwoPhoton { class, delta_t } = r.outcome {
            n_two += 1;
            if delta_t < lo || delta_t > hi {
                continue;
            }
            let idx = (((delta_t - lo) / width) as usize).min(bins - 1);
            match class {
                EventClass::Bunch => bunch[idx] += 1,
                EventClass::Coincidence => coinc[idx] += 1,
            }
        }
    }
    if n_two == 0 {
        return Err(Error::NoTwoPhotonEvents);
    }
    let norm = |v: Vec<u64>| v.into_iter().map(|c| c as f64 / n_two as f64).collect();
    Ok(Histogram {
        edges: (0..=bins).map(|i| lo + i as f64 * width).collect(),
        bunch: norm(bunch),
        coincidence: norm(coinc),
        n_two_photon: n_two,
    })
}

pub const CSV_HEADER: [&str; 4] = ["trial_index", "variant", "class", "delta_t_ns"];

/// Write records as CSV, one row per stored trial in trial order.
pub fn write_csv<W: Write>(records: &[TrialRecord], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        let (variant, class, delta_t) = match r.outcome {
            DetectionOutcome::ZeroPhoton => ("zero", "", String::new()),
            DetectionOutcome::OnePhoton => ("one", "", String::new()),
            DetectionOutcome::TwoPhoton { class, delta_t } => {
                let class = match class {
                    EventClass::Bunch => "bunch",
                    EventClass::Coincidence => "coincidence",
                };
                ("two", class, delta_t.to_string())
            }
        };
        w.write_record([r.trial_index.to_string().as_str(), variant, class, &delta_t])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a batch CSV written by [`write_csv`].
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header {}, got {}",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let fail = |message: String| Error::Parse { line, message };
        if row.len() != CSV_HEADER.len() {
            return Err(fail(format!("expected 4 columns, got {}", row.len())));
        }
        let trial_index: u64 = row[0]
            .parse()
            .map_err(|_| fail(format!("invalid trial_index {:?}", &row[0])))?;
        let outcome = match &row[1] {
            "zero" => DetectionOutcome::ZeroPhoton,
            "one" => DetectionOutcome::OnePhoton,
            "two" => {
                let class = match &row[2] {
                    "bunch" => EventClass::Bunch,
                    "coincidence" => EventClass::Coincidence,
                    other => return Err(fail(format!("invalid class {other:?}"))),
                };
                let delta_t: f64 = row[3]
                    .parse()
                    .map_err(|_| fail(format!("non-numeric delta_t_ns {:?}", &row[3])))?;
                if !delta_t.is_finite() {
                    return Err(fail(format!("delta_t_ns must be finite, got {delta_t}")));
                }
                DetectionOutcome::TwoPhoton { class, delta_t }
            }
            other => return Err(fail(format!("invalid variant {other:?}"))),
        };
        records.push(TrialRecord { trial_index, outcome });
    }
    Ok(records)
}

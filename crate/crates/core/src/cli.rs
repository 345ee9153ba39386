//! Scenario configuration and the commands behind the `twophoton` binary.
//!
//! Every command reads a [`ScenarioConfig`], writes its files into
//! `output_dir` through temp-file renames, and returns the paths it wrote.
//! Outputs are pure functions of the configuration (seed included), except
//! for `timings.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::estimator::{
    default_omega_max, derive_seed, mle, monte_carlo, EstimatorConfig, MonteCarloSummary, DEFAULT_COARSE_GRID_POINTS,
    SUMMARY_CSV_HEADER,
};
use crate::fisher::{fi_asymptotic, fi_contribution, fi_contribution_bound, fi_nonresolving, fi_resolving, qfi};
use crate::model::{density_dt, envelope_c, resolution_check, EventClass, ModelParams};
use crate::quadrature::QuadratureSpec;
use crate::sampler::{draw_batch, read_csv, write_csv, SamplerConfig};

pub const DEFAULT_REPETITIONS: usize = 10_000;
pub const FAST_REPETITIONS: usize = 1_000;
/// Coarse grid used by the Monte-Carlo sweep, whose search domain is narrow.
pub const MONTE_CARLO_GRID_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    /// CSV plus a polyline plot.
    Svg,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub nu: Option<Vec<f64>>,
    pub tau_domega: Option<Vec<f64>>,
    pub n_events: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub n_events: Option<u64>,
    pub seed: Option<u64>,
    pub quantization: Option<f64>,
    pub keep_uninformative: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    pub omega_max: Option<f64>,
    pub coarse_grid_points: Option<usize>,
    pub refine_tol: Option<f64>,
}

fn default_model() -> ModelParams {
    ModelParams {
        delta_omega: 4.0,
        ..ModelParams::default()
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// JSON scenario file. Every field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Defaults to `tau = 1`, `nu = 1`, `gamma = 1`, `delta_omega = 4`.
    pub model: ModelParams,
    pub sweep: SweepConfig,
    pub sampler: SamplerSection,
    pub estimator: EstimatorSection,
    pub quadrature: QuadratureSpec,
    /// Not echoed into manifests, which must not depend on where they land.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    pub format: OutputFormat,
    /// Monte-Carlo repetitions per sweep point.
    pub repetitions: Option<usize>,
    /// Use the desk-scale repetition count when `repetitions` is unset.
    pub fast: bool,
    /// Worker threads; `None` uses every core.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    /// Delay grid points for curve outputs.
    pub grid_points: Option<usize>,
    /// Batch CSV consumed by `estimate`.
    pub input: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            model: default_model(),
            sweep: SweepConfig::default(),
            sampler: SamplerSection::default(),
            estimator: EstimatorSection::default(),
            quadrature: QuadratureSpec::default(),
            output_dir: default_output_dir(),
            format: OutputFormat::Csv,
            repetitions: None,
            fast: false,
            threads: None,
            grid_points: None,
            input: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.quadrature.validate()?;
        for (name, len) in [
            ("sweep.nu", self.sweep.nu.as_ref().map(Vec::len)),
            ("sweep.tau_domega", self.sweep.tau_domega.as_ref().map(Vec::len)),
            ("sweep.n_events", self.sweep.n_events.as_ref().map(Vec::len)),
        ] {
            if len == Some(0) {
                return Err(Error::Config(format!("{name} must not be empty")));
            }
        }
        if let Some(nus) = &self.sweep.nu {
            for &nu in nus {
                self.model.with_nu(nu).validate()?;
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        if matches!(self.grid_points, Some(n) if n < 2) {
            return Err(Error::Config("grid_points must be >= 2".into()));
        }
        Ok(())
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions.unwrap_or(if self.fast {
            FAST_REPETITIONS
        } else {
            DEFAULT_REPETITIONS
        })
    }

    pub fn seed(&self) -> u64 {
        self.sampler.seed.unwrap_or(0)
    }

    fn run<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            None => Ok(job()),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map(|pool| pool.install(job))
                .map_err(|e| Error::Config(format!("thread pool: {e}"))),
        }
    }

    fn prepare_output_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.output_dir).map_err(|e| {
            Error::Config(format!(
                "output directory {} is not writable: {e}",
                self.output_dir.display()
            ))
        })
    }
}

/// Files written by a command and the sweep points that failed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub point_errors: Vec<String>,
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)
        .and_then(|_| fs::rename(&tmp, path))
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// Comma-separated table with a header row and `\n` line ends.
struct Table {
    text: String,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    fn row<S: AsRef<str>>(&mut self, cells: impl IntoIterator<Item = S>) {
        let mut first = true;
        for cell in cells {
            if !first {
                self.text.push(',');
            }
            self.text.push_str(cell.as_ref());
            first = false;
        }
        self.text.push('\n');
    }

    fn numbers(&mut self, values: &[f64]) {
        self.row(values.iter().map(f64::to_string));
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Minimal line plot: one polyline per series, axis box and labels.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 60.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

    let points = series
        .iter()
        .flat_map(|(_, p)| p.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        W / 2.0,
        H - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{y_label}</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{M}" y="{}" text-anchor="start">{x0:.3}</text>"#,
        H - M + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{x1:.3}</text>"#,
        W - M,
        H - M + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{y0:.3}</text>"#,
        M - 4.0,
        H - M
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{y1:.3}</text>"#,
        M - 4.0,
        M + 4.0
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#,
            W - M - 110.0,
            M + 16.0 + 14.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn delay_grid(tau: f64, points: usize) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points).map(|i| -6.0 * tau + 12.0 * tau * i as f64 / last).collect()
}

fn nu_label(nu: f64) -> String {
    format!("nu_{nu}")
}

/// Two-class delay densities and the beat envelope over `[-6 tau, 6 tau]`.
pub fn cmd_density(config: &ScenarioConfig) -> Result<CommandOutput> {
    config.validate()?;
    config.prepare_output_dir()?;
    let p = &config.model;
    let grid = delay_grid(p.tau, config.grid_points.unwrap_or(1201));
    let rows: Vec<[f64; 4]> = grid
        .iter()
        .map(|&t| {
            [
                t,
                density_dt(EventClass::Bunch, t, p),
                density_dt(EventClass::Coincidence, t, p),
                envelope_c(t, p),
            ]
        })
        .collect();

    let mut out = CommandOutput::default();
    let header = ["delta_t", "p_bunch", "p_coinc", "envelope"];
    if config.format == OutputFormat::Json {
        let records: Vec<_> = rows
            .iter()
            .map(|r| json!({"delta_t": r[0], "p_bunch": r[1], "p_coinc": r[2], "envelope": r[3]}))
            .collect();
        let path = config.output_dir.join("density.json");
        write_atomic(&path, &json_bytes(&json!({"model": p, "curve": records}))?)?;
        out.files.push(path);
        return Ok(out);
    }
    let mut table = Table::new(&header);
    for r in &rows {
        table.numbers(r);
    }
    let path = config.output_dir.join("density.csv");
    write_atomic(&path, table.text.as_bytes())?;
    out.files.push(path);
    if config.format == OutputFormat::Svg {
        let series: Vec<(String, Vec<(f64, f64)>)> = (1..4)
            .map(|c| (header[c].to_string(), rows.iter().map(|r| (r[0], r[c])).collect()))
            .collect();
        let path = config.output_dir.join("density.svg");
        write_atomic(
            &path,
            svg_plot("delay densities", "delta_t [ns]", "density [1/ns]", &series).as_bytes(),
        )?;
        out.files.push(path);
    }
    Ok(out)
}

/// Default indistinguishability values of the contribution curves.
pub const CONTRIBUTION_NUS: [f64; 4] = [1.0, 0.9, 0.8, 0.7];

/// Per-delay Fisher-information density and its envelope, one file per `nu`.
pub fn cmd_contribution(config: &ScenarioConfig) -> Result<CommandOutput> {
    config.validate()?;
    config.prepare_output_dir()?;
    let nus = config.sweep.nu.clone().unwrap_or_else(|| CONTRIBUTION_NUS.to_vec());
    let grid = delay_grid(config.model.tau, config.grid_points.unwrap_or(1201));
    let mut out = CommandOutput::default();
    let mut series = Vec::new();
    for &nu in &nus {
        let p = config.model.with_nu(nu);
        let rows: Vec<[f64; 3]> = grid
            .iter()
            .map(|&t| [t, fi_contribution(t, &p), fi_contribution_bound(t, &p)])
            .collect();
        let stem = format!("contribution_{}", nu_label(nu));
        if config.format == OutputFormat::Json {
            let curve: Vec<_> = rows
                .iter()
                .map(|r| json!({"delta_t": r[0], "f_nu": r[1], "envelope_bound": r[2]}))
                .collect();
            let path = config.output_dir.join(format!("{stem}.json"));
            write_atomic(&path, &json_bytes(&json!({"model": p, "curve": curve}))?)?;
            out.files.push(path);
            continue;
        }
        let mut table = Table::new(&["delta_t", "f_nu", "envelope_bound"]);
        for r in &rows {
            table.numbers(r);
        }
        let path = config.output_dir.join(format!("{stem}.csv"));
        write_atomic(&path, table.text.as_bytes())?;
        out.files.push(path);
        series.push((
            format!("nu={nu}"),
            rows.iter().map(|r| (r[0], r[1])).collect::<Vec<_>>(),
        ));
    }
    if config.format == OutputFormat::Svg {
        let path = config.output_dir.join("contribution.svg");
        write_atomic(
            &path,
            svg_plot("Fisher information per delay", "delta_t [ns]", "f_nu", &series).as_bytes(),
        )?;
        out.files.push(path);
    }
    Ok(out)
}

pub const FISHER_COMPARE_NUS: [f64; 3] = [1.0, 0.9, 0.8];

/// Default abscissa `1/(tau dw)`: 200 points from 0.02 to 4.
pub fn default_inverse_shift_grid() -> Vec<f64> {
    let n = 200;
    (0..n)
        .map(|i| 0.02 + (4.0 - 0.02) * i as f64 / (n - 1) as f64)
        .collect()
}

/// One row of the Fisher-information comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherCompareRow {
    pub inv_tau_domega: f64,
    pub nu: f64,
    pub fi_resolving: f64,
    pub fi_nonresolving: f64,
    pub qfi: f64,
    pub asymptote: f64,
}

pub fn fisher_compare_rows(config: &ScenarioConfig) -> Result<Vec<FisherCompareRow>> {
    config.validate()?;
    let nus = config.sweep.nu.clone().unwrap_or_else(|| FISHER_COMPARE_NUS.to_vec());
    let inverse: Vec<f64> = match &config.sweep.tau_domega {
        Some(shifts) => shifts.iter().map(|x| 1.0 / x).collect(),
        None => default_inverse_shift_grid(),
    };
    let tau = config.model.tau;
    let points: Vec<(f64, f64)> = nus
        .iter()
        .flat_map(|&nu| inverse.iter().map(move |&inv| (nu, inv)))
        .collect();
    let quadrature = config.quadrature;
    let model = config.model;
    config.run(|| {
        points
            .par_iter()
            .map(|&(nu, inv)| {
                let p = model.with_nu(nu).with_gamma(1.0).with_delta_omega(1.0 / (inv * tau));
                let at = || format!("nu={nu}, 1/(tau dw)={inv}");
                let resolving = fi_resolving(&p, &quadrature).map_err(|e| e.context(at()))?;
                let nonresolving = fi_nonresolving(&p).map_err(|e| e.context(at()))?;
                Ok(FisherCompareRow {
                    inv_tau_domega: inv,
                    nu,
                    fi_resolving: resolving.value,
                    fi_nonresolving: nonresolving.value,
                    qfi: qfi(tau)?.value,
                    asymptote: fi_asymptotic(&p).value,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// Resolving vs non-resolving Fisher information against `1/(tau dw)`.
pub fn cmd_fisher_compare(config: &ScenarioConfig) -> Result<CommandOutput> {
    config.validate()?;
    config.prepare_output_dir()?;
    let rows = fisher_compare_rows(config)?;
    let mut out = CommandOutput::default();
    if config.format == OutputFormat::Json {
        let path = config.output_dir.join("fisher_compare.json");
        write_atomic(&path, &json_bytes(&json!({"tau": config.model.tau, "rows": rows}))?)?;
        out.files.push(path);
        return Ok(out);
    }
    let mut table = Table::new(&[
        "inv_tau_domega",
        "nu",
        "fi_resolving",
        "fi_nonresolving",
        "qfi",
        "asymptote",
    ]);
    for r in &rows {
        table.numbers(&[
            r.inv_tau_domega,
            r.nu,
            r.fi_resolving,
            r.fi_nonresolving,
            r.qfi,
            r.asymptote,
        ]);
    }
    let path = config.output_dir.join("fisher_compare.csv");
    write_atomic(&path, table.text.as_bytes())?;
    out.files.push(path);
    if config.format == OutputFormat::Svg {
        let mut series = Vec::new();
        let mut nus: Vec<f64> = rows.iter().map(|r| r.nu).collect();
        nus.dedup();
        for nu in nus {
            let of = |f: fn(&FisherCompareRow) -> f64| {
                rows.iter()
                    .filter(|r| r.nu == nu)
                    .map(|r| (r.inv_tau_domega, f(r)))
                    .collect::<Vec<_>>()
            };
            series.push((format!("resolving nu={nu}"), of(|r| r.fi_resolving)));
            series.push((format!("non-resolving nu={nu}"), of(|r| r.fi_nonresolving)));
        }
        let path = config.output_dir.join("fisher_compare.svg");
        write_atomic(
            &path,
            svg_plot("Fisher information", "1/(tau dw)", "F [ns^2]", &series).as_bytes(),
        )?;
        out.files.push(path);
    }
    Ok(out)
}

pub const MONTE_CARLO_NUS: [f64; 2] = [1.0, 0.7];
pub const MONTE_CARLO_SHIFTS: [f64; 3] = [0.5, 1.0, 3.0];
pub const MONTE_CARLO_N: [u64; 6] = [10, 30, 100, 300, 1000, 3000];

/// Estimator settings for a sweep: the search domain spans four times the
/// largest swept shift (at least `4 / tau`).
pub fn monte_carlo_estimator(config: &ScenarioConfig, shifts: &[f64]) -> EstimatorConfig {
    let tau = config.model.tau;
    let widest = shifts.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    EstimatorConfig {
        omega_max: config.estimator.omega_max.unwrap_or(4.0 * widest / tau),
        coarse_grid_points: config.estimator.coarse_grid_points.unwrap_or(MONTE_CARLO_GRID_POINTS),
        refine_tol: config.estimator.refine_tol,
        assumed: config.model,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub nu: f64,
    pub tau_domega: f64,
    pub n_events: u64,
    pub seed: u64,
}

pub fn monte_carlo_points(config: &ScenarioConfig) -> Vec<SweepPoint> {
    let nus = config.sweep.nu.clone().unwrap_or_else(|| MONTE_CARLO_NUS.to_vec());
    let shifts = config
        .sweep
        .tau_domega
        .clone()
        .unwrap_or_else(|| MONTE_CARLO_SHIFTS.to_vec());
    let ns = config.sweep.n_events.clone().unwrap_or_else(|| MONTE_CARLO_N.to_vec());
    let mut points = Vec::new();
    for &nu in &nus {
        for &tau_domega in &shifts {
            for &n_events in &ns {
                let seed = derive_seed(config.seed(), points.len() as u64);
                points.push(SweepPoint {
                    nu,
                    tau_domega,
                    n_events,
                    seed,
                });
            }
        }
    }
    points
}

/// Run the sweep and return one result per point, in sweep order.
pub fn monte_carlo_sweep(config: &ScenarioConfig) -> Result<Vec<(SweepPoint, Result<MonteCarloSummary>)>> {
    config.validate()?;
    let points = monte_carlo_points(config);
    let shifts: Vec<f64> = points.iter().map(|p| p.tau_domega).collect();
    let estimator = monte_carlo_estimator(config, &shifts);
    estimator.validate()?;
    let repetitions = config.repetitions();
    let tau = config.model.tau;
    let model = config.model;
    config.run(|| {
        points
            .par_iter()
            .map(|pt| {
                let params = model.with_nu(pt.nu).with_delta_omega(pt.tau_domega / tau);
                let est = EstimatorConfig {
                    assumed: params,
                    ..estimator
                };
                let result = monte_carlo(&params, pt.n_events, repetitions, &est, pt.seed).map_err(|e| {
                    e.context(format!(
                        "nu={}, tau_domega={}, n_events={}",
                        pt.nu, pt.tau_domega, pt.n_events
                    ))
                });
                (*pt, result)
            })
            .collect()
    })
}

/// Monte-Carlo sweep: `montecarlo.csv`, a reproducibility manifest, and
/// wall-clock timings kept in a separate file.
pub fn cmd_montecarlo(config: &ScenarioConfig) -> Result<CommandOutput> {
    config.validate()?;
    config.prepare_output_dir()?;
    let started = Instant::now();
    let results = monte_carlo_sweep(config)?;
    let elapsed = started.elapsed().as_secs_f64();

    let mut out = CommandOutput::default();
    let mut table = Table::new(&SUMMARY_CSV_HEADER);
    let mut summaries = Vec::new();
    for (pt, result) in &results {
        match result {
            Ok(s) => {
                table.row(s.csv_row());
                summaries.push(json!(s));
            }
            Err(e) => {
                let nan = f64::NAN.to_string();
                table.row([
                    pt.nu.to_string(),
                    pt.tau_domega.to_string(),
                    pt.n_events.to_string(),
                    config.repetitions().to_string(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan,
                    config.repetitions().to_string(),
                    pt.seed.to_string(),
                ]);
                out.point_errors.push(e.to_string());
            }
        }
    }
    let csv_path = config.output_dir.join("montecarlo.csv");
    write_atomic(&csv_path, table.text.as_bytes())?;
    out.files.push(csv_path);

    if config.format == OutputFormat::Json {
        let path = config.output_dir.join("montecarlo.json");
        write_atomic(&path, &json_bytes(&summaries)?)?;
        out.files.push(path);
    }
    if config.format == OutputFormat::Svg {
        let mut series = Vec::new();
        let mut keys: Vec<(f64, f64)> = Vec::new();
        for (pt, _) in &results {
            if !keys.contains(&(pt.nu, pt.tau_domega)) {
                keys.push((pt.nu, pt.tau_domega));
            }
        }
        for (nu, x) in keys {
            let pts = results
                .iter()
                .filter(|(pt, _)| pt.nu == nu && pt.tau_domega == x)
                .filter_map(|(pt, r)| {
                    r.as_ref()
                        .ok()
                        .map(|s| ((pt.n_events as f64).log10(), s.variance_crb_ratio))
                })
                .collect();
            series.push((format!("nu={nu} tau*dw={x}"), pts));
        }
        let path = config.output_dir.join("montecarlo.svg");
        write_atomic(
            &path,
            svg_plot("variance / Cramer-Rao bound", "log10 N", "Var * N * F", &series).as_bytes(),
        )?;
        out.files.push(path);
    }

    let shifts: Vec<f64> = results.iter().map(|(pt, _)| pt.tau_domega).collect();
    let manifest = json!({
        "command": "montecarlo",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed(),
        "repetitions": config.repetitions(),
        "model": config.model,
        "estimator": monte_carlo_estimator(config, &shifts),
        "quadrature": config.quadrature,
        "points": results.iter().map(|(pt, _)| pt).collect::<Vec<_>>(),
        "errors": out.point_errors,
        "scenario": config,
    });
    let path = config.output_dir.join("manifest.json");
    write_atomic(&path, &json_bytes(&manifest)?)?;
    out.files.push(path);

    let timings = json!({
        "total_seconds": elapsed,
        "threads": config.threads.unwrap_or_else(rayon::current_num_threads),
    });
    let path = config.output_dir.join("timings.json");
    write_atomic(&path, &json_bytes(&timings)?)?;
    out.files.push(path);
    Ok(out)
}

pub fn sampler_config(config: &ScenarioConfig) -> SamplerConfig {
    SamplerConfig {
        params: config.model,
        n_events: config.sampler.n_events.unwrap_or(1000),
        seed: config.seed(),
        quantization: config.sampler.quantization,
        keep_uninformative: config.sampler.keep_uninformative.unwrap_or(true),
    }
}

/// Draw a batch and write `batch.csv` plus `sample_manifest.json`.
pub fn cmd_sample(config: &ScenarioConfig) -> Result<CommandOutput> {
    config.validate()?;
    config.prepare_output_dir()?;
    let sampler = sampler_config(config);
    let batch = config.run(|| draw_batch(&sampler))??;
    let mut buf = Vec::new();
    write_csv(&batch.records, &mut buf)?;
    let mut out = CommandOutput::default();
    let path = config.output_dir.join("batch.csv");
    write_atomic(&path, &buf)?;
    out.files.push(path);

    let resolution = match sampler.quantization {
        Some(step) => json!(resolution_check(&sampler.params, step, 10.0)?),
        None => serde_json::Value::Null,
    };
    let manifest = json!({
        "command": "sample",
        "version": env!("CARGO_PKG_VERSION"),
        "sampler": sampler,
        "counts": batch.counts,
        "resolution_check": resolution,
    });
    let path = config.output_dir.join("sample_manifest.json");
    write_atomic(&path, &json_bytes(&manifest)?)?;
    out.files.push(path);
    Ok(out)
}

pub fn estimator_config(config: &ScenarioConfig) -> EstimatorConfig {
    EstimatorConfig {
        omega_max: config
            .estimator
            .omega_max
            .unwrap_or_else(|| default_omega_max(config.model.tau, config.sampler.quantization)),
        coarse_grid_points: config
            .estimator
            .coarse_grid_points
            .unwrap_or(DEFAULT_COARSE_GRID_POINTS),
        refine_tol: config.estimator.refine_tol,
        assumed: config.model,
    }
}

/// Read a batch CSV and write the maximum-likelihood estimate to `estimate.json`.
pub fn cmd_estimate(config: &ScenarioConfig) -> Result<CommandOutput> {
    config.validate()?;
    let input = config
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("estimate needs an input batch (--input or \"input\")".into()))?;
    let file = fs::File::open(input).map_err(|e| Error::Config(format!("cannot open {}: {e}", input.display())))?;
    let records = read_csv(std::io::BufReader::new(file))?;
    let estimator = estimator_config(config);
    let result = mle(&records, &estimator)?;
    config.prepare_output_dir()?;
    let doc = json!({
        "command": "estimate",
        "version": env!("CARGO_PKG_VERSION"),
        "input": input,
        "estimator": estimator,
        "result": result,
    });
    let path = config.output_dir.join("estimate.json");
    write_atomic(&path, &json_bytes(&doc)?)?;
    Ok(CommandOutput {
        files: vec![path],
        point_errors: Vec::new(),
    })
}

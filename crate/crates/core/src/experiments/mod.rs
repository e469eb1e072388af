//! Reproducible Monte Carlo experiments with CSV/JSON/SVG output.
//!
//! Replicate `i` of a run draws from `ChaCha8` seeded with the master seed
//! on stream `i`, so results do not depend on the worker count. Results are
//! collected in replicate order and reduced sequentially.

pub mod config;
mod global;
mod local;
mod plp_sanity;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{ExperimentConfig, ExperimentKind};
pub use global::{plp_reference, run_global, run_selfint, PlpReference};
pub use local::{run_local_convergence, run_two_point};
pub use plp_sanity::run_plp_sanity;

use crate::plot::{emit_plots, PlotData};
use crate::stats::{poisson_truncated, tv_distance, DiscreteDistribution};
use crate::surface::SurfaceError;
use crate::tessellation::TessError;
use crate::tracer::TraceError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid experiment setup: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("surface: {0}")]
    Surface(#[from] SurfaceError),
    #[error("replicate {replicate}: trace failed: {source}")]
    Trace { replicate: u64, source: TraceError },
    #[error("replicate {replicate}: tessellation failed: {source}")]
    Tessellation { replicate: u64, source: TessError },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("missing data: {0}")]
    MissingData(String),
}

impl ExperimentError {
    /// Machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            ExperimentError::Config(_) => "E_CONFIG",
            ExperimentError::Validation(_) => "E_VALIDATION",
            ExperimentError::Io(_) => "E_IO",
            ExperimentError::Surface(_) => "E_SURFACE",
            ExperimentError::Trace { .. } => "E_TRACE",
            ExperimentError::Tessellation { .. } => "E_TESSELLATION",
            ExperimentError::Pool(_) => "E_POOL",
            ExperimentError::MissingData(_) => "E_MISSING_DATA",
        }
    }
}

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// A closed-form law.
    Formula,
    /// An independent computation (exact recursion, large-window simulation, …).
    DerivedOracle,
    /// Forced by construction.
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    #[serde(with = "crate::nullable")]
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub reference: Option<f64>,
    pub provenance: Provenance,
    /// The pass rule, in words.
    pub rule: String,
    pub passed: bool,
}

impl Metric {
    /// Passes when `|estimate − reference| ≤ tol · |reference|` (absolute when the reference is 0).
    pub fn relative(name: &str, estimate: f64, se: Option<f64>, reference: f64, tol: f64, provenance: Provenance) -> Self {
        let scale = if reference == 0.0 { 1.0 } else { reference.abs() };
        Self {
            name: name.into(),
            estimate,
            std_error: se.filter(|s| s.is_finite()),
            reference: Some(reference),
            provenance,
            rule: format!("within {:.3}% of reference", 100.0 * tol),
            passed: (estimate - reference).abs() <= tol * scale,
        }
    }

    pub fn absolute(name: &str, estimate: f64, se: Option<f64>, reference: f64, tol: f64, provenance: Provenance) -> Self {
        Self {
            name: name.into(),
            estimate,
            std_error: se.filter(|s| s.is_finite()),
            reference: Some(reference),
            provenance,
            rule: format!("within {tol} of reference"),
            passed: (estimate - reference).abs() <= tol,
        }
    }

    pub fn below(name: &str, estimate: f64, bound: f64, provenance: Provenance) -> Self {
        Self {
            name: name.into(),
            estimate,
            std_error: None,
            reference: None,
            provenance,
            rule: format!("< {bound}"),
            passed: estimate < bound,
        }
    }

    pub fn above(name: &str, estimate: f64, bound: f64, provenance: Provenance) -> Self {
        Self {
            name: name.into(),
            estimate,
            std_error: None,
            reference: None,
            provenance,
            rule: format!("> {bound}"),
            passed: estimate > bound,
        }
    }

    pub fn in_range(name: &str, estimate: f64, lo: f64, hi: f64, provenance: Provenance) -> Self {
        Self {
            name: name.into(),
            estimate,
            std_error: None,
            reference: None,
            provenance,
            rule: format!("in [{lo}, {hi}]"),
            passed: (lo..=hi).contains(&estimate),
        }
    }

    /// A yes/no property; the estimate records the number of violations.
    pub fn holds(name: &str, violations: usize, provenance: Provenance) -> Self {
        Self {
            name: name.into(),
            estimate: violations as f64,
            std_error: None,
            reference: Some(0.0),
            provenance,
            rule: "no violations".into(),
            passed: violations == 0,
        }
    }

    /// Recorded without a verdict.
    pub fn info(name: &str, estimate: f64, se: Option<f64>) -> Self {
        Self {
            name: name.into(),
            estimate,
            std_error: se.filter(|s| s.is_finite()),
            reference: None,
            provenance: Provenance::Trivial,
            rule: "informational".into(),
            passed: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub label: String,
    pub seed: u64,
    pub replicates: usize,
    pub version: String,
    pub metrics: Vec<Metric>,
    pub files: Vec<String>,
    pub plots: Vec<PlotData>,
    pub passed: bool,
    /// Kept out of `report.json` so reports stay byte-reproducible.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            experiment: config.experiment,
            label: config.label.clone(),
            seed: config.seed,
            replicates: config.replicates,
            version: env!("CARGO_PKG_VERSION").into(),
            metrics: Vec::new(),
            files: Vec::new(),
            plots: Vec::new(),
            passed: true,
            wall_clock_seconds: 0.0,
        }
    }

    pub fn push(&mut self, m: Metric) {
        self.passed &= m.passed;
        self.metrics.push(m);
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::MissingData(format!("report.json: {e}")))
    }

    /// One line per metric.
    pub fn summary(&self) -> String {
        let mut out = format!("{} [{}] seed={} replicates={}\n", self.experiment, self.label, self.seed, self.replicates);
        for m in &self.metrics {
            let se = m.std_error.map_or(String::new(), |s| format!(" ± {s:.3e}"));
            let reference = m.reference.map_or(String::new(), |r| format!(" (ref {r:.6})"));
            out.push_str(&format!(
                "  {:<4} {:<44} {:.6}{se}{reference}  [{}]\n",
                if m.passed { "ok" } else { "FAIL" },
                m.name,
                m.estimate,
                m.rule
            ));
        }
        out.push_str(if self.passed { "PASS\n" } else { "FAIL\n" });
        out
    }
}

/// The generator for replicate `i` of a run.
pub fn replicate_rng(master: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(i);
    rng
}

/// Independent master seed for a named sub-computation of a run.
pub fn sub_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run `job` for replicates `0..n` on `workers` threads (0 = all cores),
/// returning results in replicate order.
pub fn run_replicates<T, F>(n: usize, master: u64, workers: usize, job: F) -> Result<Vec<T>, ExperimentError>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    Ok(pool.install(|| {
        (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = replicate_rng(master, i);
                job(i, &mut rng)
            })
            .collect()
    }))
}

/// TV distance between the empirical law of `values` and Poisson(`mean`).
pub fn tv_to_poisson(values: &[u32], mean: f64) -> f64 {
    tv_distance(&DiscreteDistribution::empirical(values), &poisson_truncated(mean))
}

/// Histogram plot of `values` with a Poisson overlay.
pub fn poisson_plot(name: &str, title: &str, values: &[u32], mean: f64) -> PlotData {
    let emp = DiscreteDistribution::empirical(values);
    let len = emp.probs.len().max(4);
    let reference = poisson_truncated(mean).truncated(len).probs;
    PlotData::Histogram {
        name: name.into(),
        title: title.into(),
        observed: emp.probs,
        reference: Some(reference),
    }
}

/// Output of a run before it is persisted.
pub struct RunOutput {
    pub report: ExperimentReport,
    /// `(file name, contents)` pairs.
    pub files: Vec<(String, String)>,
}

/// Write `config.echo`, raw files, `report.json`, plots and `timing.json`.
pub fn write_outputs(config: &ExperimentConfig, mut output: RunOutput) -> Result<(ExperimentReport, PathBuf), ExperimentError> {
    let dir = config.run_dir();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.echo"), config.to_toml())?;
    output.report.files = std::iter::once("config.echo".to_string())
        .chain(output.files.iter().map(|(n, _)| n.clone()))
        .chain(output.report.plots.iter().map(|p| format!("{}.svg", p.name())))
        .chain(["report.json".to_string(), "timing.json".to_string()])
        .collect();
    for (name, text) in &output.files {
        fs::write(dir.join(name), text)?;
    }
    emit_plots(&output.report.plots, &dir)?;
    fs::write(dir.join("report.json"), output.report.to_json())?;
    fs::write(
        dir.join("timing.json"),
        format!("{{\n  \"wall_clock_seconds\": {:.3}\n}}\n", output.report.wall_clock_seconds),
    )?;
    Ok((output.report, dir))
}

/// Run the configured experiment in memory.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let start = Instant::now();
    let mut out = match config.experiment {
        ExperimentKind::PlpSanity => run_plp_sanity(config)?,
        ExperimentKind::Local => run_local_convergence(config)?,
        ExperimentKind::TwoPoint => run_two_point(config)?,
        ExperimentKind::Global => run_global(config)?,
        ExperimentKind::Selfint => run_selfint(config)?,
    };
    out.report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Run and persist.
pub fn run_and_write(config: &ExperimentConfig) -> Result<(ExperimentReport, PathBuf), ExperimentError> {
    let out = run(config)?;
    write_outputs(config, out)
}

/// Re-render the plots recorded in `<dir>/report.json`.
pub fn replot(dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let path = dir.join("report.json");
    let text = fs::read_to_string(&path).map_err(|_| ExperimentError::MissingData(format!("{} not found", path.display())))?;
    let report = ExperimentReport::from_json(&text)?;
    Ok(emit_plots(&report.plots, dir)?)
}

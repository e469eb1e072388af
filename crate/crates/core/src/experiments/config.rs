//! Experiment configuration: TOML files (`schema = 1`) layered over
//! per-experiment defaults, with flag overrides applied the same way.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::hypgeom::{hyp_distance, point_along, HPoint};
use crate::plp::{ArcInterval, ArcPair};
use crate::surface::Surface;

pub const SCHEMA_VERSION: i64 = 1;

/// Directory used when neither the config nor the caller names one.
pub const OUT_DIR_ENV: &str = "GEOTESS_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PlpSanity,
    Local,
    TwoPoint,
    Global,
    Selfint,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::PlpSanity,
        ExperimentKind::Local,
        ExperimentKind::TwoPoint,
        ExperimentKind::Global,
        ExperimentKind::Selfint,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::PlpSanity => "plp-sanity",
            ExperimentKind::Local => "local",
            ExperimentKind::TwoPoint => "two-point",
            ExperimentKind::Global => "global",
            ExperimentKind::Selfint => "selfint",
        }
    }

    fn traces(&self) -> bool {
        !matches!(self, ExperimentKind::PlpSanity)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown experiment {s:?}")))
    }
}

/// All knobs of every experiment; each experiment reads the ones it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: i64,
    pub experiment: ExperimentKind,
    pub label: String,
    pub seed: u64,
    pub replicates: usize,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Line-process intensity.
    pub lambda: f64,
    /// Trace lengths.
    pub lengths: Vec<f64>,
    /// Radius of the rescaled observation disk.
    pub alpha: f64,
    /// Disk center(s) in the Poincaré disk.
    pub center: [f64; 2],
    pub second_center: [f64; 2],
    /// Arc pairs `[[a0, a1], [b0, b1]]` on the observation circle.
    pub pairs: Vec<[[f64; 2]; 2]>,
    /// Require every arc of every pair to be disjoint.
    pub joint: bool,
    /// Number of equal arcs in the full-circle family.
    pub partition: usize,
    /// Half-width `n` of the ergodic line-process window.
    pub window_half: f64,
    /// Extra simulated border around that window.
    pub margin: f64,
    pub ergodic_runs: usize,
    /// Half-width of the large reference window.
    pub reference_half: f64,
    pub reference_runs: usize,
    pub out_dir: PathBuf,
}

fn quarter(k: usize) -> [f64; 2] {
    [k as f64 * FRAC_PI_2, (k + 1) as f64 * FRAC_PI_2]
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("results"), PathBuf::from)
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            schema: SCHEMA_VERSION,
            experiment: kind,
            label: "default".into(),
            seed: 20_241_016,
            replicates: 100,
            workers: 0,
            lambda: 1.0,
            lengths: vec![3000.0],
            alpha: 10.0,
            center: [0.0, 0.0],
            second_center: [0.25, 0.1],
            pairs: vec![[quarter(0), quarter(2)], [quarter(1), quarter(3)], [quarter(0), quarter(1)], [quarter(2), quarter(3)]],
            joint: false,
            partition: 64,
            window_half: 25.0,
            margin: 6.0,
            ergodic_runs: 20,
            reference_half: 250.0,
            reference_runs: 8,
            out_dir: default_out_dir(),
        };
        match kind {
            ExperimentKind::PlpSanity => Self {
                replicates: 100_000,
                alpha: 1.0,
                lengths: Vec::new(),
                pairs: vec![[[0.0, 0.5], [PI, PI + 0.5]], [[1.0, 1.6], [2.2, 2.8]], [[3.9, 4.6], [5.3, 6.0]]],
                joint: true,
                ..base
            },
            ExperimentKind::Local => Self {
                replicates: 2000,
                lengths: vec![500.0, 1500.0, 3000.0],
                ..base
            },
            ExperimentKind::TwoPoint => Self {
                replicates: 2000,
                ..base
            },
            ExperimentKind::Global => Self {
                lengths: vec![300.0, 400.0],
                ..base
            },
            ExperimentKind::Selfint => Self {
                lengths: vec![50.0, 100.0, 200.0, 300.0],
                ..base
            },
        }
    }

    /// Parse a config file; keys it omits keep the experiment's defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let table: toml::Table = text.parse().map_err(|e| ExperimentError::Config(format!("{e}")))?;
        let schema = table
            .get("schema")
            .and_then(toml::Value::as_integer)
            .ok_or_else(|| ExperimentError::Config("missing integer key `schema`".into()))?;
        if schema != SCHEMA_VERSION {
            return Err(ExperimentError::Config(format!(
                "unsupported schema {schema} (expected {SCHEMA_VERSION})"
            )));
        }
        let kind: ExperimentKind = table
            .get("experiment")
            .and_then(toml::Value::as_str)
            .ok_or_else(|| ExperimentError::Config("missing string key `experiment`".into()))?
            .parse()?;
        Self::defaults(kind).with_overrides(table)
    }

    /// Replace the given keys, type-checking the result.
    pub fn with_overrides(&self, overrides: toml::Table) -> Result<Self, ExperimentError> {
        let mut table = toml::Table::try_from(self).map_err(|e| ExperimentError::Config(format!("{e}")))?;
        for (k, v) in overrides {
            table.insert(k, v);
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ExperimentError::Config(e.message().to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Where this run writes its files.
    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(self.experiment.name()).join(&self.label)
    }

    pub fn arc_pairs(&self) -> Result<Vec<ArcPair>, ExperimentError> {
        self.pairs
            .iter()
            .map(|[a, b]| {
                ArcPair::from_angles((a[0], a[1]), (b[0], b[1]), self.alpha)
                    .map_err(|e| ExperimentError::Validation(format!("arc pair {a:?}/{b:?}: {e}")))
            })
            .collect()
    }

    pub fn center_point(&self) -> Result<HPoint, ExperimentError> {
        HPoint::new(self.center[0], self.center[1]).map_err(|e| ExperimentError::Validation(format!("center: {e}")))
    }

    pub fn second_point(&self) -> Result<HPoint, ExperimentError> {
        HPoint::new(self.second_center[0], self.second_center[1])
            .map_err(|e| ExperimentError::Validation(format!("second center: {e}")))
    }

    /// Check every precondition of the configured experiment.
    pub fn validate(&self, surface: &Surface) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Validation(m));
        if self.schema != SCHEMA_VERSION {
            return bad(format!("schema {} (expected {SCHEMA_VERSION})", self.schema));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda = {} must be finite and ≥ 0", self.lambda));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha = {} must be positive", self.alpha));
        }
        if self.label.is_empty() || self.label.contains(['/', '\\']) {
            return bad(format!("label {:?} must be a plain file name", self.label));
        }
        let pairs = self.arc_pairs()?;
        if self.joint {
            let arcs: Vec<&ArcInterval> = pairs.iter().flat_map(|p| [&p.a, &p.b]).collect();
            for i in 0..arcs.len() {
                for j in i + 1..arcs.len() {
                    if arcs[i].overlaps(arcs[j]) {
                        return bad(format!("arcs {i} and {j} of the joint family overlap"));
                    }
                }
            }
        }
        if self.experiment == ExperimentKind::PlpSanity {
            if !(self.window_half > 0.0 && self.margin >= 0.0 && self.reference_half > 0.0) {
                return bad("window sizes must be positive".into());
            }
            if self.partition < 2 {
                return bad("partition needs at least 2 arcs".into());
            }
        }
        if self.experiment.traces() {
            if self.lengths.is_empty() {
                return bad("at least one trace length is required".into());
            }
            if let Some(t) = self.lengths.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
                return bad(format!("trace length {t} must be positive"));
            }
        }
        if matches!(self.experiment, ExperimentKind::Global) {
            if let Some(t) = self.lengths.iter().find(|t| **t > 500.0) {
                return bad(format!("trace length {t} exceeds 500 for full tessellation extraction"));
            }
        }
        if matches!(self.experiment, ExperimentKind::Local | ExperimentKind::TwoPoint) {
            let t_min = self.lengths.iter().copied().fold(f64::INFINITY, f64::min);
            let rho = self.alpha / t_min;
            let mut centers = vec![self.center_point()?];
            if self.experiment == ExperimentKind::TwoPoint {
                centers.push(self.second_point()?);
                let d = hyp_distance(&centers[0], &centers[1]);
                let t_max = self.lengths.iter().copied().fold(0.0, f64::max);
                if d <= 4.0 * self.alpha / t_max {
                    return bad(format!("centers {d:.3e} apart; need more than 4α/T = {:.3e}", 4.0 * self.alpha / t_max));
                }
            }
            for c in &centers {
                let inside = (0..64).all(|i| surface.contains(&point_along(c, i as f64 * PI / 32.0, rho)));
                if !surface.contains(c) || !inside {
                    return bad(format!("disk of radius {rho:.3e} at ({:.4}, {:.4}) leaves the octagon", c.x(), c.y()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_genus2_surface;

    #[test]
    fn defaults_validate() {
        let s = build_genus2_surface().unwrap();
        for k in ExperimentKind::ALL {
            ExperimentConfig::defaults(k).validate(&s).unwrap();
        }
    }

    #[test]
    fn toml_round_trip_and_overlay() {
        let cfg = ExperimentConfig::from_toml_str("schema = 1\nexperiment = \"local\"\nreplicates = 7\nlengths = [100.0]\n").unwrap();
        assert_eq!(cfg.replicates, 7);
        assert_eq!(cfg.lengths, vec![100.0]);
        assert_eq!(cfg.alpha, 10.0);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn bad_configs_rejected() {
        let s = build_genus2_surface().unwrap();
        assert!(ExperimentConfig::from_toml_str("experiment = \"local\"").is_err());
        assert!(ExperimentConfig::from_toml_str("schema = 2\nexperiment = \"local\"").is_err());
        assert!(ExperimentConfig::from_toml_str("schema = 1\nexperiment = \"nope\"").is_err());
        assert!(ExperimentConfig::from_toml_str("schema = 1\nexperiment = \"local\"\nbogus = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("schema = 1\nexperiment = \"local\"\nreplicates = \"many\"").is_err());
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::TwoPoint);
        cfg.second_center = cfg.center;
        assert!(matches!(cfg.validate(&s), Err(ExperimentError::Validation(_))));
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Local);
        cfg.replicates = 0;
        assert!(cfg.validate(&s).is_err());
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Local);
        cfg.center = [0.83, 0.0];
        cfg.lengths = vec![20.0];
        assert!(cfg.validate(&s).is_err());
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::PlpSanity);
        cfg.pairs = vec![[[0.0, 1.0], [2.0, 3.0]], [[0.5, 1.5], [4.0, 5.0]]];
        assert!(cfg.validate(&s).is_err());
    }
}

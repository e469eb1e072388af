use std::collections::BTreeMap;

use geotess::experiments::{replot, run, run_and_write, ExperimentConfig, ExperimentError, ExperimentKind, ExperimentReport};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(kind);
    match kind {
        ExperimentKind::PlpSanity => {
            cfg.replicates = 600;
            cfg.ergodic_runs = 2;
            cfg.window_half = 8.0;
            cfg.reference_half = 20.0;
            cfg.reference_runs = 1;
        }
        ExperimentKind::Global | ExperimentKind::Selfint => {
            cfg.replicates = 3;
            cfg.lengths = vec![60.0];
        }
        ExperimentKind::Local | ExperimentKind::TwoPoint => {
            cfg.replicates = 1;
            cfg.lengths = vec![200.0];
        }
    }
    cfg
}

#[test]
fn zero_intensity_is_a_degenerate_pass() {
    let mut cfg = small(ExperimentKind::PlpSanity);
    cfg.lambda = 0.0;
    let out = run(&cfg).unwrap();
    let raw = &out.files.iter().find(|(n, _)| n == "raw.csv").unwrap().1;
    for line in raw.lines().skip(1) {
        assert!(line.split(',').skip(1).all(|c| c == "0"), "{line}");
    }
    assert!(out.report.passed, "{}", out.report.summary());
}

#[test]
fn single_replicate_smoke_runs() {
    for kind in ExperimentKind::ALL {
        let out = run(&small(kind)).unwrap_or_else(|e| panic!("{kind}: {e}"));
        assert!(!out.report.metrics.is_empty());
        let text = out.report.to_json();
        let back = ExperimentReport::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert!(back.metrics.iter().all(|m| !m.rule.is_empty()));
    }
}

#[test]
fn coincident_centers_rejected() {
    let mut cfg = small(ExperimentKind::TwoPoint);
    cfg.second_center = cfg.center;
    assert!(matches!(run(&cfg), Err(ExperimentError::Validation(_))));
}

#[test]
fn long_global_traces_rejected() {
    let mut cfg = small(ExperimentKind::Global);
    cfg.lengths = vec![600.0];
    assert!(matches!(run(&cfg), Err(ExperimentError::Validation(_))));
}

#[test]
fn outputs_and_replot() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(ExperimentKind::Local);
    cfg.out_dir = dir.path().to_path_buf();
    cfg.label = "smoke".into();
    let (report, run_dir) = run_and_write(&cfg).unwrap();
    assert_eq!(run_dir, dir.path().join("local").join("smoke"));
    for f in &report.files {
        assert!(run_dir.join(f).is_file(), "{f} missing");
    }
    let svg = run_dir.join("tv_trend.svg");
    let before = std::fs::read(&svg).unwrap();
    std::fs::remove_file(&svg).unwrap();
    replot(&run_dir).unwrap();
    assert_eq!(std::fs::read(&svg).unwrap(), before);
    let echoed = std::fs::read_to_string(run_dir.join("config.echo")).unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&echoed).unwrap(), cfg);
}

#[test]
fn replot_without_report_is_missing_data() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(replot(dir.path()), Err(ExperimentError::MissingData(_))));
}

/// Metrics whose verdict depends on the master seed at default sizes:
/// Monte Carlo error or finite-length bias is comparable to the tolerance.
const SEED_SENSITIVE: &[&str] = &[
    "face density",
    "vertex density",
    "mean directed TV decreasing",
    "|corr(N, N')|",
    "scaled side-length chi-square",
    "crossing-angle chi-square",
];

#[test]
fn verdicts_stable_across_master_seeds() {
    for kind in ExperimentKind::ALL {
        let mut verdicts: BTreeMap<String, Vec<bool>> = BTreeMap::new();
        for seed in 1..=5 {
            let mut cfg = ExperimentConfig::defaults(kind);
            cfg.seed = seed;
            for m in run(&cfg).unwrap().report.metrics {
                verdicts.entry(m.name).or_default().push(m.passed);
            }
        }
        for (name, v) in &verdicts {
            let stable = v.iter().all(|&p| p == v[0]);
            if !stable {
                println!("{kind}: {name} varies across seeds: {v:?}");
            }
            assert!(
                stable || SEED_SENSITIVE.iter().any(|p| name.starts_with(p)),
                "{kind}: verdict of {name:?} varies across seeds: {v:?}"
            );
        }
    }
}

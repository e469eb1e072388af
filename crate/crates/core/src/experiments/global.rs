//! Global statistics of the tessellation cut by one long geodesic, and the
//! large-window line-process reference it is compared with.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::plp_sanity::arrangement_with_retry;
use super::{
    run_replicates, sub_seed, ExperimentConfig, ExperimentError, ExperimentReport, Metric, Provenance, RunOutput,
};
use crate::plot::{PlotData, Series};
use crate::plp::{sample_plp, Window};
use crate::stats::{chi_square_gof, chi_square_two_sample, mean_and_se, DiscreteDistribution, Histogram};
use crate::surface::{build_genus2_surface, Surface};
use crate::tessellation::census::{angle_bins, side_length_bins};
use crate::tessellation::{surface_map_from_trace, weighted_census, PolygonStats, WeightedCensus};
use crate::tracer::{self_intersections, trace_geodesic};

const REFERENCE_TAG: u64 = 3;
/// Vertex pairs closer than this are logged.
const CLOSE_VERTEX_TOL: f64 = 1e-7;

/// Pooled line-process statistics from large square windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlpReference {
    pub half: f64,
    pub runs: Vec<WeightedCensus>,
    pub census: WeightedCensus,
    /// Lengths of edges with both ends at crossings, multiplied by `side_scale`.
    pub sides: Histogram,
    pub side_scale: f64,
}

/// Unit-intensity line process in `[−(half+margin), half+margin]²`, observed
/// in `[−half, half]²`, over `runs` independent windows.
pub fn plp_reference(
    seed: u64,
    half: f64,
    margin: f64,
    runs: usize,
    workers: usize,
    side_scale: f64,
) -> Result<PlpReference, ExperimentError> {
    let outer = Window::Square { half: half + margin };
    let inner = Window::Square { half };
    let results = run_replicates(runs.max(1), seed, workers, |i, rng| {
        let sample = sample_plp(1.0, outer, rng);
        let (arr, _) = arrangement_with_retry(sample, outer, rng)
            .map_err(|source| ExperimentError::Tessellation { replicate: i, source })?;
        let mut h = side_length_bins();
        h.extend(arr.interior_edge_lengths(&inner).into_iter().map(|l| l * side_scale));
        Ok::<_, ExperimentError>((weighted_census(&arr, half), h))
    })?;
    let mut out: Vec<WeightedCensus> = Vec::new();
    let mut sides = side_length_bins();
    for r in results {
        let (w, h) = r?;
        sides.merge(&h);
        out.push(w);
    }
    let mut census = out[0].clone();
    for w in &out[1..] {
        census.merge(w);
    }
    Ok(PlpReference {
        half,
        runs: out,
        census,
        sides,
        side_scale,
    })
}

/// Per-trace outcome for one length.
struct TraceStats {
    v: usize,
    e: usize,
    f: usize,
    euler: Option<i64>,
    tangential: usize,
    min_separation: f64,
    close_pairs: usize,
    map_error: Option<String>,
    polygons: Option<PolygonStats>,
    /// Edges between two self-intersections, multiplied by `T`.
    edges: Vec<f64>,
    angles: Vec<f64>,
}

fn trace_stats(surface: &Surface, start: crate::UnitTangent, t: f64, replicate: u64, census: bool) -> Result<TraceStats, ExperimentError> {
    let trace = trace_geodesic(surface, start, t).map_err(|source| ExperimentError::Trace { replicate, source })?;
    let inters = self_intersections(&trace);
    let tangential = inters.tangential_count();
    let min_separation = inters.min_separation();
    let close_pairs = inters.close_pairs(CLOSE_VERTEX_TOL);
    let angles = inters.vertices.iter().map(|c| c.angle.rem_euclid(PI)).collect();
    let mut edges = Vec::new();
    let (v, e, f, euler, map_error, polygons) = match surface_map_from_trace(&trace, &inters) {
        Ok(m) => {
            let poly = census.then(|| PolygonStats::from_surface_map(&m, t));
            if census {
                edges = m.interior_edge_lengths().into_iter().map(|l| l * t).collect();
            }
            (m.vertices, m.edges, m.face_total, Some(m.euler()), None, poly)
        }
        Err(err) => (inters.len(), 0, 0, None, Some(err.to_string()), None),
    };
    Ok(TraceStats {
        v,
        e,
        f,
        euler,
        tangential,
        min_separation,
        close_pairs,
        map_error,
        polygons,
        edges,
        angles,
    })
}

fn trace_all(config: &ExperimentConfig, surface: &Surface, census: bool) -> Result<Vec<Vec<TraceStats>>, ExperimentError> {
    let rows = run_replicates(config.replicates, config.seed, config.workers, |i, rng| {
        let start = surface.sample_liouville(rng);
        config.lengths.iter().map(|&t| trace_stats(surface, start, t, i, census)).collect::<Result<Vec<_>, _>>()
    })?;
    rows.into_iter().collect()
}

/// Probabilities of the angle bins under the crossing-angle density `sin θ / 2`.
fn crossing_angle_reference(h: &Histogram) -> DiscreteDistribution {
    DiscreteDistribution {
        probs: h.edges.windows(2).map(|w| (w[0].cos() - w[1].cos()) / 2.0).collect(),
        tail: 0.0,
    }
}

fn normalized(h: &Histogram) -> Vec<f64> {
    let n = h.total().max(1) as f64;
    h.counts.iter().map(|&c| c as f64 / n).collect()
}

/// Checks shared by the global and density sweeps; returns per-length v/T² means.
fn density_section(
    config: &ExperimentConfig,
    surface: &Surface,
    rows: &[Vec<TraceStats>],
    report: &mut ExperimentReport,
    raw: &mut String,
    graded: &dyn Fn(usize) -> bool,
) -> Vec<f64> {
    let kappa = surface.kappa;
    let mut v_means = Vec::new();
    raw.push_str("replicate,length,v,e,f,euler,tangential,min_separation,close_pairs,map_error\n");
    for (j, &t) in config.lengths.iter().enumerate() {
        let col: Vec<&TraceStats> = rows.iter().map(|r| &r[j]).collect();
        for (i, s) in col.iter().enumerate() {
            let _ = writeln!(
                raw,
                "{i},{t},{},{},{},{},{},{:e},{},{}",
                s.v,
                s.e,
                s.f,
                s.euler.map_or("NA".into(), |x| x.to_string()),
                s.tangential,
                s.min_separation,
                s.close_pairs,
                s.map_error.as_deref().unwrap_or("")
            );
        }
        let t2 = t * t;
        let per = |f: &dyn Fn(&TraceStats) -> f64| mean_and_se(&col.iter().map(|s| f(s)).collect::<Vec<_>>());
        let (v, v_se) = per(&|s| s.v as f64 / t2);
        v_means.push(v);
        let grade = graded(j);
        let rel = |name: &str, est: f64, se: f64, reference: f64| {
            if grade {
                Metric::relative(name, est, Some(se), reference, 0.10, Provenance::Formula)
            } else {
                Metric::info(name, est, Some(se))
            }
        };
        report.push(rel(&format!("v/T^2 at T={t}"), v, v_se, kappa / PI));
        let mapped: Vec<&&TraceStats> = col.iter().filter(|s| s.euler.is_some()).collect();
        if !mapped.is_empty() {
            let (e, e_se) = mean_and_se(&mapped.iter().map(|s| s.e as f64 / t2).collect::<Vec<_>>());
            let (f, f_se) = mean_and_se(&mapped.iter().map(|s| s.f as f64 / t2).collect::<Vec<_>>());
            report.push(rel(&format!("e/T^2 at T={t}"), e, e_se, 2.0 * kappa / PI));
            report.push(rel(&format!("f/T^2 at T={t}"), f, f_se, kappa / PI));
        }
        let expected_chi = 2 - 2 * i64::from(surface.octagon.genus);
        let euler_bad = col.iter().filter(|s| s.euler != Some(expected_chi)).count();
        let euler_name = format!("map Euler characteristic {expected_chi} at T={t}");
        report.push(if grade {
            Metric::holds(&euler_name, euler_bad, Provenance::Formula)
        } else {
            Metric::info(&format!("{euler_name} (violations)"), euler_bad as f64, None)
        });
        let edge_bad = col
            .iter()
            .filter(|s| s.euler.is_none() || (s.e as i64 - 2 * s.v as i64).abs() > 2)
            .count();
        report.push(Metric::holds(&format!("|e - 2v| <= 2 at T={t}"), edge_bad, Provenance::Trivial));
        let diag_bad = col.iter().filter(|s| s.tangential > 0 || s.map_error.is_some()).count();
        report.push(Metric::holds(&format!("no tangential or triple points at T={t}"), diag_bad, Provenance::Formula));
        let min_sep = col.iter().map(|s| s.min_separation).fold(f64::INFINITY, f64::min);
        report.push(Metric::info(&format!("smallest vertex separation at T={t}"), min_sep, None));
        let close: usize = col.iter().map(|s| s.close_pairs).sum();
        report.push(Metric::info(&format!("vertex pairs closer than {CLOSE_VERTEX_TOL:e} at T={t}"), close as f64, None));
    }
    v_means
}

pub fn run_selfint(config: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let surface = build_genus2_surface()?;
    config.validate(&surface)?;
    let rows = trace_all(config, &surface, false)?;
    let mut report = ExperimentReport::new(config);
    let mut raw = String::new();
    let t_max = config.lengths.iter().copied().fold(0.0, f64::max);
    let v = density_section(config, &surface, &rows, &mut report, &mut raw, &|j| config.lengths[j] == t_max);
    report.plots.push(PlotData::Trend {
        name: "density_trend".into(),
        title: "self-intersections per squared length".into(),
        x: config.lengths.clone(),
        series: vec![
            Series { label: "v/T^2".into(), y: v },
            Series {
                label: "kappa/pi".into(),
                y: vec![surface.kappa / PI; config.lengths.len()],
            },
        ],
    });
    Ok(RunOutput {
        report,
        files: vec![("raw.csv".into(), raw)],
    })
}

pub fn run_global(config: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let surface = build_genus2_surface()?;
    config.validate(&surface)?;
    let rows = trace_all(config, &surface, true)?;
    let mut report = ExperimentReport::new(config);
    let mut raw = String::new();
    density_section(config, &surface, &rows, &mut report, &mut raw, &|_| true);

    let reference = plp_reference(
        sub_seed(config.seed, REFERENCE_TAG),
        config.reference_half,
        config.margin,
        config.reference_runs,
        config.workers,
        1.0 / surface.kappa,
    )?;
    let phi_ref: Vec<f64> = (0..=8).map(|k| reference.census.k_fraction(k)).collect();
    report.push(Metric::info("reference triangle fraction", phi_ref[3], None));

    let mut polygons_csv = String::from("length,k,count,fraction,reference\n");
    let mut sides_csv = String::from("length,bin_lo,bin_hi,surface,reference\n");
    for (j, &t) in config.lengths.iter().enumerate() {
        let mut k_counts: Vec<usize> = Vec::new();
        let mut sides = side_length_bins();
        let mut face_angles = angle_bins();
        let mut crossing_angles = angle_bins();
        for row in rows.iter() {
            let s = &row[j];
            crossing_angles.extend(s.angles.iter().copied());
            sides.extend(s.edges.iter().copied());
            if let Some(p) = &s.polygons {
                if k_counts.len() < p.k_counts.len() {
                    k_counts.resize(p.k_counts.len(), 0);
                }
                for (a, b) in k_counts.iter_mut().zip(&p.k_counts) {
                    *a += b;
                }
                face_angles.merge(&p.angle_histogram());
            }
        }
        let faces: usize = k_counts.iter().sum();
        let frac = |k: usize| k_counts.get(k).copied().unwrap_or(0) as f64 / faces.max(1) as f64;
        for k in 3..k_counts.len().max(9) {
            let _ = writeln!(
                polygons_csv,
                "{t},{k},{},{},{}",
                k_counts.get(k).copied().unwrap_or(0),
                frac(k),
                phi_ref.get(k).copied().unwrap_or_else(|| reference.census.k_fraction(k))
            );
        }
        report.push(Metric::absolute(&format!("triangle fraction at T={t}"), frac(3), None, phi_ref[3], 0.03, Provenance::DerivedOracle));
        for (k, r) in phi_ref.iter().enumerate().take(7).skip(4) {
            report.push(Metric::info(&format!("{k}-gon fraction at T={t} (reference {r:.4})"), frac(k), None));
        }
        match chi_square_two_sample(&sides.counts, &reference.sides.counts, 1e-3) {
            Ok(r) => report.push(Metric::above(
                &format!("scaled side-length chi-square p-value at T={t}"),
                r.p_value.unwrap_or(0.0),
                1e-3,
                Provenance::DerivedOracle,
            )),
            Err(e) => report.push(Metric::info(&format!("side-length test skipped at T={t}: {e}"), f64::NAN, None)),
        }
        let lengths: Vec<f64> = rows.iter().flat_map(|r| r[j].edges.iter().copied()).collect();
        let (mean_edge, mean_edge_se) = mean_and_se(&lengths);
        report.push(Metric::info(
            &format!("mean scaled edge length at T={t} (limit {:.4})", PI / (2.0 * surface.kappa)),
            mean_edge,
            Some(mean_edge_se),
        ));
        match chi_square_gof(&crossing_angles.counts, &crossing_angle_reference(&crossing_angles), 5.0, 1e-3) {
            Ok(r) => report.push(Metric::above(
                &format!("crossing-angle chi-square p-value at T={t}"),
                r.p_value.unwrap_or(0.0),
                1e-3,
                Provenance::Formula,
            )),
            Err(e) => report.push(Metric::info(&format!("crossing-angle test skipped at T={t}: {e}"), f64::NAN, None)),
        }
        let r_norm = normalized(&reference.sides);
        let s_norm = normalized(&sides);
        for (b, w) in sides.edges.windows(2).enumerate() {
            let _ = writeln!(sides_csv, "{t},{},{},{},{}", w[0], w[1], sides.counts[b], reference.sides.counts[b]);
        }
        report.plots.push(PlotData::Histogram {
            name: format!("sides_T{t}"),
            title: format!("scaled side lengths at T={t} (bins of 2.5)"),
            observed: s_norm,
            reference: Some(r_norm),
        });
        report.plots.push(PlotData::Histogram {
            name: format!("angles_T{t}"),
            title: format!("face angles at T={t} (bins of pi/36)"),
            observed: normalized(&face_angles),
            reference: None,
        });
    }
    Ok(RunOutput {
        report,
        files: vec![
            ("raw.csv".into(), raw),
            ("polygons.csv".into(), polygons_csv),
            ("sides.csv".into(), sides_csv),
        ],
    })
}

//! The Euclidean battery: hitting laws, intensities, invariance, crossing
//! counts for arc pairs, vertex and face densities, k-gon fractions and the
//! exact small-numbers comparisons.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    plp_reference, poisson_plot, run_replicates, sub_seed, tv_to_poisson, ExperimentConfig, ExperimentError,
    ExperimentReport, Metric, Provenance, RunOutput,
};
use crate::plot::PlotData;
use crate::plp::{
    apply_isometry_to_sample, beta_integral, chords_from_lines, crossing_counts, partition_pairs, sample_plp, Line,
    LineSample, PlaneMotion, Window,
};
use crate::stats::{
    bernoulli_sum_distribution, chi_square_gof, independence_test, l1_distance, mean_and_se, multinomial_occupancy_distribution,
    pearson, poisson_truncated, tabulate, JointDistribution,
};
use crate::tessellation::{build_arrangement, segments_from_lines, weighted_census, TessError, WeightedCensus};

const ERGODIC_TAG: u64 = 1;
const REFERENCE_TAG: u64 = 2;
/// Hitting-law disk radius.
const HIT_RADIUS: f64 = 1.0;
/// Half-length of the x-axis segment used for the intensity check.
const AXIS_HALF: f64 = 4.0;
/// Test segment `[0, SEG_LEN] × {0}` for the invariance checks.
const SEG_LEN: f64 = 2.0;
const ROTATION: f64 = 1.0;
const TRANSLATION: (f64, f64) = (1.0, 0.5);
/// Retries with jittered offsets after a degenerate arrangement.
const JITTER_RETRIES: usize = 3;
/// Offset jitter relative to the window's bounding radius.
const JITTER: f64 = 1e-6;

struct Row {
    disk_hits: u32,
    axis: u32,
    square_vertices: u32,
    segment_hits: u32,
    rotated_hits: u32,
    translated_hits: u32,
    pairs: Vec<u32>,
}

fn segment_hits(sample: &LineSample) -> u32 {
    let seg = Line { r: 0.0, theta: PI / 2.0 };
    sample
        .lines
        .iter()
        .filter_map(|l| l.intersection(&seg))
        .filter(|p| (0.0..=SEG_LEN).contains(&p.re))
        .count() as u32
}

/// Build the arrangement of a line sample, jittering offsets on degeneracy.
pub(super) fn arrangement_with_retry(
    mut sample: LineSample,
    window: Window,
    rng: &mut ChaCha8Rng,
) -> Result<(crate::tessellation::Arrangement, usize), TessError> {
    let mut retries = 0;
    let jitter = JITTER * window.bounding_radius().max(1.0);
    loop {
        match build_arrangement(&segments_from_lines(&sample, &window), window) {
            Ok(a) => return Ok((a, retries)),
            Err(TessError::Degenerate(_)) if retries < JITTER_RETRIES => {
                retries += 1;
                for l in &mut sample.lines {
                    l.r += jitter * (2.0 * rng.random::<f64>() - 1.0);
                }
            }
            Err(e) => return Err(e),
        }
    }
}

fn corr_or_zero(a: &[u32], b: &[u32]) -> f64 {
    let fa: Vec<f64> = a.iter().map(|&x| x as f64).collect();
    let fb: Vec<f64> = b.iter().map(|&x| x as f64).collect();
    let r = pearson(&fa, &fb);
    if r.is_finite() { r } else { 0.0 }
}

pub fn run_plp_sanity(config: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let surface = crate::surface::build_genus2_surface()?;
    config.validate(&surface)?;
    let lambda = config.lambda;
    let pairs = config.arc_pairs()?;
    let betas: Vec<f64> = pairs.iter().map(beta_integral).collect();
    let big = Window::Disk {
        radius: (config.alpha + 2.0).max(AXIS_HALF + 1.0),
    };
    let unit_square = Window::Square { half: 0.5 };

    let rows = run_replicates(config.replicates, config.seed, config.workers, |_, rng| {
        let sample = sample_plp(lambda, big, rng);
        let chords = chords_from_lines(&sample, config.alpha);
        let counts = crossing_counts(&chords, &pairs);
        let rotated = apply_isometry_to_sample(&sample, PlaneMotion::Rotation(ROTATION));
        let translated = apply_isometry_to_sample(&sample, PlaneMotion::Translation(TRANSLATION.0, TRANSLATION.1));
        Row {
            disk_hits: sample.lines.iter().filter(|l| l.r.abs() < HIT_RADIUS).count() as u32,
            axis: sample.axis_crossings().iter().filter(|x| x.abs() <= AXIS_HALF).count() as u32,
            square_vertices: sample.vertices_in(&unit_square) as u32,
            segment_hits: segment_hits(&sample),
            rotated_hits: segment_hits(&rotated),
            translated_hits: segment_hits(&translated),
            pairs: counts.counts.iter().map(|c| c.undirected).collect(),
        }
    })?;

    let mut report = ExperimentReport::new(config);
    let col = |f: &dyn Fn(&Row) -> u32| rows.iter().map(f).collect::<Vec<u32>>();

    let hits = col(&|r| r.disk_hits);
    report.push(Metric::below("hitting-law TV to Poisson(2λR)", tv_to_poisson(&hits, 2.0 * lambda * HIT_RADIUS), 0.02, Provenance::Formula));
    match chi_square_gof(&tabulate(&hits), &poisson_truncated(2.0 * lambda * HIT_RADIUS), 5.0, 1e-3) {
        Ok(t) => report.push(Metric::above("hitting-law chi-square p-value", t.p_value.unwrap_or(0.0), 1e-3, Provenance::Formula)),
        Err(_) => report.push(Metric::info("hitting-law chi-square p-value (degenerate)", 1.0, None)),
    }

    let axis: Vec<f64> = rows.iter().map(|r| r.axis as f64 / (2.0 * AXIS_HALF)).collect();
    let (ai, ai_se) = mean_and_se(&axis);
    report.push(Metric::relative("x-axis crossing intensity", ai, Some(ai_se), 2.0 * lambda / PI, 0.02, Provenance::Formula));

    let seg_mean = 2.0 * lambda * SEG_LEN / PI;
    for (name, v) in [
        ("segment hits TV to Poisson(2λℓ/π)", col(&|r| r.segment_hits)),
        ("rotated segment hits TV", col(&|r| r.rotated_hits)),
        ("translated segment hits TV", col(&|r| r.translated_hits)),
    ] {
        report.push(Metric::below(name, tv_to_poisson(&v, seg_mean), 0.02, Provenance::Formula));
    }

    let pair_cols: Vec<Vec<u32>> = (0..pairs.len()).map(|i| rows.iter().map(|r| r.pairs[i]).collect()).collect();
    for (i, (v, beta)) in pair_cols.iter().zip(&betas).enumerate() {
        report.push(Metric::info(&format!("beta for pair {i}"), *beta, None));
        report.push(Metric::below(&format!("pair {i} count TV to Poisson(λβ)"), tv_to_poisson(v, lambda * beta), 0.02, Provenance::Formula));
    }
    for i in 0..pair_cols.len() {
        for j in i + 1..pair_cols.len() {
            let r = corr_or_zero(&pair_cols[i], &pair_cols[j]);
            report.push(Metric::below(&format!("|corr| of pair counts {i},{j}"), r.abs(), 0.02, Provenance::Formula));
            if lambda > 0.0 {
                let joint: Vec<(u32, u32)> = pair_cols[i].iter().copied().zip(pair_cols[j].iter().copied()).collect();
                if let Ok(t) = independence_test(&joint, 1e-3) {
                    report.push(Metric::info(&format!("contingency p-value for pairs {i},{j}"), t.contingency.p_value.unwrap_or(f64::NAN), None));
                }
            }
        }
    }

    let verts: Vec<f64> = rows.iter().map(|r| r.square_vertices as f64).collect();
    let (ev, ev_se) = mean_and_se(&verts);
    report.push(Metric::relative("mean vertices in unit square", ev, Some(ev_se), lambda * lambda / PI, 0.03, Provenance::Formula));

    let part_sum: f64 = partition_pairs(config.partition, config.alpha).iter().map(beta_integral).sum();
    report.push(Metric::in_range(
        &format!("sum of beta over the {}-arc partition", config.partition),
        part_sum,
        2.0 * config.alpha * 0.99,
        2.0 * config.alpha,
        Provenance::Formula,
    ));
    if let Some(p) = pairs.first() {
        let c = 2.5;
        let gap = (beta_integral(&p.scaled(c)) - c * beta_integral(p)).abs();
        report.push(Metric::below("beta scaling defect", gap, 1e-6, Provenance::Formula));
    }

    small_numbers(&mut report);

    let mut ergodic_csv = String::from("run,face_weight,vertices,boundary_weight,window_faces,euler_defect,retries,k3_weight,k4_weight,k_weight_total\n");
    let mut reference_csv = String::from("run,face_weight,vertices,k3_weight,k4_weight,k_weight_total\n");
    let mut plots = vec![
        poisson_plot("hitting_law", "lines hitting the unit disk", &hits, 2.0 * lambda * HIT_RADIUS),
    ];
    if let (Some(v), Some(b)) = (pair_cols.first(), betas.first()) {
        plots.push(poisson_plot("pair0_counts", "crossings of arc pair 0", v, lambda * b));
    }
    if lambda > 0.0 {
        ergodic(config, &mut report, &mut ergodic_csv, &mut reference_csv, &mut plots)?;
    } else {
        report.push(Metric::holds("ergodic checks skipped for λ = 0", 0, Provenance::Trivial));
    }
    report.plots = plots;

    let mut raw = String::from("replicate,disk_hits,axis_crossings,square_vertices,segment_hits,rotated_hits,translated_hits");
    for i in 0..pairs.len() {
        let _ = write!(raw, ",pair{i}");
    }
    raw.push('\n');
    for (i, r) in rows.iter().enumerate() {
        let _ = write!(
            raw,
            "{i},{},{},{},{},{},{}",
            r.disk_hits, r.axis, r.square_vertices, r.segment_hits, r.rotated_hits, r.translated_hits
        );
        for c in &r.pairs {
            let _ = write!(raw, ",{c}");
        }
        raw.push('\n');
    }
    Ok(RunOutput {
        report,
        files: vec![
            ("raw.csv".into(), raw),
            ("ergodic.csv".into(), ergodic_csv),
            ("reference.csv".into(), reference_csv),
        ],
    })
}

/// Exact Bernoulli/multinomial laws against their Poisson limits.
fn small_numbers(report: &mut ExperimentReport) {
    for beta in [1.0f64, 2.0] {
        let mut gaps = Vec::new();
        for pmax in [0.1, 0.01, 0.001] {
            let trials = (beta / pmax).round() as usize;
            let d = bernoulli_sum_distribution(&vec![beta / trials as f64; trials]).expect("valid probabilities");
            gaps.push(l1_distance(&d, &poisson_truncated(beta)));
        }
        for (g, pmax) in gaps.iter().zip(["0.1", "0.01", "0.001"]) {
            report.push(Metric::info(&format!("Bernoulli-sum l1 gap, beta={beta}, max p={pmax}"), *g, None));
        }
        let increases = gaps.windows(2).filter(|w| w[1] > w[0]).count();
        report.push(Metric::holds(&format!("l1 gap non-increasing in max p (beta={beta})"), increases, Provenance::DerivedOracle));
    }
    let rows = vec![vec![1.0 - 0.008, 0.004, 0.004]; 500];
    match multinomial_occupancy_distribution(&rows, 1 << 20) {
        Ok(joint) => {
            let prod = JointDistribution::product_poisson(&[2.0, 2.0], &joint.dims);
            report.push(Metric::below("two-category occupancy l1 gap at max p=0.004", joint.l1_distance(&prod), 0.02, Provenance::DerivedOracle));
        }
        Err(e) => report.push(Metric {
            name: format!("two-category occupancy failed: {e}"),
            estimate: f64::NAN,
            std_error: None,
            reference: None,
            provenance: Provenance::DerivedOracle,
            rule: "computed".into(),
            passed: false,
        }),
    }
}

/// Face and vertex densities, Euler identity and k-gon fractions.
fn ergodic(
    config: &ExperimentConfig,
    report: &mut ExperimentReport,
    csv: &mut String,
    reference_csv: &mut String,
    plots: &mut Vec<PlotData>,
) -> Result<(), ExperimentError> {
    let n = config.window_half;
    let outer = Window::Square { half: n + config.margin };
    let inner = Window::Square { half: n };
    let runs = run_replicates(config.ergodic_runs, sub_seed(config.seed, ERGODIC_TAG), config.workers, |i, rng| {
        let sample = sample_plp(config.lambda, outer, rng);
        let (arr, retries) = arrangement_with_retry(sample.clone(), outer, rng).map_err(|source| ExperimentError::Tessellation { replicate: i, source })?;
        let w = weighted_census(&arr, n);
        let (plain, _) = arrangement_with_retry(sample.clone(), inner, rng).map_err(|source| ExperimentError::Tessellation { replicate: i, source })?;
        let snapshot: Vec<[f64; 4]> = segments_from_lines(&sample, &inner).iter().map(|s| [s.a.re, s.a.im, s.b.re, s.b.im]).collect();
        Ok::<_, ExperimentError>((w, arr.euler_defect(), plain.euler_defect(), plain.face_count() - 1, retries, snapshot))
    })?;
    let area = 4.0 * n * n;
    let mut total: Option<WeightedCensus> = None;
    let mut defects = 0;
    let mut face_dens = Vec::new();
    let mut vert_dens = Vec::new();
    let mut window_faces = Vec::new();
    for (i, r) in runs.into_iter().enumerate() {
        let (w, d1, d2, faces, retries, snapshot) = r?;
        defects += (d1 != 0) as usize + (d2 != 0) as usize;
        let kw = |k: usize| w.k_weight.get(k).copied().unwrap_or(0.0);
        let _ = writeln!(
            csv,
            "{i},{},{},{},{faces},{},{retries},{},{},{}",
            w.face_weight,
            w.vertices,
            w.boundary_weight,
            d1 + d2,
            kw(3),
            kw(4),
            w.k_weight.iter().sum::<f64>()
        );
        face_dens.push(w.face_weight / area);
        vert_dens.push(w.vertices as f64 / area);
        window_faces.push(faces as f64 / area);
        if i == 0 {
            plots.push(PlotData::Arrangement {
                name: "arrangement".into(),
                title: format!("line process in [-{n}, {n}]²"),
                half: n,
                chords: snapshot,
            });
        }
        match total.as_mut() {
            None => total = Some(w),
            Some(t) => t.merge(&w),
        }
    }
    let l2 = config.lambda * config.lambda / PI;
    let (f, f_se) = mean_and_se(&face_dens);
    let (v, v_se) = mean_and_se(&vert_dens);
    report.push(Metric::relative("face density F/(2n)^2", f, Some(f_se), l2, 0.05, Provenance::Formula));
    report.push(Metric::relative("vertex density V/(2n)^2", v, Some(v_se), l2, 0.05, Provenance::Formula));
    let (wf, wf_se) = mean_and_se(&window_faces);
    report.push(Metric::info("bounded faces of the window tessellation / (2n)^2", wf, Some(wf_se)));
    report.push(Metric::holds("arrangement Euler identity", defects, Provenance::Trivial));

    let reference = plp_reference(sub_seed(config.seed, REFERENCE_TAG), config.reference_half, config.margin, config.reference_runs, config.workers, 1.0)?;
    for (i, r) in reference.runs.iter().enumerate() {
        let kw = |k: usize| r.k_weight.get(k).copied().unwrap_or(0.0);
        let _ = writeln!(reference_csv, "{i},{},{},{},{},{}", r.face_weight, r.vertices, kw(3), kw(4), r.k_weight.iter().sum::<f64>());
    }
    let total = total.expect("at least one ergodic run");
    let phi3 = total.k_fraction(3);
    let phi3_ref = reference.census.k_fraction(3);
    report.push(Metric::absolute("triangle fraction vs large-window reference", phi3, None, phi3_ref, 0.01, Provenance::DerivedOracle));
    report.push(Metric::absolute("large-window triangle fraction vs 2 - pi^2/6", phi3_ref, None, 2.0 - PI * PI / 6.0, 0.005, Provenance::Formula));
    for k in 4..=6 {
        report.push(Metric::info(&format!("{k}-gon fraction (reference {:.4})", reference.census.k_fraction(k)), total.k_fraction(k), None));
    }
    Ok(())
}

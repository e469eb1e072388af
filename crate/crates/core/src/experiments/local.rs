//! Crossings of shrinking disks by one long geodesic, rescaled to radius α.

use std::fmt::Write as _;

use super::{
    poisson_plot, run_replicates, tv_to_poisson, ExperimentConfig, ExperimentError, ExperimentReport, Metric,
    Provenance, RunOutput,
};
use crate::plot::{PlotData, Series};
use crate::plp::{beta_integral, crossing_counts, partition_pairs, ArcPair};
use crate::stats::{independence_test, mean_and_se};
use crate::surface::build_genus2_surface;
use crate::tracer::{disk_crossings, entry_time_diagnostics, trace_geodesic, DiskProbe};

const TV_BOUND: f64 = 0.05;
const INDEPENDENCE_FLOOR: f64 = 1e-3;

struct LocalRow {
    forward: Vec<u32>,
    backward: Vec<u32>,
    undirected: Vec<u32>,
    family_total: u32,
    chords: u32,
    incomplete: u32,
}

fn arcs_disjoint(p: &ArcPair, q: &ArcPair) -> bool {
    [&p.a, &p.b].iter().all(|x| [&q.a, &q.b].iter().all(|y| !x.overlaps(y)))
}

fn column(rows: &[&LocalRow], f: impl Fn(&LocalRow) -> u32) -> Vec<u32> {
    rows.iter().map(|r| f(r)).collect()
}

pub fn run_local_convergence(config: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let surface = build_genus2_surface()?;
    config.validate(&surface)?;
    let center = config.center_point()?;
    let pairs = config.arc_pairs()?;
    let family = partition_pairs(config.partition, config.alpha);
    let kappa = surface.kappa;
    let betas: Vec<f64> = pairs.iter().map(beta_integral).collect();
    let probes: Vec<DiskProbe> = config.lengths.iter().map(|t| DiskProbe::new(&surface, center, config.alpha / t)).collect();

    let per_replicate = run_replicates(config.replicates, config.seed, config.workers, |i, rng| {
        let start = surface.sample_liouville(rng);
        config
            .lengths
            .iter()
            .zip(&probes)
            .map(|(&t, probe)| {
                let trace = trace_geodesic(&surface, start, t).map_err(|source| ExperimentError::Trace { replicate: i, source })?;
                let rec = disk_crossings(&trace, probe, config.alpha);
                let table = crossing_counts(&rec.chords, &pairs);
                Ok(LocalRow {
                    forward: table.counts.iter().map(|c| c.forward).collect(),
                    backward: table.counts.iter().map(|c| c.backward).collect(),
                    undirected: table.counts.iter().map(|c| c.undirected).collect(),
                    family_total: crossing_counts(&rec.chords, &family).total_undirected(),
                    chords: rec.chords.len() as u32,
                    incomplete: rec.incomplete as u32,
                })
            })
            .collect::<Result<Vec<_>, ExperimentError>>()
    })?;
    let per_replicate: Vec<Vec<LocalRow>> = per_replicate.into_iter().collect::<Result<_, _>>()?;

    let mut report = ExperimentReport::new(config);
    for (p, b) in betas.iter().enumerate() {
        report.push(Metric::info(&format!("beta for pair {p}"), *b, None));
    }
    let family_beta: f64 = family.iter().map(beta_integral).sum();
    report.push(Metric::info(&format!("beta sum over the {}-arc partition", config.partition), family_beta, None));

    let t_max = config.lengths.iter().copied().fold(0.0, f64::max);
    let mut raw = String::from("replicate,length,chords,incomplete,family_total");
    for p in 0..pairs.len() {
        let _ = write!(raw, ",fwd{p},bwd{p}");
    }
    raw.push('\n');
    let mut mean_tv = Vec::new();
    let mut trend_series: Vec<Series> = (0..pairs.len())
        .map(|p| Series {
            label: format!("pair {p}"),
            y: Vec::new(),
        })
        .collect();
    for (j, &t) in config.lengths.iter().enumerate() {
        let rows: Vec<&LocalRow> = per_replicate.iter().map(|r| &r[j]).collect();
        for (i, r) in rows.iter().enumerate() {
            let _ = write!(raw, "{i},{t},{},{},{}", r.chords, r.incomplete, r.family_total);
            for p in 0..pairs.len() {
                let _ = write!(raw, ",{},{}", r.forward[p], r.backward[p]);
            }
            raw.push('\n');
        }
        let graded = t == t_max;
        let mut tvs = Vec::new();
        for (p, beta) in betas.iter().enumerate() {
            let mean = kappa * beta / 2.0;
            let fwd = tv_to_poisson(&column(&rows, |r| r.forward[p]), mean);
            let bwd = tv_to_poisson(&column(&rows, |r| r.backward[p]), mean);
            tvs.push(fwd);
            tvs.push(bwd);
            trend_series[p].y.push(0.5 * (fwd + bwd));
            for (dir, tv) in [("A->B", fwd), ("B->A", bwd)] {
                let name = format!("pair {p} {dir} TV to Poisson(kappa beta/2) at T={t}");
                report.push(if graded {
                    Metric::below(&name, tv, TV_BOUND, Provenance::Formula)
                } else {
                    Metric::info(&name, tv, None)
                });
            }
        }
        mean_tv.push(tvs.iter().sum::<f64>() / tvs.len().max(1) as f64);

        let totals: Vec<f64> = rows.iter().map(|r| r.family_total as f64).collect();
        let (m, se) = mean_and_se(&totals);
        let name = format!("partition-family undirected total at T={t}");
        report.push(if graded {
            Metric::relative(&name, m, Some(se), 2.0 * kappa * config.alpha, 0.05, Provenance::Formula)
        } else {
            Metric::info(&name, m, Some(se))
        });
        let chords: Vec<f64> = rows.iter().map(|r| r.chords as f64).collect();
        let (cm, cse) = mean_and_se(&chords);
        report.push(Metric::info(&format!("complete crossings per trace at T={t}"), cm, Some(cse)));
        let incomplete: usize = rows.iter().map(|r| r.incomplete as usize).sum();
        report.push(Metric::info(&format!("incomplete crossings at T={t}"), incomplete as f64, None));

        if graded {
            for p in 0..pairs.len() {
                for q in p + 1..pairs.len() {
                    if !arcs_disjoint(&pairs[p], &pairs[q]) {
                        continue;
                    }
                    let joint: Vec<(u32, u32)> = rows.iter().map(|r| (r.undirected[p], r.undirected[q])).collect();
                    match independence_test(&joint, INDEPENDENCE_FLOOR) {
                        Ok(ind) => {
                            report.push(Metric::info(&format!("corr of pairs {p},{q} at T={t}"), ind.correlation, Some(ind.correlation_se)));
                            report.push(Metric::above(
                                &format!("independence of pairs {p},{q} at T={t} (contingency p-value)"),
                                ind.contingency.p_value.unwrap_or(0.0),
                                INDEPENDENCE_FLOOR,
                                Provenance::Formula,
                            ));
                        }
                        Err(e) => report.push(Metric::info(&format!("independence of pairs {p},{q} skipped: {e}"), f64::NAN, None)),
                    }
                }
            }
            if let Some(b) = betas.first() {
                report.plots.push(poisson_plot(
                    "pair0_forward",
                    &format!("pair 0 directed crossings at T={t}"),
                    &column(&rows, |r| r.forward[0]),
                    kappa * b / 2.0,
                ));
            }
        }
    }
    let mut sorted: Vec<(f64, f64)> = config.lengths.iter().copied().zip(mean_tv.iter().copied()).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (t, tv) in &sorted {
        report.push(Metric::info(&format!("mean directed TV at T={t}"), *tv, None));
    }
    let increases = sorted.windows(2).filter(|w| w[1].1 > w[0].1).count();
    report.push(Metric::holds("mean directed TV decreasing in T", increases, Provenance::DerivedOracle));
    trend_series.push(Series {
        label: "mean".into(),
        y: mean_tv,
    });
    report.plots.push(PlotData::Trend {
        name: "tv_trend".into(),
        title: "TV distance to the Poisson limit".into(),
        x: config.lengths.clone(),
        series: trend_series,
    });
    Ok(RunOutput {
        report,
        files: vec![("raw.csv".into(), raw)],
    })
}

pub fn run_two_point(config: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let surface = build_genus2_surface()?;
    config.validate(&surface)?;
    let centers = [config.center_point()?, config.second_point()?];
    let kappa = surface.kappa;
    let probes: Vec<[DiskProbe; 2]> = config
        .lengths
        .iter()
        .map(|t| centers.map(|c| DiskProbe::new(&surface, c, config.alpha / t)))
        .collect();

    let rows = run_replicates(config.replicates, config.seed, config.workers, |i, rng| {
        let start = surface.sample_liouville(rng);
        config
            .lengths
            .iter()
            .zip(&probes)
            .map(|(&t, [p1, p2])| {
                let trace = trace_geodesic(&surface, start, t).map_err(|source| ExperimentError::Trace { replicate: i, source })?;
                let n1 = disk_crossings(&trace, p1, config.alpha).chords.len() as u32;
                let n2 = disk_crossings(&trace, p2, config.alpha).chords.len() as u32;
                let diag = entry_time_diagnostics(&trace, p1, p2);
                Ok((n1, n2, diag.double_hits as u32))
            })
            .collect::<Result<Vec<_>, ExperimentError>>()
    })?;
    let rows: Vec<Vec<(u32, u32, u32)>> = rows.into_iter().collect::<Result<_, _>>()?;

    let mut report = ExperimentReport::new(config);
    let mean = 2.0 * kappa * config.alpha;
    let mut raw = String::from("replicate,length,n,n_prime,double_hits\n");
    for (j, &t) in config.lengths.iter().enumerate() {
        let col: Vec<(u32, u32, u32)> = rows.iter().map(|r| r[j]).collect();
        for (i, (a, b, d)) in col.iter().enumerate() {
            let _ = writeln!(raw, "{i},{t},{a},{b},{d}");
        }
        let n: Vec<u32> = col.iter().map(|c| c.0).collect();
        let n2: Vec<u32> = col.iter().map(|c| c.1).collect();
        report.push(Metric::below(&format!("N TV to Poisson(2 kappa alpha) at T={t}"), tv_to_poisson(&n, mean), TV_BOUND, Provenance::Formula));
        report.push(Metric::below(&format!("N' TV to Poisson(2 kappa alpha) at T={t}"), tv_to_poisson(&n2, mean), TV_BOUND, Provenance::Formula));
        let pairs: Vec<(u32, u32)> = col.iter().map(|c| (c.0, c.1)).collect();
        match independence_test(&pairs, INDEPENDENCE_FLOOR) {
            Ok(ind) => {
                report.push(Metric {
                    std_error: Some(ind.correlation_se),
                    ..Metric::below(&format!("|corr(N, N')| at T={t}"), ind.correlation.abs(), 0.05, Provenance::DerivedOracle)
                });
                report.push(Metric::info(
                    &format!("contingency p-value for (N, N') at T={t}"),
                    ind.contingency.p_value.unwrap_or(f64::NAN),
                    None,
                ));
            }
            Err(e) => {
                let a: Vec<f64> = n.iter().map(|&x| x as f64).collect();
                let b: Vec<f64> = n2.iter().map(|&x| x as f64).collect();
                let r = crate::stats::pearson(&a, &b);
                report.push(Metric::info(&format!("corr(N, N') at T={t} ({e})"), r, None));
            }
        }
        let hits: Vec<f64> = col.iter().map(|c| c.2 as f64).collect();
        let (h, h_se) = mean_and_se(&hits);
        report.push(Metric {
            std_error: Some(h_se).filter(|s| s.is_finite()),
            ..Metric::below(&format!("double hits per trace at T={t}"), h, 0.01, Provenance::DerivedOracle)
        });
        report.plots.push(poisson_plot(&format!("n_T{t}"), &format!("crossings of the first disk at T={t}"), &n, mean));
        report.plots.push(poisson_plot(&format!("n_prime_T{t}"), &format!("crossings of the second disk at T={t}"), &n2, mean));
    }
    Ok(RunOutput {
        report,
        files: vec![("raw.csv".into(), raw)],
    })
}

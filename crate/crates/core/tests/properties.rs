use std::f64::consts::TAU;
use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geotess::hypgeom::{arc_intersection, hyp_distance, GeodesicArc, HPoint, Isometry};
use geotess::plp::{
    beta_integral, chords_from_lines, config_distance, crossing_counts, sample_plp, ArcPair, Chord,
    ChordConfiguration, Window,
};
use geotess::stats::{
    bernoulli_sum_distribution, multinomial_occupancy_distribution, poisson_truncated, tv_distance,
};
use geotess::surface::{build_genus2_surface, Surface};
use geotess::tessellation::arrangement::{build_arrangement, segments_from_lines};
use geotess::tessellation::census::face_census;
use geotess::tessellation::surface_map::surface_map_from_trace;
use geotess::tracer::{reversed_trace, self_intersections, trace_geodesic, GeodesicTrace};

fn surface() -> &'static Surface {
    static S: OnceLock<Surface> = OnceLock::new();
    S.get_or_init(|| build_genus2_surface().unwrap())
}

fn point() -> impl Strategy<Value = HPoint> {
    (0.0..4.0f64, 0.0..TAU).prop_map(|(d, a)| HPoint::from_polar(d, a))
}

fn isometry() -> impl Strategy<Value = Isometry> {
    (0.0..TAU, 0.0..3.0f64, 0.0..TAU).prop_map(|(dir, d, rot)| {
        Isometry::translation(dir, d).compose(&Isometry::rotation(rot)).unwrap()
    })
}

/// Short translations keep products of 50 factors well inside f64 range.
fn short_isometry() -> impl Strategy<Value = Isometry> {
    (0.0..TAU, 0.0..0.3f64, 0.0..TAU).prop_map(|(dir, d, rot)| {
        Isometry::translation(dir, d).compose(&Isometry::rotation(rot)).unwrap()
    })
}

/// A random trace, resampling the start on the rare tracer failure.
fn random_trace(seed: u64, t: f64) -> GeodesicTrace {
    let s = surface();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Ok(tr) = trace_geodesic(s, s.sample_liouville(&mut rng), t) {
            return tr;
        }
    }
}

fn chord_config(angles: &[(f64, f64)]) -> ChordConfiguration {
    let mut c = ChordConfiguration::new(1.0);
    c.chords = angles.iter().map(|&(a, b)| Chord::new(a, b, false)).collect();
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isometries_preserve_distance(g in isometry(), p in point(), q in point()) {
        let d = hyp_distance(&p, &q);
        let d2 = hyp_distance(&g.apply(&p).unwrap(), &g.apply(&q).unwrap());
        prop_assert!((d - d2).abs() < 1e-9 * d.max(1.0));
    }

    #[test]
    fn products_of_isometries_stay_in_su11(gs in prop::collection::vec(short_isometry(), 50)) {
        let mut acc = Isometry::identity();
        for g in &gs {
            acc = acc.compose(g).unwrap();
        }
        let [a, b, c, d] = acc.coefficients();
        prop_assert!((acc.det() - Complex64::new(1.0, 0.0)).norm() < 1e-8);
        prop_assert!((d - a.conj()).norm() < 1e-8 * a.norm());
        prop_assert!((c - b.conj()).norm() < 1e-8 * a.norm());
        let back = acc.compose(&acc.inverse()).unwrap();
        prop_assert!(back.is_identity(1e-8));
    }

    #[test]
    fn geodesics_meet_the_boundary_orthogonally(p in point(), q in point()) {
        prop_assume!(hyp_distance(&p, &q) > 1e-6);
        let arc = GeodesicArc::through(p, q).unwrap();
        if let Some((c, r)) = arc.carrying_circle() {
            // orthogonal to the unit circle: |c|² = 1 + r²
            prop_assert!((c.norm_sqr() - 1.0 - r * r).abs() < 1e-9 * c.norm_sqr());
            prop_assert!(((p.z() - c).norm() - r).abs() < 1e-8 * r.max(1.0));
        }
    }

    #[test]
    fn arc_intersection_is_symmetric(p in point(), q in point(), u in point(), v in point()) {
        prop_assume!(hyp_distance(&p, &q) > 1e-6 && hyp_distance(&u, &v) > 1e-6);
        let a = GeodesicArc::through(p, q).unwrap();
        let b = GeodesicArc::through(u, v).unwrap();
        match (arc_intersection(&a, &b), arc_intersection(&b, &a)) {
            (None, None) => {}
            (Some(x), Some(y)) => {
                prop_assert!(x.point.euclid_dist(&y.point) < 1e-9);
                prop_assert!((x.angle - y.angle).abs() < 1e-9);
                prop_assert!((x.along.0 - y.along.1).abs() < 1e-8);
            }
            (x, y) => prop_assert!(false, "one-sided crossing: {x:?} vs {y:?}"),
        }
    }

    #[test]
    fn pairings_match_sides_pointwise(side in 0usize..8, s in 0.0..1.0f64) {
        let oct = surface().octagon();
        let arc = &oct.sides[side];
        let partner = &oct.sides[Surface::partner(side)];
        let image = surface().pairing(side).apply(&arc.point_at(s * arc.length)).unwrap();
        let on_partner = (0..=200).any(|i| {
            partner.point_at(i as f64 / 200.0 * partner.length).euclid_dist(&image) < 5e-3
        });
        prop_assert!(on_partner);
        let mid = surface().pairing(side).apply(&arc.point_at(0.5 * arc.length)).unwrap();
        prop_assert!(mid.euclid_dist(&partner.point_at(0.5 * partner.length)) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn traces_are_continuous_and_additive(seed in any::<u64>(), t in 5.0..80.0f64) {
        let tr = random_trace(seed, t);
        let total: f64 = tr.arcs.iter().map(|a| a.arc.length).sum();
        prop_assert!((total - t).abs() < 1e-9 * t);
        for w in tr.arcs.windows(2) {
            let side = w[0].exit_side.unwrap();
            let carried = surface().pairing(side).apply(&w[0].arc.end).unwrap();
            prop_assert!(carried.euclid_dist(&w[1].arc.start) < 1e-8);
            prop_assert!((w[0].end_time() - w[1].start_time).abs() < 1e-9);
        }
    }

    #[test]
    fn self_intersections_obey_counting_bounds(seed in any::<u64>(), t in 10.0..120.0f64) {
        let tr = random_trace(seed, t);
        let inters = self_intersections(&tr);
        let rho = surface().injectivity_radius;
        prop_assert!(inters.len() as f64 <= t * t / (rho * rho));
        let map = surface_map_from_trace(&tr, &inters).unwrap();
        prop_assert!((map.edges as i64 - 2 * map.vertices as i64).abs() <= 2);
    }

    #[test]
    fn reversed_traces_share_self_intersections(seed in any::<u64>(), t in 10.0..60.0f64) {
        let tr = random_trace(seed, t);
        let Ok(rev) = reversed_trace(surface(), &tr) else {
            return Ok(());
        };
        // Only compare when the reversed run visits the same arcs.
        prop_assume!(rev.arcs.len() == tr.arcs.len());
        let same_path = tr.arcs.iter().zip(rev.arcs.iter().rev()).all(|(a, b)| a.arc.start.euclid_dist(&b.arc.end) < 1e-6);
        prop_assume!(same_path);
        prop_assert_eq!(self_intersections(&tr).len(), self_intersections(&rev).len());
    }

    #[test]
    fn trace_maps_have_euler_characteristic_minus_two(seed in any::<u64>()) {
        let tr = random_trace(seed, 80.0);
        let inters = self_intersections(&tr);
        let map = surface_map_from_trace(&tr, &inters).unwrap();
        prop_assert_eq!(map.euler(), -2);
    }

    #[test]
    fn map_relabeling_preserves_orbits(seed in any::<u64>()) {
        let tr = random_trace(seed, 40.0);
        let map = surface_map_from_trace(&tr, &self_intersections(&tr)).unwrap().map;
        let mut perm: Vec<usize> = (0..map.darts()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let r = map.relabeled(&perm);
        prop_assert_eq!(r.euler_characteristic(), map.euler_characteristic());
        let sizes = |m: &geotess::tessellation::surface_map::CombinatorialMap| {
            let mut s: Vec<usize> = m.face_orbits().iter().map(Vec::len).collect();
            s.sort_unstable();
            s
        };
        prop_assert_eq!(sizes(&r), sizes(&map));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_add_over_split_arcs(seed in any::<u64>(), split in 0.05..0.95f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sample_plp(4.0, Window::Disk { radius: 1.0 }, &mut rng);
        let c = chords_from_lines(&s, 1.0);
        let cut = 2.0 * split;
        let pairs = [
            ArcPair::from_angles((0.0, 2.0), (3.0, 4.5), 1.0).unwrap(),
            ArcPair::from_angles((0.0, cut), (3.0, 4.5), 1.0).unwrap(),
            ArcPair::from_angles((cut, 2.0), (3.0, 4.5), 1.0).unwrap(),
        ];
        let t = crossing_counts(&c, &pairs);
        prop_assert_eq!(t.counts[0].forward, t.counts[1].forward + t.counts[2].forward);
        prop_assert_eq!(t.counts[0].backward, t.counts[1].backward + t.counts[2].backward);
    }

    #[test]
    fn beta_is_linear_in_alpha(a0 in 0.0..1.0f64, la in 0.1..1.5f64, gap in 0.1..1.0f64, lb in 0.1..1.5f64, c in 0.2..5.0f64) {
        let b0 = a0 + la + gap;
        prop_assume!(b0 + lb < a0 + TAU - 0.05);
        let p = ArcPair::from_angles((a0, a0 + la), (b0, b0 + lb), 1.0).unwrap();
        let b = beta_integral(&p);
        prop_assert!((beta_integral(&p.scaled(c)) - c * b).abs() < 1e-6 * c.max(1.0));
    }

    #[test]
    fn beta_grows_with_the_arcs(a0 in 0.2..1.0f64, la in 0.1..1.0f64, gap in 0.1..1.0f64, lb in 0.1..1.0f64, grow in 0.0..0.2f64) {
        let b0 = a0 + la + gap;
        let p = ArcPair::from_angles((a0, a0 + la), (b0, b0 + lb), 1.0).unwrap();
        let q = ArcPair::from_angles((a0 - grow, a0 + la), (b0, b0 + lb + grow), 1.0).unwrap();
        prop_assert!(beta_integral(&q) >= beta_integral(&p) - 1e-9);
    }

    #[test]
    fn config_distance_is_a_metric(
        f in prop::collection::vec((0.0..TAU, 0.0..TAU), 0..6),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = f.len();
        let mut jitter = |v: &[(f64, f64)]| -> Vec<(f64, f64)> {
            v.iter().map(|&(a, b)| (a + rand::Rng::random_range(&mut rng, -1.0..1.0), b + rand::Rng::random_range(&mut rng, -1.0..1.0))).collect()
        };
        let g = jitter(&f);
        let h = jitter(&g);
        let (f, g, h) = (chord_config(&f), chord_config(&g), chord_config(&h));
        prop_assert_eq!(config_distance(&f, &f), 0.0);
        prop_assert_eq!(config_distance(&f, &g), config_distance(&g, &f));
        prop_assert!(config_distance(&f, &h) <= config_distance(&f, &g) + config_distance(&g, &h) + 1e-12);
        prop_assert_eq!(h.len(), n);
    }

    #[test]
    fn bernoulli_sum_mean_is_total(p in prop::collection::vec(0.0..1.0f64, 0..60)) {
        let d = bernoulli_sum_distribution(&p).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-10);
        prop_assert!((d.mean() - p.iter().sum::<f64>()).abs() < 1e-10);
    }

    #[test]
    fn tv_is_symmetric_and_zero_on_the_diagonal(m1 in 0.0..8.0f64, m2 in 0.0..8.0f64) {
        let (a, b) = (poisson_truncated(m1), poisson_truncated(m2));
        prop_assert_eq!(tv_distance(&a, &a), 0.0);
        prop_assert_eq!(tv_distance(&a, &b), tv_distance(&b, &a));
        prop_assert!((0.0..=1.0).contains(&tv_distance(&a, &b)));
    }

    #[test]
    fn multinomial_marginals_are_bernoulli_sums(rows in prop::collection::vec((0.0..0.3f64, 0.0..0.3f64), 1..30)) {
        let rows: Vec<Vec<f64>> = rows.iter().map(|&(a, b)| vec![1.0 - a - b, a, b]).collect();
        let joint = multinomial_occupancy_distribution(&rows, 1 << 20).unwrap();
        for j in 0..2 {
            let pj: Vec<f64> = rows.iter().map(|r| r[j + 1]).collect();
            let bern = bernoulli_sum_distribution(&pj).unwrap();
            let marg = joint.marginal(j);
            for k in 0..marg.probs.len().max(bern.probs.len()) {
                let x = marg.probs.get(k).copied().unwrap_or(0.0);
                let y = bern.probs.get(k).copied().unwrap_or(0.0);
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn arrangements_satisfy_euler_and_tile_the_window(seed in any::<u64>(), half in 2.0..10.0f64) {
        let w = Window::Square { half };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = sample_plp(1.0, w, &mut rng);
        let arr = build_arrangement(&segments_from_lines(&sample, &w), w).unwrap();
        prop_assert_eq!(arr.euler_defect(), 0);
        let census = face_census(&arr, 1.0);
        let area = w.area();
        prop_assert!((census.total_area() - area).abs() < 1e-6 * area);
    }

    #[test]
    fn census_ignores_segment_order(seed in any::<u64>()) {
        let w = Window::Square { half: 6.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = sample_plp(1.0, w, &mut rng);
        let mut segs = segments_from_lines(&sample, &w);
        let a = face_census(&build_arrangement(&segs, w).unwrap(), 1.0);
        segs.shuffle(&mut rng);
        let b = face_census(&build_arrangement(&segs, w).unwrap(), 1.0);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn nested_disk_counts_are_poisson(seed in any::<u64>(), r1 in 0.5..2.0f64, extra in 0.5..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lambda, n) = (1.5, 400);
        let r2 = r1 + extra;
        let counts: Vec<f64> = (0..n)
            .map(|_| {
                let s = sample_plp(lambda, Window::Disk { radius: r2 }, &mut rng);
                s.lines.iter().filter(|l| l.r.abs() < r1).count() as f64
            })
            .collect();
        let mean = 2.0 * lambda * r1;
        let avg = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - avg).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (mean / n as f64).sqrt();
        prop_assert!((avg - mean).abs() < 5.0 * se, "mean {avg} vs {mean}");
        // Poisson dispersion: variance equals the mean
        prop_assert!((var / mean - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt() + 0.1);
    }
}

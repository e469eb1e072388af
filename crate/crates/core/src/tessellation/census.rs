//! Per-face geometry and k-gon statistics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::arrangement::{Arrangement, VertexKind};
use super::surface_map::SurfaceMap;
use crate::plp::Window;
use crate::stats::Histogram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceRecord {
    pub k: usize,
    pub area: f64,
    pub sides: Vec<f64>,
    pub angles: Vec<f64>,
    pub touches_boundary: bool,
}

impl FaceRecord {
    pub fn min_side(&self) -> f64 {
        self.sides.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_side(&self) -> f64 {
        self.sides.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceCensus {
    pub scale: f64,
    pub vertices: usize,
    pub edges: usize,
    /// All faces, the outer one included.
    pub faces: usize,
    pub bounded: usize,
    /// `k_counts[k]` bounded faces have `k` sides.
    pub k_counts: Vec<usize>,
    /// Same, restricted to faces that avoid the window boundary.
    pub interior_k_counts: Vec<usize>,
    /// Bounded faces, sorted by `(k, area)`.
    pub records: Vec<FaceRecord>,
}

fn bump(counts: &mut Vec<usize>, k: usize) {
    if counts.len() <= k {
        counts.resize(k + 1, 0);
    }
    counts[k] += 1;
}

/// Rotate a cycle so it starts at its lexicographically smallest vertex.
fn canonical_start(arr: &Arrangement, cycle: &[usize]) -> Vec<usize> {
    let key = |h: usize| {
        let p = arr.vertices[arr.origin(h)].pos;
        (p.re, p.im)
    };
    let start = (0..cycle.len())
        .min_by(|&a, &b| {
            let (ka, kb) = (key(cycle[a]), key(cycle[b]));
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(a.cmp(&b))
        })
        .unwrap_or(0);
    cycle[start..].iter().chain(&cycle[..start]).copied().collect()
}

/// Face-by-face geometry of an arrangement with lengths multiplied by `scale`.
pub fn face_census(arr: &Arrangement, scale: f64) -> FaceCensus {
    let mut records = Vec::new();
    let mut k_counts = Vec::new();
    let mut interior_k_counts = Vec::new();
    for (f, raw) in arr.faces.iter().enumerate() {
        if f == arr.outer_face {
            continue;
        }
        let cycle = canonical_start(arr, raw);
        let area = arr.cycle_area(&cycle) * scale * scale;
        let sides = cycle.iter().map(|&h| arr.half_edge_length(h) * scale).collect();
        // the corner at the origin of h is the one at the head of its predecessor
        let n = cycle.len();
        let angles = (0..n).map(|i| arr.corner_angle(cycle[(i + n - 1) % n])).collect();
        let touches_boundary = arr.cycle_touches_boundary(&cycle);
        bump(&mut k_counts, n);
        if !touches_boundary {
            bump(&mut interior_k_counts, n);
        }
        records.push(FaceRecord {
            k: n,
            area,
            sides,
            angles,
            touches_boundary,
        });
    }
    records.sort_by(|a, b| a.k.cmp(&b.k).then(a.area.total_cmp(&b.area)));
    FaceCensus {
        scale,
        vertices: arr.vertex_count(),
        edges: arr.edge_count(),
        faces: arr.face_count(),
        bounded: records.len(),
        k_counts,
        interior_k_counts,
        records,
    }
}

impl FaceCensus {
    pub fn interior_faces(&self) -> usize {
        self.interior_k_counts.iter().sum()
    }

    pub fn total_area(&self) -> f64 {
        self.records.iter().map(|r| r.area).sum()
    }
}

/// Sutherland–Hodgman clip of a polygon to the square `[−h, h]²`.
pub fn clip_to_square(poly: &[Complex64], h: f64) -> Vec<Complex64> {
    let planes: [(Complex64, f64); 4] = [
        (Complex64::new(1.0, 0.0), h),
        (Complex64::new(-1.0, 0.0), h),
        (Complex64::new(0.0, 1.0), h),
        (Complex64::new(0.0, -1.0), h),
    ];
    let mut out = poly.to_vec();
    for (n, c) in planes {
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        let side = |p: Complex64| c - (p.re * n.re + p.im * n.im);
        for i in 0..input.len() {
            let (p, q) = (input[i], input[(i + 1) % input.len()]);
            let (sp, sq) = (side(p), side(q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                out.push(p + (q - p) * (sp / (sp - sq)));
            }
        }
    }
    out
}

pub fn polygon_area(poly: &[Complex64]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p.re * q.im - p.im * q.re
        })
        .sum::<f64>()
}

/// Face statistics of a large square arrangement seen through a smaller
/// centered square: each face counts with the fraction of its area inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedCensus {
    pub inner_half: f64,
    pub face_weight: f64,
    /// Weight of `k`-gons among faces that avoid the outer boundary.
    pub k_weight: Vec<f64>,
    /// Weight carried by faces cut by the outer boundary.
    pub boundary_weight: f64,
    /// Crossings inside the inner square.
    pub vertices: usize,
}

impl WeightedCensus {
    pub fn inner_area(&self) -> f64 {
        4.0 * self.inner_half * self.inner_half
    }

    pub fn face_density(&self) -> f64 {
        self.face_weight / self.inner_area()
    }

    pub fn vertex_density(&self) -> f64 {
        self.vertices as f64 / self.inner_area()
    }

    pub fn k_fraction(&self, k: usize) -> f64 {
        let total: f64 = self.k_weight.iter().sum();
        self.k_weight.get(k).copied().unwrap_or(0.0) / total
    }

    /// Sum of several runs.
    pub fn merge(&mut self, other: &WeightedCensus) {
        assert_eq!(self.inner_half, other.inner_half, "merging censuses of different windows");
        self.face_weight += other.face_weight;
        self.boundary_weight += other.boundary_weight;
        self.vertices += other.vertices;
        if self.k_weight.len() < other.k_weight.len() {
            self.k_weight.resize(other.k_weight.len(), 0.0);
        }
        for (a, b) in self.k_weight.iter_mut().zip(&other.k_weight) {
            *a += b;
        }
    }
}

/// Area-weighted census of `arr` (square window) restricted to `[−inner, inner]²`.
pub fn weighted_census(arr: &Arrangement, inner: f64) -> WeightedCensus {
    assert!(matches!(arr.window, Window::Square { .. }), "weighted census needs a square window");
    let mut out = WeightedCensus {
        inner_half: inner,
        face_weight: 0.0,
        k_weight: Vec::new(),
        boundary_weight: 0.0,
        vertices: 0,
    };
    let region = Window::Square { half: inner };
    out.vertices = arr
        .vertices
        .iter()
        .filter(|v| v.kind == VertexKind::Crossing && region.contains(v.pos))
        .count();
    for (f, cycle) in arr.faces.iter().enumerate() {
        if f == arr.outer_face {
            continue;
        }
        let poly = arr.cycle_polygon(cycle);
        let area = polygon_area(&poly);
        if area <= 0.0 {
            continue;
        }
        let inside = polygon_area(&clip_to_square(&poly, inner));
        if inside <= 0.0 {
            continue;
        }
        let w = inside / area;
        out.face_weight += w;
        if arr.cycle_touches_boundary(cycle) {
            out.boundary_weight += w;
        } else {
            let k = cycle.len();
            if out.k_weight.len() <= k {
                out.k_weight.resize(k + 1, 0.0);
            }
            out.k_weight[k] += w;
        }
    }
    out
}

/// Bin edges for scaled side lengths.
pub fn side_length_bins() -> Histogram {
    Histogram::uniform(0.0, 100.0, 40)
}

/// Bin edges for interior angles.
pub fn angle_bins() -> Histogram {
    Histogram::uniform(0.0, std::f64::consts::PI, 36)
}

/// k-gon fractions and pooled side/angle samples of a tessellation after
/// multiplying lengths by `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonStats {
    pub scale: f64,
    pub k_counts: Vec<usize>,
    pub sides: Vec<f64>,
    pub angles: Vec<f64>,
    pub areas: Vec<f64>,
}

impl PolygonStats {
    /// Faces of the census that avoid the window boundary.
    pub fn from_census(census: &FaceCensus, t: f64) -> Self {
        Self::from_faces(census.records.iter().filter(|r| !r.touches_boundary), t)
    }

    /// Faces of the surface map other than the two holding the trace ends.
    pub fn from_surface_map(map: &SurfaceMap, t: f64) -> Self {
        Self::from_faces(map.faces.iter().filter(|r| !r.touches_boundary), t)
    }

    fn from_faces<'a>(faces: impl Iterator<Item = &'a FaceRecord>, t: f64) -> Self {
        let mut s = Self {
            scale: t,
            k_counts: Vec::new(),
            sides: Vec::new(),
            angles: Vec::new(),
            areas: Vec::new(),
        };
        for r in faces {
            bump(&mut s.k_counts, r.k);
            s.sides.extend(r.sides.iter().map(|x| x * t));
            s.angles.extend(&r.angles);
            s.areas.push(r.area * t * t);
        }
        s
    }

    pub fn faces(&self) -> usize {
        self.k_counts.iter().sum()
    }

    pub fn k_fractions(&self) -> Vec<f64> {
        let n = self.faces() as f64;
        self.k_counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn side_histogram(&self) -> Histogram {
        let mut h = side_length_bins();
        h.extend(self.sides.iter().copied());
        h
    }

    pub fn angle_histogram(&self) -> Histogram {
        let mut h = angle_bins();
        h.extend(self.angles.iter().copied());
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plp::sample_plp;
    use crate::tessellation::arrangement::{build_arrangement, segments_from_lines, Segment};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn plp_arrangement(seed: u64, half: f64) -> Arrangement {
        let w = Window::Square { half };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = sample_plp(1.0, w, &mut rng);
        build_arrangement(&segments_from_lines(&sample, &w), w).unwrap()
    }

    #[test]
    fn empty_census() {
        let arr = build_arrangement(&[], Window::Square { half: 1.0 }).unwrap();
        let c = face_census(&arr, 1.0);
        assert_eq!(c.faces, 2);
        assert_eq!(c.bounded, 1);
        assert_eq!(c.interior_faces(), 0);
    }

    #[test]
    fn split_unit_square() {
        let segs = [Segment::new(Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.5))];
        let arr = build_arrangement(&segs, Window::Square { half: 0.5 }).unwrap();
        let c = face_census(&arr, 1.0);
        assert_eq!(c.bounded, 2);
        for r in &c.records {
            assert!((r.area - 0.5).abs() < 1e-12);
            assert!(r.touches_boundary);
            assert!((r.angles.iter().sum::<f64>() - (r.k as f64 - 2.0) * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn census_invariants_on_plp() {
        let arr = plp_arrangement(51, 10.0);
        let c = face_census(&arr, 1.0);
        assert_eq!(c.k_counts.iter().sum::<usize>(), c.bounded);
        assert!((c.total_area() - 400.0).abs() < 1e-6 * 400.0);
        for r in c.records.iter().filter(|r| !r.touches_boundary) {
            assert!(r.k >= 3);
            let turn: f64 = r.angles.iter().sum();
            assert!((turn - (r.k as f64 - 2.0) * PI).abs() < 1e-9);
        }
        let doubled = face_census(&arr, 2.0);
        assert!((doubled.total_area() - 1600.0).abs() < 1e-6 * 1600.0);
    }

    #[test]
    fn census_ignores_input_order() {
        let w = Window::Square { half: 8.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let sample = sample_plp(1.0, w, &mut rng);
        let mut segs = segments_from_lines(&sample, &w);
        let a = face_census(&build_arrangement(&segs, w).unwrap(), 1.0);
        segs.shuffle(&mut rng);
        let b = face_census(&build_arrangement(&segs, w).unwrap(), 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn clipping_examples() {
        let sq = |h: f64| {
            vec![
                Complex64::new(-h, -h),
                Complex64::new(h, -h),
                Complex64::new(h, h),
                Complex64::new(-h, h),
            ]
        };
        assert!((polygon_area(&clip_to_square(&sq(2.0), 1.0)) - 4.0).abs() < 1e-12);
        assert!((polygon_area(&clip_to_square(&sq(0.5), 1.0)) - 1.0).abs() < 1e-12);
        let shifted: Vec<Complex64> = sq(1.0).iter().map(|p| p + Complex64::new(1.0, 0.0)).collect();
        assert!((polygon_area(&clip_to_square(&shifted, 1.0)) - 2.0).abs() < 1e-12);
        let far: Vec<Complex64> = sq(0.5).iter().map(|p| p + Complex64::new(5.0, 0.0)).collect();
        assert!(clip_to_square(&far, 1.0).is_empty());
    }

    #[test]
    fn weights_sum_to_the_inner_face_count_bracket() {
        let arr = plp_arrangement(53, 16.0);
        let w = weighted_census(&arr, 10.0);
        // faces entirely inside ≤ weighted count ≤ faces meeting the square
        let mut inside = 0usize;
        let mut meeting = 0usize;
        for (f, cyc) in arr.faces.iter().enumerate() {
            if f == arr.outer_face {
                continue;
            }
            let poly = arr.cycle_polygon(cyc);
            let clipped = polygon_area(&clip_to_square(&poly, 10.0));
            if clipped > 0.0 {
                meeting += 1;
            }
            if poly.iter().all(|p| p.re.abs() < 10.0 && p.im.abs() < 10.0) {
                inside += 1;
            }
        }
        assert!(inside as f64 <= w.face_weight && w.face_weight <= meeting as f64);
        assert_eq!(w.vertices, arr.vertices.iter().filter(|v| v.kind == VertexKind::Crossing && v.pos.re.abs() <= 10.0 && v.pos.im.abs() <= 10.0).count());
    }

    #[test]
    fn scaling_by_one_is_identity() {
        let arr = plp_arrangement(54, 8.0);
        let c = face_census(&arr, 1.0);
        let s = PolygonStats::from_census(&c, 1.0);
        let interior: Vec<&FaceRecord> = c.records.iter().filter(|r| !r.touches_boundary).collect();
        assert_eq!(s.faces(), interior.len());
        let sides: Vec<f64> = interior.iter().flat_map(|r| r.sides.clone()).collect();
        assert_eq!(s.sides, sides);
        let total: f64 = s.k_fractions().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let s3 = PolygonStats::from_census(&c, 3.0);
        assert_eq!(s3.k_counts, s.k_counts);
        assert!((s3.sides[0] - 3.0 * s.sides[0]).abs() < 1e-12);
    }
}

//! Combinatorial map cut on the surface by a geodesic trace.
//!
//! Darts are half-edges leaving a vertex. The rotation `σ` sends a dart to
//! the next one counterclockwise around its vertex and the involution `α`
//! swaps the two darts of an edge. Faces are the orbits of `σ⁻¹ ∘ α`, which
//! keeps each face on the left of its darts.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::census::FaceRecord;
use super::TessError;
use crate::hypgeom::normalize_angle;
use crate::tracer::{GeodesicTrace, IntersectionSet};

/// Distinct self-intersections closer than this are treated as one point.
pub const TRIPLE_POINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinatorialMap {
    pub rotation: Vec<usize>,
    pub involution: Vec<usize>,
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

fn orbits(next: impl Fn(usize) -> usize, n: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut orbit = Vec::new();
        let mut d = start;
        while !seen[d] {
            seen[d] = true;
            orbit.push(d);
            d = next(d);
        }
        out.push(orbit);
    }
    out
}

impl CombinatorialMap {
    pub fn new(rotation: Vec<usize>, involution: Vec<usize>) -> Result<Self, TessError> {
        if rotation.len() != involution.len() {
            return Err(TessError::Inconsistent("rotation and involution sizes differ".into()));
        }
        if !is_permutation(&rotation) || !is_permutation(&involution) {
            return Err(TessError::Inconsistent("not a permutation".into()));
        }
        if involution.iter().enumerate().any(|(d, &a)| a == d || involution[a] != d) {
            return Err(TessError::Inconsistent("edge involution has a fixed point".into()));
        }
        Ok(Self { rotation, involution })
    }

    pub fn darts(&self) -> usize {
        self.rotation.len()
    }

    fn inverse_rotation(&self) -> Vec<usize> {
        let mut inv = vec![0; self.darts()];
        for (d, &s) in self.rotation.iter().enumerate() {
            inv[s] = d;
        }
        inv
    }

    /// The dart following `d` around its face.
    pub fn face_successors(&self) -> Vec<usize> {
        let inv = self.inverse_rotation();
        self.involution.iter().map(|&a| inv[a]).collect()
    }

    pub fn vertex_orbits(&self) -> Vec<Vec<usize>> {
        orbits(|d| self.rotation[d], self.darts())
    }

    pub fn face_orbits(&self) -> Vec<Vec<usize>> {
        let succ = self.face_successors();
        orbits(|d| succ[d], self.darts())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_orbits().len()
    }

    pub fn edge_count(&self) -> usize {
        self.darts() / 2
    }

    pub fn face_count(&self) -> usize {
        self.face_orbits().len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    /// Genus of the closed surface the map lives on, assuming it is connected.
    pub fn genus(&self) -> Option<i64> {
        let chi = self.euler_characteristic();
        (chi <= 2 && chi % 2 == 0).then_some((2 - chi) / 2)
    }

    /// The same map with dart `d` renamed `perm[d]`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let n = self.darts();
        let mut rotation = vec![0; n];
        let mut involution = vec![0; n];
        for d in 0..n {
            rotation[perm[d]] = perm[self.rotation[d]];
            involution[perm[d]] = perm[self.involution[d]];
        }
        Self { rotation, involution }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMap {
    pub map: CombinatorialMap,
    /// Direction of each dart at its vertex.
    pub dart_angle: Vec<f64>,
    pub dart_vertex: Vec<usize>,
    /// Hyperbolic length of each edge (indexed by `dart / 2`).
    pub edge_length: Vec<f64>,
    /// Vertex ids of the trace's start and end.
    pub terminals: (usize, usize),
    /// Self-intersections.
    pub vertices: usize,
    /// Edges joining two self-intersections.
    pub edges: usize,
    pub face_total: usize,
    /// Faces in dart-orbit order; those holding a trace end are flagged
    /// through `touches_boundary`.
    pub faces: Vec<FaceRecord>,
}

impl SurfaceMap {
    /// `v − e + f`, equal to `2 − 2g` when the trace cuts the surface into disks.
    pub fn euler(&self) -> i64 {
        self.map.euler_characteristic()
    }

    /// Lengths of the edges joining two self-intersections.
    pub fn interior_edge_lengths(&self) -> Vec<f64> {
        let n = self.edge_length.len();
        if n < 3 {
            return Vec::new();
        }
        self.edge_length[1..n - 1].to_vec()
    }

    pub fn total_area(&self) -> f64 {
        self.faces.iter().map(|f| f.area).sum()
    }
}

/// Combinatorial map of the tessellation cut by `trace`, with the trace's
/// endpoints as degree-one vertices.
pub fn surface_map_from_trace(trace: &GeodesicTrace, inters: &IntersectionSet) -> Result<SurfaceMap, TessError> {
    let tangential = inters.tangential_count();
    if tangential > 0 {
        return Err(TessError::Tangency(tangential));
    }
    if inters.min_separation() < TRIPLE_POINT_TOL {
        return Err(TessError::TriplePoint(TRIPLE_POINT_TOL));
    }
    let v = inters.len();
    // (time, vertex, forward direction)
    let mut visits: Vec<(f64, usize, f64)> = Vec::with_capacity(2 * v + 2);
    for (id, c) in inters.vertices.iter().enumerate() {
        let (t1, t2) = c.times(trace);
        visits.push((t1, id, trace.arcs[c.arcs.0].arc.direction_at(&c.point)));
        visits.push((t2, id, trace.arcs[c.arcs.1].arc.direction_at(&c.point)));
    }
    visits.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (start_v, end_v) = (v, v + 1);
    let end = trace.end_tangent();
    visits.insert(0, (0.0, start_v, trace.start.direction()));
    visits.push((trace.total_length, end_v, end.direction()));

    let n_edges = visits.len() - 1;
    let n_darts = 2 * n_edges;
    let mut dart_angle = vec![0.0; n_darts];
    let mut dart_vertex = vec![0; n_darts];
    let mut edge_length = Vec::with_capacity(n_edges);
    let mut involution = vec![0; n_darts];
    for e in 0..n_edges {
        let (a, b) = (visits[e], visits[e + 1]);
        dart_angle[2 * e] = normalize_angle(a.2);
        dart_vertex[2 * e] = a.1;
        dart_angle[2 * e + 1] = normalize_angle(b.2 + PI);
        dart_vertex[2 * e + 1] = b.1;
        involution[2 * e] = 2 * e + 1;
        involution[2 * e + 1] = 2 * e;
        edge_length.push(b.0 - a.0);
    }

    let mut around: Vec<Vec<usize>> = vec![Vec::new(); v + 2];
    for d in 0..n_darts {
        around[dart_vertex[d]].push(d);
    }
    let mut rotation = vec![0; n_darts];
    for (vid, list) in around.iter_mut().enumerate() {
        let expected = if vid < v { 4 } else { 1 };
        if list.len() != expected {
            return Err(TessError::Inconsistent(format!("vertex {vid} has {} darts", list.len())));
        }
        list.sort_by(|&a, &b| dart_angle[a].total_cmp(&dart_angle[b]));
        for k in 0..list.len() {
            let next = list[(k + 1) % list.len()];
            if list.len() > 1 && (dart_angle[next] - dart_angle[list[k]]).rem_euclid(TAU) < 1e-12 {
                return Err(TessError::Inconsistent(format!("coincident darts at vertex {vid}")));
            }
            rotation[list[k]] = next;
        }
    }
    let map = CombinatorialMap::new(rotation, involution)?;

    let succ = map.face_successors();
    let orbits = map.face_orbits();
    let covered: usize = orbits.iter().map(Vec::len).sum();
    if covered != n_darts {
        return Err(TessError::Inconsistent("face orbits do not partition the darts".into()));
    }
    let faces = orbits
        .iter()
        .map(|orbit| {
            let angles: Vec<f64> = orbit
                .iter()
                .map(|&d| {
                    let (back, out) = (map.involution[d], succ[d]);
                    if back == out {
                        TAU
                    } else {
                        (dart_angle[back] - dart_angle[out]).rem_euclid(TAU)
                    }
                })
                .collect();
            let k = orbit.len();
            FaceRecord {
                k,
                area: (k as f64 - 2.0) * PI - angles.iter().sum::<f64>(),
                sides: orbit.iter().map(|&d| edge_length[d / 2]).collect(),
                angles,
                touches_boundary: orbit.iter().any(|&d| dart_vertex[d] >= v),
            }
        })
        .collect();
    Ok(SurfaceMap {
        face_total: orbits.len(),
        map,
        dart_angle,
        dart_vertex,
        edge_length,
        terminals: (start_v, end_v),
        vertices: v,
        edges: if v == 0 { 0 } else { 2 * v - 1 },
        faces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_genus2_surface;
    use crate::tracer::{self_intersections, trace_geodesic};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn figure_eight(rotation: Vec<usize>) -> CombinatorialMap {
        CombinatorialMap::new(rotation, vec![1, 0, 3, 2]).unwrap()
    }

    #[test]
    fn figure_eight_maps() {
        let planar = figure_eight(vec![1, 2, 3, 0]);
        assert_eq!((planar.vertex_count(), planar.edge_count(), planar.face_count()), (1, 2, 3));
        assert_eq!(planar.genus(), Some(0));
        // rotation 0 → 2 → 1 → 3 → 0 interleaves the loops
        let torus = figure_eight(vec![2, 3, 1, 0]);
        assert_eq!(torus.face_count(), 1);
        assert_eq!(torus.genus(), Some(1));
    }

    #[test]
    fn invalid_maps_rejected() {
        assert!(CombinatorialMap::new(vec![0, 0], vec![1, 0]).is_err());
        assert!(CombinatorialMap::new(vec![0, 1], vec![0, 1]).is_err());
    }

    #[test]
    fn faces_survive_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let torus = figure_eight(vec![2, 3, 1, 0]);
        for _ in 0..20 {
            let mut perm: Vec<usize> = (0..4).collect();
            perm.shuffle(&mut rng);
            let r = torus.relabeled(&perm);
            assert_eq!(r.face_count(), torus.face_count());
            let mut sizes: Vec<usize> = r.face_orbits().iter().map(Vec::len).collect();
            sizes.sort_unstable();
            let mut base: Vec<usize> = torus.face_orbits().iter().map(Vec::len).collect();
            base.sort_unstable();
            assert_eq!(sizes, base);
        }
    }

    #[test]
    fn trace_maps_are_genus_two() {
        let surface = build_genus2_surface().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        for _ in 0..5 {
            let start = surface.sample_liouville(&mut rng);
            let trace = trace_geodesic(&surface, start, 60.0).unwrap();
            let inters = self_intersections(&trace);
            let m = surface_map_from_trace(&trace, &inters).unwrap();
            assert_eq!(m.euler(), -2, "v = {}", m.vertices);
            assert_eq!(m.vertices as i64 - m.edges as i64 + m.face_total as i64, -2);
            assert!((m.edges as i64 - 2 * m.vertices as i64).abs() <= 2);
            assert!((m.total_area() - 4.0 * PI).abs() < 1e-8);
            assert_eq!(m.faces.iter().filter(|f| f.touches_boundary).count() <= 2, true);
            for f in m.faces.iter().filter(|f| !f.touches_boundary) {
                assert!(f.area > 0.0 && f.k >= 2);
            }
            let total: f64 = m.edge_length.iter().sum();
            assert!((total - 60.0).abs() < 1e-9);
        }
    }

    #[test]
    fn short_trace_without_crossings() {
        let surface = build_genus2_surface().unwrap();
        let start = crate::hypgeom::UnitTangent::new(crate::hypgeom::HPoint::ORIGIN, 0.0);
        let trace = trace_geodesic(&surface, start, 0.5).unwrap();
        let m = surface_map_from_trace(&trace, &self_intersections(&trace)).unwrap();
        assert_eq!((m.vertices, m.edges, m.face_total), (0, 0, 1));
        assert_eq!(m.euler(), 2);
    }
}

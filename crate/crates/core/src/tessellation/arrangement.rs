//! Planar subdivision of a window by a family of segments.
//!
//! Half-edge `h` belongs to edge `h / 2`; even half-edges run `from → to`,
//! odd ones run back. Every face lies to the left of its half-edges, so
//! bounded faces are counterclockwise cycles and the outer face is the
//! clockwise cycle through the window boundary.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TessError;
use crate::plp::{LineSample, Window};

/// Predicate tolerance for coincident vertices.
pub const DEGENERACY_TOL: f64 = 1e-9;

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Complex64,
    pub b: Complex64,
}

impl Segment {
    pub fn new(a: Complex64, b: Complex64) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// Interior crossing parameters `(s, u)`, both in `(0, 1)`.
    pub fn crossing(&self, other: &Segment) -> Option<(f64, f64)> {
        let d1 = self.b - self.a;
        let d2 = other.b - other.a;
        let denom = cross(d1, d2);
        if denom.abs() <= 1e-14 * d1.norm() * d2.norm() {
            return None;
        }
        let w = other.a - self.a;
        let s = cross(w, d2) / denom;
        let u = cross(w, d1) / denom;
        (s > 0.0 && s < 1.0 && u > 0.0 && u < 1.0).then_some((s, u))
    }
}

/// The chords cut out of `window` by every line of the sample.
pub fn segments_from_lines(sample: &LineSample, window: &Window) -> Vec<Segment> {
    sample
        .lines
        .iter()
        .filter_map(|l| window.clip(l))
        .map(|(a, b)| Segment::new(a, b))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexKind {
    /// Crossing of two segments.
    Crossing,
    /// Segment endpoint on the window boundary.
    Boundary,
    /// Corner of a square window, or the anchor of an untouched disk boundary.
    Corner,
    /// Segment endpoint strictly inside the window.
    Endpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub pos: Complex64,
    pub kind: VertexKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Carrier {
    /// Piece of the input segment with this index.
    Segment(usize),
    /// Straight piece of a square window's boundary, oriented counterclockwise.
    Boundary,
    /// Counterclockwise arc of a disk window sweeping the given angle.
    Arc { sweep: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub carrier: Carrier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arrangement {
    pub window: Window,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    /// Half-edge cycles, one per face boundary component.
    pub faces: Vec<Vec<usize>>,
    pub outer_face: usize,
    pub components: usize,
    next: Vec<usize>,
    face_of: Vec<usize>,
    angle: Vec<f64>,
}

fn on_boundary(window: &Window, p: Complex64) -> bool {
    match *window {
        Window::Disk { radius } => (p.norm() - radius).abs() <= DEGENERACY_TOL * radius.max(1.0),
        Window::Square { half } => {
            (p.re.abs().max(p.im.abs()) - half).abs() <= DEGENERACY_TOL * half.max(1.0)
        }
    }
}

/// Counterclockwise position along the window boundary.
fn boundary_param(window: &Window, p: Complex64) -> f64 {
    match *window {
        Window::Disk { .. } => p.arg().rem_euclid(TAU),
        Window::Square { half: h } => {
            let (x, y) = (p.re, p.im);
            let dx = (x.abs() - h).abs();
            let dy = (y.abs() - h).abs();
            if dy <= dx && y < 0.0 {
                x + h
            } else if dx <= dy && x > 0.0 {
                2.0 * h + (y + h)
            } else if dy <= dx && y > 0.0 {
                4.0 * h + (h - x)
            } else {
                (6.0 * h + (h - y)).rem_euclid(8.0 * h)
            }
        }
    }
}

fn segment_key(s: &Segment) -> [u64; 4] {
    let k = |x: f64| {
        let b = x.to_bits();
        if b >> 63 == 1 { !b } else { b | 1 << 63 }
    };
    [k(s.a.re), k(s.a.im), k(s.b.re), k(s.b.im)]
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Build the subdivision of `window` by `segments`.
///
/// Segments must lie in the window. Near-coincident vertices are rejected
/// with the indices of the segments involved (the window boundary counts as
/// index `usize::MAX`).
pub fn build_arrangement(segments: &[Segment], window: Window) -> Result<Arrangement, TessError> {
    let scale = window.bounding_radius().max(1.0);
    let tol = DEGENERACY_TOL * scale;
    let mut vertices: Vec<Vertex> = Vec::new();
    // per segment: (parameter, vertex, other segment)
    let mut stops: Vec<Vec<(f64, usize, usize)>> = vec![Vec::new(); segments.len()];
    let mut boundary: Vec<(f64, usize, usize)> = Vec::new();
    for (i, s) in segments.iter().enumerate() {
        for (t, p) in [(0.0, s.a), (1.0, s.b)] {
            let on = on_boundary(&window, p);
            let id = vertices.len();
            vertices.push(Vertex {
                pos: p,
                kind: if on { VertexKind::Boundary } else { VertexKind::Endpoint },
            });
            stops[i].push((t, id, i));
            if on {
                boundary.push((boundary_param(&window, p), id, i));
            }
        }
    }

    let boxes: Vec<[f64; 4]> = segments
        .iter()
        .map(|s| [s.a.re.min(s.b.re), s.a.im.min(s.b.im), s.a.re.max(s.b.re), s.a.im.max(s.b.im)])
        .collect();
    for i in 0..segments.len() {
        for j in i + 1..segments.len() {
            let (bi, bj) = (&boxes[i], &boxes[j]);
            if bi[0] > bj[2] || bj[0] > bi[2] || bi[1] > bj[3] || bj[1] > bi[3] {
                continue;
            }
            // solve in a canonical order so positions do not depend on input order
            let (lo, hi) = if segment_key(&segments[i]) <= segment_key(&segments[j]) { (i, j) } else { (j, i) };
            if let Some((s, u)) = segments[lo].crossing(&segments[hi]) {
                let id = vertices.len();
                vertices.push(Vertex {
                    pos: segments[lo].a + (segments[lo].b - segments[lo].a) * s,
                    kind: VertexKind::Crossing,
                });
                stops[lo].push((s, id, hi));
                stops[hi].push((u, id, lo));
            }
        }
    }

    let mut degenerate: Vec<[usize; 3]> = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();
    for (i, list) in stops.iter_mut().enumerate() {
        list.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in list.windows(2) {
            let (p, q) = (vertices[w[0].1].pos, vertices[w[1].1].pos);
            if (p - q).norm() <= tol {
                let mut t = [i, w[0].2, w[1].2];
                t.sort_unstable();
                degenerate.push(t);
            }
            edges.push(Edge {
                from: w[0].1,
                to: w[1].1,
                carrier: Carrier::Segment(i),
            });
        }
    }

    if let Window::Square { half } = window {
        for (k, c) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)].into_iter().enumerate() {
            let id = vertices.len();
            vertices.push(Vertex {
                pos: Complex64::new(c.0 * half, c.1 * half),
                kind: VertexKind::Corner,
            });
            boundary.push((2.0 * half * k as f64, id, usize::MAX));
        }
    }
    if boundary.is_empty() {
        if let Window::Disk { radius } = window {
            let id = vertices.len();
            vertices.push(Vertex {
                pos: Complex64::new(radius, 0.0),
                kind: VertexKind::Corner,
            });
            boundary.push((0.0, id, usize::MAX));
        }
    }
    boundary.sort_by(|a, b| a.0.total_cmp(&b.0));
    let nb = boundary.len();
    for k in 0..nb {
        let (u, v) = (boundary[k], boundary[(k + 1) % nb]);
        if nb > 1 && (vertices[u.1].pos - vertices[v.1].pos).norm() <= tol {
            let mut t = [u.2, v.2, usize::MAX];
            t.sort_unstable();
            degenerate.push(t);
        }
        let carrier = match window {
            Window::Square { .. } => Carrier::Boundary,
            Window::Disk { .. } => {
                let sweep = if nb == 1 { TAU } else { (v.0 - u.0).rem_euclid(TAU) };
                Carrier::Arc { sweep }
            }
        };
        edges.push(Edge {
            from: u.1,
            to: v.1,
            carrier,
        });
    }
    if !degenerate.is_empty() {
        degenerate.sort_unstable();
        degenerate.dedup();
        return Err(TessError::Degenerate(degenerate));
    }

    let mut arr = Arrangement {
        window,
        vertices,
        edges,
        faces: Vec::new(),
        outer_face: 0,
        components: 0,
        next: Vec::new(),
        face_of: Vec::new(),
        angle: Vec::new(),
    };
    arr.link()?;
    Ok(arr)
}

impl Arrangement {
    pub fn origin(&self, h: usize) -> usize {
        let e = &self.edges[h / 2];
        if h % 2 == 0 { e.from } else { e.to }
    }

    pub fn target(&self, h: usize) -> usize {
        self.origin(h ^ 1)
    }

    pub fn next(&self, h: usize) -> usize {
        self.next[h]
    }

    pub fn face_of(&self, h: usize) -> usize {
        self.face_of[h]
    }

    /// Direction of half-edge `h` as it leaves its origin.
    pub fn direction(&self, h: usize) -> f64 {
        self.angle[h]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        !matches!(self.edges[e].carrier, Carrier::Segment(_))
    }

    pub fn half_edge_length(&self, h: usize) -> f64 {
        let e = &self.edges[h / 2];
        match (e.carrier, self.window) {
            (Carrier::Arc { sweep }, Window::Disk { radius }) => radius * sweep,
            _ => (self.vertices[e.to].pos - self.vertices[e.from].pos).norm(),
        }
    }

    fn compute_direction(&self, h: usize) -> f64 {
        let e = &self.edges[h / 2];
        let (p, q) = (self.vertices[self.origin(h)].pos, self.vertices[self.target(h)].pos);
        let raw = match e.carrier {
            Carrier::Arc { .. } => {
                if h % 2 == 0 {
                    p.arg() + PI / 2.0
                } else {
                    p.arg() - PI / 2.0
                }
            }
            _ => (q - p).arg(),
        };
        raw.rem_euclid(TAU)
    }

    fn link(&mut self) -> Result<(), TessError> {
        let nh = 2 * self.edges.len();
        self.angle = (0..nh).map(|h| self.compute_direction(h)).collect();
        let mut around: Vec<Vec<usize>> = vec![Vec::new(); self.vertices.len()];
        for h in 0..nh {
            around[self.origin(h)].push(h);
        }
        let mut pos = vec![0usize; nh];
        for (v, list) in around.iter_mut().enumerate() {
            list.sort_by(|&a, &b| self.angle[a].total_cmp(&self.angle[b]));
            for k in 0..list.len() {
                if list.len() > 1 {
                    let gap = (self.angle[list[(k + 1) % list.len()]] - self.angle[list[k]]).rem_euclid(TAU);
                    if gap < 1e-12 {
                        return Err(TessError::Overlap(v));
                    }
                }
                pos[list[k]] = k;
            }
        }
        self.next = (0..nh)
            .map(|h| {
                let t = h ^ 1;
                let list = &around[self.origin(t)];
                list[(pos[t] + list.len() - 1) % list.len()]
            })
            .collect();

        self.face_of = vec![usize::MAX; nh];
        self.faces.clear();
        for start in 0..nh {
            if self.face_of[start] != usize::MAX {
                continue;
            }
            let f = self.faces.len();
            let mut cycle = Vec::new();
            let mut h = start;
            loop {
                self.face_of[h] = f;
                cycle.push(h);
                h = self.next[h];
                if h == start {
                    break;
                }
                if cycle.len() > nh {
                    return Err(TessError::OpenFace(start));
                }
            }
            self.faces.push(cycle);
        }
        let first_boundary = (0..self.edges.len())
            .find(|&e| self.is_boundary_edge(e))
            .ok_or(TessError::OpenFace(0))?;
        self.outer_face = self.face_of[2 * first_boundary + 1];

        let mut uf = UnionFind((0..self.vertices.len()).collect());
        for e in &self.edges {
            uf.union(e.from, e.to);
        }
        let mut roots: Vec<usize> = (0..self.vertices.len()).map(|v| uf.find(v)).collect();
        roots.sort_unstable();
        roots.dedup();
        self.components = roots.len();
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Faces of the subdivision, the outer face included. A face with holes
    /// owns several boundary cycles but is counted once.
    pub fn face_count(&self) -> usize {
        self.faces.len() + 1 - self.components
    }

    pub fn crossing_count(&self) -> usize {
        self.vertices.iter().filter(|v| v.kind == VertexKind::Crossing).count()
    }

    /// `V − E + F − (1 + C)`, zero for every valid subdivision.
    pub fn euler_defect(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
            - 1
            - self.components as i64
    }

    /// Signed area enclosed by a half-edge cycle.
    pub fn cycle_area(&self, cycle: &[usize]) -> f64 {
        let mut twice = 0.0;
        let mut bulge = 0.0;
        for &h in cycle {
            let (p, q) = (self.vertices[self.origin(h)].pos, self.vertices[self.target(h)].pos);
            twice += cross(p, q);
            if let (Carrier::Arc { sweep }, Window::Disk { radius }) = (self.edges[h / 2].carrier, self.window) {
                let seg = 0.5 * radius * radius * (sweep - sweep.sin());
                bulge += if h % 2 == 0 { seg } else { -seg };
            }
        }
        0.5 * twice + bulge
    }

    /// Corner angle at the head of `h` inside the face to its left.
    pub fn corner_angle(&self, h: usize) -> f64 {
        let out = self.next[h];
        if out == h ^ 1 {
            return TAU;
        }
        (self.angle[h ^ 1] - self.angle[out]).rem_euclid(TAU)
    }

    pub fn cycle_touches_boundary(&self, cycle: &[usize]) -> bool {
        cycle.iter().any(|&h| {
            self.is_boundary_edge(h / 2)
                || matches!(self.vertices[self.origin(h)].kind, VertexKind::Boundary | VertexKind::Corner)
        })
    }

    /// Vertex positions around a face cycle.
    pub fn cycle_polygon(&self, cycle: &[usize]) -> Vec<Complex64> {
        cycle.iter().map(|&h| self.vertices[self.origin(h)].pos).collect()
    }

    /// Lengths of segment pieces joining two crossings whose midpoint lies in `region`.
    pub fn interior_edge_lengths(&self, region: &Window) -> Vec<f64> {
        self.edges
            .iter()
            .filter(|e| {
                matches!(e.carrier, Carrier::Segment(_))
                    && self.vertices[e.from].kind == VertexKind::Crossing
                    && self.vertices[e.to].kind == VertexKind::Crossing
                    && region.contains((self.vertices[e.from].pos + self.vertices[e.to].pos) * 0.5)
            })
            .map(|e| (self.vertices[e.to].pos - self.vertices[e.from].pos).norm())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plp::sample_plp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    /// Face walk that rescans every edge at each step instead of using the
    /// sorted rotation.
    fn slow_faces(arr: &Arrangement) -> (usize, Vec<f64>) {
        let nh = 2 * arr.edges.len();
        let mut seen = vec![false; nh];
        let mut areas = Vec::new();
        for start in 0..nh {
            if seen[start] {
                continue;
            }
            let mut h = start;
            let mut cycle = Vec::new();
            while !seen[h] {
                seen[h] = true;
                cycle.push(h);
                let v = arr.target(h);
                let back = arr.direction(h ^ 1);
                // smallest clockwise turn from the reverse direction
                let mut best = (f64::INFINITY, usize::MAX);
                for g in 0..nh {
                    if arr.origin(g) != v || g == h ^ 1 {
                        continue;
                    }
                    let turn = (back - arr.direction(g)).rem_euclid(TAU);
                    if turn < best.0 {
                        best = (turn, g);
                    }
                }
                h = if best.1 == usize::MAX { h ^ 1 } else { best.1 };
            }
            areas.push(arr.cycle_area(&cycle));
        }
        (areas.len(), areas)
    }

    #[test]
    fn empty_square_and_disk() {
        let sq = build_arrangement(&[], Window::Square { half: 1.0 }).unwrap();
        assert_eq!((sq.vertex_count(), sq.edge_count(), sq.face_count()), (4, 4, 2));
        assert_eq!(sq.euler_defect(), 0);
        let d = build_arrangement(&[], Window::Disk { radius: 2.0 }).unwrap();
        assert_eq!((d.vertex_count(), d.edge_count(), d.face_count()), (1, 1, 2));
        let inner = (0..d.faces.len()).find(|&f| f != d.outer_face).unwrap();
        assert!((d.cycle_area(&d.faces[inner]) - 4.0 * PI).abs() < 1e-12);
        assert!((d.cycle_area(&d.faces[d.outer_face]) + 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn crossing_diameters() {
        let segs = [Segment::new(c(-1.0, 0.0), c(1.0, 0.0)), Segment::new(c(0.0, -1.0), c(0.0, 1.0))];
        let arr = build_arrangement(&segs, Window::Disk { radius: 1.0 }).unwrap();
        assert_eq!(arr.vertex_count(), 5);
        assert_eq!(arr.face_count() - 1, 4);
        assert_eq!(arr.euler_defect(), 0);
        for (f, cyc) in arr.faces.iter().enumerate() {
            if f != arr.outer_face {
                assert!((arr.cycle_area(cyc) - PI / 4.0).abs() < 1e-12);
                let angles: Vec<f64> = cyc.iter().map(|&h| arr.corner_angle(h)).collect();
                assert!(angles.iter().any(|a| (a - PI / 2.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn vertical_chord_splits_square() {
        let segs = [Segment::new(c(0.0, -0.5), c(0.0, 0.5))];
        let arr = build_arrangement(&segs, Window::Square { half: 0.5 }).unwrap();
        let areas: Vec<f64> = (0..arr.faces.len())
            .filter(|&f| f != arr.outer_face)
            .map(|f| arr.cycle_area(&arr.faces[f]))
            .collect();
        assert_eq!(areas.len(), 2);
        assert!(areas.iter().all(|a| (a - 0.5).abs() < 1e-12));
    }

    #[test]
    fn dangling_segment_and_floating_component() {
        let w = Window::Square { half: 2.0 };
        let segs = [
            Segment::new(c(-2.0, 0.0), c(0.0, 0.0)),
            Segment::new(c(0.5, 0.5), c(1.5, 1.5)),
        ];
        let arr = build_arrangement(&segs, w).unwrap();
        assert_eq!(arr.components, 2);
        assert_eq!(arr.euler_defect(), 0);
    }

    #[test]
    fn coincident_crossings_flagged() {
        let segs = [
            Segment::new(c(-1.0, 0.0), c(1.0, 0.0)),
            Segment::new(c(0.0, -1.0), c(0.0, 1.0)),
            Segment::new(c(-1.0, -1.0), c(1.0, 1.0)),
        ];
        match build_arrangement(&segs, Window::Square { half: 1.0 }) {
            Err(TessError::Degenerate(t)) => assert!(t.contains(&[0, 1, 2])),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn random_chords_match_slow_walk() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for window in [Window::Disk { radius: 10.0 }, Window::Square { half: 8.0 }] {
            let mut sample = sample_plp(1.0, window, &mut rng);
            sample.lines.truncate(50);
            let segs = segments_from_lines(&sample, &window);
            let arr = build_arrangement(&segs, window).unwrap();
            let (cycles, areas) = slow_faces(&arr);
            assert_eq!(cycles, arr.faces.len());
            assert_eq!(arr.euler_defect(), 0);
            // a chord family in a convex window: bounded faces = 1 + chords + crossings
            assert_eq!(arr.face_count() - 1, 1 + segs.len() + arr.crossing_count());
            let bounded: f64 = areas.iter().filter(|a| **a > 0.0).sum();
            assert!((bounded - window.area()).abs() < 1e-6 * window.area());
        }
    }
}

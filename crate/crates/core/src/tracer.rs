//! Geodesics of prescribed length on the genus-2 surface.
//!
//! A trace is the sequence of octagon crossings of a unit-speed geodesic,
//! each stored as a [`GeodesicArc`] in fundamental-domain coordinates. The
//! flow state between crossings is a point plus the two ideal endpoints of
//! the lifted geodesic; on exit through side `s` both are pushed through
//! `pairing[s]`, which keeps every arc an exact geodesic segment.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypgeom::{
    arc_intersection, direction_towards_ideal, geodesic_from_tangent, hyp_distance, point_along,
    GeodesicArc, GeomError, HPoint, Isometry, UnitTangent,
};
use crate::plp::{Chord, ChordConfiguration};
use crate::surface::{Surface, SIDES};

/// Exits closer than this (Klein coordinates) to a vertex are rejected.
pub const VERTEX_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("start point lies outside the octagon")]
    StartOutside,
    #[error("geodesic passes within {VERTEX_TOL} of a vertex at time {0}")]
    VertexHit(f64),
    #[error("no exit side found at time {0}")]
    NoExit(f64),
    #[error("trace exceeded {0} crossings")]
    TooManyCrossings(usize),
    #[error("invalid trace length {0}")]
    BadLength(f64),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// One crossing of the octagon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceArc {
    pub arc: GeodesicArc,
    /// Flow time at the arc's start point.
    pub start_time: f64,
    /// Side through which the geodesic leaves; `None` for the final arc.
    pub exit_side: Option<usize>,
}

impl TraceArc {
    pub fn end_time(&self) -> f64 {
        self.start_time + self.arc.length
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicTrace {
    pub arcs: Vec<TraceArc>,
    pub total_length: f64,
    pub start: UnitTangent,
    pub seed: Option<u64>,
}

impl GeodesicTrace {
    /// Position and forward direction at the end of the trace.
    pub fn end_tangent(&self) -> UnitTangent {
        match self.arcs.last() {
            None => self.start,
            Some(a) => UnitTangent::new(a.arc.end, a.arc.direction_at(&a.arc.end)),
        }
    }

    /// Mean hyperbolic length of an octagon crossing.
    pub fn mean_crossing_length(&self) -> f64 {
        if self.arcs.is_empty() {
            0.0
        } else {
            self.total_length / self.arcs.len() as f64
        }
    }
}

/// Follow the geodesic through `start` for hyperbolic length `t`.
pub fn trace_geodesic(
    surface: &Surface,
    start: UnitTangent,
    t: f64,
) -> Result<GeodesicTrace, TraceError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(TraceError::BadLength(t));
    }
    if !surface.contains(&start.base) {
        return Err(TraceError::StartOutside);
    }
    let mut arcs = Vec::new();
    let (mut back, mut fwd) = geodesic_from_tangent(&start);
    let mut p = start.base;
    let mut entry: Option<usize> = None;
    let mut time = 0.0;
    // crossings shorter than 1e-3 on average would indicate a stuck trace
    let max_arcs = 1000 + (t * 1000.0) as usize;
    while time < t {
        if arcs.len() > max_arcs {
            return Err(TraceError::TooManyCrossings(max_arcs));
        }
        let (q, side) = exit_point(surface, &p, fwd, entry, time)?;
        let seg = hyp_distance(&p, &q);
        let remaining = t - time;
        if seg >= remaining {
            let dir = direction_towards_ideal(&p, fwd);
            let end = point_along(&p, dir, remaining);
            arcs.push(TraceArc {
                arc: GeodesicArc::on_geodesic(p, end, (back, fwd)),
                start_time: time,
                exit_side: None,
            });
            break;
        }
        arcs.push(TraceArc {
            arc: GeodesicArc::on_geodesic(p, q, (back, fwd)),
            start_time: time,
            exit_side: Some(side),
        });
        let g = surface.pairing(side);
        p = g.apply(&q)?;
        fwd = g.apply_boundary(fwd);
        back = g.apply_boundary(back);
        entry = Some(Surface::partner(side));
        time += seg;
    }
    Ok(GeodesicTrace {
        arcs,
        total_length: t,
        start,
        seed: None,
    })
}

/// Where the ray from `p` towards the ideal point `fwd` leaves the octagon.
fn exit_point(
    surface: &Surface,
    p: &HPoint,
    fwd: f64,
    entry: Option<usize>,
    time: f64,
) -> Result<(HPoint, usize), TraceError> {
    let pk = p.to_klein();
    let d = Complex64::from_polar(1.0, fwd) - pk;
    let h = surface.klein_offset();
    let mut best: Option<(f64, usize)> = None;
    for s in 0..SIDES {
        if entry == Some(s) {
            continue;
        }
        let n = surface.klein_normal(s);
        let den = d.re * n.re + d.im * n.im;
        if den <= 0.0 {
            continue;
        }
        let tt = ((h - (pk.re * n.re + pk.im * n.im)) / den).max(0.0);
        if best.is_none_or(|(b, _)| tt < b) {
            best = Some((tt, s));
        }
    }
    let (tt, side) = best.ok_or(TraceError::NoExit(time))?;
    let qk = pk + d * tt;
    if surface
        .klein_vertices()
        .iter()
        .any(|v| (qk - v).norm() < VERTEX_TOL)
    {
        return Err(TraceError::VertexHit(time));
    }
    Ok((HPoint::from_klein(qk)?, side))
}

/// A transversal self-intersection of the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfCrossing {
    pub point: HPoint,
    /// Unsigned angle in `(0, π)` between the forward tangents.
    pub angle: f64,
    /// Arc indices `(i, j)` with `i < j`.
    pub arcs: (usize, usize),
    /// Hyperbolic distance from each arc's start.
    pub along: (f64, f64),
    pub tangential: bool,
}

impl SelfCrossing {
    /// Flow times of the two visits.
    pub fn times(&self, trace: &GeodesicTrace) -> (f64, f64) {
        (
            trace.arcs[self.arcs.0].start_time + self.along.0,
            trace.arcs[self.arcs.1].start_time + self.along.1,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct IntersectionSet {
    pub vertices: Vec<SelfCrossing>,
}

impl IntersectionSet {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn tangential_count(&self) -> usize {
        self.vertices.iter().filter(|v| v.tangential).count()
    }

    /// Smallest Euclidean distance between distinct vertices (`∞` if < 2).
    pub fn min_separation(&self) -> f64 {
        let mut pts: Vec<(f64, f64)> = self.vertices.iter().map(|v| (v.point.x(), v.point.y())).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[j].0 - pts[i].0 >= best {
                    break;
                }
                let d = ((pts[j].0 - pts[i].0).powi(2) + (pts[j].1 - pts[i].1).powi(2)).sqrt();
                best = best.min(d);
            }
        }
        best
    }

    /// Number of vertex pairs closer than `tol` (Euclidean, disk coordinates).
    pub fn close_pairs(&self, tol: f64) -> usize {
        let mut pts: Vec<(f64, f64)> = self.vertices.iter().map(|v| (v.point.x(), v.point.y())).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut n = 0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[j].0 - pts[i].0 >= tol {
                    break;
                }
                if (pts[j].0 - pts[i].0).hypot(pts[j].1 - pts[i].1) < tol {
                    n += 1;
                }
            }
        }
        n
    }
}

fn crossing_of(trace: &GeodesicTrace, i: usize, j: usize) -> Option<SelfCrossing> {
    let (a, b) = (&trace.arcs[i].arc, &trace.arcs[j].arc);
    arc_intersection(a, b).map(|x| SelfCrossing {
        point: x.point,
        angle: x.angle,
        arcs: (i, j),
        along: x.along,
        tangential: x.tangential,
    })
}

/// All self-intersections, checking every pair of arcs.
pub fn self_intersections_brute_force(trace: &GeodesicTrace) -> IntersectionSet {
    let n = trace.arcs.len();
    let mut vertices = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if let Some(x) = crossing_of(trace, i, j) {
                vertices.push(x);
            }
        }
    }
    IntersectionSet { vertices }
}

/// All self-intersections, pruning pairs with a uniform grid over the Klein disk.
pub fn self_intersections(trace: &GeodesicTrace) -> IntersectionSet {
    let n = trace.arcs.len();
    if n < 2 {
        return IntersectionSet::default();
    }
    let boxes: Vec<[f64; 4]> = trace
        .arcs
        .iter()
        .map(|a| {
            let (p, q) = a.arc.klein_endpoints();
            [p.re.min(q.re), p.im.min(q.im), p.re.max(q.re), p.im.max(q.im)]
        })
        .collect();
    let mean_extent =
        boxes.iter().map(|b| (b[2] - b[0]).max(b[3] - b[1])).sum::<f64>() / n as f64;
    let cells = ((2.0 / mean_extent.max(1e-9)).ceil() as usize).clamp(1, 256);
    let size = 2.0 / cells as f64;
    let cell = |x: f64| (((x + 1.0) / size).floor().max(0.0) as usize).min(cells - 1);
    let ranges: Vec<[usize; 4]> = boxes
        .iter()
        .map(|b| [cell(b[0]), cell(b[1]), cell(b[2]), cell(b[3])])
        .collect();
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
    for (i, r) in ranges.iter().enumerate() {
        for cy in r[1]..=r[3] {
            for cx in r[0]..=r[2] {
                grid[cy * cells + cx].push(i);
            }
        }
    }
    let mut vertices = Vec::new();
    for cy in 0..cells {
        for cx in 0..cells {
            let members = &grid[cy * cells + cx];
            for (k, &i) in members.iter().enumerate() {
                for &j in &members[k + 1..] {
                    // report each pair only from the lowest cell shared by both boxes
                    let (ri, rj) = (&ranges[i], &ranges[j]);
                    if ri[0].max(rj[0]) != cx || ri[1].max(rj[1]) != cy {
                        continue;
                    }
                    let (bi, bj) = (&boxes[i], &boxes[j]);
                    if bi[0] > bj[2] || bj[0] > bi[2] || bi[1] > bj[3] || bj[1] > bi[3] {
                        continue;
                    }
                    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                    if let Some(x) = crossing_of(trace, lo, hi) {
                        vertices.push(x);
                    }
                }
            }
        }
    }
    vertices.sort_by_key(|v| v.arcs);
    IntersectionSet { vertices }
}

/// Lifts of a shrinking disk around `center` relevant to arcs in the octagon.
#[derive(Debug, Clone)]
pub struct DiskProbe {
    pub center: HPoint,
    pub radius: f64,
    lifts: Vec<Lift>,
}

#[derive(Debug, Clone)]
struct Lift {
    /// Moves the lifted center `g·x` to the origin.
    frame: Isometry,
    /// Rotation taking frame directions to directions measured at `x`.
    rotation: f64,
}

impl DiskProbe {
    /// Disk of hyperbolic radius `radius` about `center` (a point of the octagon).
    pub fn new(surface: &Surface, center: HPoint, radius: f64) -> Self {
        let reach = surface.octagon.circumradius + radius + 1e-9;
        let local = Isometry::to_origin(&center);
        let lifts = surface
            .group_ball(4)
            .into_iter()
            .filter_map(|g| {
                let c = g.apply(&center).ok()?;
                if hyp_distance(&c, &HPoint::ORIGIN) > reach {
                    return None;
                }
                let frame = Isometry::to_origin(&c);
                let back = local * g.inverse() * frame.inverse();
                let w = back.apply_complex(Complex64::new(0.5, 0.0));
                Some(Lift {
                    frame,
                    rotation: w.arg(),
                })
            })
            .collect();
        Self {
            center,
            radius,
            lifts,
        }
    }

    pub fn lift_count(&self) -> usize {
        self.lifts.len()
    }
}

/// One passage of the trace through a disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskCrossing {
    pub entry_time: f64,
    pub exit_time: f64,
    /// Direction from the disk center to the entry point.
    pub entry_angle: f64,
    pub exit_angle: f64,
    /// Arc containing the point of closest approach.
    pub arc: usize,
    /// False when the trace starts or ends inside the disk.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskCrossingRecord {
    pub center: HPoint,
    pub radius: f64,
    /// Complete crossings on the circle rescaled to radius α, oriented entry→exit.
    pub chords: ChordConfiguration,
    pub incomplete: usize,
    /// All passages sorted by entry time, incomplete ones included.
    pub crossings: Vec<DiskCrossing>,
}

/// Solve `|p + t (q − p)| = r` in the Klein frame of a lift.
fn klein_chord(p: Complex64, q: Complex64, r: f64) -> Option<(f64, f64)> {
    let d = q - p;
    let a = d.norm_sqr();
    if a == 0.0 {
        return None;
    }
    let b = p.re * d.re + p.im * d.im;
    let c = p.norm_sqr() - r * r;
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some(((-b - s) / a, (-b + s) / a))
}

/// Signed hyperbolic distance along the arc from `p` to the Klein point `k`.
fn signed_distance(p: &HPoint, k: Complex64, param: f64) -> f64 {
    let q = HPoint::from_klein(k).unwrap_or(*p);
    let d = hyp_distance(p, &q);
    if param < 0.0 {
        -d
    } else {
        d
    }
}

/// Passages of `trace` through the probe disk, with chords rescaled to radius α.
pub fn disk_crossings(trace: &GeodesicTrace, probe: &DiskProbe, alpha: f64) -> DiskCrossingRecord {
    let kr = probe.radius.tanh();
    let mut crossings = Vec::new();
    for (idx, ta) in trace.arcs.iter().enumerate() {
        for lift in &probe.lifts {
            let p = lift.frame.apply_complex(ta.arc.start.z());
            let q = lift.frame.apply_complex(ta.arc.end.z());
            let (Ok(p), Ok(q)) = (HPoint::from_complex(p), HPoint::from_complex(q)) else {
                continue;
            };
            let (pk, qk) = (p.to_klein(), q.to_klein());
            let Some((t1, t2)) = klein_chord(pk, qk, kr) else {
                continue;
            };
            let mid = 0.5 * (t1 + t2);
            if !(0.0..1.0).contains(&mid) {
                continue;
            }
            let e1 = pk + (qk - pk) * t1;
            let e2 = pk + (qk - pk) * t2;
            let entry_time = ta.start_time + signed_distance(&p, e1, t1);
            let exit_time = ta.start_time + signed_distance(&p, e2, t2);
            crossings.push(DiskCrossing {
                entry_time,
                exit_time,
                entry_angle: crate::hypgeom::normalize_angle(e1.arg() + lift.rotation),
                exit_angle: crate::hypgeom::normalize_angle(e2.arg() + lift.rotation),
                arc: idx,
                complete: entry_time >= 0.0 && exit_time <= trace.total_length,
            });
        }
    }
    crossings.sort_by(|a, b| a.entry_time.total_cmp(&b.entry_time));
    let chords = crossings
        .iter()
        .filter(|c| c.complete)
        .map(|c| Chord::new(c.entry_angle, c.exit_angle, true))
        .collect();
    DiskCrossingRecord {
        center: probe.center,
        radius: probe.radius,
        chords: ChordConfiguration { alpha, chords },
        incomplete: crossings.iter().filter(|c| !c.complete).count(),
        crossings,
    }
}

fn arc_meets_probe(arc: &GeodesicArc, probe: &DiskProbe) -> bool {
    let kr2 = probe.radius.tanh().powi(2);
    probe.lifts.iter().any(|lift| {
        let (Ok(p), Ok(q)) = (lift.frame.apply(&arc.start), lift.frame.apply(&arc.end)) else {
            return false;
        };
        let (pk, qk) = (p.to_klein(), q.to_klein());
        let d = qk - pk;
        let a = d.norm_sqr();
        let t = if a == 0.0 {
            0.0
        } else {
            (-(pk.re * d.re + pk.im * d.im) / a).clamp(0.0, 1.0)
        };
        (pk + d * t).norm_sqr() < kr2
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDiagnostics {
    /// Entry time of the first passage through the first disk (0 if it starts inside).
    pub first_entry: Option<f64>,
    /// Gaps between successive entry times into the first disk.
    pub return_gaps: Vec<f64>,
    /// Octagon crossings meeting both disks.
    pub double_hits: usize,
}

/// Return-time and double-hit diagnostics for two disks.
pub fn entry_time_diagnostics(
    trace: &GeodesicTrace,
    probe: &DiskProbe,
    other: &DiskProbe,
) -> EntryDiagnostics {
    let record = disk_crossings(trace, probe, 1.0);
    let entries: Vec<f64> = record.crossings.iter().map(|c| c.entry_time.max(0.0)).collect();
    let double_hits = trace
        .arcs
        .iter()
        .filter(|a| arc_meets_probe(&a.arc, probe) && arc_meets_probe(&a.arc, other))
        .count();
    EntryDiagnostics {
        first_entry: entries.first().copied(),
        return_gaps: entries.windows(2).map(|w| w[1] - w[0]).collect(),
        double_hits,
    }
}

/// JSON-friendly trace dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDump {
    pub seed: Option<u64>,
    pub length: f64,
    /// `[x0, y0, x1, y1, length]` per arc.
    pub arcs: Vec<[f64; 5]>,
    pub vertices: Vec<[f64; 3]>,
}

impl TraceDump {
    pub fn new(trace: &GeodesicTrace, inters: &IntersectionSet) -> Self {
        Self {
            seed: trace.seed,
            length: trace.total_length,
            arcs: trace
                .arcs
                .iter()
                .map(|a| {
                    [
                        a.arc.start.x(),
                        a.arc.start.y(),
                        a.arc.end.x(),
                        a.arc.end.y(),
                        a.arc.length,
                    ]
                })
                .collect(),
            vertices: inters
                .vertices
                .iter()
                .map(|v| [v.point.x(), v.point.y(), v.angle])
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "arc,x0,y0,x1,y1,length")?;
        for (i, a) in self.arcs.iter().enumerate() {
            writeln!(
                out,
                "{i},{:.12},{:.12},{:.12},{:.12},{:.12}",
                a[0], a[1], a[2], a[3], a[4]
            )?;
        }
        Ok(())
    }
}

/// The same geodesic run backwards from the end of `trace`.
pub fn reversed_trace(surface: &Surface, trace: &GeodesicTrace) -> Result<GeodesicTrace, TraceError> {
    let end = trace.end_tangent();
    trace_geodesic(
        surface,
        UnitTangent::new(end.base, end.direction() + PI),
        trace.total_length,
    )
}

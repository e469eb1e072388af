//! Euclidean Poisson line processes.
//!
//! A line is stored as `(r, θ)` with `θ ∈ [0, π)` and describes
//! `{ (x, y) : x cos θ + y sin θ = r }`. An intensity-`λ` process is a Poisson
//! point process of intensity `λ/π` on the strip `ℝ × [0, π)`, so the number
//! of lines meeting a disk of radius `R` is Poisson with mean `2λR`.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypgeom::{angular_gap, normalize_angle};
use crate::quad::integrate_with_breaks;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlpError {
    #[error("arc length {0} outside [0, 2π)")]
    BadArc(f64),
    #[error("arcs of a pair overlap")]
    OverlappingArcs,
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Window {
    /// Disk of the given radius centered at the origin.
    Disk { radius: f64 },
    /// The square `[−half, half]²`.
    Square { half: f64 },
}

impl Window {
    /// Radius of the smallest centered disk containing the window.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Window::Disk { radius } => radius,
            Window::Square { half } => half * 2f64.sqrt(),
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Window::Disk { radius } => PI * radius * radius,
            Window::Square { half } => 4.0 * half * half,
        }
    }

    pub fn meets(&self, line: &Line) -> bool {
        match *self {
            Window::Disk { radius } => line.r.abs() < radius,
            Window::Square { half } => {
                line.r.abs() < half * (line.theta.cos().abs() + line.theta.sin().abs())
            }
        }
    }

    pub fn contains(&self, p: Complex64) -> bool {
        match *self {
            Window::Disk { radius } => p.norm_sqr() <= radius * radius,
            Window::Square { half } => p.re.abs() <= half && p.im.abs() <= half,
        }
    }

    /// The part of `line` inside the window, as a segment.
    pub fn clip(&self, line: &Line) -> Option<(Complex64, Complex64)> {
        let n = Complex64::new(line.theta.cos(), line.theta.sin());
        let t = Complex64::new(-n.im, n.re);
        let foot = n * line.r;
        match *self {
            Window::Disk { radius } => {
                if line.r.abs() >= radius {
                    return None;
                }
                let h = (radius * radius - line.r * line.r).sqrt();
                Some((foot - t * h, foot + t * h))
            }
            Window::Square { half } => {
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for (p, d) in [(foot.re, t.re), (foot.im, t.im)] {
                    if d.abs() < 1e-300 {
                        if p.abs() > half {
                            return None;
                        }
                        continue;
                    }
                    let (s0, s1) = ((-half - p) / d, (half - p) / d);
                    lo = lo.max(s0.min(s1));
                    hi = hi.min(s0.max(s1));
                }
                if hi - lo <= 0.0 {
                    return None;
                }
                Some((foot + t * lo, foot + t * hi))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub r: f64,
    pub theta: f64,
}

impl Line {
    /// Build from any `(r, θ)`, folding θ into `[0, π)`.
    pub fn new(r: f64, theta: f64) -> Self {
        let t = normalize_angle(theta);
        if t >= PI {
            Line { r: -r, theta: t - PI }
        } else {
            Line { r, theta: t }
        }
    }

    pub fn normal(&self) -> Complex64 {
        Complex64::new(self.theta.cos(), self.theta.sin())
    }

    /// Crossing point with another line, if they are not parallel.
    pub fn intersection(&self, other: &Line) -> Option<Complex64> {
        let (a, b) = (self.normal(), other.normal());
        let det = a.re * b.im - a.im * b.re;
        if det.abs() < 1e-15 {
            return None;
        }
        Some(Complex64::new(
            (self.r * b.im - other.r * a.im) / det,
            (a.re * other.r - b.re * self.r) / det,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSample {
    pub lines: Vec<Line>,
    pub intensity: f64,
    pub window: Window,
}

impl LineSample {
    /// CSV rows `replicate,r,theta`.
    pub fn write_csv<W: Write>(&self, replicate: u64, out: &mut W) -> io::Result<()> {
        for l in &self.lines {
            writeln!(out, "{replicate},{:.12},{:.12}", l.r, l.theta)?;
        }
        Ok(())
    }

    /// Abscissae where the lines cross the x-axis inside the window.
    pub fn axis_crossings(&self) -> Vec<f64> {
        let axis = Line { r: 0.0, theta: PI / 2.0 };
        let mut xs: Vec<f64> = self
            .lines
            .iter()
            .filter_map(|l| l.intersection(&axis))
            .filter(|p| self.window.contains(*p))
            .map(|p| p.re)
            .collect();
        xs.sort_by(f64::total_cmp);
        xs
    }

    /// Number of pairwise line intersections inside `region`.
    pub fn vertices_in(&self, region: &Window) -> usize {
        let mut n = 0;
        for (i, a) in self.lines.iter().enumerate() {
            for b in &self.lines[i + 1..] {
                if let Some(p) = a.intersection(b) {
                    if region.contains(p) {
                        n += 1;
                    }
                }
            }
        }
        n
    }
}

/// Sample an intensity-`λ` Poisson line process restricted to `window`.
pub fn sample_plp<R: Rng + ?Sized>(lambda: f64, window: Window, rng: &mut R) -> LineSample {
    let bound = window.bounding_radius();
    let mean = 2.0 * lambda * bound;
    let n = if mean > 0.0 {
        Poisson::new(mean).map(|d| d.sample(rng) as usize).unwrap_or(0)
    } else {
        0
    };
    let mut lines = Vec::with_capacity(n);
    for _ in 0..n {
        let r = (2.0 * rng.random::<f64>() - 1.0) * bound;
        let theta = rng.random::<f64>() * PI;
        let line = Line { r, theta };
        if window.meets(&line) {
            lines.push(line);
        }
    }
    LineSample {
        lines,
        intensity: lambda,
        window,
    }
}

/// A rigid motion of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PlaneMotion {
    Rotation(f64),
    Translation(f64, f64),
}

/// Move every line by `motion` and keep those still meeting the window.
pub fn apply_isometry_to_sample(sample: &LineSample, motion: PlaneMotion) -> LineSample {
    let lines = sample
        .lines
        .iter()
        .map(|l| match motion {
            PlaneMotion::Rotation(phi) => Line::new(l.r, l.theta + phi),
            PlaneMotion::Translation(a, b) => Line {
                r: l.r + a * l.theta.cos() + b * l.theta.sin(),
                theta: l.theta,
            },
        })
        .filter(|l| sample.window.meets(l))
        .collect();
    LineSample {
        lines,
        intensity: sample.intensity,
        window: sample.window,
    }
}

/// Half-open arc `[start, start + len)` of the circle, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcInterval {
    pub start: f64,
    pub len: f64,
}

impl ArcInterval {
    pub fn new(start: f64, end: f64) -> Result<Self, PlpError> {
        let len = end - start;
        if !(0.0..TAU).contains(&len) {
            return Err(PlpError::BadArc(len));
        }
        Ok(Self {
            start: normalize_angle(start),
            len,
        })
    }

    pub fn end(&self) -> f64 {
        self.start + self.len
    }

    pub fn contains(&self, angle: f64) -> bool {
        (angle - self.start).rem_euclid(TAU) < self.len
    }

    pub fn overlaps(&self, other: &ArcInterval) -> bool {
        if self.len == 0.0 || other.len == 0.0 {
            return false;
        }
        (other.start - self.start).rem_euclid(TAU) < self.len
            || (self.start - other.start).rem_euclid(TAU) < other.len
    }
}

/// Two disjoint arcs on the circle of radius `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcPair {
    pub a: ArcInterval,
    pub b: ArcInterval,
    pub alpha: f64,
}

impl ArcPair {
    pub fn new(a: ArcInterval, b: ArcInterval, alpha: f64) -> Result<Self, PlpError> {
        if !(alpha > 0.0) {
            return Err(PlpError::BadRadius(alpha));
        }
        if a.overlaps(&b) {
            return Err(PlpError::OverlappingArcs);
        }
        Ok(Self { a, b, alpha })
    }

    pub fn from_angles(a: (f64, f64), b: (f64, f64), alpha: f64) -> Result<Self, PlpError> {
        Self::new(ArcInterval::new(a.0, a.1)?, ArcInterval::new(b.0, b.1)?, alpha)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            alpha: self.alpha * c,
            ..*self
        }
    }

    /// Measure of offsets `r` whose line at normal angle `θ` has one chord
    /// endpoint in each arc.
    pub fn psi(&self, theta: f64) -> f64 {
        let one_way = |fwd: &ArcInterval, back: &ArcInterval| -> f64 {
            let mut total = 0.0;
            for (lo1, hi1) in forward_hits(theta, fwd) {
                for (lo2, hi2) in backward_hits(theta, back) {
                    let lo = lo1.max(lo2);
                    let hi = hi1.min(hi2);
                    if hi > lo {
                        total += lo.cos() - hi.cos();
                    }
                }
            }
            total
        };
        self.alpha * (one_way(&self.a, &self.b) + one_way(&self.b, &self.a))
    }

    /// Normal angles in `[0, π)` where `ψ` is not smooth.
    fn kinks(&self) -> Vec<f64> {
        let ends = |i: &ArcInterval| [i.start, i.end()];
        let mut out = Vec::new();
        for x in ends(&self.a).into_iter().chain(ends(&self.b)) {
            out.push(x.rem_euclid(PI));
        }
        for x in ends(&self.a) {
            for y in ends(&self.b) {
                out.push((0.5 * (x + y)).rem_euclid(PI));
            }
        }
        out
    }
}

/// Half-angle intervals `u ∈ [0, π]` with `θ + u` in `arc`.
fn forward_hits(theta: f64, arc: &ArcInterval) -> Vec<(f64, f64)> {
    let s = (arc.start - theta).rem_euclid(TAU);
    clip_to_half_turn(&[(s, s + arc.len), (s - TAU, s - TAU + arc.len)])
}

/// Half-angle intervals `u ∈ [0, π]` with `θ − u` in `arc`.
fn backward_hits(theta: f64, arc: &ArcInterval) -> Vec<(f64, f64)> {
    let e = (theta - arc.start).rem_euclid(TAU);
    clip_to_half_turn(&[(e - arc.len, e), (e - arc.len + TAU, e + TAU)])
}

fn clip_to_half_turn(raw: &[(f64, f64)]) -> Vec<(f64, f64)> {
    raw.iter()
        .filter_map(|&(lo, hi)| {
            let (lo, hi) = (lo.max(0.0), hi.min(PI));
            (hi > lo).then_some((lo, hi))
        })
        .collect()
}

/// `β_{A,B} = (1/π) ∫ ψ(θ) dθ` over `θ ∈ [0, π)`.
pub fn beta_integral(pair: &ArcPair) -> f64 {
    if pair.a.len == 0.0 || pair.b.len == 0.0 {
        return 0.0;
    }
    let f = |t: f64| pair.psi(t);
    integrate_with_breaks(&f, 0.0, PI, &pair.kinks(), 1e-10) / PI
}

/// Chord of the circle of radius α, stored by endpoint angles. When
/// `oriented` is set, the chord runs from `first` to `second`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chord {
    pub first: f64,
    pub second: f64,
    pub oriented: bool,
}

impl Chord {
    pub fn new(first: f64, second: f64, oriented: bool) -> Self {
        Self {
            first: normalize_angle(first),
            second: normalize_angle(second),
            oriented,
        }
    }

    /// Recover `(r, θ)` of the carrying line for a circle of radius α.
    pub fn to_line(&self, alpha: f64) -> Line {
        let ccw = (self.second - self.first).rem_euclid(TAU);
        let (from, gap) = if ccw <= PI {
            (self.first, ccw)
        } else {
            (self.second, TAU - ccw)
        };
        Line::new(alpha * (0.5 * gap).cos(), from + 0.5 * gap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ChordConfiguration {
    pub alpha: f64,
    pub chords: Vec<Chord>,
}

impl ChordConfiguration {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            chords: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.chords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chords.is_empty()
    }

    /// Give every chord an independent fair orientation.
    pub fn orient_randomly<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for c in &mut self.chords {
            if rng.random::<bool>() {
                std::mem::swap(&mut c.first, &mut c.second);
            }
            c.oriented = true;
        }
    }

    /// CSV rows `replicate,angle1,angle2,direction` (direction 1 when oriented).
    pub fn write_csv<W: Write>(&self, replicate: u64, out: &mut W) -> io::Result<()> {
        for c in &self.chords {
            writeln!(
                out,
                "{replicate},{:.12},{:.12},{}",
                c.first, c.second, c.oriented as u8
            )?;
        }
        Ok(())
    }
}

/// Chords cut on the circle of radius α by the sample's lines.
pub fn chords_from_lines(sample: &LineSample, alpha: f64) -> ChordConfiguration {
    let chords = sample
        .lines
        .iter()
        .filter(|l| l.r.abs() < alpha)
        .map(|l| {
            let u = (l.r / alpha).acos();
            Chord::new(l.theta + u, l.theta - u, false)
        })
        .collect();
    ChordConfiguration { alpha, chords }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct PairCounts {
    /// Chords running from A to B.
    pub forward: u32,
    /// Chords running from B to A.
    pub backward: u32,
    pub undirected: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct CrossingCountTable {
    pub replicate: u64,
    pub counts: Vec<PairCounts>,
}

impl CrossingCountTable {
    pub fn total_undirected(&self) -> u32 {
        self.counts.iter().map(|c| c.undirected).sum()
    }
}

/// Count chords with one endpoint in each arc of every pair. Chord order
/// defines direction, whether or not the chord is flagged as oriented.
pub fn crossing_counts(config: &ChordConfiguration, pairs: &[ArcPair]) -> CrossingCountTable {
    let counts = pairs
        .iter()
        .map(|p| {
            let mut c = PairCounts::default();
            for ch in &config.chords {
                if p.a.contains(ch.first) && p.b.contains(ch.second) {
                    c.forward += 1;
                } else if p.b.contains(ch.first) && p.a.contains(ch.second) {
                    c.backward += 1;
                }
            }
            c.undirected = c.forward + c.backward;
            c
        })
        .collect();
    CrossingCountTable {
        replicate: 0,
        counts,
    }
}

/// All unordered pairs of an `m`-arc equal partition of the circle.
pub fn partition_pairs(m: usize, alpha: f64) -> Vec<ArcPair> {
    let w = TAU / m as f64;
    let arc = |i: usize| ArcInterval {
        start: i as f64 * w,
        len: w,
    };
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            out.push(ArcPair {
                a: arc(i),
                b: arc(j),
                alpha,
            });
        }
    }
    out
}

/// Optimal endpoint-matching distance. Configurations of different sizes are
/// at distance `f64::INFINITY`.
pub fn config_distance(f: &ChordConfiguration, g: &ChordConfiguration) -> f64 {
    if f.len() != g.len() {
        return f64::INFINITY;
    }
    if f.is_empty() {
        return 0.0;
    }
    // ties between optimal assignments are common, so solve in a canonical
    // argument order to keep the metric exactly symmetric
    let key = |c: &ChordConfiguration| -> Vec<(u64, u64)> {
        c.chords
            .iter()
            .map(|ch| (ch.first.to_bits(), ch.second.to_bits()))
            .collect()
    };
    let (f, g) = if key(f) <= key(g) { (f, g) } else { (g, f) };
    let alpha = f.alpha;
    let cost: Vec<Vec<f64>> = f
        .chords
        .iter()
        .map(|a| g.chords.iter().map(|b| chord_distance(a, b, alpha)).collect())
        .collect();
    let assignment = hungarian(&cost);
    assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .sum()
}

/// Distance between two chords: arc length between endpoints under the better
/// of the two endpoint matchings.
pub fn chord_distance(a: &Chord, b: &Chord, alpha: f64) -> f64 {
    let d = |x: f64, y: f64| alpha * angular_gap(x, y);
    (d(a.first, b.first) + d(a.second, b.second)).min(d(a.first, b.second) + d(a.second, b.first))
}

/// Minimum-cost perfect matching on a square cost matrix; returns the column
/// assigned to each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    // potentials and matching use 1-based columns with a sentinel 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arc(a: f64, b: f64) -> ArcInterval {
        ArcInterval::new(a, b).unwrap()
    }

    #[test]
    fn zero_intensity_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_plp(0.0, Window::Disk { radius: 1.0 }, &mut rng);
        assert!(s.lines.is_empty());
    }

    #[test]
    fn disk_count_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 20_000;
        let total: usize = (0..n)
            .map(|_| sample_plp(1.0, Window::Disk { radius: 1.0 }, &mut rng).lines.len())
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 2.0).abs() < 4.0 * (2.0 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn square_lines_meet_the_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = Window::Square { half: 3.0 };
        let s = sample_plp(1.0, w, &mut rng);
        assert!(!s.lines.is_empty());
        for l in &s.lines {
            let (p, q) = w.clip(l).expect("kept lines meet the window");
            assert!(w.contains(p * (1.0 - 1e-12)) && w.contains(q * (1.0 - 1e-12)));
            assert!((0.0..PI).contains(&l.theta));
        }
    }

    #[test]
    fn vertical_diameter_chord() {
        let s = LineSample {
            lines: vec![Line { r: 0.0, theta: 0.0 }, Line { r: 1.5, theta: 0.3 }],
            intensity: 1.0,
            window: Window::Disk { radius: 2.0 },
        };
        let c = chords_from_lines(&s, 1.0);
        assert_eq!(c.len(), 1);
        let mut ends = [c.chords[0].first, c.chords[0].second];
        ends.sort_by(f64::total_cmp);
        assert!((ends[0] - PI / 2.0).abs() < 1e-15);
        assert!((ends[1] - 3.0 * PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn chord_inversion_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let l = Line {
                r: rng.random_range(-0.999..0.999),
                theta: rng.random::<f64>() * PI,
            };
            let s = LineSample {
                lines: vec![l],
                intensity: 1.0,
                window: Window::Disk { radius: 1.0 },
            };
            let back = chords_from_lines(&s, 1.0).chords[0].to_line(1.0);
            let same = (back.r - l.r).abs() < 1e-9 && (back.theta - l.theta).abs() < 1e-9;
            let flipped = (back.r + l.r).abs() < 1e-9 && angular_gap(back.theta, l.theta + PI) < 1e-9;
            assert!(same || flipped, "{l:?} vs {back:?}");
        }
    }

    #[test]
    fn degenerate_arcs_have_zero_beta() {
        let p = ArcPair::new(arc(0.5, 0.5), arc(2.0, 2.0), 1.0).unwrap();
        assert_eq!(beta_integral(&p), 0.0);
    }

    #[test]
    fn overlapping_arcs_rejected() {
        assert_eq!(
            ArcPair::new(arc(0.0, 1.0), arc(0.5, 2.0), 1.0),
            Err(PlpError::OverlappingArcs)
        );
        assert!(ArcPair::new(arc(0.0, 1.0), arc(1.0, 2.0), 1.0).is_ok());
        assert!(ArcPair::new(arc(6.0, 7.0), arc(0.0, 0.5), 1.0).is_err());
    }

    /// Crofton: lines meeting both sides of the convex quadrilateral
    /// a0 a1 b0 b1 have measure (sum of diagonals) − (other two sides).
    fn crofton_beta(a0: f64, a1: f64, b0: f64, b1: f64, alpha: f64) -> f64 {
        let d = |x: f64, y: f64| 2.0 * alpha * (0.5 * angular_gap(x, y)).sin();
        (d(a0, b0) + d(a1, b1) - d(a1, b0) - d(b1, a0)) / PI
    }

    #[test]
    fn beta_matches_crofton() {
        let cases = [
            (0.0, 1.0, 2.0, 4.0, 1.0),
            (-0.2, 0.2, PI - 0.2, PI + 0.2, 1.0),
            (0.0, PI / 2.0, PI, 3.0 * PI / 2.0, 10.0),
            (0.0, PI / 2.0, PI / 2.0, PI, 10.0),
            (5.0, 6.0, 0.5, 4.9, 2.5),
        ];
        for (a0, a1, b0, b1, alpha) in cases {
            let p = ArcPair::from_angles((a0, a1), (b0, b1), alpha).unwrap();
            let b = beta_integral(&p);
            let c = crofton_beta(a0, a1, b0, b1, alpha);
            assert!((b - c).abs() < 1e-8, "{b} vs {c}");
        }
    }

    #[test]
    fn quarter_arc_values() {
        let q = |i: f64| (i * PI / 2.0, (i + 1.0) * PI / 2.0);
        let opp = beta_integral(&ArcPair::from_angles(q(0.0), q(2.0), 10.0).unwrap());
        let adj = beta_integral(&ArcPair::from_angles(q(0.0), q(1.0), 10.0).unwrap());
        assert!((opp - 3.7292).abs() < 1e-3, "{opp}");
        assert!((adj - 2.6371).abs() < 1e-3, "{adj}");
    }

    #[test]
    fn psi_matches_r_grid_scan() {
        let p = ArcPair::from_angles((-0.2, 0.2), (PI - 0.7, PI + 0.4), 1.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let theta = rng.random::<f64>() * PI;
            let n = 10_000;
            let h = 2.0 * p.alpha / n as f64;
            let hits = (0..n)
                .filter(|&i| {
                    let r = -p.alpha + (i as f64 + 0.5) * h;
                    let u = (r / p.alpha).acos();
                    let (x, y) = (theta + u, theta - u);
                    (p.a.contains(x) && p.b.contains(y)) || (p.b.contains(x) && p.a.contains(y))
                })
                .count();
            let scan = hits as f64 * h;
            assert!((scan - p.psi(theta)).abs() < 4.0 * h, "{scan} vs {}", p.psi(theta));
        }
    }

    #[test]
    fn beta_matches_strip_monte_carlo() {
        let p = ArcPair::from_angles((-0.2, 0.2), (PI - 0.2, PI + 0.2), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| {
                let r: f64 = rng.random_range(-1.0..1.0);
                let theta = rng.random::<f64>() * PI;
                let u = r.acos();
                let (x, y) = (theta + u, theta - u);
                (p.a.contains(x) && p.b.contains(y)) || (p.b.contains(x) && p.a.contains(y))
            })
            .count();
        // strip area 2π, β = measure / π
        let frac = hits as f64 / n as f64;
        let est = frac * 2.0;
        let se = 2.0 * (frac * (1.0 - frac) / n as f64).sqrt();
        let b = beta_integral(&p);
        assert!((est - b).abs() < 3.0 * se, "{est} ± {se} vs {b}");
    }

    #[test]
    fn partition_sum_approaches_total_measure() {
        let total: f64 = partition_pairs(64, 1.0).iter().map(beta_integral).sum();
        assert!(total <= 2.0 + 1e-9 && total >= 0.99 * 2.0, "{total}");
    }

    #[test]
    fn beta_is_linear_and_monotone() {
        let p = ArcPair::from_angles((0.3, 1.1), (2.5, 4.0), 1.0).unwrap();
        let b = beta_integral(&p);
        assert!((beta_integral(&p.scaled(3.5)) - 3.5 * b).abs() < 1e-6);
        let bigger = ArcPair::from_angles((0.1, 1.1), (2.5, 4.0), 1.0).unwrap();
        assert!(beta_integral(&bigger) >= b);
    }

    #[test]
    fn counts_examples() {
        let pairs = [
            ArcPair::from_angles((0.0, 1.0), (3.0, 4.0), 1.0).unwrap(),
            ArcPair::from_angles((1.0, 2.0), (4.0, 5.0), 1.0).unwrap(),
        ];
        let empty = ChordConfiguration::new(1.0);
        assert!(crossing_counts(&empty, &pairs)
            .counts
            .iter()
            .all(|c| *c == PairCounts::default()));
        let mut one = ChordConfiguration::new(1.0);
        one.chords.push(Chord::new(3.5, 0.5, true));
        let t = crossing_counts(&one, &pairs);
        assert_eq!(
            t.counts[0],
            PairCounts {
                forward: 0,
                backward: 1,
                undirected: 1
            }
        );
        assert_eq!(t.counts[1], PairCounts::default());
    }

    #[test]
    fn count_additivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let s = sample_plp(3.0, Window::Disk { radius: 1.0 }, &mut rng);
            let c = chords_from_lines(&s, 1.0);
            let whole = ArcPair::from_angles((0.0, 2.0), (3.0, 4.5), 1.0).unwrap();
            let left = ArcPair::from_angles((0.0, 0.7), (3.0, 4.5), 1.0).unwrap();
            let right = ArcPair::from_angles((0.7, 2.0), (3.0, 4.5), 1.0).unwrap();
            let t = crossing_counts(&c, &[whole, left, right]);
            assert_eq!(t.counts[0].undirected, t.counts[1].undirected + t.counts[2].undirected);
        }
    }

    #[test]
    fn rotation_shifts_chord_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = sample_plp(2.0, Window::Disk { radius: 1.0 }, &mut rng);
        assert_eq!(apply_isometry_to_sample(&s, PlaneMotion::Rotation(0.0)), s);
        assert_eq!(apply_isometry_to_sample(&s, PlaneMotion::Translation(0.0, 0.0)), s);
        let phi = 2.3;
        let rotated = apply_isometry_to_sample(&s, PlaneMotion::Rotation(phi));
        let before = chords_from_lines(&s, 1.0);
        let after = chords_from_lines(&rotated, 1.0);
        assert_eq!(before.len(), after.len());
        for (a, b) in before.chords.iter().zip(&after.chords) {
            let mut x = [normalize_angle(a.first + phi), normalize_angle(a.second + phi)];
            let mut y = [b.first, b.second];
            x.sort_by(f64::total_cmp);
            y.sort_by(f64::total_cmp);
            assert!(angular_gap(x[0], y[0]) < 1e-9 && angular_gap(x[1], y[1]) < 1e-9);
        }
    }

    #[test]
    fn translation_moves_lines() {
        let l = Line { r: 0.2, theta: 0.0 };
        let s = LineSample {
            lines: vec![l],
            intensity: 1.0,
            window: Window::Disk { radius: 1.0 },
        };
        let moved = apply_isometry_to_sample(&s, PlaneMotion::Translation(0.5, 0.0));
        assert!((moved.lines[0].r - 0.7).abs() < 1e-15);
        let gone = apply_isometry_to_sample(&s, PlaneMotion::Translation(0.9, 0.0));
        assert!(gone.lines.is_empty());
    }

    #[test]
    fn distance_examples() {
        let mut f = ChordConfiguration::new(1.0);
        f.chords.push(Chord::new(0.0, PI, false));
        let mut g = ChordConfiguration::new(1.0);
        g.chords.push(Chord::new(0.1, PI, false));
        assert_eq!(config_distance(&f, &f), 0.0);
        assert!((config_distance(&f, &g) - 0.1).abs() < 1e-12);
        g.chords.push(Chord::new(1.0, 2.0, false));
        assert_eq!(config_distance(&f, &g), f64::INFINITY);
    }

    fn random_config(rng: &mut ChaCha8Rng, n: usize) -> ChordConfiguration {
        ChordConfiguration {
            alpha: 1.0,
            chords: (0..n)
                .map(|_| Chord::new(rng.random::<f64>() * TAU, rng.random::<f64>() * TAU, false))
                .collect(),
        }
    }

    fn matching_cost(f: &ChordConfiguration, g: &ChordConfiguration, perm: &[usize]) -> f64 {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| chord_distance(&f.chords[i], &g.chords[j], 1.0))
            .sum()
    }

    #[test]
    fn assignment_beats_random_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = random_config(&mut rng, 5);
        let g = random_config(&mut rng, 5);
        let best = config_distance(&f, &g);
        let mut perm: Vec<usize> = (0..5).collect();
        for _ in 0..1000 {
            perm.shuffle(&mut rng);
            assert!(best <= matching_cost(&f, &g, &perm) + 1e-12);
        }
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn assignment_is_exhaustively_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let perms = permutations(5);
        for _ in 0..50 {
            let f = random_config(&mut rng, 5);
            let g = random_config(&mut rng, 5);
            let brute = perms
                .iter()
                .map(|p| matching_cost(&f, &g, p))
                .fold(f64::INFINITY, f64::min);
            assert!((config_distance(&f, &g) - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_is_a_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..1000 {
            let n = rng.random_range(1..7);
            let (f, g, h) = (
                random_config(&mut rng, n),
                random_config(&mut rng, n),
                random_config(&mut rng, n),
            );
            assert_eq!(config_distance(&f, &g), config_distance(&g, &f));
            assert!(config_distance(&f, &h) <= config_distance(&f, &g) + config_distance(&g, &h) + 1e-12);
        }
    }
}

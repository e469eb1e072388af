//! Hyperbolic plane primitives in the Poincaré disk model.
//!
//! Points are stored in Poincaré coordinates. Isometries are Möbius maps
//! of the disk, kept in `SU(1,1)` form `z -> (a z + b) / (conj(b) z + conj(a))`
//! with `|a|^2 - |b|^2 = 1`. Line-intersection work is done in the Klein
//! (projective) model, where geodesics are straight chords of the unit disk.

use std::f64::consts::{PI, TAU};
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Geometric tolerance (Euclidean, in disk coordinates).
pub const GEOM_TOL: f64 = 1e-9;
/// Algebraic tolerance used for determinants and normalization checks.
pub const ALG_TOL: f64 = 1e-12;
/// Crossing angles closer than this to 0 or π are flagged as tangential.
pub const TANGENT_ANGLE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("point ({x}, {y}) is not strictly inside the unit disk")]
    OutsideDisk { x: f64, y: f64 },
    #[error("isometry coefficients degenerate (|a|^2 - |b|^2 = {0})")]
    Degenerate(f64),
}

/// Wrap an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Shortest angular separation of two angles, in `[0, π]`.
pub fn angular_gap(a: f64, b: f64) -> f64 {
    // fixed argument order makes the result exactly symmetric
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let d = (hi - lo).rem_euclid(TAU);
    d.min(TAU - d)
}

/// A point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    x: f64,
    y: f64,
}

impl HPoint {
    pub const ORIGIN: HPoint = HPoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Result<Self, GeomError> {
        if !(x * x + y * y < 1.0) {
            return Err(GeomError::OutsideDisk { x, y });
        }
        Ok(Self { x, y })
    }

    pub fn from_complex(z: Complex64) -> Result<Self, GeomError> {
        Self::new(z.re, z.im)
    }

    /// Point at hyperbolic distance `dist` from the origin in direction `angle`.
    pub fn from_polar(dist: f64, angle: f64) -> Self {
        let r = (0.5 * dist).tanh();
        // tanh saturates at 1 for huge distances; keep strictly inside
        let r = r.min(1.0 - 1e-16);
        Self {
            x: r * angle.cos(),
            y: r * angle.sin(),
        }
    }

    /// Convert from Klein coordinates.
    pub fn from_klein(k: Complex64) -> Result<Self, GeomError> {
        let n2 = k.norm_sqr();
        if !(n2 < 1.0) {
            return Err(GeomError::OutsideDisk { x: k.re, y: k.im });
        }
        Self::from_complex(k / (1.0 + (1.0 - n2).sqrt()))
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn to_klein(&self) -> Complex64 {
        self.z() * (2.0 / (1.0 + self.norm_sqr()))
    }

    pub fn euclid_dist(&self, other: &HPoint) -> f64 {
        (self.z() - other.z()).norm()
    }
}

/// Hyperbolic distance in the disk model (curvature −1).
pub fn hyp_distance(p: &HPoint, q: &HPoint) -> f64 {
    let num = (p.z() - q.z()).norm();
    let den = (Complex64::new(1.0, 0.0) - p.z().conj() * q.z()).norm();
    2.0 * (num / den).min(1.0 - 1e-17).atanh()
}

/// Orientation-preserving isometry of the disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
}

impl Isometry {
    pub fn identity() -> Self {
        Self::su11(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    fn su11(a: Complex64, b: Complex64) -> Self {
        Self {
            a,
            b,
            c: b.conj(),
            d: a.conj(),
        }
    }

    /// Build from raw Möbius coefficients, projecting onto `SU(1,1)` and
    /// normalizing to unit determinant.
    pub fn from_coefficients(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    ) -> Result<Self, GeomError> {
        Self { a, b, c, d }.renormalized()
    }

    /// Rotation about the origin by `angle`.
    pub fn rotation(angle: f64) -> Self {
        Self::su11(Complex64::from_polar(1.0, 0.5 * angle), Complex64::new(0.0, 0.0))
    }

    /// Hyperbolic translation along the diameter at angle `direction`,
    /// moving the origin a distance `dist` in that direction.
    pub fn translation(direction: f64, dist: f64) -> Self {
        let h = 0.5 * dist;
        Self::su11(
            Complex64::new(h.cosh(), 0.0),
            Complex64::from_polar(h.sinh(), direction),
        )
    }

    /// The translation taking `p` to the origin (no rotational part at `p`).
    pub fn to_origin(p: &HPoint) -> Self {
        let s = (1.0 - p.norm_sqr()).sqrt();
        Self::su11(Complex64::new(1.0 / s, 0.0), -p.z() / s)
    }

    /// The translation taking the origin to `p`.
    pub fn from_origin(p: &HPoint) -> Self {
        let s = (1.0 - p.norm_sqr()).sqrt();
        Self::su11(Complex64::new(1.0 / s, 0.0), p.z() / s)
    }

    pub fn coefficients(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// Translation length `2 acosh(|tr|/2)`; zero for elliptic or identity maps.
    pub fn translation_length(&self) -> f64 {
        let half = 0.5 * self.trace().re.abs();
        if half <= 1.0 {
            0.0
        } else {
            2.0 * half.acosh()
        }
    }

    /// Restore the `SU(1,1)` structure and unit determinant.
    pub fn renormalized(self) -> Result<Self, GeomError> {
        let a = 0.5 * (self.a + self.d.conj());
        let b = 0.5 * (self.b + self.c.conj());
        let det = a.norm_sqr() - b.norm_sqr();
        if !(det > ALG_TOL) || !det.is_finite() {
            return Err(GeomError::Degenerate(det));
        }
        let s = det.sqrt();
        Ok(Self::su11(a / s, b / s))
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn compose(&self, other: &Isometry) -> Result<Isometry, GeomError> {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
        .renormalized()
    }

    /// Raw Möbius action on any complex number.
    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn apply(&self, p: &HPoint) -> Result<HPoint, GeomError> {
        let w = self.apply_complex(p.z());
        if !w.re.is_finite() || !w.im.is_finite() {
            return Err(GeomError::Degenerate(f64::NAN));
        }
        HPoint::from_complex(w)
    }

    /// Action on the boundary circle, in angles.
    pub fn apply_boundary(&self, angle: f64) -> f64 {
        normalize_angle(self.apply_complex(Complex64::from_polar(1.0, angle)).arg())
    }

    /// Equality as maps of the disk (`g` and `−g` act identically).
    pub fn approx_eq(&self, other: &Isometry, tol: f64) -> bool {
        let diff = |s: f64| {
            (self.a - s * other.a).norm()
                + (self.b - s * other.b).norm()
                + (self.c - s * other.c).norm()
                + (self.d - s * other.d).norm()
        };
        diff(1.0).min(diff(-1.0)) <= tol
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.approx_eq(&Isometry::identity(), tol)
    }
}

impl Mul for Isometry {
    type Output = Isometry;

    /// Composition `self ∘ rhs`.
    ///
    /// Panics only if the product is numerically degenerate, which cannot
    /// happen for products of valid isometries of moderate size.
    fn mul(self, rhs: Isometry) -> Isometry {
        self.compose(&rhs).expect("product of isometries degenerated")
    }
}

/// A base point plus a unit direction: the state of the geodesic flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitTangent {
    pub base: HPoint,
    direction: f64,
}

impl UnitTangent {
    pub fn new(base: HPoint, direction: f64) -> Self {
        Self {
            base,
            direction: normalize_angle(direction),
        }
    }

    pub fn direction(&self) -> f64 {
        self.direction
    }

    pub fn reversed(&self) -> Self {
        Self::new(self.base, self.direction + PI)
    }
}

/// Ideal endpoints `(ξ⁻, ξ⁺)` of the geodesic through `v`, as boundary angles.
pub fn geodesic_from_tangent(v: &UnitTangent) -> (f64, f64) {
    let back = Isometry::from_origin(&v.base);
    (
        back.apply_boundary(v.direction + PI),
        back.apply_boundary(v.direction),
    )
}

/// Forward tangent direction at `p` of the geodesic heading to the ideal
/// point at angle `ideal`.
pub fn direction_towards_ideal(p: &HPoint, ideal: f64) -> f64 {
    normalize_angle(
        Isometry::to_origin(p)
            .apply_complex(Complex64::from_polar(1.0, ideal))
            .arg(),
    )
}

/// Point at hyperbolic distance `dist` from `p` in tangent direction `direction`.
pub fn point_along(p: &HPoint, direction: f64, dist: f64) -> HPoint {
    let local = HPoint::from_polar(dist, direction);
    Isometry::from_origin(p)
        .apply(&local)
        .unwrap_or_else(|_| HPoint::from_polar(dist, direction))
}

/// Oriented geodesic segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicArc {
    pub start: HPoint,
    pub end: HPoint,
    /// Ideal endpoints (backward, forward) as boundary angles.
    pub ideal: (f64, f64),
    pub length: f64,
}

impl GeodesicArc {
    /// The arc from `start` to `end`; `None` when the points coincide.
    pub fn through(start: HPoint, end: HPoint) -> Option<Self> {
        let length = hyp_distance(&start, &end);
        if length <= 0.0 {
            return None;
        }
        let to0 = Isometry::to_origin(&start);
        let w = to0.apply_complex(end.z());
        let dir = w.arg();
        let back = to0.inverse();
        Some(Self {
            start,
            end,
            ideal: (back.apply_boundary(dir + PI), back.apply_boundary(dir)),
            length,
        })
    }

    /// Arc between two points already known to lie on the geodesic with the
    /// given ideal endpoints (backward, forward).
    pub fn on_geodesic(start: HPoint, end: HPoint, ideal: (f64, f64)) -> Self {
        Self {
            start,
            end,
            ideal,
            length: hyp_distance(&start, &end),
        }
    }

    /// Forward tangent direction at the start point.
    pub fn start_direction(&self) -> f64 {
        direction_towards_ideal(&self.start, self.ideal.1)
    }

    /// Forward tangent direction at an arbitrary point of the carrying geodesic.
    pub fn direction_at(&self, p: &HPoint) -> f64 {
        direction_towards_ideal(p, self.ideal.1)
    }

    /// Point at hyperbolic distance `s` from the start (may extrapolate).
    pub fn point_at(&self, s: f64) -> HPoint {
        point_along(&self.start, self.start_direction(), s)
    }

    pub fn reversed(&self) -> Self {
        Self {
            start: self.end,
            end: self.start,
            ideal: (self.ideal.1, self.ideal.0),
            length: self.length,
        }
    }

    pub fn klein_endpoints(&self) -> (Complex64, Complex64) {
        (self.start.to_klein(), self.end.to_klein())
    }

    /// Euclidean circle carrying the arc, or `None` for a diameter.
    pub fn carrying_circle(&self) -> Option<(Complex64, f64)> {
        let (a, b) = self.ideal;
        let half = 0.5 * angular_gap(a, b);
        if (PI / 2.0 - half).abs() < 1e-12 {
            return None;
        }
        let mid = if normalize_angle(b - a) <= PI {
            a + half
        } else {
            b + half
        };
        Some((Complex64::from_polar(1.0 / half.cos(), mid), half.tan()))
    }
}

/// Transversal intersection of two arcs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcCrossing {
    pub point: HPoint,
    /// Angle in `(0, π)` between the two forward tangents.
    pub angle: f64,
    /// Hyperbolic distance from each arc's start to the crossing.
    pub along: (f64, f64),
    /// Set when the angle is within [`TANGENT_ANGLE_TOL`] of 0 or π.
    pub tangential: bool,
}

/// Intersection parameters of two Klein segments `p0→p1` and `q0→q1`,
/// strictly interior to both. Parameters are affine in Klein coordinates.
pub fn klein_segment_params(
    p0: Complex64,
    p1: Complex64,
    q0: Complex64,
    q1: Complex64,
) -> Option<(f64, f64)> {
    let r = p1 - p0;
    let s = q1 - q0;
    let denom = r.re * s.im - r.im * s.re;
    let scale = r.norm() * s.norm();
    if denom.abs() <= 1e-15 * scale.max(1e-300) {
        return None;
    }
    let qp = q0 - p0;
    let t = (qp.re * s.im - qp.im * s.re) / denom;
    let u = (qp.re * r.im - qp.im * r.re) / denom;
    const EDGE: f64 = 1e-12;
    if t > EDGE && t < 1.0 - EDGE && u > EDGE && u < 1.0 - EDGE {
        Some((t, u))
    } else {
        None
    }
}

/// Unsigned angle between the forward tangents of two geodesics at `p`.
pub fn crossing_angle(p: &HPoint, ideal_a: f64, ideal_b: f64) -> f64 {
    let da = direction_towards_ideal(p, ideal_a);
    let db = direction_towards_ideal(p, ideal_b);
    angular_gap(da, db)
}

/// Unique transversal crossing interior to both arcs, if any.
pub fn arc_intersection(a: &GeodesicArc, b: &GeodesicArc) -> Option<ArcCrossing> {
    let (p0, p1) = a.klein_endpoints();
    let (q0, q1) = b.klein_endpoints();
    let (t, _) = klein_segment_params(p0, p1, q0, q1)?;
    let point = HPoint::from_klein(p0 + (p1 - p0) * t).ok()?;
    let angle = crossing_angle(&point, a.ideal.1, b.ideal.1);
    Some(ArcCrossing {
        point,
        angle,
        along: (hyp_distance(&a.start, &point), hyp_distance(&b.start, &point)),
        tangential: angle < TANGENT_ANGLE_TOL || PI - angle < TANGENT_ANGLE_TOL,
    })
}

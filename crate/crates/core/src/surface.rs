//! The genus-2 surface obtained from the regular octagon with interior
//! angles π/4 by gluing opposite sides.
//!
//! Vertex `k` sits at polar angle `kπ/4 − π/8`; side `k` runs from vertex `k`
//! to vertex `k + 1` and its midpoint lies on the ray at angle `kπ/4`.
//! `pairing[k]` is the hyperbolic translation that carries side `k` onto
//! side `k + 4`, so `pairing[k + 4]` is its inverse.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypgeom::{
    angular_gap, hyp_distance, GeodesicArc, GeomError, HPoint, Isometry, UnitTangent,
};
use crate::quad::adaptive_simpson;

pub const SIDES: usize = 8;
/// Points this far outside a side in Klein coordinates still count as inside.
pub const SIDE_TOL: f64 = 1e-12;
const MAX_REDUCTION_STEPS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("octagon invariant violated: {0}")]
    Construction(String),
    #[error("point could not be reduced to the fundamental domain after {0} steps")]
    Reduction(usize),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FundamentalOctagon {
    pub vertices: [HPoint; SIDES],
    pub sides: [GeodesicArc; SIDES],
    pub pairings: [Isometry; SIDES],
    pub genus: u32,
    pub area: f64,
    /// Hyperbolic distance from the center to each vertex.
    pub circumradius: f64,
    /// Hyperbolic distance from the center to each side.
    pub inradius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Surface {
    pub octagon: FundamentalOctagon,
    /// Limiting line intensity `1 / area`.
    pub kappa: f64,
    /// Lower bound for the injectivity radius.
    pub injectivity_radius: f64,
    klein_vertices: [Complex64; SIDES],
    klein_normals: [Complex64; SIDES],
    klein_offset: f64,
}

/// Debug/golden summary of a [`Surface`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SurfaceSummary {
    pub genus: u32,
    pub area: f64,
    pub kappa: f64,
    pub injectivity_radius: f64,
    pub circumradius: f64,
    pub inradius: f64,
    pub vertices: Vec<[f64; 2]>,
    pub generator_translation_lengths: Vec<f64>,
}

/// Interior angle at a vertex of the regular octagon with the given circumradius.
fn vertex_angle(circumradius: f64) -> f64 {
    let v = |k: i32| HPoint::from_polar(circumradius, k as f64 * PI / 4.0 - PI / 8.0);
    let to0 = Isometry::to_origin(&v(0));
    let prev = to0.apply_complex(v(-1).z()).arg();
    let next = to0.apply_complex(v(1).z()).arg();
    angular_gap(prev, next)
}

/// Circumradius of the regular octagon whose interior angles equal `angle`.
fn solve_circumradius(angle: f64) -> f64 {
    // the angle decreases from 3π/4 (Euclidean limit) to 0 (ideal octagon)
    let (mut lo, mut hi) = (1e-6, 12.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if vertex_angle(mid) > angle {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Hyperbolic area of the convex region `{ρ ≤ ρmax(φ)}` in polar coordinates
/// about the origin, where `tanh ρmax = tanh(d) / cos ψ` on each of the 16
/// half-sectors of the regular octagon.
fn octagon_area_by_quadrature(inradius: f64) -> f64 {
    let th = inradius.tanh();
    let f = |psi: f64| {
        let t = th / psi.cos();
        let rho = t.atanh();
        rho.cosh() - 1.0
    };
    16.0 * adaptive_simpson(&f, 0.0, PI / 8.0, 1e-14)
}

impl Surface {
    pub fn octagon(&self) -> &FundamentalOctagon {
        &self.octagon
    }

    pub fn pairing(&self, side: usize) -> &Isometry {
        &self.octagon.pairings[side % SIDES]
    }

    /// Side paired with `side`.
    pub fn partner(side: usize) -> usize {
        (side + 4) % SIDES
    }

    pub fn klein_vertices(&self) -> &[Complex64; SIDES] {
        &self.klein_vertices
    }

    /// Outward unit normal of side `k` in Klein coordinates.
    pub fn klein_normal(&self, k: usize) -> Complex64 {
        self.klein_normals[k]
    }

    /// Klein distance from the center to every side line.
    pub fn klein_offset(&self) -> f64 {
        self.klein_offset
    }

    /// Signed Klein-coordinate excess of `k` beyond side `side` (positive = outside).
    pub fn side_excess(&self, side: usize, k: Complex64) -> f64 {
        let n = self.klein_normals[side];
        k.re * n.re + k.im * n.im - self.klein_offset
    }

    /// Membership in the closed octagon (with [`SIDE_TOL`] slack).
    pub fn contains(&self, p: &HPoint) -> bool {
        let k = p.to_klein();
        (0..SIDES).all(|s| self.side_excess(s, k) <= SIDE_TOL)
    }

    /// Map a point near the octagon back into it, returning the point and the
    /// group element `g` with `g(p) = p′`.
    pub fn reduce_to_domain(&self, p: &HPoint) -> Result<(HPoint, Isometry), SurfaceError> {
        let mut q = *p;
        let mut g = Isometry::identity();
        for _ in 0..MAX_REDUCTION_STEPS {
            let k = q.to_klein();
            let mut best: Option<(f64, HPoint, usize)> = None;
            for s in 0..SIDES {
                if self.side_excess(s, k) > SIDE_TOL {
                    let image = self.octagon.pairings[s].apply(&q)?;
                    let n2 = image.norm_sqr();
                    if best.is_none_or(|(b, _, _)| n2 < b) {
                        best = Some((n2, image, s));
                    }
                }
            }
            match best {
                None => return Ok((q, g)),
                Some((_, image, s)) => {
                    q = image;
                    g = self.octagon.pairings[s].compose(&g)?;
                }
            }
        }
        Err(SurfaceError::Reduction(MAX_REDUCTION_STEPS))
    }

    /// Draw from normalized Liouville measure: base point uniform for
    /// hyperbolic area on the octagon, direction uniform and independent.
    pub fn sample_liouville<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitTangent {
        let c = self.octagon.circumradius.cosh() - 1.0;
        loop {
            // uniform on the circumscribed hyperbolic disk, then reject
            let u: f64 = rng.random();
            let rho = (1.0 + u * c).acosh();
            let phi: f64 = rng.random::<f64>() * TAU;
            let p = HPoint::from_polar(rho, phi);
            if self.contains(&p) {
                let dir: f64 = rng.random::<f64>() * TAU;
                return UnitTangent::new(p, dir);
            }
        }
    }

    /// All distinct group elements reachable by words of length at most
    /// `max_len`, deduplicated by the image of the origin.
    pub fn group_ball(&self, max_len: usize) -> Vec<Isometry> {
        let mut out = vec![Isometry::identity()];
        let mut images = vec![HPoint::ORIGIN];
        let mut frontier = vec![Isometry::identity()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for g in &frontier {
                for s in 0..SIDES {
                    let h = self.octagon.pairings[s] * *g;
                    let Ok(img) = h.apply(&HPoint::ORIGIN) else {
                        continue;
                    };
                    if images.iter().any(|q| q.euclid_dist(&img) < 1e-9) {
                        continue;
                    }
                    images.push(img);
                    out.push(h);
                    next.push(h);
                }
            }
            frontier = next;
        }
        out
    }

    pub fn summary(&self) -> SurfaceSummary {
        SurfaceSummary {
            genus: self.octagon.genus,
            area: self.octagon.area,
            kappa: self.kappa,
            injectivity_radius: self.injectivity_radius,
            circumradius: self.octagon.circumradius,
            inradius: self.octagon.inradius,
            vertices: self.octagon.vertices.iter().map(|v| [v.x(), v.y()]).collect(),
            generator_translation_lengths: self
                .octagon
                .pairings
                .iter()
                .map(Isometry::translation_length)
                .collect(),
        }
    }

    /// Product of the side pairings met while walking once around the single
    /// vertex class; the identity for a consistent gluing.
    pub fn relator(&self) -> Isometry {
        let mut g = Isometry::identity();
        let mut v = 0usize;
        for _ in 0..SIDES {
            // side v starts at vertex v; its pairing sends vertex v to v + 5
            g = self.octagon.pairings[v] * g;
            v = (v + 5) % SIDES;
        }
        g
    }
}

/// Build the regular-octagon genus-2 surface and verify its invariants.
pub fn build_genus2_surface() -> Result<Surface, SurfaceError> {
    let genus = 2u32;
    let angle = PI / 4.0;
    let circumradius = solve_circumradius(angle);
    let vertices: [HPoint; SIDES] = std::array::from_fn(|k| {
        HPoint::from_polar(circumradius, k as f64 * PI / 4.0 - PI / 8.0)
    });
    let sides: [GeodesicArc; SIDES] = std::array::from_fn(|k| {
        GeodesicArc::through(vertices[k], vertices[(k + 1) % SIDES])
            .expect("distinct octagon vertices")
    });
    let midpoints: Vec<HPoint> = sides.iter().map(|s| s.point_at(0.5 * s.length)).collect();
    let inradius = hyp_distance(&HPoint::ORIGIN, &midpoints[0]);
    let pairings: [Isometry; SIDES] = std::array::from_fn(|k| {
        Isometry::translation(k as f64 * PI / 4.0 + PI, 2.0 * inradius)
    });

    let fail = |msg: String| Err(SurfaceError::Construction(msg));
    for k in 0..SIDES {
        let a = vertex_angle(circumradius);
        if (a - angle).abs() > 1e-8 {
            return fail(format!("vertex angle {a} at vertex {k}"));
        }
        let partner = (k + 4) % SIDES;
        let g = &pairings[k];
        let ends = [
            (vertices[k], vertices[(k + 5) % SIDES]),
            (vertices[(k + 1) % SIDES], vertices[partner]),
            (midpoints[k], midpoints[partner]),
        ];
        for (src, dst) in ends {
            if g.apply(&src)?.euclid_dist(&dst) > 1e-9 {
                return fail(format!("pairing {k} misplaces a side point"));
            }
        }
        if !g.inverse().approx_eq(&pairings[partner], 1e-9) {
            return fail(format!("pairing {partner} is not the inverse of pairing {k}"));
        }
    }
    let area = octagon_area_by_quadrature(inradius);
    let gauss_bonnet = 2.0 * PI * (2.0 * genus as f64 - 2.0);
    if (area - gauss_bonnet).abs() > 1e-6 {
        return fail(format!("area {area} differs from {gauss_bonnet}"));
    }
    let klein_vertices = std::array::from_fn(|k| vertices[k].to_klein());
    let klein_normals = std::array::from_fn(|k| Complex64::from_polar(1.0, k as f64 * PI / 4.0));
    let klein_offset = midpoints[0].to_klein().norm();

    let mut surface = Surface {
        octagon: FundamentalOctagon {
            vertices,
            sides,
            pairings,
            genus,
            area: gauss_bonnet,
            circumradius,
            inradius,
        },
        kappa: 1.0 / gauss_bonnet,
        injectivity_radius: 0.0,
        klein_vertices,
        klein_normals,
        klein_offset,
    };
    if !surface.relator().is_identity(1e-8) {
        return fail("relator is not the identity".into());
    }
    let shortest = surface
        .group_ball(3)
        .iter()
        .map(Isometry::translation_length)
        .filter(|&l| l > 1e-6)
        .fold(f64::INFINITY, f64::min);
    surface.injectivity_radius = 0.5 * shortest;
    Ok(surface)
}

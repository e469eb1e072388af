//! Tessellations cut out by line families and by long geodesics.

pub mod arrangement;
pub mod census;
pub mod surface_map;

use thiserror::Error;

pub use arrangement::{build_arrangement, segments_from_lines, Arrangement, Segment};
pub use census::{face_census, weighted_census, FaceCensus, FaceRecord, PolygonStats, WeightedCensus};
pub use surface_map::{surface_map_from_trace, CombinatorialMap, SurfaceMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TessError {
    /// Segment index triples meeting within tolerance (`usize::MAX` is the window boundary).
    #[error("near-degenerate configuration among segments {0:?}")]
    Degenerate(Vec<[usize; 3]>),
    #[error("overlapping edges at vertex {0}")]
    Overlap(usize),
    #[error("face traversal from half-edge {0} did not close")]
    OpenFace(usize),
    #[error("{0} tangential self-intersections")]
    Tangency(usize),
    #[error("self-intersections closer than {0:e}, possible triple point")]
    TriplePoint(f64),
    #[error("inconsistent map: {0}")]
    Inconsistent(String),
}

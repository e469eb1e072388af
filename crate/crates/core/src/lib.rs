//! Poisson line processes, geodesics on the genus-2 hyperbolic surface,
//! and the tessellations both of them cut out.
//!
//! The crate is organised bottom-up: [`hypgeom`] provides disk-model
//! primitives, [`surface`] the octagon and its side pairings, [`tracer`]
//! long random geodesics, [`plp`] the Euclidean line process, and
//! [`tessellation`] the arrangements and face statistics of both. The
//! [`experiments`] module wires everything into reproducible Monte Carlo
//! runs with CSV/JSON/SVG output.

pub mod experiments;
pub mod hypgeom;
mod nullable;
pub mod plot;
pub mod plp;
pub mod quad;
pub mod stats;
pub mod surface;
pub mod tessellation;
pub mod tracer;

pub use hypgeom::{GeodesicArc, HPoint, Isometry, UnitTangent};
pub use plp::{ArcPair, ChordConfiguration, LineSample};
pub use surface::Surface;
pub use tracer::GeodesicTrace;

//! Geometry laboratory for smooth closed curves on chart-based Riemannian
//! surfaces: boundary distance fields, min-max sweepout widths, criticality
//! classification of boundary pairs, Birkhoff-style chord shortening, and
//! second-variation (Morse index) analysis of free-boundary chords.
//!
//! The crate is organised bottom-up:
//! * [`surface`] — charts (metric, Christoffel symbols, Gaussian curvature),
//! * [`curve`] — arclength-sampled boundary curves with frames and geodesic
//!   curvature,
//! * [`geodesic`] — shooting, two-point connection, distance,
//! * [`pairspace`] — conormal signatures and criticality of boundary pairs,
//! * [`minmax`] — distance fields, discrete sweepouts and the width,
//! * [`birkhoff`] — chord shortening, free-boundary geodesics, Morse index,
//! * [`planar`] — directional widths of plane curves and the integral-width
//!   cross-check.

pub mod birkhoff;
pub mod curve;
pub mod error;
pub mod exec;
pub mod geodesic;
pub mod minmax;
pub mod pairspace;
pub mod planar;
pub(crate) mod grid;
pub mod spline;
pub mod surface;
pub mod tol;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

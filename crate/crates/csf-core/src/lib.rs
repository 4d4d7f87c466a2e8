//! Numerical laboratory for planar curve shortening flow.

pub mod analysis;
pub mod curve;
pub mod exact;
pub mod flow;
pub mod functionals;
pub mod io;
pub mod linalg;
pub mod error;
pub mod point;
pub mod spectral;
pub mod quadrature;

pub use curve::{geometry, hausdorff_distance, resample_arclength, self_intersects};
pub use curve::{CurveGeometry, PlanarCurve, Topology};
pub use error::{CsfError, Result};
pub use point::Point;

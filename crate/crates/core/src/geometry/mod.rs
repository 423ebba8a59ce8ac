//! Geometry of radial graphs `{(r + φ(ω), ω)}` over the unit sphere.

mod deviation;
mod graph;
mod leaf;
mod local;
mod stability;

pub use deviation::{reference_excess, round_excess};
pub use graph::{GraphDerivatives, RadialGraph, HORIZON_MARGIN};
pub use leaf::{intrinsic_gauss_curvature, mean_curvature_deviation, GeometryOptions, LeafGeometry};
pub use stability::{stability_spectrum, StabilityOptions, StabilityReport, DEFAULT_STABILITY_BAND};

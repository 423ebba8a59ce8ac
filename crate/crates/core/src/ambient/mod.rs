//! The ambient asymptotically AdS–Schwarzschild metric and its curvature.

mod background;
mod metric;
mod perturbation;

pub use background::{horizon_radius, AdsSchwarzschild};
pub use metric::{
    christoffel, christoffel_first_kind, curvature_from_jet, AmbientMetric, Christoffel, Curvature, MetricJet,
    MetricJet2, Point, RicciSplit, Riemann, DEFAULT_FD_SCALE,
};
pub use perturbation::{
    Component, DecayRecord, Family, Perturbation, PerturbationSpec, DECAY_RATE, WORKING_RANGE,
};

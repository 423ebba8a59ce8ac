//! Constant-mean-curvature sphere foliations of asymptotically
//! Anti-de Sitter–Schwarzschild 3-manifolds.
//!
//! The crate is organized bottom-up:
//!
//! * [`sphere`] — Gauss–Legendre spherical-harmonic transforms, calculus on the
//!   round sphere and Helmholtz solves.
//! * [`ambient`] — the background metric `g_m`, decaying perturbations and
//!   pointwise curvature.
//! * [`geometry`] — radial graphs over `S²`: fundamental forms, mean curvature,
//!   Gauss curvature (two independent routes) and the stability operator.
//! * [`solver`] — the contraction-map construction of CMC leaves, Newton
//!   refinement, foliations and the uniqueness probe.
//! * [`diagnostics`] — leaf-level verification quantities and decay-rate fits.
//!
//! Hot loops run through [`exec`], which dispatches to rayon when the
//! `parallel` feature is enabled and falls back to plain iterators otherwise.

pub mod ambient;
pub mod diagnostics;
mod error;
pub mod exec;
pub mod geometry;
pub(crate) mod linalg;
pub mod quadrature;
pub mod solver;
pub mod sphere;

pub use error::{Error, Result};

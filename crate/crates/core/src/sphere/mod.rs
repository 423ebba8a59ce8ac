//! Spectral calculus on the round unit sphere.

mod field;
mod grid;
mod helmholtz;
mod legendre;
mod parity;

pub use field::{coordinate_functions, ScalarField, TangentField};
pub use grid::{SphereGrid, MAX_BAND_LIMIT, MIN_BAND_LIMIT};
pub use helmholtz::{
    apply_helmholtz, apply_helmholtz_variable, assemble_variable, check_constant, solve_helmholtz,
    solve_helmholtz_projected, solve_helmholtz_variable, SINGULAR_THRESHOLD,
};
pub use legendre::{gauss_legendre, normalized_legendre, real_sph_harm};
pub use parity::{Derivatives, ParityDifferentiator};

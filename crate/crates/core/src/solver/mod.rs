//! Contraction-map construction of CMC leaves `ρ = r + φ`.
//!
//! With `c = 2 − 3m/sinh r` and the rescaled residual
//! `G(φ) = ψ(r)² (H[r + φ] − h(r))`, `h(r) = 2 coth r − m/sinh³ r`, the leaf
//! equation `G(φ) = 0` is rewritten as
//! `(Δ₀ + c) φ = N + (P + Q)(φ)` with `N = G(0)` and
//! `(P + Q)(φ) = G(φ) − N + (Δ₀ + c) φ`. The fixed-point map is
//! `T(φ) = (Δ₀ + c)⁻¹ (N + P + Q) = φ + (Δ₀ + c)⁻¹ G(φ)`.

mod foliation;
mod gmres;
mod leaf;
mod problem;

pub use foliation::{foliate, foliation_radii, uniqueness_probe, Foliation, FoliationFailure, ProbeReport};
pub use leaf::{solve_leaf, solve_leaf_seeded, CmcLeaf};
pub use problem::{LeafProblem, TDecomposition};

use crate::geometry::{GeometryOptions, DEFAULT_STABILITY_BAND};
use crate::sphere::{MAX_BAND_LIMIT, MIN_BAND_LIMIT};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub band_limit: usize,
    /// Sup-norm of the difference of consecutive iterates at which the
    /// iteration stops.
    pub picard_tol: f64,
    pub max_iters: usize,
    /// Newton refinement with the stability operator as Jacobian instead of
    /// plain Picard iteration.
    pub newton: bool,
    /// Track whether every iterate stays in `sup|φ| ≤ e^{−r}/r`.
    pub ball_check: bool,
    /// Radius step of a foliation.
    pub continuation_step: f64,
    /// Seed each leaf of a foliation with the previous one. When off, the
    /// leaves are independent and solved in parallel.
    pub continuation: bool,
    /// Band of the evaluation grid for the nonlinear residual, relative to
    /// `band_limit`.
    pub padding_factor: f64,
    /// Solve on the complement of the kernel of `Δ₀ + c` instead of failing
    /// (only relevant for `m = 0`, where `ℓ = 1` is in the kernel).
    pub project_kernel: bool,
    pub stability_band: usize,
    pub compute_stability: bool,
    pub geometry: GeometryOptions,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            band_limit: 32,
            picard_tol: 1e-10,
            max_iters: 200,
            newton: false,
            ball_check: true,
            continuation_step: 0.25,
            continuation: true,
            padding_factor: 1.5,
            project_kernel: false,
            stability_band: DEFAULT_STABILITY_BAND,
            compute_stability: true,
            geometry: GeometryOptions::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.band_limit < MIN_BAND_LIMIT {
            return Err(Error::Config(format!(
                "band limit below minimum: {} < {MIN_BAND_LIMIT}",
                self.band_limit
            )));
        }
        if self.band_limit > MAX_BAND_LIMIT {
            return Err(Error::Config(format!(
                "band limit above maximum: {} > {MAX_BAND_LIMIT}",
                self.band_limit
            )));
        }
        if !(self.picard_tol > 0.0 && self.picard_tol.is_finite()) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.picard_tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.continuation_step > 0.0 && self.continuation_step.is_finite()) {
            return Err(Error::Config(format!(
                "continuation step must be positive, got {}",
                self.continuation_step
            )));
        }
        if !(self.padding_factor >= 1.0 && self.padding_factor <= 4.0) {
            return Err(Error::Config(format!("padding factor must lie in [1, 4], got {}", self.padding_factor)));
        }
        if self.stability_band == 0 {
            return Err(Error::Config("stability band must be at least 1".into()));
        }
        Ok(())
    }
}

/// `2 coth r̃ − m / sinh³ r̃`.
pub fn target_mean_curvature(mass: f64, r: f64) -> f64 {
    2.0 / r.tanh() - mass / r.sinh().powi(3)
}

/// Whether the target profile is strictly decreasing on `[lo, hi]`, checked
/// through the sign of `d/dr = −2/sinh² r + 3m cosh r/sinh⁴ r` on a fine
/// sample.
pub fn target_is_decreasing(mass: f64, lo: f64, hi: f64) -> bool {
    let n = 512;
    (0..=n).all(|k| {
        let r = lo + (hi - lo) * k as f64 / n as f64;
        let sh = r.sinh();
        -2.0 / (sh * sh) + 3.0 * mass * r.cosh() / sh.powi(4) < 0.0
    })
}

/// Radius of the invariant ball `sup|φ| ≤ e^{−r}/r`.
pub fn ball_radius(r: f64) -> f64 {
    (-r).exp() / r
}

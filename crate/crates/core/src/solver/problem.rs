use std::sync::Arc;

use crate::ambient::AmbientMetric;
use crate::geometry::{mean_curvature_deviation, LeafGeometry, RadialGraph};
use crate::sphere::{check_constant, solve_helmholtz, solve_helmholtz_projected, apply_helmholtz, ScalarField, SphereGrid};
use crate::{Error, Result};

use super::{target_mean_curvature, SolverConfig};

/// Split of the fixed-point equation at a given `φ`. `P` and `Q` are only
/// available as their sum, which is the exact remainder
/// `G(φ) − N + (Δ₀ + c) φ`.
#[derive(Debug, Clone)]
pub struct TDecomposition {
    pub n: ScalarField,
    pub p_plus_q: ScalarField,
}

/// Everything about one leaf equation that does not depend on `φ`.
#[derive(Debug, Clone)]
pub struct LeafProblem {
    metric: Arc<AmbientMetric>,
    r: f64,
    grid: Arc<SphereGrid>,
    padded: Arc<SphereGrid>,
    c: f64,
    scale: f64,
    project_kernel: bool,
    n: ScalarField,
}

impl LeafProblem {
    pub fn new(metric: Arc<AmbientMetric>, r: f64, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let grid = SphereGrid::new(config.band_limit)?;
        let padded = grid.padded(config.padding_factor)?;
        let s = metric.background().s_of_r(r)?;
        let c = 2.0 - 3.0 * metric.mass() / r.sinh();
        if !config.project_kernel {
            check_constant(c, config.band_limit)?;
        }
        let mut me = Self {
            metric,
            r,
            grid: grid.clone(),
            padded,
            c,
            // |Σ_r(0)| / 4π for the background metric
            scale: s * s,
            project_kernel: config.project_kernel,
            n: ScalarField::zeros(&grid),
        };
        me.n = me.residual(&ScalarField::zeros(&grid))?;
        Ok(me)
    }

    pub fn metric(&self) -> &Arc<AmbientMetric> {
        &self.metric
    }
    pub fn radius(&self) -> f64 {
        self.r
    }
    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }
    pub fn padded_grid(&self) -> &Arc<SphereGrid> {
        &self.padded
    }
    /// `c = 2 − 3m / sinh r`.
    pub fn helmholtz_constant(&self) -> f64 {
        self.c
    }
    /// `|Σ_r(0)| / 4π`.
    pub fn area_scale(&self) -> f64 {
        self.scale
    }
    pub fn target(&self) -> f64 {
        target_mean_curvature(self.metric.mass(), self.r)
    }
    pub fn n(&self) -> &ScalarField {
        &self.n
    }

    /// Graph of `r + φ` on the padded evaluation grid.
    pub fn padded_graph(&self, phi: &ScalarField) -> Result<RadialGraph> {
        RadialGraph::new(self.r, phi.resample(&self.padded), self.metric.clone())
    }

    /// `G(φ) = |Σ_r(0)| (H[r + φ] − h(r)) / 4π`, band-limited to the problem
    /// grid.
    pub fn residual(&self, phi: &ScalarField) -> Result<ScalarField> {
        let dev = mean_curvature_deviation(&self.padded_graph(phi)?)?;
        Ok(dev.scale(self.scale).resample(&self.grid))
    }

    /// Same as [`residual`](Self::residual), reusing an already computed
    /// padded leaf geometry.
    pub fn residual_from(&self, geometry: &LeafGeometry) -> ScalarField {
        geometry.mean_curvature_deviation.scale(self.scale).resample(&self.grid)
    }

    pub fn decomposition(&self, phi: &ScalarField) -> Result<TDecomposition> {
        let phi = phi.resample(&self.grid);
        let g = self.residual(&phi)?;
        let p_plus_q = g.sub(&self.n).add(&apply_helmholtz(self.c, &phi));
        Ok(TDecomposition { n: self.n.clone(), p_plus_q })
    }

    /// `(Δ₀ + c)⁻¹ f`; in projected mode the kernel degrees of the result
    /// are zero.
    pub fn inverse(&self, f: &ScalarField) -> Result<ScalarField> {
        if self.project_kernel {
            Ok(solve_helmholtz_projected(self.c, f).0)
        } else {
            solve_helmholtz(self.c, f)
        }
    }

    /// Degrees where `Δ₀ + c` is numerically singular on the problem grid.
    pub fn kernel_degrees(&self) -> Vec<usize> {
        solve_helmholtz_projected(self.c, &ScalarField::zeros(&self.grid)).1
    }

    /// Removes the kernel degrees (identity unless projecting).
    pub fn project(&self, f: &ScalarField) -> ScalarField {
        if !self.project_kernel {
            return f.clone();
        }
        self.kernel_degrees().into_iter().fold(f.clone(), |acc, l| acc.without_degree(l))
    }

    /// `T(φ) = φ + (Δ₀ + c)⁻¹ G(φ)`.
    pub fn picard_step(&self, phi: &ScalarField) -> Result<ScalarField> {
        let phi = phi.resample(&self.grid);
        let g = self.residual(&phi)?;
        Ok(phi.add(&self.inverse(&g)?))
    }

    /// Fréchet derivative of `G` at the leaf described by `geometry` (on the
    /// padded grid): `v ↦ |Σ_r(0)|/4π · L(⟨∂_r, ν⟩ v)` with the stability
    /// operator `L = −Δ_Σ − (|A|² + Ric(ν, ν))`.
    pub fn jacobian_apply(&self, geometry: &LeafGeometry, v: &ScalarField) -> Result<ScalarField> {
        if !Arc::ptr_eq(geometry.grid(), &self.padded) && geometry.grid().band_limit() != self.padded.band_limit() {
            return Err(Error::Shape("leaf geometry is not on the padded grid".into()));
        }
        let f = v.resample(geometry.grid()).mul(&geometry.normal_radial);
        let pot = geometry.a_squared.add(&geometry.ric_nu_nu);
        let lf = geometry.surface_laplacian(&f).add(&pot.mul(&f)).scale(-self.scale);
        Ok(lf.resample(&self.grid))
    }
}

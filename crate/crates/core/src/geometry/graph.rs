use std::sync::Arc;

use crate::ambient::AmbientMetric;
use crate::sphere::{ScalarField, SphereGrid};
use crate::{Error, Result};

/// How far above the horizon image every leaf must stay.
pub const HORIZON_MARGIN: f64 = 0.1;

/// Sphere `{(r + φ(ω), ω)}` in the asymptotic chart. The base radius is kept
/// apart from the (small) graph function so that differences of nearby
/// leaves stay exact.
#[derive(Debug, Clone)]
pub struct RadialGraph {
    base: f64,
    phi: ScalarField,
    metric: Arc<AmbientMetric>,
}

/// Samples of `φ` and its chart derivatives up to second order.
#[derive(Debug, Clone)]
pub struct GraphDerivatives {
    pub phi: Vec<f64>,
    pub d_theta: Vec<f64>,
    pub d_phi: Vec<f64>,
    pub d_theta2: Vec<f64>,
    pub d_theta_phi: Vec<f64>,
    pub d_phi2: Vec<f64>,
    pub laplacian: Vec<f64>,
}

impl GraphDerivatives {
    /// All derivatives spectrally; `φ_θθ` comes from
    /// `Δ₀φ = φ_θθ + cot θ φ_θ + φ_φφ / sin²θ`.
    pub fn of(phi: &ScalarField) -> Self {
        let grid = phi.grid();
        let n_lon = grid.n_lon();
        let dphi = phi.d_phi();
        let d_theta = phi.d_theta().into_samples();
        let d_theta_phi = dphi.d_theta().into_samples();
        let d_phi2 = dphi.d_phi().into_samples();
        let laplacian = phi.laplacian().into_samples();
        let (sin, cos) = (grid.sin_theta(), grid.cos_theta());
        let d_theta2 = (0..grid.n_nodes())
            .map(|i| {
                let j = i / n_lon;
                laplacian[i] - cos[j] / sin[j] * d_theta[i] - d_phi2[i] / (sin[j] * sin[j])
            })
            .collect();
        Self {
            phi: phi.samples().to_vec(),
            d_theta,
            d_phi: dphi.into_samples(),
            d_theta2,
            d_theta_phi,
            d_phi2,
            laplacian,
        }
    }
}

impl RadialGraph {
    pub fn new(base: f64, phi: ScalarField, metric: Arc<AmbientMetric>) -> Result<Self> {
        if !base.is_finite() {
            return Err(Error::Domain(format!("base radius must be finite, got {base}")));
        }
        let floor = metric.background().horizon_r() + HORIZON_MARGIN;
        let lowest = base + phi.min();
        if !(lowest > floor) {
            return Err(Error::Domain(format!(
                "graph dips to r = {lowest} but must stay above {floor} (horizon image plus margin)"
            )));
        }
        Ok(Self { base, phi, metric })
    }

    /// Coordinate sphere `ρ ≡ r`.
    pub fn round(grid: &Arc<SphereGrid>, r: f64, metric: Arc<AmbientMetric>) -> Result<Self> {
        Self::new(r, ScalarField::zeros(grid), metric)
    }

    /// Graph of an arbitrary `ρ`, split as `mean(ρ) + (ρ − mean)`.
    pub fn from_rho(rho: &ScalarField, metric: Arc<AmbientMetric>) -> Result<Self> {
        let base = rho.mean();
        Self::new(base, rho.map(|v| v - base), metric)
    }

    pub fn base(&self) -> f64 {
        self.base
    }
    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }
    pub fn rho(&self) -> ScalarField {
        self.phi.map(|v| v + self.base)
    }
    pub fn grid(&self) -> &Arc<SphereGrid> {
        self.phi.grid()
    }
    pub fn metric(&self) -> &Arc<AmbientMetric> {
        &self.metric
    }

    pub fn min_rho(&self) -> f64 {
        self.base + self.phi.min()
    }
    pub fn max_rho(&self) -> f64 {
        self.base + self.phi.max()
    }

    /// Same graph on another grid (spectral resampling of `φ`).
    pub fn resample(&self, grid: &Arc<SphereGrid>) -> Self {
        Self { base: self.base, phi: self.phi.resample(grid), metric: self.metric.clone() }
    }
}

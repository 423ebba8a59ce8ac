use std::fmt;
use std::sync::{Arc, OnceLock};

use super::grid::{Kernel, SphereGrid};
use crate::{Error, Result};

/// Real function on the unit sphere, held as grid samples and/or harmonic
/// coefficients. Whichever representation is missing is computed lazily and
/// cached; the two always describe the same band-limited function once both
/// exist.
#[derive(Clone)]
pub struct ScalarField {
    grid: Arc<SphereGrid>,
    samples: OnceLock<Vec<f64>>,
    coeffs: OnceLock<Vec<f64>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("band_limit", &self.grid.band_limit())
            .field("samples_current", &self.samples.get().is_some())
            .field("coeffs_current", &self.coeffs.get().is_some())
            .finish()
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::Numeric(format!("non-finite {what} at index {i}: {}", values[i]))),
    }
}

impl ScalarField {
    pub fn from_samples(grid: &Arc<SphereGrid>, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n_nodes() {
            return Err(Error::Shape(format!(
                "expected {} samples, got {}",
                grid.n_nodes(),
                samples.len()
            )));
        }
        check_finite(&samples, "sample")?;
        Ok(Self::from_samples_unchecked(grid, samples))
    }

    pub(crate) fn from_samples_unchecked(grid: &Arc<SphereGrid>, samples: Vec<f64>) -> Self {
        Self { grid: grid.clone(), samples: OnceLock::from(samples), coeffs: OnceLock::new() }
    }

    pub fn from_coeffs(grid: &Arc<SphereGrid>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != grid.n_coeffs() {
            return Err(Error::Shape(format!(
                "coefficient count {} does not match band limit {} ({} expected)",
                coeffs.len(),
                grid.band_limit(),
                grid.n_coeffs()
            )));
        }
        check_finite(&coeffs, "coefficient")?;
        Ok(Self::from_coeffs_unchecked(grid, coeffs))
    }

    pub(crate) fn from_coeffs_unchecked(grid: &Arc<SphereGrid>, coeffs: Vec<f64>) -> Self {
        Self { grid: grid.clone(), samples: OnceLock::new(), coeffs: OnceLock::from(coeffs) }
    }

    /// Samples `f(θ, φ)` at every node.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &Arc<SphereGrid>, f: F) -> Result<Self> {
        let samples = (0..grid.n_nodes())
            .map(|i| {
                let (t, p) = grid.node(i);
                f(t, p)
            })
            .collect();
        Self::from_samples(grid, samples)
    }

    pub fn constant(grid: &Arc<SphereGrid>, value: f64) -> Self {
        // Y_00 = 1/√(4π); both representations are filled so that
        // derivatives of a constant are exactly zero
        let mut c = vec![0.0; grid.n_coeffs()];
        c[0] = value * (4.0 * std::f64::consts::PI).sqrt();
        Self {
            grid: grid.clone(),
            samples: OnceLock::from(vec![value; grid.n_nodes()]),
            coeffs: OnceLock::from(c),
        }
    }

    pub fn zeros(grid: &Arc<SphereGrid>) -> Self {
        Self {
            grid: grid.clone(),
            samples: OnceLock::from(vec![0.0; grid.n_nodes()]),
            coeffs: OnceLock::from(vec![0.0; grid.n_coeffs()]),
        }
    }

    /// Single real harmonic `Y_lm`.
    pub fn harmonic(grid: &Arc<SphereGrid>, l: usize, m: i64) -> Result<Self> {
        if l > grid.band_limit() || m.unsigned_abs() as usize > l {
            return Err(Error::Shape(format!(
                "harmonic (l={l}, m={m}) outside band limit {}",
                grid.band_limit()
            )));
        }
        let mut c = vec![0.0; grid.n_coeffs()];
        c[SphereGrid::coeff_index(l, m)] = 1.0;
        Ok(Self::from_coeffs_unchecked(grid, c))
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        self.samples
            .get_or_init(|| self.grid.synthesize_kernel(self.coeffs.get().expect("field has a representation"), Kernel::Value))
    }

    pub fn coeffs(&self) -> &[f64] {
        self.coeffs
            .get_or_init(|| self.grid.analyze_kernel(self.samples.get().expect("field has a representation"), Kernel::Value))
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples();
        self.samples.into_inner().expect("samples initialized")
    }

    /// Coefficient of `Y_lm`.
    pub fn coeff(&self, l: usize, m: i64) -> f64 {
        self.coeffs()[SphereGrid::coeff_index(l, m)]
    }

    /// Replaces the samples by the band-limited projection (drops anything
    /// the grid cannot represent).
    pub fn projected(&self) -> Self {
        Self::from_coeffs_unchecked(&self.grid, self.coeffs().to_vec())
    }

    fn map_coeffs<F: Fn(usize, i64, f64) -> f64>(&self, f: F) -> Self {
        let c = self
            .grid
            .degrees_orders()
            .zip(self.coeffs())
            .map(|((l, m), &a)| f(l, m, a))
            .collect();
        Self::from_coeffs_unchecked(&self.grid, c)
    }

    pub fn laplacian(&self) -> Self {
        self.map_coeffs(|l, _, a| -((l * (l + 1)) as f64) * a)
    }

    /// `∂_φ f`, exact in coefficient space.
    pub fn d_phi(&self) -> Self {
        let c = self.coeffs();
        let mut out = vec![0.0; c.len()];
        // ∂_φ Y_{l,m} = -m Y_{l,-m} for signed m, so new(l,m) = m a(l,-m)
        for (i, (l, m)) in self.grid.degrees_orders().enumerate() {
            out[i] = m as f64 * c[SphereGrid::coeff_index(l, -m)];
        }
        Self::from_coeffs_unchecked(&self.grid, out)
    }

    /// `∂_θ f` sampled at the nodes.
    pub fn d_theta(&self) -> Self {
        Self::from_samples_unchecked(&self.grid, self.grid.synthesize_kernel(self.coeffs(), Kernel::DTheta))
    }

    pub fn gradient(&self) -> TangentField {
        let theta = self.grid.synthesize_kernel(self.coeffs(), Kernel::DTheta);
        let dphi = self.d_phi();
        let n_lon = self.grid.n_lon();
        let sin = self.grid.sin_theta();
        let phi = dphi
            .samples()
            .iter()
            .enumerate()
            .map(|(i, v)| v / sin[i / n_lon])
            .collect();
        TangentField { grid: self.grid.clone(), theta, phi }
    }

    /// `∫ f dμ₀` by the grid quadrature, accumulated ring by ring in order.
    pub fn integrate(&self) -> f64 {
        let s = self.samples();
        let n_lon = self.grid.n_lon();
        (0..self.grid.n_lat())
            .map(|j| self.grid.node_weight(j) * s[j * n_lon..(j + 1) * n_lon].iter().sum::<f64>())
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.integrate() / (4.0 * std::f64::consts::PI)
    }

    /// Same function on another grid: coefficients are truncated or
    /// zero-padded.
    pub fn resample(&self, target: &Arc<SphereGrid>) -> Self {
        if Arc::ptr_eq(target, &self.grid) {
            return self.clone();
        }
        let src = self.coeffs();
        let n = target.n_coeffs();
        let mut c = vec![0.0; n];
        let k = n.min(src.len());
        c[..k].copy_from_slice(&src[..k]);
        Self::from_coeffs_unchecked(target, c)
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Self {
        Self::from_samples_unchecked(&self.grid, self.samples().iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination; both fields must share a band limit.
    pub fn zip<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Self {
        assert_eq!(
            self.grid.band_limit(),
            other.grid.band_limit(),
            "pointwise combination of fields on different grids"
        );
        let s = self.samples().iter().zip(other.samples()).map(|(&a, &b)| f(a, b)).collect();
        Self::from_samples_unchecked(&self.grid, s)
    }

    /// Linear combination `a·self + b·other` carried out on whichever
    /// representation both fields already have.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.grid.band_limit(), other.grid.band_limit());
        if let (Some(x), Some(y)) = (self.coeffs.get(), other.coeffs.get()) {
            let c = x.iter().zip(y).map(|(p, q)| a * p + b * q).collect();
            return Self::from_coeffs_unchecked(&self.grid, c);
        }
        self.zip(other, |p, q| a * p + b * q)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpby(1.0, other, 1.0)
    }
    pub fn sub(&self, other: &Self) -> Self {
        self.axpby(1.0, other, -1.0)
    }
    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |p, q| p * q)
    }
    pub fn scale(&self, a: f64) -> Self {
        if let Some(c) = self.coeffs.get() {
            return Self::from_coeffs_unchecked(&self.grid, c.iter().map(|v| a * v).collect());
        }
        self.map(|v| a * v)
    }

    /// Largest absolute value over the nodes.
    pub fn sup_norm(&self) -> f64 {
        self.samples().iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }
    pub fn min(&self) -> f64 {
        self.samples().iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn max(&self) -> f64 {
        self.samples().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn eval_at(&self, theta: f64, phi: f64) -> f64 {
        self.grid.eval_point(self.coeffs(), theta, phi)
    }

    /// `Σ |a_lm|²` restricted to degree `l`.
    pub fn degree_energy(&self, l: usize) -> f64 {
        let c = self.coeffs();
        let base = l * l;
        c[base..base + 2 * l + 1].iter().map(|v| v * v).sum()
    }

    /// Copy with all degree-`l` coefficients replaced by those of `source`.
    pub fn with_degree_from(&self, l: usize, source: &Self) -> Self {
        let mut c = self.coeffs().to_vec();
        let src = source.resample(&self.grid);
        let base = l * l;
        c[base..base + 2 * l + 1].copy_from_slice(&src.coeffs()[base..base + 2 * l + 1]);
        Self::from_coeffs_unchecked(&self.grid, c)
    }

    /// Copy with the degree-`l` part removed.
    pub fn without_degree(&self, l: usize) -> Self {
        self.map_coeffs(|d, _, a| if d == l { 0.0 } else { a })
    }
}

/// Tangent vector field given by its components in the orthonormal frame
/// `(∂_θ, ∂_φ / sin θ)` of the round metric.
#[derive(Debug, Clone)]
pub struct TangentField {
    grid: Arc<SphereGrid>,
    theta: Vec<f64>,
    phi: Vec<f64>,
}

impl TangentField {
    pub fn new(grid: &Arc<SphereGrid>, theta: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if theta.len() != grid.n_nodes() || phi.len() != grid.n_nodes() {
            return Err(Error::Shape(format!(
                "tangent components must have {} samples, got {} and {}",
                grid.n_nodes(),
                theta.len(),
                phi.len()
            )));
        }
        Ok(Self { grid: grid.clone(), theta, phi })
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn norm_squared(&self) -> ScalarField {
        let s = self.theta.iter().zip(&self.phi).map(|(a, b)| a * a + b * b).collect();
        ScalarField::from_samples_unchecked(&self.grid, s)
    }

    pub fn dot(&self, other: &Self) -> ScalarField {
        let s = (0..self.theta.len())
            .map(|i| self.theta[i] * other.theta[i] + self.phi[i] * other.phi[i])
            .collect();
        ScalarField::from_samples_unchecked(&self.grid, s)
    }

    /// Band-limited projection of `div₀ V`, computed in weak form:
    /// `⟨Y, div V⟩ = −⟨∇Y, V⟩` for every harmonic `Y` of degree ≤ L.
    pub fn divergence(&self) -> ScalarField {
        let grid = &self.grid;
        let n_lon = grid.n_lon();
        let sin = grid.sin_theta();
        let a_theta = grid.analyze_kernel(&self.theta, Kernel::DTheta);
        let scaled: Vec<f64> = self.phi.iter().enumerate().map(|(i, v)| v / sin[i / n_lon]).collect();
        let a_phi = grid.analyze_kernel(&scaled, Kernel::Value);
        let mut out = vec![0.0; grid.n_coeffs()];
        for (i, (l, m)) in grid.degrees_orders().enumerate() {
            // ∂_φ Y_{l,m} = -m Y_{l,-m} (signed m)
            let phi_part = -(m as f64) * a_phi[SphereGrid::coeff_index(l, -m)];
            out[i] = -(a_theta[i] + phi_part);
        }
        ScalarField::from_coeffs_unchecked(grid, out)
    }
}

/// `(x₁, x₂, x₃) = (sin θ cos φ, sin θ sin φ, cos θ)` sampled on `grid`.
pub fn coordinate_functions(grid: &Arc<SphereGrid>) -> [ScalarField; 3] {
    let build = |f: &dyn Fn(f64, f64) -> f64| {
        let s = (0..grid.n_nodes())
            .map(|i| {
                let (t, p) = grid.node(i);
                f(t, p)
            })
            .collect();
        ScalarField::from_samples_unchecked(grid, s)
    };
    [
        build(&|t, p| t.sin() * p.cos()),
        build(&|t, p| t.sin() * p.sin()),
        build(&|t, _| t.cos()),
    ]
}

//! Verification quantities computed on solved leaves and decay-rate fits
//! across foliations.

mod conformal;
mod decay;

pub use conformal::{kazdan_warner_identity_residual, solve_conformal_factor, ConformalFactor};
pub use decay::{decay_fit, DecayFit, DecayVerdict, UNDERFLOW_FLOOR};

use std::f64::consts::PI;

use serde::Serialize;

use crate::geometry::{reference_excess, LeafGeometry};
use crate::solver::{CmcLeaf, Foliation};
use crate::sphere::{coordinate_functions, ScalarField};
use crate::{Error, Result};

/// `H² − 4 − 16π/|Σ|` with the area-weighted mean `H`.
pub fn verify_mean_curvature_estimate(geometry: &LeafGeometry) -> f64 {
    geometry.mean_curvature_area_residual()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KwCentering {
    /// `cᵢ = ∫ xᵢ e^{−3w} dμ₀`.
    pub raw: [f64; 3],
    /// `cᵢ / ∫ e^{−3w} dμ₀`.
    pub normalized: [f64; 3],
    /// Euclidean norm of `normalized`.
    pub norm: f64,
}

/// Centering vector of `w = ρ − r̃`, given `ρ = base + φ`.
pub fn kazdan_warner_centering(phi: &ScalarField, base: f64, r_tilde: f64) -> KwCentering {
    let shift = base - r_tilde;
    let weight = phi.map(|v| (-3.0 * (v + shift)).exp());
    let x = coordinate_functions(phi.grid());
    let raw = [0, 1, 2].map(|i| weight.mul(&x[i]).integrate());
    let total = weight.integrate();
    let normalized = raw.map(|c| c / total);
    let norm = normalized.iter().map(|c| c * c).sum::<f64>().sqrt();
    KwCentering { raw, normalized, norm }
}

/// Derivative of `η(r) = 4/expm1(2r) − m/sinh³ r`, the model `H − 2`.
fn reference_excess_slope(r: f64, mass: f64) -> f64 {
    let em = (2.0 * r).exp_m1();
    let sh = r.sinh();
    -8.0 * (em + 1.0) / (em * em) + 3.0 * mass * r.cosh() / sh.powi(4)
}

/// Radius `r̃` with `2 coth r̃ − m/sinh³ r̃ = H`, given `H − 2`.
pub fn effective_radius(mass: f64, h_excess: f64) -> Result<f64> {
    if !(h_excess > 0.0) || !h_excess.is_finite() {
        return Err(Error::Domain(format!("H − 2 = {h_excess:e} admits no effective radius")));
    }
    let f = |r: f64| reference_excess(r, mass) - h_excess;
    // the m = 0 solution bounds the root from above
    let mut hi = 0.5 * (1.0 + 4.0 / h_excess).ln();
    if f(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    let mut found = false;
    for _ in 0..200 {
        lo *= 0.9;
        if !(reference_excess_slope(lo, mass) < 0.0) {
            break;
        }
        if f(lo) > 0.0 {
            found = true;
            break;
        }
    }
    if !found || f(hi) > 0.0 {
        return Err(Error::Domain(format!(
            "no effective radius on the decreasing branch for H − 2 = {h_excess:e}, m = {mass}"
        )));
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = f(r);
        if v > 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let newton = r - v / reference_excess_slope(r, mass);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - r).abs() <= 4.0 * f64::EPSILON * r {
            return Ok(next);
        }
        r = next;
    }
    Ok(r)
}

/// `m̂ = (2 coth r̂ − H) sinh³ r̂` with `|Σ| = 4π sinh² r̂`, written so that
/// neither difference cancels.
pub fn mass_estimate(area: f64, h_excess: f64) -> f64 {
    let s = (area / (4.0 * PI)).sqrt();
    // 2 coth r̂ − 2 = 2 / (σ (σ + √(1 + σ²)))
    let coth_excess = 2.0 / (s * (s + (1.0 + s * s).sqrt()));
    (coth_excess - h_excess) * s * s * s
}

/// `(r̃, m̂)` of a leaf; `r̃` uses the known mass, `m̂` only the leaf.
pub fn effective_radius_and_mass(geometry: &LeafGeometry) -> Result<(f64, f64)> {
    let e = geometry.mean_curvature_excess();
    Ok((effective_radius(geometry.mass, e)?, mass_estimate(geometry.area, e)))
}

/// `K̂` of the normalized induced metric `(4π/|Σ|) g`, intrinsic route.
pub fn normalized_gauss_curvature(geometry: &LeafGeometry) -> ScalarField {
    geometry.gauss_curvature_intrinsic.scale(geometry.area / (4.0 * PI))
}

/// Diagnostics of one leaf.
#[derive(Debug, Clone, Serialize)]
pub struct LeafReport {
    pub r: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub sup_phi: f64,
    pub area: f64,
    pub area_radius: f64,
    pub r_tilde: f64,
    pub m_hat: f64,
    /// `sup |ρ − r̃|`.
    pub sup_w: f64,
    /// `∫K dμ / 4π − 1` (Gauss-equation route).
    pub gauss_bonnet_residual: f64,
    /// `∫K dμ / 4π − 1` (intrinsic route).
    pub gauss_bonnet_intrinsic_residual: f64,
    pub gauss_dual_path_gap: f64,
    pub lemma_h_residual: f64,
    /// `sup |K − [(H²−4)/4 + m/sinh³ρ − 3m|∂_r^⊤|²/(2 sinh³ρ) − |Å|²/2]|`.
    pub gauss_equation_residual: f64,
    /// `∫ |∂_r^⊤|² dμ`.
    pub radial_tangent_integral: f64,
    /// `sup |R + 6|` over the leaf.
    pub scalar_curvature_defect: f64,
    /// `∫ 4e^{−2ρ} dμ / 4π`, which tends to 1; the chart normalization of
    /// `π + O(e^{−r})` in the unit-ball model.
    pub exp_weighted_area: f64,
    pub kw_centering: KwCentering,
    pub kw_identity_residual: [f64; 3],
    pub sup_grad_k_hat: f64,
    pub sup_beta: f64,
    pub beta_multipliers: [f64; 3],
    /// `∫ K̂ e^{2β} dμ₀ / 4π − 1`.
    pub beta_gauss_bonnet_residual: f64,
    pub lambda_min: Option<f64>,
    #[serde(skip)]
    pub beta: ScalarField,
}

impl LeafReport {
    pub fn compute(leaf: &CmcLeaf) -> Result<Self> {
        let geo = &leaf.geometry;
        let (r_tilde, m_hat) = effective_radius_and_mass(geo)?;
        let k_hat = normalized_gauss_curvature(geo);
        let conformal = solve_conformal_factor(&k_hat)?;
        let (gb_a, gb_b) = geo.gauss_bonnet();
        let phi = leaf.phi();
        let shift = leaf.r - r_tilde;
        let sup_w = phi.samples().iter().fold(0.0f64, |m, v| m.max((v + shift).abs()));
        let sup_grad_k_hat = k_hat.gradient().norm_squared().max().sqrt();
        Ok(Self {
            r: leaf.r,
            min_rho: leaf.min_rho(),
            max_rho: leaf.max_rho(),
            sup_phi: leaf.sup_phi(),
            area: geo.area,
            area_radius: geo.area_radius,
            r_tilde,
            m_hat,
            sup_w,
            gauss_bonnet_residual: gb_a / (4.0 * PI) - 1.0,
            gauss_bonnet_intrinsic_residual: gb_b / (4.0 * PI) - 1.0,
            gauss_dual_path_gap: geo.gauss_dual_path_gap(),
            lemma_h_residual: verify_mean_curvature_estimate(geo),
            gauss_equation_residual: geo.gauss_equation_residual(&leaf.graph).sup_norm(),
            radial_tangent_integral: geo.integrate(&geo.radial_tangent_squared),
            scalar_curvature_defect: geo.scalar_curvature.map(|v| v + 6.0).sup_norm(),
            exp_weighted_area: geo.integrate(&leaf.graph.rho().map(|p| 4.0 * (-2.0 * p).exp())) / (4.0 * PI),
            kw_centering: kazdan_warner_centering(phi, leaf.r, r_tilde),
            kw_identity_residual: kazdan_warner_identity_residual(&k_hat, &conformal.beta),
            sup_grad_k_hat,
            sup_beta: conformal.sup,
            beta_multipliers: conformal.multipliers,
            beta_gauss_bonnet_residual: conformal.gauss_bonnet / (4.0 * PI) - 1.0,
            lambda_min: leaf.lambda_min(),
            beta: conformal.beta,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRecord {
    pub name: String,
    /// `None` when there are too few usable points to fit.
    pub verdict: Option<DecayVerdict>,
}

/// Per-leaf reports plus decay fits against `min ρ`.
#[derive(Debug, Clone, Serialize)]
pub struct FoliationReport {
    pub leaves: Vec<LeafReport>,
    pub decays: Vec<DecayRecord>,
    /// `max_k |m̂_k − m̂_0| / |m̂_0|`.
    pub mass_spread: f64,
}

impl FoliationReport {
    pub fn decay(&self, name: &str) -> Option<&DecayVerdict> {
        self.decays.iter().find(|d| d.name == name).and_then(|d| d.verdict.as_ref())
    }
}

pub fn foliation_report(foliation: &Foliation) -> Result<FoliationReport> {
    let leaves = foliation.leaves.iter().map(LeafReport::compute).collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = leaves.iter().map(|l| l.min_rho).collect();
    let series: [(&str, fn(&LeafReport) -> f64); 8] = [
        ("lemma_h_residual", |l| l.lemma_h_residual),
        ("gauss_equation_residual", |l| l.gauss_equation_residual),
        ("kw_norm", |l| l.kw_centering.norm),
        ("sup_beta", |l| l.sup_beta),
        ("sup_phi", |l| l.sup_phi),
        ("sup_w", |l| l.sup_w),
        ("rho_spread", |l| l.max_rho - l.min_rho),
        ("radial_tangent_integral", |l| l.radial_tangent_integral),
    ];
    let decays = series
        .iter()
        .map(|(name, f)| {
            let v: Vec<f64> = leaves.iter().map(f).collect();
            DecayRecord { name: name.to_string(), verdict: decay_fit(&x, &v).ok() }
        })
        .collect();
    let mass_spread = match leaves.first() {
        Some(first) => leaves.iter().map(|l| (l.m_hat - first.m_hat).abs()).fold(0.0, f64::max) / first.m_hat.abs(),
        None => 0.0,
    };
    Ok(FoliationReport { leaves, decays, mass_spread })
}

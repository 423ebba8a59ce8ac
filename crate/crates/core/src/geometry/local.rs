//! Pointwise extrinsic geometry of a radial graph in the `(r, θ, φ)` chart.

use crate::ambient::{christoffel, curvature_from_jet, AmbientMetric, Christoffel, MetricJet, Point};
use crate::linalg::{self, Mat2, Mat3, Vec3};
use crate::{Error, Result};

/// `ρ` and its chart derivatives at one node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Local {
    pub theta: f64,
    pub phi: f64,
    pub rho: f64,
    pub rt: f64,
    pub rp: f64,
    pub rtt: f64,
    pub rtp: f64,
    pub rpp: f64,
}

impl Local {
    pub fn point(&self) -> Point {
        Point::new(self.rho, self.theta, self.phi)
    }
    fn tangents(&self) -> [Vec3; 2] {
        [[self.rt, 1.0, 0.0], [self.rp, 0.0, 1.0]]
    }
    fn conormal(&self) -> Vec3 {
        [1.0, -self.rt, -self.rp]
    }
    fn hessian(&self) -> Mat2 {
        [[self.rtt, self.rtp], [self.rtp, self.rpp]]
    }
}

/// Everything the leaf-level fields are assembled from.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct NodeGeometry {
    pub induced: Mat2,
    pub mean_curvature: f64,
    pub a_squared: f64,
    pub traceless_raw: f64,
    pub traceless: f64,
    pub normal_radial: f64,
    pub radial_tangent_sq: f64,
    pub ric_nu_nu: f64,
    pub scalar: f64,
    pub gauss_a: f64,
    /// `√det ĝ / sin θ`: area density against `dμ₀`.
    pub density: f64,
}

pub(crate) struct Extrinsic {
    pub induced: Mat2,
    pub induced_inv: Mat2,
    /// `B_ij = ρ_ij + n_a Γ^a_bc X_i^b X_j^c`, so that `A = −B/|n|`.
    pub b: Mat2,
    pub n_norm: f64,
    pub n_norm_sq: f64,
    pub ginv: Mat3,
    pub second: Mat2,
    pub h: f64,
}

pub(crate) fn induced_metric(g: &Mat3, x: &[Vec3; 2]) -> Mat2 {
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = linalg::bilinear3(&x[i], g, &x[j]);
        }
    }
    m
}

pub(crate) fn contract_gamma(n: &Vec3, gamma: &Christoffel, x: &[Vec3; 2]) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in i..2 {
            let mut acc = 0.0;
            for a in 0..3 {
                if n[a] == 0.0 {
                    continue;
                }
                acc += n[a] * linalg::bilinear3(&x[i], &gamma[a], &x[j]);
            }
            out[i][j] = acc;
            out[j][i] = acc;
        }
    }
    out
}

pub(crate) fn trace2(ginv: &Mat2, a: &Mat2) -> f64 {
    ginv[0][0] * a[0][0] + 2.0 * ginv[0][1] * a[0][1] + ginv[1][1] * a[1][1]
}

pub(crate) fn extrinsic(jet: &MetricJet, local: &Local) -> Result<Extrinsic> {
    let x = local.tangents();
    let n = local.conormal();
    let induced = induced_metric(&jet.g, &x);
    let induced_inv = linalg::inverse2(&induced).ok_or_else(|| {
        Error::Validity(format!(
            "degenerate induced metric at (θ, φ) = ({}, {})",
            local.theta, local.phi
        ))
    })?;
    let ginv = linalg::inverse3(&jet.g).ok_or_else(|| Error::Numeric("singular ambient metric".into()))?;
    let gamma = christoffel(&jet.g, &jet.dg)?;
    let n_norm_sq = linalg::bilinear3(&n, &ginv, &n);
    let n_norm = n_norm_sq.sqrt();
    let hess = local.hessian();
    let gam = contract_gamma(&n, &gamma, &x);
    let mut b = [[0.0; 2]; 2];
    let mut second = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            b[i][j] = hess[i][j] + gam[i][j];
            second[i][j] = -b[i][j] / n_norm;
        }
    }
    let h = trace2(&induced_inv, &second);
    Ok(Extrinsic { induced, induced_inv, b, n_norm, n_norm_sq, ginv, second, h })
}

/// `|∂_r^⊤|² = g_rr − 1/|n|²`, arranged as `(g_rr − 1) + (|n|² − 1)/|n|²`
/// with `|n|² − 1` expanded so that nothing of order one cancels.
fn radial_tangent_sq(g: &Mat3, ex: &Extrinsic, local: &Local) -> f64 {
    let cof00 = g[1][1] * g[2][2] - g[1][2] * g[2][1];
    let cof01 = -(g[1][0] * g[2][2] - g[1][2] * g[2][0]);
    let cof02 = g[1][0] * g[2][1] - g[1][1] * g[2][0];
    let det = g[0][0] * cof00 + g[0][1] * cof01 + g[0][2] * cof02;
    let ginv_rr_excess = (cof00 * (1.0 - g[0][0]) - g[0][1] * cof01 - g[0][2] * cof02) / det;
    let gi = &ex.ginv;
    let (a, b) = (local.rt, local.rp);
    let rest = -2.0 * (gi[0][1] * a + gi[0][2] * b) + gi[1][1] * a * a + 2.0 * gi[1][2] * a * b + gi[2][2] * b * b;
    let nn_excess = ginv_rr_excess + rest;
    (g[0][0] - 1.0) + nn_excess / ex.n_norm_sq
}

/// Full node geometry including ambient curvature along the normal.
pub(crate) fn node_geometry(metric: &AmbientMetric, local: &Local, gauss_sign: f64) -> Result<NodeGeometry> {
    let pt = local.point();
    let jet2 = metric.jet2_at(pt)?;
    let jet = MetricJet { g: jet2.g, dg: jet2.dg };
    let ex = extrinsic(&jet, local)?;
    let curv = curvature_from_jet(&jet2)?;
    let n = local.conormal();
    let mut nu = [0.0; 3];
    for a in 0..3 {
        nu[a] = (0..3).map(|b| ex.ginv[a][b] * n[b]).sum::<f64>() / ex.n_norm;
    }
    let ric_nu_nu = linalg::bilinear3(&nu, &curv.ricci, &nu);
    let gi = &ex.induced_inv;
    let a = &ex.second;
    // |A|² = ĝ^{ik} ĝ^{jl} A_ij A_kl
    let mut a_sq = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    a_sq += gi[i][k] * gi[j][l] * a[i][j] * a[k][l];
                }
            }
        }
    }
    let h = ex.h;
    let traceless_raw = a_sq - 0.5 * h * h;
    // |Å|² from Å = A − (H/2)ĝ directly: |A|² − H²/2 cancels to roundoff of |A|²
    let mut ao = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            ao[i][j] = a[i][j] - 0.5 * h * ex.induced[i][j];
        }
    }
    let mut traceless = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    traceless += gi[i][k] * gi[j][l] * ao[i][j] * ao[k][l];
                }
            }
        }
    }
    let traceless = traceless.max(0.0);
    let gauss_a = gauss_sign * (0.5 * curv.scalar - ric_nu_nu) + 0.25 * h * h - 0.5 * traceless;
    let det = linalg::det2(&ex.induced);
    let normal_radial = 1.0 / ex.n_norm;
    Ok(NodeGeometry {
        induced: ex.induced,
        mean_curvature: h,
        a_squared: a_sq,
        traceless_raw,
        traceless,
        normal_radial,
        radial_tangent_sq: radial_tangent_sq(&jet.g, &ex, local).max(0.0),
        ric_nu_nu,
        scalar: curv.scalar,
        gauss_a,
        density: det.sqrt() / local.theta.sin(),
    })
}

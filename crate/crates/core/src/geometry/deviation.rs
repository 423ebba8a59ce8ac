//! Mean curvature of a radial graph measured against the reference profile,
//! `H − (2 coth r − m / sinh³ r)`, without catastrophic cancellation.
//!
//! For large `r` both terms are `2 + O(e^{−2r})` while the difference is
//! `O(e^{−5r})`, so subtracting two double-precision values of `H` loses all
//! significant digits by `r ≈ 7`. Here the deviation is split into pieces
//! that are each evaluated directly as small quantities:
//!
//! * the round part `2ψ'/ψ − 2`, as `2a / (√(1+a) + 1)` with `a = 1/s² − m/s³`,
//!   minus `4/expm1(2r) − m/sinh³r`;
//! * the warped-product graph correction, in closed form in `∇₀φ` and `Hess₀φ`;
//! * the perturbation correction `H_{g_m+Q} − H_{g_m}`, by differencing every
//!   chart quantity algebraically so that only `Q`-sized terms remain.

use crate::ambient::{christoffel_first_kind, AmbientMetric, MetricJet, Point};
use crate::linalg::{self, Mat2, Mat3};
use crate::Result;

use super::local::{contract_gamma, extrinsic, induced_metric, trace2, Local};

/// `2 coth r − m / sinh³ r − 2`.
pub fn reference_excess(r: f64, mass: f64) -> f64 {
    4.0 / (2.0 * r).exp_m1() - mass / r.sinh().powi(3)
}

/// `2ψ'/ψ − 2` at `s = ψ`.
pub fn round_excess(s: f64, mass: f64) -> f64 {
    let a = 1.0 / (s * s) - mass / (s * s * s);
    2.0 * a / ((1.0 + a).sqrt() + 1.0)
}

/// Closed-form mean curvature correction of the graph `r + φ` in the warped
/// product `dr² + ψ(r)² g₀` relative to the round sphere through the same
/// point: `H − 2ψ'(ρ)/ψ(ρ)`.
pub(crate) fn warped_correction(psi: f64, dpsi: f64, local: &Local, lap: f64) -> f64 {
    let (st, ct) = local.theta.sin_cos();
    let (pt, pp) = (local.rt, local.rp);
    let grad_sq = pt * pt + pp * pp / (st * st);
    if grad_sq == 0.0 && lap == 0.0 {
        return 0.0;
    }
    let psi2 = psi * psi;
    let q = grad_sq / psi2;
    let w = (1.0 + q).sqrt();
    // Hess₀φ(∇φ, ∇φ), ∇φ = (φ_θ, φ_φ / sin²θ) in coordinates
    let h_tt = local.rtt;
    let h_tp = local.rtp - ct / st * pp;
    let h_pp = local.rpp + st * ct * pt;
    let up = pp / (st * st);
    let hess = h_tt * pt * pt + 2.0 * h_tp * pt * up + h_pp * up * up;
    let w3 = w * w * w;
    -2.0 * dpsi / psi * q / (w * (w + 1.0)) + grad_sq * dpsi / (psi2 * psi * w3)
        - (lap / w - hess / (psi2 * w3)) / psi2
}

/// `H_{g_m + Q} − H_{g_m}` at one node.
pub(crate) fn perturbation_correction(background: &MetricJet, q: &MetricJet, local: &Local) -> Result<f64> {
    let mut full = *background;
    for a in 0..3 {
        for b in 0..3 {
            full.g[a][b] += q.g[a][b];
            for c in 0..3 {
                full.dg[c][a][b] += q.dg[c][a][b];
            }
        }
    }
    let ex_g = extrinsic(&full, local)?;
    let ex_m = extrinsic(background, local)?;
    let x = [[local.rt, 1.0, 0.0], [local.rp, 0.0, 1.0]];
    let n = [1.0, -local.rt, -local.rp];

    // δG⁻¹ = −G⁻¹_g Q G⁻¹_m
    let dginv = neg_sandwich3(&ex_g.ginv, &q.g, &ex_m.ginv);
    // δΓ^a_bc = G⁻¹_g^{ad} Γ_Q,dbc + δG⁻¹^{ad} Γ_m,dbc
    let first_q = christoffel_first_kind(&q.dg);
    let first_m = christoffel_first_kind(&background.dg);
    let mut dgamma = [[[0.0; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                dgamma[a][b][c] = (0..3)
                    .map(|d| ex_g.ginv[a][d] * first_q[d][b][c] + dginv[a][d] * first_m[d][b][c])
                    .sum();
            }
        }
    }
    let db = contract_gamma(&n, &dgamma, &x);
    // δ|n|² and δ(1/|n|)
    let dn2 = linalg::bilinear3(&n, &dginv, &n);
    let d_inv_norm = -dn2 / (ex_g.n_norm * ex_m.n_norm * (ex_g.n_norm + ex_m.n_norm));
    let mut da = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            da[i][j] = -(d_inv_norm * ex_m.b[i][j] + db[i][j] / ex_g.n_norm);
        }
    }
    // δĝ⁻¹ = −ĝ⁻¹_g q ĝ⁻¹_m with q_ij = X_i Q X_j
    let qi = induced_metric(&q.g, &x);
    let dgi = neg_sandwich2(&ex_g.induced_inv, &qi, &ex_m.induced_inv);
    Ok(trace2(&dgi, &ex_g.second) + trace2(&ex_m.induced_inv, &da))
}

fn neg_sandwich3(a: &Mat3, q: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    acc += a[i][k] * q[k][l] * b[l][j];
                }
            }
            out[i][j] = -acc;
        }
    }
    out
}

fn neg_sandwich2(a: &Mat2, q: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    acc += a[i][k] * q[k][l] * b[l][j];
                }
            }
            out[i][j] = -acc;
        }
    }
    out
}

/// `H − (2 coth r − m/sinh³ r)` at one node of the graph `r + φ`.
pub(crate) fn node_deviation(metric: &AmbientMetric, base: f64, local: &Local, lap: f64) -> Result<f64> {
    let mass = metric.mass();
    let bg = metric.background();
    let s = bg.s_of_r(local.rho)?;
    let psi = bg.psi_jet_at_s(s);
    let mut dev = round_excess(s, mass) - reference_excess(base, mass);
    dev += warped_correction(psi[0], psi[1], local, lap);
    if metric.is_perturbed() {
        let pt = Point::new(local.rho, local.theta, local.phi);
        if let Some(q) = metric.perturbation_jet(pt) {
            let background = AmbientMetric::background_jet(&psi, local.theta);
            dev += perturbation_correction(&background, &q, local)?;
        }
    }
    Ok(dev)
}

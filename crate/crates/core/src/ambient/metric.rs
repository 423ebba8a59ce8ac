use super::background::AdsSchwarzschild;
use super::perturbation::Perturbation;
use crate::linalg::{self, Mat3, Vec3};
use crate::{Error, Result};

/// A point `(r, θ, φ)` of the asymptotic chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Point {
    pub fn new(r: f64, theta: f64, phi: f64) -> Self {
        Self { r, theta, phi }
    }
}

/// Metric components with first derivatives: `dg[c][a][b] = ∂_c g_ab`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricJet {
    pub g: Mat3,
    pub dg: [Mat3; 3],
}

/// Adds second derivatives: `ddg[c][d][a][b] = ∂_c ∂_d g_ab`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricJet2 {
    pub g: Mat3,
    pub dg: [Mat3; 3],
    pub ddg: [[Mat3; 3]; 3],
}

/// `gamma[a][b][c] = Γ^a_bc`.
pub type Christoffel = [[[f64; 3]; 3]; 3];
/// All-covariant Riemann tensor `R_abcd`, with `Ric_bd = g^{ac} R_abcd`.
pub type Riemann = [[[[f64; 3]; 3]; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature {
    pub riemann: Riemann,
    pub ricci: Mat3,
    pub scalar: f64,
}

/// Ricci contracted against a unit vector and an adapted orthonormal frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicciSplit {
    pub nu_nu: f64,
    pub e1_e1: f64,
    pub e2_e2: f64,
    pub e1_e2: f64,
    pub nu_e1: f64,
    pub nu_e2: f64,
    pub e1: Vec3,
    pub e2: Vec3,
}

/// Background `g_m` plus an optional decaying perturbation `Q`.
#[derive(Debug, Clone)]
pub struct AmbientMetric {
    background: AdsSchwarzschild,
    perturbation: Option<Perturbation>,
    fd_scale: f64,
}

pub const DEFAULT_FD_SCALE: f64 = 1e-4;

fn add3(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = *a;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] += b[i][j];
        }
    }
    c
}

fn lincomb(terms: &[(f64, Mat3)]) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (w, m) in terms {
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += w * m[i][j];
            }
        }
    }
    out
}

const D1: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

impl AmbientMetric {
    pub fn new(background: AdsSchwarzschild, perturbation: Option<Perturbation>) -> Self {
        Self { background, perturbation, fd_scale: DEFAULT_FD_SCALE }
    }

    pub fn unperturbed(mass: f64) -> Result<Self> {
        Ok(Self::new(AdsSchwarzschild::new(mass)?, None))
    }

    pub fn with_fd_scale(mut self, scale: f64) -> Self {
        self.fd_scale = scale;
        self
    }

    pub fn background(&self) -> &AdsSchwarzschild {
        &self.background
    }
    pub fn perturbation(&self) -> Option<&Perturbation> {
        self.perturbation.as_ref()
    }
    pub fn mass(&self) -> f64 {
        self.background.mass()
    }
    pub fn is_perturbed(&self) -> bool {
        self.perturbation.as_ref().is_some_and(|p| p.epsilon() != 0.0)
    }

    /// Finite-difference step `h_fd = scale · max(1, r)`.
    pub fn fd_step(&self, r: f64) -> f64 {
        self.fd_scale * r.max(1.0)
    }

    /// Background components and derivatives given `ψ`-jet `[ψ, ψ', ψ'', ψ''']`.
    pub fn background_jet2(psi: &[f64; 4], theta: f64) -> MetricJet2 {
        let [p, p1, p2, _] = *psi;
        let (s, c) = theta.sin_cos();
        let s2 = s * s;
        let mut g = [[0.0; 3]; 3];
        g[0][0] = 1.0;
        g[1][1] = p * p;
        g[2][2] = p * p * s2;
        let mut dg = [[[0.0; 3]; 3]; 3];
        dg[0][1][1] = 2.0 * p * p1;
        dg[0][2][2] = 2.0 * p * p1 * s2;
        dg[1][2][2] = 2.0 * p * p * s * c;
        let mut ddg = [[[[0.0; 3]; 3]; 3]; 3];
        let prr = 2.0 * (p1 * p1 + p * p2);
        ddg[0][0][1][1] = prr;
        ddg[0][0][2][2] = prr * s2;
        ddg[0][1][2][2] = 4.0 * p * p1 * s * c;
        ddg[1][0][2][2] = ddg[0][1][2][2];
        ddg[1][1][2][2] = 2.0 * p * p * (c * c - s2);
        MetricJet2 { g, dg, ddg }
    }

    pub fn background_jet(psi: &[f64; 4], theta: f64) -> MetricJet {
        let j = Self::background_jet2(psi, theta);
        MetricJet { g: j.g, dg: j.dg }
    }

    fn q_at(&self, x: &[f64; 3]) -> Mat3 {
        self.perturbation
            .as_ref()
            .map(|p| p.chart_components(x[0], x[1], x[2]))
            .unwrap_or([[0.0; 3]; 3])
    }

    /// `Q` and its first derivatives (fourth-order central differences), or
    /// `None` without a perturbation.
    pub fn perturbation_jet(&self, pt: Point) -> Option<MetricJet> {
        self.perturbation.as_ref()?;
        let x = [pt.r, pt.theta, pt.phi];
        let h = self.fd_step(pt.r);
        let q = self.q_at(&x);
        let mut dg = [[[0.0; 3]; 3]; 3];
        for (c, slot) in dg.iter_mut().enumerate() {
            let terms: Vec<(f64, Mat3)> = D1
                .iter()
                .map(|&(off, w)| {
                    let mut y = x;
                    y[c] += off * h;
                    (w / (12.0 * h), self.q_at(&y))
                })
                .collect();
            *slot = lincomb(&terms);
        }
        Some(MetricJet { g: q, dg })
    }

    fn perturbation_jet2(&self, pt: Point) -> Option<MetricJet2> {
        let first = self.perturbation_jet(pt)?;
        let x = [pt.r, pt.theta, pt.phi];
        let h = self.fd_step(pt.r);
        let mut ddg = [[[[0.0; 3]; 3]; 3]; 3];
        for c in 0..3 {
            let pure: Vec<(f64, Mat3)> = [(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)]
                .iter()
                .map(|&(off, w)| {
                    let mut y = x;
                    y[c] += off * h;
                    (w / (12.0 * h * h), self.q_at(&y))
                })
                .collect();
            ddg[c][c] = lincomb(&pure);
            for d in (c + 1)..3 {
                let mut terms = Vec::with_capacity(16);
                for &(oc, wc) in &D1 {
                    for &(od, wd) in &D1 {
                        let mut y = x;
                        y[c] += oc * h;
                        y[d] += od * h;
                        terms.push((wc * wd / (144.0 * h * h), self.q_at(&y)));
                    }
                }
                ddg[c][d] = lincomb(&terms);
                ddg[d][c] = ddg[c][d];
            }
        }
        Some(MetricJet2 { g: first.g, dg: first.dg, ddg })
    }

    fn check_point(&self, pt: Point) -> Result<[f64; 4]> {
        if !(pt.theta > 0.0 && pt.theta < std::f64::consts::PI) {
            return Err(Error::Domain(format!("colatitude θ = {} outside (0, π)", pt.theta)));
        }
        self.background.psi_jet(pt.r)
    }

    fn validate(g: &Mat3, pt: Point) -> Result<()> {
        if !linalg::is_positive_definite3(g) {
            return Err(Error::Validity(format!(
                "metric is not positive definite at (r, θ, φ) = ({}, {}, {})",
                pt.r, pt.theta, pt.phi
            )));
        }
        Ok(())
    }

    pub fn metric_at(&self, pt: Point) -> Result<Mat3> {
        let psi = self.check_point(pt)?;
        let mut g = Self::background_jet2(&psi, pt.theta).g;
        if self.perturbation.is_some() {
            g = add3(&g, &self.q_at(&[pt.r, pt.theta, pt.phi]));
        }
        Self::validate(&g, pt)?;
        Ok(g)
    }

    pub fn jet_at(&self, pt: Point) -> Result<MetricJet> {
        let psi = self.check_point(pt)?;
        self.jet_with_psi(pt, &psi)
    }

    pub(crate) fn jet_with_psi(&self, pt: Point, psi: &[f64; 4]) -> Result<MetricJet> {
        let mut jet = Self::background_jet(psi, pt.theta);
        if let Some(q) = self.perturbation_jet(pt) {
            jet.g = add3(&jet.g, &q.g);
            for c in 0..3 {
                jet.dg[c] = add3(&jet.dg[c], &q.dg[c]);
            }
        }
        Self::validate(&jet.g, pt)?;
        Ok(jet)
    }

    pub fn jet2_at(&self, pt: Point) -> Result<MetricJet2> {
        let psi = self.check_point(pt)?;
        let mut jet = Self::background_jet2(&psi, pt.theta);
        if let Some(q) = self.perturbation_jet2(pt) {
            jet.g = add3(&jet.g, &q.g);
            for c in 0..3 {
                jet.dg[c] = add3(&jet.dg[c], &q.dg[c]);
                for d in 0..3 {
                    jet.ddg[c][d] = add3(&jet.ddg[c][d], &q.ddg[c][d]);
                }
            }
        }
        Self::validate(&jet.g, pt)?;
        Ok(jet)
    }

    pub fn christoffel_at(&self, pt: Point) -> Result<Christoffel> {
        let jet = self.jet_at(pt)?;
        christoffel(&jet.g, &jet.dg)
    }

    pub fn curvature_at(&self, pt: Point) -> Result<Curvature> {
        let jet = self.jet2_at(pt)?;
        curvature_from_jet(&jet)
    }

    /// Ricci against unit `nu` (contravariant) and an orthonormal frame of its
    /// orthogonal complement built from `∂_θ, ∂_φ`.
    pub fn ricci_radial_tangent_split(&self, pt: Point, nu: Vec3) -> Result<RicciSplit> {
        let jet = self.jet2_at(pt)?;
        let curv = curvature_from_jet(&jet)?;
        let g = &jet.g;
        let len2 = linalg::bilinear3(&nu, g, &nu);
        if (len2 - 1.0).abs() > 1e-8 {
            return Err(Error::Domain(format!("normal direction is not unit: |ν|² = {len2}")));
        }
        let project = |v: Vec3, basis: &[Vec3]| -> Vec3 {
            let mut w = v;
            for b in basis {
                let k = linalg::bilinear3(&w, g, b);
                for i in 0..3 {
                    w[i] -= k * b[i];
                }
            }
            let n = linalg::bilinear3(&w, g, &w).sqrt();
            [w[0] / n, w[1] / n, w[2] / n]
        };
        let e1 = project([0.0, 1.0, 0.0], &[nu]);
        let e2 = project([0.0, 0.0, 1.0], &[nu, e1]);
        let ric = &curv.ricci;
        Ok(RicciSplit {
            nu_nu: linalg::bilinear3(&nu, ric, &nu),
            e1_e1: linalg::bilinear3(&e1, ric, &e1),
            e2_e2: linalg::bilinear3(&e2, ric, &e2),
            e1_e2: linalg::bilinear3(&e1, ric, &e2),
            nu_e1: linalg::bilinear3(&nu, ric, &e1),
            nu_e2: linalg::bilinear3(&nu, ric, &e2),
            e1,
            e2,
        })
    }

    /// `|div Ric − ½ d(scal)|_g` with the Ricci derivatives taken by
    /// fourth-order differences of the curvature evaluator.
    pub fn bianchi_residual(&self, pt: Point, step: f64) -> Result<f64> {
        let jet = self.jet_at(pt)?;
        let ginv = linalg::inverse3(&jet.g).ok_or_else(|| Error::Numeric("singular metric".into()))?;
        let gamma = christoffel(&jet.g, &jet.dg)?;
        let centre = self.curvature_at(pt)?;
        let x = [pt.r, pt.theta, pt.phi];
        let mut d_ric = [[[0.0; 3]; 3]; 3];
        let mut d_scal = [0.0; 3];
        for c in 0..3 {
            let mut terms = Vec::with_capacity(4);
            let mut scal = 0.0;
            for &(off, w) in &D1 {
                let mut y = x;
                y[c] += off * step;
                let cv = self.curvature_at(Point::new(y[0], y[1], y[2]))?;
                terms.push((w / (12.0 * step), cv.ricci));
                scal += w / (12.0 * step) * cv.scalar;
            }
            d_ric[c] = lincomb(&terms);
            d_scal[c] = scal;
        }
        // (∇_c Ric)_ab
        let ric = &centre.ricci;
        let mut div = [0.0; 3];
        for b in 0..3 {
            let mut acc = 0.0;
            for a in 0..3 {
                for c in 0..3 {
                    let mut cov = d_ric[c][a][b];
                    for d in 0..3 {
                        cov -= gamma[d][c][a] * ric[d][b] + gamma[d][c][b] * ric[a][d];
                    }
                    acc += ginv[a][c] * cov;
                }
            }
            div[b] = acc - 0.5 * d_scal[b];
        }
        Ok(linalg::bilinear3(&div, &ginv, &div).sqrt())
    }
}

/// `Γ^a_bc = ½ g^{ad}(∂_b g_dc + ∂_c g_db − ∂_d g_bc)`.
pub fn christoffel(g: &Mat3, dg: &[Mat3; 3]) -> Result<Christoffel> {
    let ginv = linalg::inverse3(g).ok_or_else(|| Error::Numeric("metric is singular".into()))?;
    let first = christoffel_first_kind(dg);
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in b..3 {
                let v: f64 = (0..3).map(|d| ginv[a][d] * first[d][b][c]).sum();
                gamma[a][b][c] = v;
                gamma[a][c][b] = v;
            }
        }
    }
    Ok(gamma)
}

/// `Γ_dbc = ½(∂_b g_dc + ∂_c g_db − ∂_d g_bc)`.
pub fn christoffel_first_kind(dg: &[Mat3; 3]) -> Christoffel {
    let mut out = [[[0.0; 3]; 3]; 3];
    for d in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                out[d][b][c] = 0.5 * (dg[b][d][c] + dg[c][d][b] - dg[d][b][c]);
            }
        }
    }
    out
}

pub fn curvature_from_jet(jet: &MetricJet2) -> Result<Curvature> {
    let g = &jet.g;
    let ginv = linalg::inverse3(g).ok_or_else(|| Error::Numeric("metric is singular".into()))?;
    let gamma = christoffel(g, &jet.dg)?;
    let dd = &jet.ddg;
    let mut riem = [[[[0.0; 3]; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    let second = 0.5
                        * (dd[b][c][a][d] + dd[a][d][b][c] - dd[b][d][a][c] - dd[a][c][b][d]);
                    let mut quad = 0.0;
                    for e in 0..3 {
                        for f in 0..3 {
                            quad += g[e][f] * (gamma[e][b][c] * gamma[f][a][d] - gamma[e][b][d] * gamma[f][a][c]);
                        }
                    }
                    riem[a][b][c][d] = second + quad;
                }
            }
        }
    }
    let mut ricci = [[0.0; 3]; 3];
    for b in 0..3 {
        for d in 0..3 {
            let mut acc = 0.0;
            for a in 0..3 {
                for c in 0..3 {
                    acc += ginv[a][c] * riem[a][b][c][d];
                }
            }
            ricci[b][d] = acc;
        }
    }
    let scalar = (0..3).map(|b| (0..3).map(|d| ginv[b][d] * ricci[b][d]).sum::<f64>()).sum();
    Ok(Curvature { riemann: riem, ricci, scalar })
}

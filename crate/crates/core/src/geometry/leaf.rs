use std::f64::consts::PI;
use std::sync::Arc;

use crate::exec;
use crate::sphere::{ParityDifferentiator, ScalarField, SphereGrid, TangentField};
use crate::{Error, Result};

use super::deviation::{node_deviation, reference_excess};
use super::graph::{GraphDerivatives, RadialGraph};
use super::local::{node_geometry, Local, NodeGeometry};

/// Knobs for the geometry pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeometryOptions {
    /// Flips the sign of the ambient curvature term in the Gauss equation.
    /// Only useful to demonstrate that the two Gauss-curvature routes are
    /// independent.
    pub flip_gauss_curvature_term: bool,
}

/// Pointwise geometry of a radial graph, sampled on the graph's grid.
#[derive(Debug, Clone)]
pub struct LeafGeometry {
    pub base: f64,
    pub mass: f64,
    /// Chart components `ĝ_θθ, ĝ_θφ, ĝ_φφ`.
    pub induced: [ScalarField; 3],
    pub area: f64,
    pub mean_curvature: ScalarField,
    /// `H − (2 coth r − m/sinh³ r)` with `r` the base radius, computed
    /// without cancellation.
    pub mean_curvature_deviation: ScalarField,
    pub a_squared: ScalarField,
    pub traceless_squared: ScalarField,
    /// Most negative `|A|² − H²/2` before clamping.
    pub traceless_floor: f64,
    /// Gauss equation route.
    pub gauss_curvature: ScalarField,
    /// Intrinsic (Brioschi) route.
    pub gauss_curvature_intrinsic: ScalarField,
    pub normal_radial: ScalarField,
    pub radial_tangent_squared: ScalarField,
    pub ric_nu_nu: ScalarField,
    pub scalar_curvature: ScalarField,
    /// Area density `dμ / dμ₀`.
    pub density: ScalarField,
    pub area_radius: f64,
}

pub(crate) fn locals(graph: &RadialGraph, d: &GraphDerivatives) -> Vec<Local> {
    let grid = graph.grid();
    (0..grid.n_nodes())
        .map(|i| {
            let (theta, phi) = grid.node(i);
            Local {
                theta,
                phi,
                rho: graph.base() + d.phi[i],
                rt: d.d_theta[i],
                rp: d.d_phi[i],
                rtt: d.d_theta2[i],
                rtp: d.d_theta_phi[i],
                rpp: d.d_phi2[i],
            }
        })
        .collect()
}

/// `H − (2 coth r − m/sinh³ r)` for the graph `r + φ`, sampled on φ's grid.
pub fn mean_curvature_deviation(graph: &RadialGraph) -> Result<ScalarField> {
    let d = GraphDerivatives::of(graph.phi());
    let loc = locals(graph, &d);
    let metric = graph.metric();
    let vals: Vec<Result<f64>> =
        exec::map_indexed(loc.len(), |i| node_deviation(metric, graph.base(), &loc[i], d.laplacian[i]));
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    ScalarField::from_samples(graph.grid(), vals)
}

/// Brioschi formula with `u = θ`, `v = φ`, derivatives by parity-aware
/// spectral differentiation.
pub fn intrinsic_gauss_curvature(induced: &[ScalarField; 3]) -> ScalarField {
    let grid = induced[0].grid();
    let diff = ParityDifferentiator::new(grid);
    let e = diff.derivatives(induced[0].samples(), 1);
    let f = diff.derivatives(induced[1].samples(), -1);
    let g = diff.derivatives(induced[2].samples(), 1);
    let (es, fs, gs) = (induced[0].samples(), induced[1].samples(), induced[2].samples());
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let k: Vec<f64> = (0..grid.n_nodes())
        .map(|i| {
            let (ee, ff, gg) = (es[i], fs[i], gs[i]);
            let (eu, ev, evv) = (e.d_theta[i], e.d_phi[i], e.d_phi2[i]);
            let (fu, fv, fuv) = (f.d_theta[i], f.d_phi[i], f.d_theta_phi[i]);
            let (gu, gv, guu) = (g.d_theta[i], g.d_phi[i], g.d_theta2[i]);
            let m1 = [
                [-0.5 * evv + fuv - 0.5 * guu, 0.5 * eu, fu - 0.5 * ev],
                [fv - 0.5 * gu, ee, ff],
                [0.5 * gv, ff, gg],
            ];
            let m2 = [[0.0, 0.5 * ev, 0.5 * gu], [0.5 * ev, ee, ff], [0.5 * gu, ff, gg]];
            let w = ee * gg - ff * ff;
            (det3(m1) - det3(m2)) / (w * w)
        })
        .collect();
    ScalarField::from_samples_unchecked(grid, k)
}

impl LeafGeometry {
    pub fn compute(graph: &RadialGraph) -> Result<Self> {
        Self::compute_with(graph, GeometryOptions::default())
    }

    pub fn compute_with(graph: &RadialGraph, options: GeometryOptions) -> Result<Self> {
        let grid = graph.grid().clone();
        let metric = graph.metric();
        let d = GraphDerivatives::of(graph.phi());
        let loc = locals(graph, &d);
        let sign = if options.flip_gauss_curvature_term { -1.0 } else { 1.0 };
        let nodes: Vec<Result<(NodeGeometry, f64)>> = exec::map_indexed(loc.len(), |i| {
            let ng = node_geometry(metric, &loc[i], sign)?;
            let dev = node_deviation(metric, graph.base(), &loc[i], d.laplacian[i])?;
            Ok((ng, dev))
        });
        let nodes = nodes.into_iter().collect::<Result<Vec<_>>>()?;
        let field = |f: &dyn Fn(&NodeGeometry, f64) -> f64| -> Result<ScalarField> {
            ScalarField::from_samples(&grid, nodes.iter().map(|(n, dv)| f(n, *dv)).collect())
        };
        let induced = [
            field(&|n, _| n.induced[0][0])?,
            field(&|n, _| n.induced[0][1])?,
            field(&|n, _| n.induced[1][1])?,
        ];
        let traceless_floor = nodes.iter().map(|(n, _)| n.traceless_raw).fold(f64::INFINITY, f64::min);
        let density = field(&|n, _| n.density)?;
        let area = density.integrate();
        if !(area > 0.0) {
            return Err(Error::Validity(format!("non-positive leaf area {area}")));
        }
        let gauss_curvature_intrinsic = intrinsic_gauss_curvature(&induced);
        Ok(Self {
            base: graph.base(),
            mass: metric.mass(),
            area,
            mean_curvature: field(&|n, _| n.mean_curvature)?,
            mean_curvature_deviation: field(&|_, dv| dv)?,
            a_squared: field(&|n, _| n.a_squared)?,
            traceless_squared: field(&|n, _| n.traceless)?,
            traceless_floor,
            gauss_curvature: field(&|n, _| n.gauss_a)?,
            gauss_curvature_intrinsic,
            normal_radial: field(&|n, _| n.normal_radial)?,
            radial_tangent_squared: field(&|n, _| n.radial_tangent_sq)?,
            ric_nu_nu: field(&|n, _| n.ric_nu_nu)?,
            scalar_curvature: field(&|n, _| n.scalar)?,
            induced,
            density,
            area_radius: (area / (4.0 * PI)).sqrt().asinh(),
        })
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        self.density.grid()
    }

    /// `∫_Σ f dμ`.
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        f.mul(&self.density).integrate()
    }

    /// Area-weighted mean of `f`.
    pub fn mean(&self, f: &ScalarField) -> f64 {
        self.integrate(f) / self.area
    }

    /// `∫ K dμ` for the Gauss-equation route and the intrinsic route.
    pub fn gauss_bonnet(&self) -> (f64, f64) {
        (self.integrate(&self.gauss_curvature), self.integrate(&self.gauss_curvature_intrinsic))
    }

    /// Largest pointwise relative disagreement of the two Gauss curvatures.
    pub fn gauss_dual_path_gap(&self) -> f64 {
        let a = self.gauss_curvature.samples();
        let b = self.gauss_curvature_intrinsic.samples();
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
    }

    /// Area-weighted mean of `H − (2 coth r − m/sinh³ r)`.
    pub fn mean_deviation(&self) -> f64 {
        self.mean(&self.mean_curvature_deviation)
    }

    /// `H − 2` (area-weighted mean), accurate to relative roundoff.
    pub fn mean_curvature_excess(&self) -> f64 {
        reference_excess(self.base, self.mass) + self.mean_deviation()
    }

    /// `H − 2` pointwise.
    pub fn mean_curvature_excess_field(&self) -> ScalarField {
        let eta = reference_excess(self.base, self.mass);
        self.mean_curvature_deviation.map(|v| v + eta)
    }

    /// Frame components of the induced metric relative to the orthonormal
    /// frame of `g₀`, and `J = √det`.
    fn frame_metric(&self) -> (Vec<[f64; 3]>, Vec<f64>) {
        let grid = self.grid();
        let n_lon = grid.n_lon();
        let sin = grid.sin_theta();
        let (e, f, g) = (self.induced[0].samples(), self.induced[1].samples(), self.induced[2].samples());
        (0..grid.n_nodes())
            .map(|i| {
                let s = sin[i / n_lon];
                let h = [e[i], f[i] / s, g[i] / (s * s)];
                let det = h[0] * h[2] - h[1] * h[1];
                (h, det.sqrt())
            })
            .unzip()
    }

    /// `Δ_Σ f = J⁻¹ div₀(J h⁻¹ ∇₀ f)`, with the divergence band-limited.
    pub fn surface_laplacian(&self, f: &ScalarField) -> ScalarField {
        let grid = self.grid();
        let (h, jac) = self.frame_metric();
        let grad = f.resample(grid).gradient();
        let (gt, gp) = (grad.theta(), grad.phi());
        let mut vt = vec![0.0; grid.n_nodes()];
        let mut vp = vec![0.0; grid.n_nodes()];
        for i in 0..grid.n_nodes() {
            let [a, b, c] = h[i];
            let det = a * c - b * b;
            vt[i] = jac[i] * (c * gt[i] - b * gp[i]) / det;
            vp[i] = jac[i] * (-b * gt[i] + a * gp[i]) / det;
        }
        let div = TangentField::new(grid, vt, vp).expect("shapes match").divergence();
        let s: Vec<f64> = div.samples().iter().zip(&jac).map(|(d, j)| d / j).collect();
        ScalarField::from_samples_unchecked(grid, s)
    }

    /// Residual of the detailed identity for the surface Laplacian of `r`:
    /// `Δr − [2coth r − m/sinh³r − H + (H−2)(1−⟨∂_r,ν⟩) + (1−⟨∂_r,ν⟩)²
    ///  − 2|∂_r^⊤|² e^{−2r}]`, with `r` the radius function on the leaf.
    pub fn laplace_identity_residual(&self, graph: &RadialGraph) -> ScalarField {
        let lap = self.surface_laplacian(graph.phi());
        let eta_base = reference_excess(self.base, self.mass);
        let rho = graph.phi().resample(self.grid()).map(|v| v + self.base);
        let n = self.grid().n_nodes();
        let (rs, lap_s) = (rho.samples(), lap.samples());
        let dev = self.mean_curvature_deviation.samples();
        let nr = self.normal_radial.samples();
        let tan = self.radial_tangent_squared.samples();
        let out = (0..n)
            .map(|i| {
                let r = rs[i];
                // 2coth ρ − m/sinh³ρ − H = [η(ρ) − η(base)] − (H − h_ref(base))
                let ref_minus_h = (reference_excess(r, self.mass) - eta_base) - dev[i];
                let h_minus_2 = eta_base + dev[i];
                let gap = 1.0 - nr[i];
                let rhs = ref_minus_h + h_minus_2 * gap + gap * gap - 2.0 * tan[i] * (-2.0 * r).exp();
                lap_s[i] - rhs
            })
            .collect();
        ScalarField::from_samples_unchecked(self.grid(), out)
    }

    /// `K − [(H²−4)/4 + m/sinh³ρ − 3m|∂_r^⊤|²/(2 sinh³ρ) − |Å|²/2]` using the
    /// intrinsic Gauss curvature and the cancellation-free `H − 2`.
    pub fn gauss_equation_residual(&self, graph: &RadialGraph) -> ScalarField {
        let rho = graph.phi().resample(self.grid()).map(|v| v + self.base);
        let hm2 = self.mean_curvature_excess_field();
        let (k, tr, tan) = (
            self.gauss_curvature_intrinsic.samples(),
            self.traceless_squared.samples(),
            self.radial_tangent_squared.samples(),
        );
        let m = self.mass;
        let out = (0..k.len())
            .map(|i| {
                let h2 = hm2.samples()[i];
                let sh3 = rho.samples()[i].sinh().powi(3);
                k[i] - (h2 * (h2 + 4.0) / 4.0 + m / sh3 - 1.5 * m * tan[i] / sh3 - 0.5 * tr[i])
            })
            .collect();
        ScalarField::from_samples_unchecked(self.grid(), out)
    }

    /// `H² − 4 − 16π/|Σ|` with the mean `H`, via `(H−2)(H+2)`.
    pub fn mean_curvature_area_residual(&self) -> f64 {
        let e = self.mean_curvature_excess();
        e * (e + 4.0) - 16.0 * PI / self.area
    }
}

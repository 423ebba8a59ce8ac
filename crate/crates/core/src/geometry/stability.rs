//! Lowest eigenvalue of the stability operator
//! `L = −Δ_Σ − (|A|² + Ric(ν, ν))` on functions with zero mean.

use nalgebra::{DMatrix, DVector};

use crate::exec;
use crate::sphere::{ScalarField, SphereGrid};
use crate::{Error, Result};

use super::graph::RadialGraph;
use super::leaf::LeafGeometry;

pub const DEFAULT_STABILITY_BAND: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityOptions {
    /// Highest harmonic degree of the trial space.
    pub band: usize,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { band: DEFAULT_STABILITY_BAND }
    }
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Galerkin stiffness matrix `∫ ⟨∇Y_i, ∇Y_j⟩ − V Y_i Y_j dμ` in the
    /// harmonic trial basis.
    pub operator: DMatrix<f64>,
    /// Smallest eigenvalue on the mean-zero subspace.
    pub lambda_min: f64,
    /// Lowest few mean-zero eigenvalues, ascending.
    pub lowest: Vec<f64>,
    /// Eigenfield of `lambda_min`, normalized in `L²(Σ)`, on the graph grid.
    pub eigenfield: ScalarField,
    /// `‖(S − λM)c − μ b‖ / ‖Mc‖` with the mean-zero multiplier `μ` removed.
    pub residual: f64,
    pub band: usize,
}

/// Rayleigh–Ritz in spherical harmonics of degree ≤ `band` with the
/// quadrature carried out on a grid of band `2·band + 8`, where the leaf
/// geometry is re-evaluated from the spectrally resampled graph.
pub fn stability_spectrum(graph: &RadialGraph, options: StabilityOptions) -> Result<StabilityReport> {
    let band = options.band.max(1).min(graph.grid().band_limit().max(2));
    let qgrid = SphereGrid::new((2 * band + 8).min(crate::sphere::MAX_BAND_LIMIT))?;
    let qgraph = graph.resample(&qgrid);
    let geo = LeafGeometry::compute(&qgraph)?;
    let n_nodes = qgrid.n_nodes();
    let n_lon = qgrid.n_lon();
    let nb = (band + 1) * (band + 1);

    let basis: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = exec::map_indexed(nb, |k| {
        let mut c = vec![0.0; qgrid.n_coeffs()];
        c[k] = 1.0;
        let y = ScalarField::from_coeffs(&qgrid, c).expect("unit coefficient vector");
        let grad = y.gradient();
        (y.samples().to_vec(), grad.theta().to_vec(), grad.phi().to_vec())
    });

    // frame metric h and density J on the quadrature grid
    let sin = qgrid.sin_theta();
    let (e, f, g) = (geo.induced[0].samples(), geo.induced[1].samples(), geo.induced[2].samples());
    let dens = geo.density.samples();
    let pot: Vec<f64> = geo
        .a_squared
        .samples()
        .iter()
        .zip(geo.ric_nu_nu.samples())
        .map(|(a, r)| a + r)
        .collect();
    let mut wk = vec![[0.0; 5]; n_nodes];
    for i in 0..n_nodes {
        let s = sin[i / n_lon];
        let (a, b, c) = (e[i], f[i] / s, g[i] / (s * s));
        let det = a * c - b * b;
        let w = qgrid.node_weight(i / n_lon) * dens[i];
        // w·h^{-1} components, w·V, w
        wk[i] = [w * c / det, -w * b / det, w * a / det, w * pot[i], w];
    }
    let yv = DMatrix::from_fn(n_nodes, nb, |i, k| basis[k].0[i]);
    let gt = DMatrix::from_fn(n_nodes, nb, |i, k| basis[k].1[i]);
    let gp = DMatrix::from_fn(n_nodes, nb, |i, k| basis[k].2[i]);
    let scale_rows = |m: &DMatrix<f64>, col: usize| {
        let mut out = m.clone();
        for i in 0..n_nodes {
            let w = wk[i][col];
            for k in 0..nb {
                out[(i, k)] *= w;
            }
        }
        out
    };
    let gtt = scale_rows(&gt, 0);
    let gtp = scale_rows(&gp, 1);
    let gpp = scale_rows(&gp, 2);
    let gpt = scale_rows(&gt, 1);
    let mass_w = scale_rows(&yv, 4);
    let pot_w = scale_rows(&yv, 3);
    let stiff = gt.transpose() * (&gtt + &gtp) + gp.transpose() * (&gpt + &gpp);
    let stiff = 0.5 * (&stiff + stiff.transpose());
    let mass = yv.transpose() * &mass_w;
    let mass = 0.5 * (&mass + mass.transpose());
    let potential = yv.transpose() * &pot_w;
    let potential = 0.5 * (&potential + potential.transpose());
    let op = &stiff - &potential;

    // ∫ Y_k dμ; its orthogonal complement is the mean-zero trial space
    let b = DVector::from_iterator(nb, (0..nb).map(|k| (0..n_nodes).map(|i| basis[k].0[i] * wk[i][4]).sum::<f64>()));
    let z = orthogonal_complement(&b);
    let op_r = z.transpose() * &op * &z;
    let mass_r = z.transpose() * &mass * &z;
    let chol = nalgebra::Cholesky::new(0.5 * (&mass_r + mass_r.transpose()))
        .ok_or_else(|| Error::Numeric("stability mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("stability mass factor is singular".into()))?;
    let reduced = &l_inv * &op_r * l_inv.transpose();
    let reduced = 0.5 * (&reduced + reduced.transpose());
    let eig = nalgebra::SymmetricEigen::try_new(reduced, 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("stability eigen-solve did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let k0 = order[0];
    let lambda_min = eig.eigenvalues[k0];
    let y = eig.eigenvectors.column(k0).into_owned();
    let c = &z * (l_inv.transpose() * y);
    let mc = &mass * &c;
    let norm = c.dot(&mc).sqrt();
    let c = c / norm;
    let mc = mc / norm;
    let resid_vec = &op * &c - lambda_min * &mc;
    let mu = resid_vec.dot(&b) / b.dot(&b);
    let residual = (resid_vec - mu * &b).norm() / mc.norm();

    let mut coeffs = vec![0.0; qgrid.n_coeffs()];
    coeffs[..nb].copy_from_slice(c.as_slice());
    let eigenfield = ScalarField::from_coeffs(&qgrid, coeffs)?.resample(graph.grid());
    Ok(StabilityReport {
        operator: op,
        lambda_min,
        lowest: order.iter().take(6).map(|&i| eig.eigenvalues[i]).collect(),
        eigenfield,
        residual,
        band,
    })
}

/// Orthonormal basis of `b^⊥` from the Householder reflector that maps `b`
/// onto the first axis.
fn orthogonal_complement(b: &DVector<f64>) -> DMatrix<f64> {
    let n = b.len();
    let norm = b.norm();
    let mut v = b.clone();
    v[0] += if b[0] >= 0.0 { norm } else { -norm };
    let vv = v.dot(&v);
    let mut h = DMatrix::<f64>::identity(n, n);
    if vv > 0.0 {
        h -= (2.0 / vv) * &v * v.transpose();
    }
    h.columns(1, n - 1).into_owned()
}

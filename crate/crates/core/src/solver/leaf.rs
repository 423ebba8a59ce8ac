use std::sync::Arc;

use crate::ambient::AmbientMetric;
use crate::geometry::{stability_spectrum, LeafGeometry, RadialGraph, StabilityOptions, StabilityReport};
use crate::sphere::ScalarField;
use crate::{Error, Result};

use super::gmres::gmres;
use super::problem::LeafProblem;
use super::{ball_radius, SolverConfig};

const GMRES_TOL: f64 = 1e-11;
const GMRES_RESTART: usize = 40;
const GMRES_MAX_ITERS: usize = 400;

/// A solved (or honestly unsolved) leaf `ρ = r + φ`.
#[derive(Debug, Clone)]
pub struct CmcLeaf {
    pub r: f64,
    pub graph: RadialGraph,
    /// Area-weighted mean of `H`.
    pub h_achieved: f64,
    pub h_target: f64,
    /// `sup |H − h_target|` over the grid nodes.
    pub h_deviation_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm of the last update.
    pub last_step: f64,
    pub step_history: Vec<f64>,
    pub ball_radius: f64,
    /// Largest `sup|φ|` over all iterates.
    pub max_iterate_sup: f64,
    /// Every iterate stayed inside the ball (always true when the check is
    /// disabled).
    pub ball_ok: bool,
    /// Degrees left unresolved by a kernel-projected solve; they keep the
    /// seed's coefficients.
    pub kernel_degrees: Vec<usize>,
    pub newton: bool,
    pub geometry: LeafGeometry,
    pub stability: Option<StabilityReport>,
}

impl CmcLeaf {
    pub fn phi(&self) -> &ScalarField {
        self.graph.phi()
    }
    pub fn sup_phi(&self) -> f64 {
        self.graph.phi().sup_norm()
    }
    pub fn min_rho(&self) -> f64 {
        self.graph.min_rho()
    }
    pub fn max_rho(&self) -> f64 {
        self.graph.max_rho()
    }
    pub fn lambda_min(&self) -> Option<f64> {
        self.stability.as_ref().map(|s| s.lambda_min)
    }
}

pub fn solve_leaf(metric: &Arc<AmbientMetric>, r: f64, config: &SolverConfig) -> Result<CmcLeaf> {
    solve_leaf_seeded(metric, r, config, None)
}

/// Iterates from `seed` (zero when absent).
pub fn solve_leaf_seeded(
    metric: &Arc<AmbientMetric>,
    r: f64,
    config: &SolverConfig,
    seed: Option<&ScalarField>,
) -> Result<CmcLeaf> {
    let problem = LeafProblem::new(metric.clone(), r, config)?;
    let grid = problem.grid().clone();
    let mut phi = match seed {
        Some(s) => s.resample(&grid),
        None => ScalarField::zeros(&grid),
    };
    let radius = ball_radius(r);
    let mut max_sup = phi.sup_norm();
    let mut history = Vec::new();
    let mut converged = false;

    for _ in 0..config.max_iters {
        let next = if config.newton { newton_update(&problem, &phi)? } else { problem.picard_step(&phi)? };
        let step = next.sub(&phi).sup_norm();
        if !step.is_finite() {
            return Err(Error::Numeric(format!("iteration diverged at r = {r}")));
        }
        phi = next;
        history.push(step);
        max_sup = max_sup.max(phi.sup_norm());
        if step <= config.picard_tol {
            converged = true;
            break;
        }
    }

    let graph = RadialGraph::new(r, phi, metric.clone())?;
    let geometry = LeafGeometry::compute_with(&graph, config.geometry)?;
    let stability = if config.compute_stability {
        Some(stability_spectrum(&graph, StabilityOptions { band: config.stability_band })?)
    } else {
        None
    };
    Ok(CmcLeaf {
        r,
        h_achieved: 2.0 + geometry.mean_curvature_excess(),
        h_target: problem.target(),
        h_deviation_sup: geometry.mean_curvature_deviation.sup_norm(),
        iterations: history.len(),
        converged,
        last_step: history.last().copied().unwrap_or(0.0),
        step_history: history,
        ball_radius: radius,
        max_iterate_sup: max_sup,
        ball_ok: !config.ball_check || max_sup <= radius,
        kernel_degrees: if config.project_kernel { problem.kernel_degrees() } else { Vec::new() },
        newton: config.newton,
        graph,
        geometry,
        stability,
    })
}

/// One Newton step `φ − J⁻¹ G(φ)`, the linear solve by GMRES preconditioned
/// with `−(Δ₀ + c)⁻¹`, restricted to the complement of the kernel when
/// projecting.
fn newton_update(problem: &LeafProblem, phi: &ScalarField) -> Result<ScalarField> {
    let grid = problem.grid().clone();
    let geometry = LeafGeometry::compute(&problem.padded_graph(phi)?)?;
    let rhs = problem.project(&problem.residual_from(&geometry).scale(-1.0));
    let field = |x: &[f64]| ScalarField::from_coeffs_unchecked(&grid, x.to_vec());
    let failure = std::cell::RefCell::new(None);
    let apply = |x: &[f64]| {
        let v = problem.project(&field(x));
        match problem.jacobian_apply(&geometry, &v) {
            Ok(jv) => problem.project(&jv).coeffs().to_vec(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                vec![0.0; x.len()]
            }
        }
    };
    let precond = |x: &[f64]| match problem.inverse(&field(x)) {
        Ok(u) => u.scale(-1.0).coeffs().to_vec(),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            vec![0.0; x.len()]
        }
    };
    let out = gmres(apply, precond, rhs.coeffs(), GMRES_TOL, GMRES_RESTART, GMRES_MAX_ITERS);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if !(out.relative_residual <= 1e-6) {
        return Err(Error::Numeric(format!(
            "Newton linear solve stalled at relative residual {:e} after {} iterations",
            out.relative_residual, out.iterations
        )));
    }
    Ok(phi.add(&field(&out.x)))
}

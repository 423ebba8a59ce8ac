use std::f64::consts::PI;

use crate::sphere::{coordinate_functions, solve_helmholtz_projected, ScalarField};
use crate::{Error, Result};

const MAX_ITERS: usize = 200;
const TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct ConformalFactor {
    pub beta: ScalarField,
    pub sup: f64,
    /// `λ` in `Δ₀β − 1 + K̂e^{2β} = −λ·x` after the centering constraint
    /// `∫ x e^{2β} dμ₀ = 0` is imposed.
    pub multipliers: [f64; 3],
    /// `∫ K̂ e^{2β} dμ₀`, which must equal `4π`.
    pub gauss_bonnet: f64,
    pub iterations: usize,
}

fn picks(v: &ScalarField, x: &[ScalarField; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| v.mul(&x[i]).integrate())
}

/// Solves `Δ₀β − 1 + K̂ e^{2β} = 0` off degree one, with the degree-one part
/// of `β` fixed by `∫ xᵢ e^{2β} dμ₀ = 0`. The Jacobian is frozen at the round
/// solution, `Δ₀ + 2`, whose degree-one kernel is exactly what the constraint
/// removes; the iteration contracts at rate `≈ sup|K̂ − 1|`.
pub fn solve_conformal_factor(k_hat: &ScalarField) -> Result<ConformalFactor> {
    let grid = k_hat.grid().clone();
    let x = coordinate_functions(&grid);
    let mut beta = ScalarField::zeros(&grid);
    for it in 1..=MAX_ITERS {
        let e2b = beta.map(|b| (2.0 * b).exp());
        // 1 − K̂e^{2β} + 2β, the nonlinear remainder of (Δ₀ + 2)β
        let rhs = k_hat.mul(&e2b).axpby(-1.0, &beta, 2.0).map(|v| v + 1.0);
        let mut next = solve_helmholtz_projected(2.0, &rhs).0;
        // centering: Newton on b ∈ ℝ³ for ∫ xᵢ e^{2(β + b·x)} = 0
        let mut b = beta_degree_one(&beta, &x);
        for _ in 0..50 {
            let trial = add_degree_one(&next, &x, b);
            let w = trial.map(|v| (2.0 * v).exp());
            let f = picks(&w, &x);
            let mut jac = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    jac[i][j] = 2.0 * w.mul(&x[i]).mul(&x[j]).integrate();
                }
            }
            let delta = solve3(jac, f).ok_or_else(|| Error::Numeric("singular centering system".into()))?;
            for i in 0..3 {
                b[i] -= delta[i];
            }
            if delta.iter().all(|d| d.abs() < 1e-16) {
                break;
            }
        }
        next = add_degree_one(&next, &x, b);
        let step = next.sub(&beta).sup_norm();
        beta = next;
        if !step.is_finite() {
            return Err(Error::Numeric("conformal factor iteration diverged".into()));
        }
        if step <= TOL * (1.0 + beta.sup_norm()) {
            let e2b = beta.map(|b| (2.0 * b).exp());
            let resid = beta.laplacian().add(&k_hat.mul(&e2b)).map(|v| v - 1.0);
            let norm = 4.0 * PI / 3.0;
            let proj = picks(&resid, &x);
            return Ok(ConformalFactor {
                sup: beta.sup_norm(),
                multipliers: proj.map(|p| -p / norm),
                gauss_bonnet: k_hat.mul(&e2b).integrate(),
                iterations: it,
                beta,
            });
        }
    }
    Err(Error::Numeric(format!("conformal factor did not converge in {MAX_ITERS} iterations")))
}

/// Coefficients `b` of the degree-one part `b·x` of `f`.
fn beta_degree_one(f: &ScalarField, x: &[ScalarField; 3]) -> [f64; 3] {
    let norm = 4.0 * PI / 3.0;
    picks(f, x).map(|p| p / norm)
}

fn add_degree_one(f: &ScalarField, x: &[ScalarField; 3], b: [f64; 3]) -> ScalarField {
    let base = f.without_degree(1);
    (0..3).fold(base, |acc, i| acc.axpby(1.0, &x[i], b[i]))
}

fn solve3(a: [[f64; 3]; 3], f: [f64; 3]) -> Option<[f64; 3]> {
    let m = nalgebra::Matrix3::from_fn(|i, j| a[i][j]);
    let v = nalgebra::Vector3::new(f[0], f[1], f[2]);
    m.lu().solve(&v).map(|s| [s[0], s[1], s[2]])
}

/// `∫ ⟨∇K̂, ∇xᵢ⟩ e^{2β} dμ₀` for `i = 1, 2, 3`.
pub fn kazdan_warner_identity_residual(k_hat: &ScalarField, beta: &ScalarField) -> [f64; 3] {
    let grid = k_hat.grid();
    let beta = beta.resample(grid);
    let gk = k_hat.gradient();
    let w = beta.map(|b| (2.0 * b).exp());
    let x = coordinate_functions(grid);
    [0, 1, 2].map(|i| gk.dot(&x[i].gradient()).mul(&w).integrate())
}

//! Solves of `(Δ₀ + c) u = f` in the harmonic basis.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::field::ScalarField;
use super::grid::SphereGrid;
use crate::{Error, Result};

/// Relative singular-value threshold below which an operator is rejected.
pub const SINGULAR_THRESHOLD: f64 = 1e-8;

fn diagonal(c: f64, l: usize) -> f64 {
    c - (l * (l + 1)) as f64
}

/// Degree with the smallest `|c − l(l+1)|`, and the extreme magnitudes.
fn spectrum_extremes(c: f64, band_limit: usize) -> (usize, f64, f64) {
    let mut worst = (0, f64::INFINITY);
    let mut largest: f64 = 0.0;
    for l in 0..=band_limit {
        let v = diagonal(c, l).abs();
        if v < worst.1 {
            worst = (l, v);
        }
        largest = largest.max(v);
    }
    (worst.0, worst.1, largest)
}

/// Fails with [`Error::SingularOperator`] when `Δ₀ + c` is numerically
/// singular on the grid's band.
pub fn check_constant(c: f64, band_limit: usize) -> Result<()> {
    let (l, smallest, largest) = spectrum_extremes(c, band_limit);
    if !(smallest > SINGULAR_THRESHOLD * largest) {
        return Err(Error::SingularOperator { smallest, largest, degree: Some(l) });
    }
    Ok(())
}

/// Diagonal solve `a_lm(u) = a_lm(f) / (c − l(l+1))`.
pub fn solve_helmholtz(c: f64, f: &ScalarField) -> Result<ScalarField> {
    let grid = f.grid();
    check_constant(c, grid.band_limit())?;
    let out = grid
        .degrees_orders()
        .zip(f.coeffs())
        .map(|((l, _), &a)| a / diagonal(c, l))
        .collect();
    Ok(ScalarField::from_coeffs_unchecked(grid, out))
}

/// Solve on the complement of the degrees where `Δ₀ + c` is singular.
/// Those degrees of the result are zero; they are returned so the caller can
/// decide what fills them.
pub fn solve_helmholtz_projected(c: f64, f: &ScalarField) -> (ScalarField, Vec<usize>) {
    let grid = f.grid();
    let largest = (0..=grid.band_limit()).map(|l| diagonal(c, l).abs()).fold(0.0, f64::max);
    let singular: Vec<usize> = (0..=grid.band_limit())
        .filter(|&l| !(diagonal(c, l).abs() > SINGULAR_THRESHOLD * largest))
        .collect();
    let out = grid
        .degrees_orders()
        .zip(f.coeffs())
        .map(|((l, _), &a)| if singular.contains(&l) { 0.0 } else { a / diagonal(c, l) })
        .collect();
    (ScalarField::from_coeffs_unchecked(grid, out), singular)
}

/// `(Δ₀ + c) u` for constant `c`.
pub fn apply_helmholtz(c: f64, u: &ScalarField) -> ScalarField {
    let grid = u.grid();
    let out = grid
        .degrees_orders()
        .zip(u.coeffs())
        .map(|((l, _), &a)| a * diagonal(c, l))
        .collect();
    ScalarField::from_coeffs_unchecked(grid, out)
}

/// `Δ₀ + c(ω)` as a dense matrix in the harmonic basis (Galerkin with the
/// grid quadrature, so the multiplication part is `∫ c Y_i Y_j`).
pub fn assemble_variable(c: &ScalarField) -> DMatrix<f64> {
    let grid = c.grid();
    let n = grid.n_coeffs();
    let basis = basis_samples(grid);
    let cs = c.samples();
    let n_lon = grid.n_lon();
    let n_nodes = grid.n_nodes();
    // weighted basis: w c Y
    let mut weighted = basis.clone();
    for i in 0..n_nodes {
        let w = grid.node_weight(i / n_lon) * cs[i];
        for j in 0..n {
            weighted[(i, j)] *= w;
        }
    }
    let mut m = basis.transpose() * weighted;
    for (i, (l, _)) in grid.degrees_orders().enumerate() {
        m[(i, i)] -= (l * (l + 1)) as f64;
    }
    m
}

/// `Y_j` at every node, one column per coefficient.
fn basis_samples(grid: &Arc<SphereGrid>) -> DMatrix<f64> {
    let n = grid.n_coeffs();
    let cols: Vec<Vec<f64>> = crate::exec::map_indexed(n, |j| {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        ScalarField::from_coeffs_unchecked(grid, e).into_samples()
    });
    DMatrix::from_fn(grid.n_nodes(), n, |i, j| cols[j][i])
}

/// Dense solve of `(Δ₀ + c(ω)) u = f` via SVD of the harmonic-basis operator.
pub fn solve_helmholtz_variable(c: &ScalarField, f: &ScalarField) -> Result<ScalarField> {
    let grid = f.grid();
    if c.grid().band_limit() != grid.band_limit() {
        return Err(Error::Shape("coefficient and right-hand side on different grids".into()));
    }
    let op = assemble_variable(c);
    let svd = op.svd(true, true);
    let largest = svd.singular_values.max();
    let smallest = svd.singular_values.min();
    if !(smallest > SINGULAR_THRESHOLD * largest) {
        return Err(Error::SingularOperator { smallest, largest, degree: None });
    }
    let rhs = DVector::from_column_slice(f.coeffs());
    let u = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Numeric(format!("dense Helmholtz solve failed: {e}")))?;
    Ok(ScalarField::from_coeffs_unchecked(grid, u.as_slice().to_vec()))
}

/// `(Δ₀ + c(ω)) u`, with the product projected onto the band.
pub fn apply_helmholtz_variable(c: &ScalarField, u: &ScalarField) -> ScalarField {
    u.laplacian().add(&c.mul(u).projected())
}

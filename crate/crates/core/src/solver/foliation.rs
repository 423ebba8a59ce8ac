use std::sync::Arc;

use crate::ambient::AmbientMetric;
use crate::exec;
use crate::sphere::{coordinate_functions, ScalarField};
use crate::{Error, Result};

use super::leaf::{solve_leaf_seeded, CmcLeaf};
use super::SolverConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct FoliationFailure {
    pub index: usize,
    pub r: f64,
    pub reason: String,
}

/// Leaves ordered by base radius, up to the first failure.
#[derive(Debug, Clone)]
pub struct Foliation {
    pub radii: Vec<f64>,
    pub leaves: Vec<CmcLeaf>,
    /// `min_k min_ω (ρ_{k+1} − ρ_k)`; infinite for fewer than two leaves.
    pub min_separation: f64,
    pub failure: Option<FoliationFailure>,
}

impl Foliation {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
    pub fn is_disjoint(&self) -> bool {
        self.min_separation > 0.0
    }
}

/// `r_min, r_min + Δr, …` up to `r_max` (inclusive, with a little slack for
/// accumulated rounding).
pub fn foliation_radii(r_min: f64, r_max: f64, dr: f64) -> Result<Vec<f64>> {
    if !(r_min.is_finite() && r_max.is_finite()) || !(dr > 0.0) {
        return Err(Error::Config(format!("invalid radius range [{r_min}, {r_max}] with step {dr}")));
    }
    if r_max < r_min {
        return Err(Error::Config(format!("empty radius range: r_max = {r_max} < r_min = {r_min}")));
    }
    let n = ((r_max - r_min) / dr + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| r_min + k as f64 * dr).collect())
}

fn separation(lower: &CmcLeaf, upper: &CmcLeaf) -> f64 {
    let a = lower.phi();
    let b = upper.phi().resample(a.grid());
    let gap = upper.r - lower.r;
    b.samples().iter().zip(a.samples()).map(|(p, q)| gap + (p - q)).fold(f64::INFINITY, f64::min)
}

/// Solves leaves at `r_min + kΔr`. With continuation each leaf is seeded by
/// its predecessor; otherwise the leaves are independent and solved in
/// parallel. A non-converged leaf or an error ends the foliation.
pub fn foliate(metric: &Arc<AmbientMetric>, r_min: f64, r_max: f64, config: &SolverConfig) -> Result<Foliation> {
    config.validate()?;
    let radii = foliation_radii(r_min, r_max, config.continuation_step)?;
    let outcomes: Vec<Result<CmcLeaf>> = if config.continuation {
        let mut out: Vec<Result<CmcLeaf>> = Vec::with_capacity(radii.len());
        let mut seed: Option<ScalarField> = None;
        for &r in &radii {
            let leaf = solve_leaf_seeded(metric, r, config, seed.as_ref());
            let stop = !matches!(&leaf, Ok(l) if l.converged);
            if let Ok(l) = &leaf {
                seed = Some(l.phi().clone());
            }
            out.push(leaf);
            if stop {
                break;
            }
        }
        out
    } else {
        exec::map_indexed(radii.len(), |k| solve_leaf_seeded(metric, radii[k], config, None))
    };

    let mut leaves = Vec::new();
    let mut failure = None;
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(leaf) if leaf.converged => leaves.push(leaf),
            Ok(leaf) => {
                failure = Some(FoliationFailure {
                    index,
                    r: leaf.r,
                    reason: format!(
                        "no convergence after {} iterations (last step {:e})",
                        leaf.iterations, leaf.last_step
                    ),
                });
                break;
            }
            Err(e) => {
                failure = Some(FoliationFailure { index, r: radii[index], reason: e.to_string() });
                break;
            }
        }
    }
    let min_separation =
        leaves.windows(2).map(|w| separation(&w[0], &w[1])).fold(f64::INFINITY, f64::min);
    Ok(Foliation { radii, leaves, min_separation, failure })
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub direction: usize,
    pub amplitude: f64,
    /// `sup |φ_probe − φ_leaf|`.
    pub distance: f64,
    pub tolerance: f64,
    /// The iteration came back to the original fixed point.
    pub returned: bool,
    pub probe: CmcLeaf,
}

/// Re-solves the leaf at the same radius from `φ + a·x_i` and compares.
pub fn uniqueness_probe(
    leaf: &CmcLeaf,
    direction: usize,
    amplitude: f64,
    config: &SolverConfig,
) -> Result<ProbeReport> {
    if direction > 2 {
        return Err(Error::Config(format!("probe direction must be 0, 1 or 2, got {direction}")));
    }
    if !amplitude.is_finite() {
        return Err(Error::Config(format!("probe amplitude must be finite, got {amplitude}")));
    }
    let phi = leaf.phi();
    let x = &coordinate_functions(phi.grid())[direction];
    let seed = phi.axpby(1.0, x, amplitude);
    let cfg = SolverConfig { compute_stability: false, ..config.clone() };
    let probe = solve_leaf_seeded(leaf.graph.metric(), leaf.r, &cfg, Some(&seed))?;
    let distance = probe.phi().sub(&phi.resample(probe.phi().grid())).sup_norm();
    let tolerance = 10.0 * config.picard_tol;
    Ok(ProbeReport { direction, amplitude, distance, tolerance, returned: distance < tolerance, probe })
}

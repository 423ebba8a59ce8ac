use std::sync::Arc;

use cmc_core::ambient::*;
use cmc_core::solver::*;
use cmc_core::sphere::{apply_helmholtz, coordinate_functions, ScalarField, SphereGrid};
use cmc_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn log_slope(rs: &[f64], vs: &[f64]) -> f64 {
    let ys: Vec<f64> = vs.iter().map(|v| v.abs().ln()).collect();
    let n = rs.len() as f64;
    let mx = rs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = rs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = rs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn metric(m: f64, eps: f64) -> Arc<AmbientMetric> {
    let bg = AdsSchwarzschild::new(m).unwrap();
    let pert = (eps != 0.0).then(|| Perturbation::new(PerturbationSpec { epsilon: eps, ..Default::default() }).unwrap());
    Arc::new(AmbientMetric::new(bg, pert))
}

fn quick(band: usize) -> SolverConfig {
    SolverConfig { band_limit: band, compute_stability: false, ..Default::default() }
}

#[test]
fn target_profile() {
    let h = target_mean_curvature(0.0, 1.0);
    assert!((h - 2.0 * 1f64.cosh() / 1f64.sinh()).abs() < 1e-15);
    assert!((h - 2.626_070_570_998_662).abs() < 1e-12);
    // more mass, lower target; r → ∞ approaches 2 from above
    let mut prev = f64::INFINITY;
    for m in [0.0, 1.0, 10.0, 1e3, 1e6] {
        let v = target_mean_curvature(m, 3.0);
        assert!(v < prev);
        prev = v;
    }
    assert!(prev < -100.0);
    for r in [5.0, 8.0, 12.0] {
        let v = target_mean_curvature(1.0, r);
        assert!(v > 2.0 && v - 2.0 < 5.0 * (-2.0 * r).exp());
    }
    assert!(target_is_decreasing(1.0, 2.0, 12.0));
    assert!(!target_is_decreasing(50.0, 0.5, 3.0));
}

#[test]
fn config_validation() {
    assert!(SolverConfig::default().validate().is_ok());
    let bad = SolverConfig { band_limit: 1, ..Default::default() };
    assert!(matches!(bad.validate(), Err(Error::Config(msg)) if msg.contains("band limit below minimum")));
    assert!(SolverConfig { picard_tol: 0.0, ..Default::default() }.validate().is_err());
    assert!(SolverConfig { continuation_step: -0.1, ..Default::default() }.validate().is_err());
    assert!(foliation_radii(5.0, 4.0, 0.5).is_err());
    assert_eq!(foliation_radii(4.0, 8.0, 0.5).unwrap().len(), 9);
}

#[test]
fn decomposition_at_zero() {
    let cfg = quick(16);
    let mut ns = Vec::new();
    let rs = [4.0, 5.0, 6.0, 7.0, 8.0];
    for &r in &rs {
        let g = metric(1.0, 0.0);
        let p = LeafProblem::new(g.clone(), r, &cfg).unwrap();
        let d = p.decomposition(&ScalarField::zeros(p.grid())).unwrap();
        assert_eq!(d.p_plus_q.sup_norm(), 0.0);
        // round sphere: N is the constant ψ²(2ψ'/ψ − h(r))
        let s = g.background().s_of_r(r).unwrap();
        let closed = s * s * (2.0 * (1.0 + s * s - 1.0 / s).sqrt() / s - target_mean_curvature(1.0, r));
        let n = d.n.samples();
        let spread = n.iter().fold(0.0f64, |a, v| a.max((v - n[0]).abs()));
        assert!(spread <= 1e-9 * n[0].abs(), "r={r}: N not constant");
        if r <= 5.0 {
            assert!((n[0] - closed).abs() <= 1e-6 * closed.abs(), "r={r}: {} vs {closed}", n[0]);
        }
        ns.push(d.n.sup_norm());
    }
    let slope = log_slope(&rs, &ns);
    assert!((slope + 3.0).abs() < 0.3, "N slope {slope}");
}

#[test]
fn remainder_is_superlinear() {
    let g = metric(1.0, 1e-3);
    let r = 5.0;
    let p = LeafProblem::new(g, r, &quick(16)).unwrap();
    let shape = ScalarField::harmonic(p.grid(), 2, 1)
        .unwrap()
        .add(&ScalarField::harmonic(p.grid(), 3, -2).unwrap().scale(0.5));
    let constant = |delta: f64| {
        let phi = shape.scale(delta);
        let pq = p.decomposition(&phi).unwrap().p_plus_q.sup_norm();
        let u = phi.sup_norm();
        pq / (u * u + (-r).exp() * u)
    };
    let c1 = constant(1e-3);
    let c2 = constant(5e-4);
    let c3 = constant(2.5e-4);
    assert!(c1.is_finite() && c1 > 0.0);
    assert!((c2 / c1 - 1.0).abs() < 0.5 && (c3 / c2 - 1.0).abs() < 0.5, "C = {c1}, {c2}, {c3}");
}

#[test]
fn picard_map_basics() {
    let mut t0 = Vec::new();
    let rs = [4.0, 5.0, 6.0, 7.0];
    for &r in &rs {
        let p = LeafProblem::new(metric(1.0, 0.0), r, &quick(16)).unwrap();
        t0.push(p.picard_step(&ScalarField::zeros(p.grid())).unwrap().sup_norm());
    }
    assert!((log_slope(&rs, &t0) + 3.0).abs() < 0.3);
    assert!(t0.iter().zip(&rs).all(|(t, r)| *t < ball_radius(*r)));

    match LeafProblem::new(metric(0.0, 0.0), 5.0, &quick(16)) {
        Err(Error::SingularOperator { degree, .. }) => assert_eq!(degree, Some(1)),
        other => panic!("expected a singular operator, got {other:?}"),
    }
}

#[test]
fn contraction_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for r in [4.0, 6.0] {
        let p = LeafProblem::new(metric(1.0, 1e-3), r, &quick(16)).unwrap();
        let grid = p.grid().clone();
        let random = |rng: &mut ChaCha8Rng| {
            let mut c = vec![0.0; grid.n_coeffs()];
            for v in c.iter_mut().take(49) {
                *v = rng.random_range(-1.0..1.0);
            }
            let f = ScalarField::from_coeffs(&grid, c).unwrap();
            f.scale(0.5 * ball_radius(r) / f.sup_norm())
        };
        for _ in 0..4 {
            let (a, b) = (random(&mut rng), random(&mut rng));
            let ta = p.picard_step(&a).unwrap();
            let tb = p.picard_step(&b).unwrap();
            let kappa = ta.sub(&tb).sup_norm() / a.sub(&b).sup_norm();
            assert!(kappa < 1.0, "r={r}: κ = {kappa}");
            assert!(ta.sup_norm() <= ball_radius(r));
        }
    }
}

#[test]
fn hyperbolic_fallback_gives_coordinate_spheres() {
    let cfg = SolverConfig { project_kernel: true, ..quick(16) };
    let leaf = solve_leaf(&metric(0.0, 0.0), 5.0, &cfg).unwrap();
    assert!(leaf.converged);
    assert!(leaf.sup_phi() <= cfg.picard_tol);
    assert_eq!(leaf.kernel_degrees, vec![1]);
}

#[test]
fn leaf_in_ball_and_fixed_point_consistent() {
    let g = metric(1.0, 0.0);
    let cfg = SolverConfig { compute_stability: true, ..Default::default() };
    let leaf = solve_leaf(&g, 5.0, &cfg).unwrap();
    assert!(leaf.converged && leaf.ball_ok);
    assert!(leaf.sup_phi() <= (-5f64).exp() / 5.0);
    assert!(leaf.h_deviation_sup <= 10.0 * cfg.picard_tol);
    assert!((leaf.h_achieved - leaf.h_target).abs() <= 10.0 * cfg.picard_tol);
    let lam = leaf.lambda_min().unwrap();
    let expected = 3.0 / 5f64.sinh().powi(3);
    assert!((lam / expected - 1.0).abs() < 0.2, "λ = {lam} vs {expected}");

    let p = LeafProblem::new(g, 5.0, &cfg).unwrap();
    let d = p.decomposition(leaf.phi()).unwrap();
    let lhs = apply_helmholtz(p.helmholtz_constant(), leaf.phi());
    let gap = lhs.sub(&d.p_plus_q).sub(&d.n).sup_norm();
    assert!(gap <= 10.0 * cfg.picard_tol, "fixed-point gap {gap:e}");
}

#[test]
fn perturbed_leaves_stable_under_band_doubling() {
    let g = metric(1.0, 1e-3);
    for r in [4.0, 6.0, 8.0] {
        let a = solve_leaf(&g, r, &quick(32)).unwrap();
        let b = solve_leaf(&g, r, &quick(64)).unwrap();
        assert!(a.converged && b.converged && a.ball_ok && b.ball_ok);
        assert!(a.iterations <= 50);
        let diff = b.phi().resample(a.phi().grid()).sub(a.phi()).sup_norm();
        assert!(diff < 1e-6, "r={r}: L vs 2L differ by {diff:e}");
        // the perturbation breaks the symmetry, so the leaf is not round
        assert!(a.phi().degree_energy(1) > 0.0);
    }
}

#[test]
fn newton_agrees_with_picard() {
    let g = metric(1.0, 1e-3);
    let picard = solve_leaf(&g, 4.5, &quick(16)).unwrap();
    let newton = solve_leaf(&g, 4.5, &SolverConfig { newton: true, ..quick(16) }).unwrap();
    assert!(newton.converged && newton.newton);
    assert!(newton.phi().sub(picard.phi()).sup_norm() < 1e-10);
}

#[test]
fn non_convergence_is_reported() {
    let cfg = SolverConfig { max_iters: 1, picard_tol: 1e-15, ..quick(16) };
    let leaf = solve_leaf(&metric(1.0, 1e-3), 4.0, &cfg).unwrap();
    assert!(!leaf.converged);
    assert_eq!(leaf.iterations, 1);
    assert!(leaf.last_step > 0.0);
}

#[test]
fn rotated_seed_gives_rotated_leaf() {
    let g = metric(1.0, 0.0);
    let cfg = quick(16);
    let grid = SphereGrid::new(16).unwrap();
    let x = coordinate_functions(&grid);
    let a = solve_leaf_seeded(&g, 5.0, &cfg, Some(&x[2].scale(1e-4))).unwrap();
    let b = solve_leaf_seeded(&g, 5.0, &cfg, Some(&x[0].scale(1e-4))).unwrap();
    // the background is rotationally symmetric and so is its unique leaf
    assert!(a.phi().sub(b.phi()).sup_norm() < 1e-8);
    assert!(a.phi().max() - a.phi().min() < 1e-8);
}

#[test]
fn foliation_unperturbed() {
    let g = metric(1.0, 0.0);
    let cfg = SolverConfig { continuation_step: 0.5, ..Default::default() };
    let f = foliate(&g, 4.0, 8.0, &cfg).unwrap();
    assert!(f.is_complete());
    assert_eq!(f.leaves.len(), 9);
    assert!(f.is_disjoint());
    assert!((f.min_separation / 0.5 - 1.0).abs() < 0.01);
    for leaf in &f.leaves {
        assert!(leaf.lambda_min().unwrap() >= -1e-6);
    }
    let rs: Vec<f64> = f.leaves.iter().map(|l| l.r).collect();
    let sups: Vec<f64> = f.leaves.iter().map(|l| l.sup_phi()).collect();
    assert!(log_slope(&rs, &sups) <= -1.0);
    assert!(f.leaves.windows(2).all(|w| w[1].h_achieved < w[0].h_achieved));
}

#[test]
fn foliation_perturbed_and_independent_mode() {
    let g = metric(1.0, 1e-3);
    let cfg = SolverConfig { continuation_step: 1.0, ..quick(16) };
    let seq = foliate(&g, 4.0, 8.0, &cfg).unwrap();
    assert_eq!(seq.leaves.len(), 5);
    assert!(seq.leaves.windows(2).all(|w| w[1].h_achieved < w[0].h_achieved));
    let par = foliate(&g, 4.0, 8.0, &SolverConfig { continuation: false, ..cfg }).unwrap();
    for (a, b) in seq.leaves.iter().zip(&par.leaves) {
        assert!(a.phi().sub(b.phi()).sup_norm() < 1e-10);
    }
    assert!(matches!(foliate(&g, 6.0, 5.0, &quick(16)), Err(Error::Config(_))));
}

#[test]
fn failed_leaf_truncates_foliation() {
    let cfg = SolverConfig { max_iters: 1, picard_tol: 1e-15, continuation_step: 1.0, ..quick(16) };
    let f = foliate(&metric(1.0, 1e-3), 4.0, 6.0, &cfg).unwrap();
    let fail = f.failure.expect("failure recorded");
    assert_eq!(fail.index, 0);
    assert!(f.leaves.is_empty());
}

#[test]
fn uniqueness_dichotomy() {
    let cfg = quick(16);
    let g = metric(1.0, 0.0);
    let leaf = solve_leaf(&g, 5.0, &cfg).unwrap();
    let back = uniqueness_probe(&leaf, 0, 0.1 * (-5f64).exp(), &cfg).unwrap();
    assert!(back.returned && back.distance < 1e-8, "distance {:e}", back.distance);
    let zero = uniqueness_probe(&leaf, 2, 0.0, &cfg).unwrap();
    assert!(zero.returned && zero.distance < zero.tolerance);

    let proj = SolverConfig { project_kernel: true, ..cfg };
    let h = metric(0.0, 0.0);
    let round = solve_leaf(&h, 5.0, &proj).unwrap();
    let moved = uniqueness_probe(&round, 2, 0.1, &proj).unwrap();
    assert!(moved.probe.converged);
    assert!(!moved.returned);
    assert!((moved.distance / 0.1 - 1.0).abs() < 0.1, "distance {}", moved.distance);
    assert!(uniqueness_probe(&round, 3, 0.1, &proj).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn target_decreases(m in 0.0f64..3.0, r in 2.5f64..12.0, dr in 1e-3f64..1.0) {
        prop_assert!(target_mean_curvature(m, r + dr) < target_mean_curvature(m, r));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn remainder_vanishes_only_at_zero_and_n_is_fixed(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = rng.random_range(4.0..7.0);
        let p = LeafProblem::new(metric(1.0, 1e-3), r, &quick(8)).unwrap();
        let grid = p.grid().clone();
        let c: Vec<f64> = (0..grid.n_coeffs()).map(|k| if k < 16 { rng.random_range(-1.0..1.0) } else { 0.0 }).collect();
        let f = ScalarField::from_coeffs(&grid, c).unwrap();
        let phi = f.scale(0.5 * ball_radius(r) / f.sup_norm());
        let d = p.decomposition(&phi).unwrap();
        prop_assert_eq!(d.n.samples(), p.n().samples());
        prop_assert!(d.p_plus_q.sup_norm() > 0.0);
        prop_assert_eq!(p.decomposition(&ScalarField::zeros(&grid)).unwrap().p_plus_q.sup_norm(), 0.0);
    }
}

use std::path::PathBuf;
use std::sync::Arc;

use cmc_core::ambient::{AmbientMetric, Point};
use cmc_core::diagnostics::{decay_fit, foliation_report, DecayVerdict, LeafReport, UNDERFLOW_FLOOR};
use cmc_core::geometry::{LeafGeometry, RadialGraph};
use cmc_core::solver::{ball_radius, foliate as core_foliate, solve_leaf, uniqueness_probe, CmcLeaf};
use cmc_core::sphere::SphereGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{self, LeafArtifact, LeafRecord, SCHEMA_VERSION};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    /// Non-convergence or a partial foliation (exit 2).
    Incomplete(String),
    /// Names of failed verification checks (exit 3).
    Failed(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::Incomplete(_) => 2,
            Status::Failed(_) => 3,
        }
    }
}

fn leaf_json(cfg: &RunConfig, leaf: &CmcLeaf, report: Option<&LeafReport>) -> Result<Vec<u8>, CliError> {
    let echo = cfg.echo();
    output::to_json(&LeafArtifact {
        schema_version: SCHEMA_VERSION,
        config_echo: &echo,
        leaf: LeafRecord::of(leaf),
        diagnostics: report,
    })
}

fn summary_line(leaf: &CmcLeaf, report: Option<&LeafReport>) -> String {
    let lambda = leaf.lambda_min().map_or("n/a".to_string(), |v| format!("{v:.6e}"));
    let m_hat = report.map_or("n/a".to_string(), |r| format!("{:.6}", r.m_hat));
    format!(
        "r={} H={:.15} sup|phi|={:.3e} lambda_min={lambda} m_hat={m_hat} iterations={} converged={}",
        leaf.r,
        leaf.h_achieved,
        leaf.sup_phi(),
        leaf.iterations,
        leaf.converged
    )
}

pub fn solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let r = cfg.require_r()?;
    let metric = cfg.metric()?;
    let leaf = solve_leaf(&metric, r, &cfg.solver_config())?;
    let report = if leaf.converged { Some(LeafReport::compute(&leaf)?) } else { None };
    let mut artifacts = Vec::new();
    if cfg.format.json() {
        let bytes = leaf_json(cfg, &leaf, report.as_ref())?;
        artifacts.push(output::write_file(&cfg.out, &output::leaf_file_name(r), &bytes)?);
    }
    if cfg.format.csv() {
        if let Some(rep) = &report {
            let doc = output::csv_document(&[output::csv_row(&leaf, rep)]);
            artifacts.push(output::write_file(&cfg.out, &format!("leaf_r{r}.csv"), &doc)?);
        }
    }
    let status = if leaf.converged {
        Status::Ok
    } else {
        Status::Incomplete(format!(
            "leaf at r={r} did not converge after {} iterations (last step {:e})",
            leaf.iterations, leaf.last_step
        ))
    };
    Ok(Outcome { status, summary: vec![summary_line(&leaf, report.as_ref())], artifacts })
}

#[derive(Serialize)]
struct FoliationArtifact<'a> {
    schema_version: &'static str,
    config_echo: crate::config::ConfigEcho,
    radii: &'a [f64],
    solved: usize,
    min_separation: f64,
    failure: Option<FailureRecord>,
    mass_spread: f64,
    decays: &'a [cmc_core::diagnostics::DecayRecord],
}

#[derive(Serialize)]
struct FailureRecord {
    index: usize,
    r: f64,
    reason: String,
}

pub fn foliate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let metric = cfg.metric()?;
    let fol = core_foliate(&metric, cfg.r_min, cfg.r_max, &cfg.solver_config())?;
    let report = foliation_report(&fol)?;
    let mut artifacts = Vec::new();
    let mut summary = Vec::new();
    for (leaf, rep) in fol.leaves.iter().zip(&report.leaves) {
        if cfg.format.json() {
            let bytes = leaf_json(cfg, leaf, Some(rep))?;
            artifacts.push(output::write_file(&cfg.out, &output::leaf_file_name(leaf.r), &bytes)?);
        }
        summary.push(summary_line(leaf, Some(rep)));
    }
    if cfg.format.csv() {
        let rows: Vec<String> =
            fol.leaves.iter().zip(&report.leaves).map(|(l, rep)| output::csv_row(l, rep)).collect();
        artifacts.push(output::write_file(&cfg.out, "foliation.csv", &output::csv_document(&rows))?);
    }
    let failure = fol.failure.as_ref().map(|f| FailureRecord { index: f.index, r: f.r, reason: f.reason.clone() });
    if cfg.format.json() {
        let bytes = output::to_json(&FoliationArtifact {
            schema_version: SCHEMA_VERSION,
            config_echo: cfg.echo(),
            radii: &fol.radii,
            solved: fol.leaves.len(),
            min_separation: fol.min_separation,
            failure,
            mass_spread: report.mass_spread,
            decays: &report.decays,
        })?;
        artifacts.push(output::write_file(&cfg.out, "foliation.json", &bytes)?);
    }
    let status = match &fol.failure {
        None => Status::Ok,
        Some(f) => Status::Incomplete(format!("foliation stopped at r={} (leaf {}): {}", f.r, f.index, f.reason)),
    };
    summary.push(format!("{} of {} leaves solved", fol.leaves.len(), fol.radii.len()));
    Ok(Outcome { status, summary, artifacts })
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub rule: String,
}

impl Check {
    fn at_most(value: f64, tolerance: f64) -> Self {
        Self { value, tolerance, pass: value <= tolerance, rule: "value <= tolerance".into() }
    }

    fn at_least(value: f64, tolerance: f64) -> Self {
        Self { value, tolerance, pass: value >= -tolerance, rule: "value >= -tolerance".into() }
    }

    /// Fitted decay slope of `values` against `r`. Series that sit entirely
    /// below the roundoff floor (or vanish) carry no rate and pass.
    fn slope(r: &[f64], values: &[f64], expected: f64, tolerance: f64, exact: bool) -> Self {
        let rule = if exact {
            format!("|value - ({expected})| <= tolerance")
        } else {
            format!("value <= {expected} + tolerance")
        };
        let floor = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        match decay_fit(r, values) {
            Ok(DecayVerdict::Fit(fit)) => {
                let pass = if exact {
                    (fit.slope - expected).abs() <= tolerance
                } else {
                    fit.slope <= expected + tolerance
                };
                Self { value: fit.slope, tolerance, pass, rule }
            }
            _ if floor < UNDERFLOW_FLOOR => Self {
                value: floor,
                tolerance: UNDERFLOW_FLOOR,
                pass: true,
                rule: "no rate: every value below the roundoff floor".into(),
            },
            _ => Self { value: f64::NAN, tolerance, pass: false, rule: format!("{rule} (fit failed)") },
        }
    }
}

/// Named checks, serialized as a JSON object in insertion order.
#[derive(Debug, Clone, Default)]
pub struct Checks(pub Vec<(String, Check)>);

impl Checks {
    fn push(&mut self, name: &str, check: Check) {
        self.0.push((name.to_string(), check));
    }
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }
    pub fn failed(&self) -> Vec<String> {
        self.0.iter().filter(|(_, c)| !c.pass).map(|(n, _)| n.clone()).collect()
    }
}

impl Serialize for Checks {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (name, check) in &self.0 {
            map.serialize_entry(name, check)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct VerifyArtifact<'a> {
    schema_version: &'static str,
    config_echo: crate::config::ConfigEcho,
    checks: &'a Checks,
    failed: Vec<String>,
}

const SCALAR_CURVATURE_POINTS: usize = 100;
const ORACLE_RADII: [f64; 5] = [3.0, 4.0, 5.0, 6.0, 7.0];

fn rate_radii() -> Vec<f64> {
    (0..9).map(|k| 3.0 + 0.5 * k as f64).collect()
}

/// Closed-form checks on coordinate spheres and pointwise ambient identities.
pub fn ambient_checks(cfg: &RunConfig, metric: &Arc<AmbientMetric>) -> Result<Checks, CliError> {
    let mut checks = Checks::default();
    let exact = Arc::new(AmbientMetric::unperturbed(cfg.mass)?);
    let background = exact.background();
    let grid = SphereGrid::new(cfg.band_limit)?;

    let mut oracle = 0.0f64;
    for &r in &ORACLE_RADII {
        let geo = LeafGeometry::compute(&RadialGraph::round(&grid, r, exact.clone())?)?;
        let s = background.s_of_r(r)?;
        let closed = 2.0 * (1.0 + s * s - cfg.mass / s).sqrt() / s;
        let h = &geo.mean_curvature;
        oracle = oracle.max((h.max() - closed).abs().max((h.min() - closed).abs()) / closed);
    }
    checks.push("round_mean_curvature_oracle", Check::at_most(oracle, 1e-6));

    let radii = rate_radii();
    let mut deviation = Vec::with_capacity(radii.len());
    let mut psi_remainder = Vec::with_capacity(radii.len());
    for &r in &radii {
        let geo = LeafGeometry::compute(&RadialGraph::round(&grid, r, exact.clone())?)?;
        deviation.push(geo.mean_curvature_deviation.sup_norm());
        let sh = r.sinh();
        let excess = background.sinh_excess(r)?;
        // ψ² − sinh²r − m/(3 sinh r), with ψ² − sinh²r = (ψ − sinh r)(ψ + sinh r)
        psi_remainder.push((excess * (2.0 * sh + excess) - cfg.mass / (3.0 * sh)).abs());
    }
    checks.push("round_mean_curvature_rate", Check::slope(&radii, &deviation, -5.0, 0.3, true));
    checks.push("warping_expansion_rate", Check::slope(&radii, &psi_remainder, -3.0, 0.3, false));

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let points: Vec<Point> = (0..SCALAR_CURVATURE_POINTS)
        .map(|_| {
            let r = rng.random_range(3.0..8.0);
            let theta = rng.random_range(0.05..std::f64::consts::PI - 0.05);
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            Point::new(r, theta, phi)
        })
        .collect();
    let mut scalar = 0.0f64;
    for &pt in &points {
        scalar = scalar.max((metric.curvature_at(pt)?.scalar + 6.0).abs());
    }
    checks.push("scalar_curvature", Check::at_most(scalar, 1e-8));

    let mut bianchi = 0.0f64;
    for &pt in points.iter().take(10) {
        bianchi = bianchi.max(metric.bianchi_residual(pt, 1e-3)?);
    }
    checks.push("contracted_bianchi", Check::at_most(bianchi, 1e-6));
    Ok(checks)
}

/// Foliation-level checks: convergence, invariant ball, Gauss–Bonnet, the
/// two Gauss-curvature routes, decay rates, stability and mass recovery.
pub fn foliation_checks(cfg: &RunConfig, metric: &Arc<AmbientMetric>) -> Result<(Checks, bool), CliError> {
    let mut checks = Checks::default();
    let fol = core_foliate(metric, cfg.r_min, cfg.r_max, &cfg.solver_config())?;
    let missing = (fol.radii.len() - fol.leaves.len()) as f64;
    checks.push("foliation_complete", Check::at_most(missing, 0.0));
    let report = foliation_report(&fol)?;
    let leaves = &report.leaves;
    let max = |f: &dyn Fn(&LeafReport) -> f64| leaves.iter().map(f).fold(0.0f64, f64::max);

    let ball = fol.leaves.iter().map(|l| l.max_iterate_sup / l.ball_radius).fold(0.0f64, f64::max);
    checks.push("invariant_ball", Check::at_most(ball, 1.0));
    checks.push(
        "leaves_disjoint",
        Check {
            value: fol.min_separation,
            tolerance: 0.0,
            pass: fol.leaves.len() < 2 || fol.min_separation > 0.0,
            rule: "value > 0".into(),
        },
    );
    checks.push(
        "gauss_bonnet",
        Check::at_most(max(&|l| l.gauss_bonnet_residual.abs().max(l.gauss_bonnet_intrinsic_residual.abs())), 1e-6),
    );
    checks.push("gauss_dual_path", Check::at_most(max(&|l| l.gauss_dual_path_gap), 1e-5));
    checks.push("leaf_scalar_curvature", Check::at_most(max(&|l| l.scalar_curvature_defect), 1e-8));

    let x: Vec<f64> = leaves.iter().map(|l| l.min_rho).collect();
    let series = |f: &dyn Fn(&LeafReport) -> f64| leaves.iter().map(f).collect::<Vec<f64>>();
    if leaves.len() >= 4 {
        let lemma_h = series(&|l| l.lemma_h_residual);
        checks.push("mean_curvature_area_rate", Check::slope(&x, &lemma_h, -3.0, 0.3, false));
        let kw = series(&|l| l.kw_centering.norm);
        checks.push("centering_rate", Check::slope(&x, &kw, -1.0, 0.5, false));
    }

    if cfg.stability {
        let lambdas: Vec<f64> = leaves.iter().filter_map(|l| l.lambda_min).collect();
        if cfg.mass > 0.0 {
            checks.push("stability", Check::at_least(lambdas.iter().copied().fold(f64::INFINITY, f64::min), 1e-6));
        } else {
            checks.push("stability", Check::at_most(lambdas.iter().fold(0.0f64, |m, v| m.max(v.abs())), 1e-6));
        }
    }
    if cfg.mass > 0.0 {
        checks.push("mass_recovery", Check::at_most(max(&|l| (l.m_hat - cfg.mass).abs() / cfg.mass), 0.02));
    } else {
        checks.push("mass_recovery", Check::at_most(max(&|l| l.m_hat.abs()), 1e-8));
    }
    Ok((checks, fol.failure.is_none()))
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let metric = cfg.metric()?;
    let mut checks = ambient_checks(cfg, &metric)?;
    let (fol_checks, complete) = foliation_checks(cfg, &metric)?;
    checks.0.extend(fol_checks.0);
    let failed = checks.failed();
    let bytes = output::to_json(&VerifyArtifact {
        schema_version: SCHEMA_VERSION,
        config_echo: cfg.echo(),
        checks: &checks,
        failed: failed.clone(),
    })?;
    let artifacts = vec![output::write_file(&cfg.out, "verify.json", &bytes)?];
    let summary = checks
        .0
        .iter()
        .map(|(name, c)| {
            format!("{} {name}: value={:.6e} tolerance={:.1e}", if c.pass { "PASS" } else { "FAIL" }, c.value, c.tolerance)
        })
        .collect();
    let status = if !complete {
        Status::Incomplete("foliation did not complete".into())
    } else if failed.is_empty() {
        Status::Ok
    } else {
        Status::Failed(failed)
    };
    Ok(Outcome { status, summary, artifacts })
}

#[derive(Serialize)]
struct ProbeRecord {
    direction: usize,
    amplitude: f64,
    distance: f64,
    tolerance: f64,
    returned: bool,
    iterations: usize,
    converged: bool,
}

#[derive(Serialize)]
struct ProbeArtifact {
    schema_version: &'static str,
    config_echo: crate::config::ConfigEcho,
    probe: ProbeRecord,
    leaf: LeafRecord,
}

pub fn probe(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let r = cfg.require_r()?;
    let metric = cfg.metric()?;
    let solver = cfg.solver_config();
    let leaf = solve_leaf(&metric, r, &solver)?;
    if !leaf.converged {
        return Ok(Outcome {
            status: Status::Incomplete(format!("leaf at r={r} did not converge")),
            summary: vec![summary_line(&leaf, None)],
            artifacts: vec![],
        });
    }
    let offset = cfg.probe_offset.unwrap_or(0.1 * ball_radius(r));
    let rep = uniqueness_probe(&leaf, cfg.probe_direction, offset, &solver)?;
    let record = ProbeRecord {
        direction: rep.direction,
        amplitude: rep.amplitude,
        distance: rep.distance,
        tolerance: rep.tolerance,
        returned: rep.returned,
        iterations: rep.probe.iterations,
        converged: rep.probe.converged,
    };
    let line = format!(
        "r={r} direction={} offset={:.3e} distance={:.3e} returned={}",
        record.direction, record.amplitude, record.distance, record.returned
    );
    let status = if record.converged {
        Status::Ok
    } else {
        Status::Incomplete("probe iteration did not converge".into())
    };
    let bytes = output::to_json(&ProbeArtifact {
        schema_version: SCHEMA_VERSION,
        config_echo: cfg.echo(),
        probe: record,
        leaf: LeafRecord::of(&leaf),
    })?;
    let artifacts = vec![output::write_file(&cfg.out, &format!("probe_r{r}.json"), &bytes)?];
    Ok(Outcome { status, summary: vec![line], artifacts })
}

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use cmc_core::ambient::{AdsSchwarzschild, AmbientMetric, Perturbation, PerturbationSpec};
use cmc_core::geometry::GeometryOptions;
use cmc_core::solver::SolverConfig;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

impl FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "both" => Ok(Format::Both),
            _ => Err(CliError::Config(format!("unknown format {s:?}; expected json, csv or both"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Both => "both",
        })
    }
}

/// Everything a command needs. Built from defaults, then an optional
/// key=value file, then command-line flags, and validated before use.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mass: f64,
    pub perturbation: PerturbationSpec,
    pub band_limit: usize,
    pub r: Option<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub dr: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub newton: bool,
    pub project_kernel: bool,
    pub ball_check: bool,
    /// Seed each foliation leaf with its predecessor. Off by default, so
    /// every leaf starts from φ = 0 and leaves are solved in parallel.
    pub continuation: bool,
    pub padding_factor: f64,
    pub stability: bool,
    pub stability_band: usize,
    pub probe_direction: usize,
    /// `None` means `0.1 · e^{−r}/r`.
    pub probe_offset: Option<f64>,
    pub out: PathBuf,
    pub format: Format,
    pub threads: Option<usize>,
    pub flip_gauss_sign: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self {
            mass: 1.0,
            perturbation: PerturbationSpec::default(),
            band_limit: solver.band_limit,
            r: None,
            r_min: 4.0,
            r_max: 8.0,
            dr: 0.5,
            tol: solver.picard_tol,
            max_iters: solver.max_iters,
            newton: false,
            project_kernel: false,
            ball_check: true,
            continuation: false,
            padding_factor: solver.padding_factor,
            stability: true,
            stability_band: solver.stability_band,
            probe_direction: 0,
            probe_offset: None,
            out: PathBuf::from("."),
            format: Format::Both,
            threads: None,
            flip_gauss_sign: false,
        }
    }
}

/// Keys accepted in config files, in echo order.
pub const KEYS: &[&str] = &[
    "m",
    "perturbation.family",
    "perturbation.l",
    "perturbation.m",
    "perturbation.component",
    "perturbation.epsilon",
    "L",
    "r",
    "r_min",
    "r_max",
    "dr",
    "tol",
    "max_iters",
    "newton",
    "project_kernel",
    "ball_check",
    "continuation",
    "padding_factor",
    "stability",
    "stability_band",
    "probe.direction",
    "probe.offset",
    "out",
    "format",
    "threads",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value {value:?} for key {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(CliError::Config(format!("invalid boolean {value:?} for key {key}"))),
    }
}

fn core(e: cmc_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Splits `key=value` entries on newlines or commas, skipping blanks and
/// `#` comments.
fn entries(text: &str) -> impl Iterator<Item = Result<(String, String), CliError>> + '_ {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(','))
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| match l.split_once('=') {
            Some((k, v)) => Ok((k.trim().to_string(), v.trim().to_string())),
            None => Err(CliError::Config(format!("expected key=value, got {l:?}"))),
        })
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "m" => self.mass = parse(key, value)?,
            "perturbation.family" => self.perturbation.family = value.parse().map_err(core)?,
            "perturbation.l" => self.perturbation.l = parse(key, value)?,
            "perturbation.m" => self.perturbation.m = parse(key, value)?,
            "perturbation.component" => self.perturbation.component = value.parse().map_err(core)?,
            "perturbation.epsilon" => self.perturbation.epsilon = parse(key, value)?,
            "L" => self.band_limit = parse(key, value)?,
            "r" => self.r = Some(parse(key, value)?),
            "r_min" => self.r_min = parse(key, value)?,
            "r_max" => self.r_max = parse(key, value)?,
            "dr" => self.dr = parse(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "max_iters" => self.max_iters = parse(key, value)?,
            "newton" => self.newton = parse_bool(key, value)?,
            "project_kernel" => self.project_kernel = parse_bool(key, value)?,
            "ball_check" => self.ball_check = parse_bool(key, value)?,
            "continuation" => self.continuation = parse_bool(key, value)?,
            "padding_factor" => self.padding_factor = parse(key, value)?,
            "stability" => self.stability = parse_bool(key, value)?,
            "stability_band" => self.stability_band = parse(key, value)?,
            "probe.direction" => self.probe_direction = parse(key, value)?,
            "probe.offset" => self.probe_offset = Some(parse(key, value)?),
            "out" => self.out = PathBuf::from(value),
            "format" => self.format = value.parse()?,
            "threads" => self.threads = Some(parse(key, value)?),
            _ => return Err(CliError::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for entry in entries(text) {
            let (k, v) = entry?;
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// `--perturbation` takes either a file or an inline list such as
    /// `l=2,m=1,component=rr,epsilon=1e-3`; the `perturbation.` prefix is
    /// optional and only perturbation keys are allowed.
    pub fn apply_perturbation(&mut self, arg: &str) -> Result<(), CliError> {
        let path = Path::new(arg);
        let text = if !arg.contains('=') && path.is_file() {
            std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read perturbation file {arg}: {e}")))?
        } else {
            arg.to_string()
        };
        for entry in entries(&text) {
            let (k, v) = entry?;
            let key = if k.starts_with("perturbation.") { k } else { format!("perturbation.{k}") };
            if !key.starts_with("perturbation.") || !KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("unknown perturbation key {key:?}")));
            }
            self.set(&key, &v)?;
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            band_limit: self.band_limit,
            picard_tol: self.tol,
            max_iters: self.max_iters,
            newton: self.newton,
            ball_check: self.ball_check,
            continuation_step: self.dr,
            continuation: self.continuation,
            padding_factor: self.padding_factor,
            project_kernel: self.project_kernel,
            stability_band: self.stability_band,
            compute_stability: self.stability,
            geometry: GeometryOptions { flip_gauss_curvature_term: self.flip_gauss_sign },
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.mass >= 0.0 && self.mass.is_finite()) {
            return Err(CliError::Config(format!("mass must be finite and nonnegative, got {}", self.mass)));
        }
        self.solver_config().validate().map_err(core)?;
        if let Some(r) = self.r {
            if !(r > 0.0 && r.is_finite()) {
                return Err(CliError::Config(format!("radius must be positive, got {r}")));
            }
        }
        if self.probe_direction > 2 {
            return Err(CliError::Config(format!("probe direction must be 0, 1 or 2, got {}", self.probe_direction)));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        self.perturbation_model()?;
        Ok(())
    }

    fn perturbation_model(&self) -> Result<Option<Perturbation>, CliError> {
        if self.perturbation.epsilon == 0.0 {
            return Ok(None);
        }
        Perturbation::new(self.perturbation).map(Some).map_err(core)
    }

    pub fn metric(&self) -> Result<Arc<AmbientMetric>, CliError> {
        let background = AdsSchwarzschild::new(self.mass).map_err(core)?;
        Ok(Arc::new(AmbientMetric::new(background, self.perturbation_model()?)))
    }

    pub fn require_r(&self) -> Result<f64, CliError> {
        self.r.ok_or_else(|| CliError::Config("missing radius: pass --r or set r in the config file".into()))
    }

    /// Computational parameters only; output location, format and thread
    /// count do not change results and are left out so that artifacts are
    /// comparable across runs.
    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            m: self.mass,
            perturbation: self.perturbation,
            band_limit: self.band_limit,
            r: self.r,
            r_min: self.r_min,
            r_max: self.r_max,
            dr: self.dr,
            tol: self.tol,
            max_iters: self.max_iters,
            newton: self.newton,
            project_kernel: self.project_kernel,
            ball_check: self.ball_check,
            continuation: self.continuation,
            padding_factor: self.padding_factor,
            stability: self.stability,
            stability_band: self.stability_band,
            flip_gauss_sign: self.flip_gauss_sign,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub m: f64,
    pub perturbation: PerturbationSpec,
    pub band_limit: usize,
    pub r: Option<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub dr: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub newton: bool,
    pub project_kernel: bool,
    pub ball_check: bool,
    pub continuation: bool,
    pub padding_factor: f64,
    pub stability: bool,
    pub stability_band: usize,
    pub flip_gauss_sign: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use cmc_core::ambient::Component;

    #[test]
    fn file_keys_and_comments() {
        let mut c = RunConfig::default();
        c.apply_text("m = 0.5\n# comment\nperturbation.epsilon=1e-3 # trailing\nL=16\nnewton=true\n").unwrap();
        assert_eq!(c.mass, 0.5);
        assert_eq!(c.perturbation.epsilon, 1e-3);
        assert_eq!(c.band_limit, 16);
        assert!(c.newton);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut c = RunConfig::default();
        assert!(matches!(c.apply_text("mass=1"), Err(CliError::Config(_))));
        assert!(c.apply_text("L").is_err());
        assert!(c.apply_perturbation("r=5").is_err());
    }

    #[test]
    fn inline_perturbation() {
        let mut c = RunConfig::default();
        c.apply_perturbation("l=2,m=-1,component=thetaphi,perturbation.epsilon=2e-3").unwrap();
        assert_eq!(c.perturbation.l, 2);
        assert_eq!(c.perturbation.m, -1);
        assert_eq!(c.perturbation.component, Component::ThetaPhi);
        assert_eq!(c.perturbation.epsilon, 2e-3);
        assert!(c.validate().is_ok());
        c.perturbation.m = 3;
        assert!(c.validate().is_err());
    }

    #[test]
    fn every_key_is_settable() {
        let samples = [
            ("m", "1"),
            ("perturbation.family", "harmonic"),
            ("perturbation.l", "1"),
            ("perturbation.m", "0"),
            ("perturbation.component", "rr"),
            ("perturbation.epsilon", "0"),
            ("L", "16"),
            ("r", "5"),
            ("r_min", "4"),
            ("r_max", "6"),
            ("dr", "0.5"),
            ("tol", "1e-10"),
            ("max_iters", "20"),
            ("newton", "false"),
            ("project_kernel", "false"),
            ("ball_check", "true"),
            ("continuation", "false"),
            ("padding_factor", "1.5"),
            ("stability", "true"),
            ("stability_band", "8"),
            ("probe.direction", "1"),
            ("probe.offset", "1e-4"),
            ("out", "/tmp"),
            ("format", "csv"),
            ("threads", "2"),
        ];
        assert_eq!(samples.len(), KEYS.len());
        let mut c = RunConfig::default();
        for (k, v) in samples {
            assert!(KEYS.contains(&k));
            c.set(k, v).unwrap();
        }
        assert!(c.validate().is_ok());
    }

    #[test]
    fn band_limit_below_minimum() {
        let c = RunConfig { band_limit: 1, ..RunConfig::default() };
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("band limit below minimum"), "{err}");
    }
}

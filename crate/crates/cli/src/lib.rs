//! Driver for `cmcfol`: configuration, command dispatch and deterministic
//! JSON/CSV artifacts.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{Outcome, Status};
pub use config::{Format, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Solver(_) => 2,
        }
    }
}

impl From<cmc_core::Error> for CliError {
    fn from(e: cmc_core::Error) -> Self {
        use cmc_core::Error as E;
        match e {
            E::SingularOperator { degree: Some(1), .. } => CliError::Solver(format!(
                "{e}; the l = 1 modes are a kernel of the linearized operator when m = 0 \
                 (pass --project-kernel to solve on its complement)"
            )),
            E::SingularOperator { .. } | E::Numeric(_) => CliError::Solver(e.to_string()),
            E::Config(_) | E::Domain(_) | E::Shape(_) | E::Validity(_) => CliError::Config(e.to_string()),
        }
    }
}

const CSV_HELP: &str = "\
foliation.csv columns (one row per solved leaf, floats with 17 significant digits):
  r                 base radius of the leaf
  area              area |Σ|
  H_target          prescribed mean curvature 2 coth r - m/sinh^3 r
  H_achieved        area-weighted mean of the computed mean curvature
  sup_phi           sup |φ| of the graph function over the round sphere
  sup_beta          sup |β| of the conformal factor to the round metric
  lambda_min        smallest mean-zero stability eigenvalue (empty if not computed)
  m_hat             mass recovered from area and mean curvature
  kw_norm           normalized centering vector |c| / ∫ e^{-3w} dμ₀
  lemma_h_residual  H² - 4 - 16π/|Σ|
  gb_residual       ∫K dμ / 4π - 1 (Gauss-equation route)
A first line '# schema_version=...' precedes the header.";

const EXIT_HELP: &str = "\
Exit codes: 0 ok, 1 configuration error, 2 non-convergence or partial result, 3 verification failure.";

#[derive(Debug, Parser)]
#[command(name = "cmcfol", version, about = "Constant-mean-curvature sphere foliations of AdS-Schwarzschild ends", after_help = EXIT_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one leaf at radius r and write leaf_r<r>.json.
    #[command(after_help = EXIT_HELP)]
    Solve(CommonArgs),
    /// Solve leaves at r_min, r_min + dr, ... and write per-leaf JSON plus foliation.csv.
    #[command(after_help = CSV_HELP)]
    Foliate(CommonArgs),
    /// Run ambient and foliation checks and write verify.json.
    #[command(after_help = EXIT_HELP)]
    Verify(CommonArgs),
    /// Re-solve a leaf from a translated seed and report whether it returns.
    #[command(after_help = EXIT_HELP)]
    Probe(ProbeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// key=value config file with dotted keys (flags override it)
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Mass parameter m ≥ 0
    #[arg(long = "m")]
    pub mass: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long = "r-min")]
    pub r_min: Option<f64>,
    #[arg(long = "r-max")]
    pub r_max: Option<f64>,
    /// Radius step of a foliation
    #[arg(long)]
    pub dr: Option<f64>,
    /// Band limit of the spectral grid
    #[arg(long = "L")]
    pub band_limit: Option<usize>,
    /// Sup-norm step tolerance of the fixed-point iteration
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// Newton–Krylov instead of plain Picard iteration
    #[arg(long)]
    pub newton: bool,
    /// Solve on the complement of the l = 1 kernel (needed for m = 0)
    #[arg(long = "project-kernel")]
    pub project_kernel: bool,
    /// Seed each foliation leaf with the previous one
    #[arg(long)]
    pub continuation: bool,
    /// Skip the stability eigenvalue computation
    #[arg(long = "no-stability")]
    pub no_stability: bool,
    #[arg(long = "stability-band")]
    pub stability_band: Option<usize>,
    #[arg(long = "padding-factor")]
    pub padding_factor: Option<f64>,
    /// Perturbation file or inline list, e.g. l=2,m=1,component=rr,epsilon=1e-3
    #[arg(long, value_name = "FILE|INLINE")]
    pub perturbation: Option<String>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// json, csv or both
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long = "flip-gauss-sign", hide = true)]
    pub flip_gauss_sign: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Amplitude of the x_i translation added to the solved leaf (default 0.1·e^{-r}/r)
    #[arg(long)]
    pub offset: Option<f64>,
    /// Coordinate direction 0, 1 or 2
    #[arg(long)]
    pub direction: Option<usize>,
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(p) = &self.perturbation {
            cfg.apply_perturbation(p)?;
        }
        macro_rules! take {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$target = v; })*
            };
        }
        take!(mass => mass, r_min => r_min, r_max => r_max, dr => dr, band_limit => band_limit,
              tol => tol, max_iters => max_iters, stability_band => stability_band,
              padding_factor => padding_factor, out => out);
        if self.r.is_some() {
            cfg.r = self.r;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if let Some(f) = &self.format {
            cfg.format = f.parse()?;
        }
        cfg.newton |= self.newton;
        cfg.project_kernel |= self.project_kernel;
        cfg.continuation |= self.continuation;
        cfg.stability &= !self.no_stability;
        cfg.flip_gauss_sign |= self.flip_gauss_sign;
        Ok(cfg)
    }
}

impl Command {
    pub fn config(&self) -> Result<RunConfig, CliError> {
        match self {
            Command::Solve(a) | Command::Foliate(a) | Command::Verify(a) => a.resolve(),
            Command::Probe(p) => {
                let mut cfg = p.common.resolve()?;
                if p.offset.is_some() {
                    cfg.probe_offset = p.offset;
                }
                if let Some(d) = p.direction {
                    cfg.probe_direction = d;
                }
                Ok(cfg)
            }
        }
    }

    pub fn execute(&self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        let job = || match self {
            Command::Solve(_) => commands::solve(cfg),
            Command::Foliate(_) => commands::foliate(cfg),
            Command::Verify(_) => commands::verify(cfg),
            Command::Probe(_) => commands::probe(cfg),
        };
        match cfg.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?
                .install(job),
            None => job(),
        }
    }
}

/// Parses arguments, runs the command, prints its summary and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = cli.command.config().and_then(|cfg| cli.command.execute(&cfg));
    match result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            match &outcome.status {
                Status::Ok => {}
                Status::Incomplete(why) => eprintln!("error: {why}"),
                Status::Failed(names) => eprintln!("verification failed: {}", names.join(", ")),
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

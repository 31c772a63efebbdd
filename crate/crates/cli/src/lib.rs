//! Command-line front end for `expansive-core`.
//!
//! Inputs are JSON configuration files, time series are written as CSV with
//! a JSON sidecar, and every command leaves a `manifest.json` next to its
//! outputs.

pub mod commands;
pub mod files;
pub mod manifest;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use expansive_core::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NON_CONVERGENCE: u8 = 3;
pub const EXIT_COLLISION: u8 = 4;
pub const EXIT_VERIFICATION: u8 = 5;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "NBODY_THREADS";

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
            Error::Singularity { .. }
            | Error::NodeCollision { .. }
            | Error::CollisionApproach { .. }
            | Error::CollisionGuard { .. } => EXIT_COLLISION,
            Error::NotExpansive(_) => EXIT_VERIFICATION,
            _ => EXIT_VALIDATION,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::validation(e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

#[derive(Debug, Parser)]
#[command(name = "expansive", version, about = "Expansive motions of the N-body problem")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimal normalized central configuration by seeded multistart descent.
    CentralConfig(CentralConfigArgs),
    /// Asymptotic coefficients Γ_k of the hyperbolic reference path.
    Gamma(GammaArgs),
    /// Expansive motion from an initial configuration by action minimization.
    Synthesize(SynthesizeArgs),
    /// Newton's equations from a given state.
    Integrate(IntegrateArgs),
    /// Classification and asymptotic checks of a trajectory file.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CentralMode {
    /// Any α > 0.
    Any,
    /// Requires α ∈ (0, 2), where parabolic motions exist.
    Parabolic,
}

#[derive(Debug, Args)]
pub struct CentralConfigArgs {
    /// JSON with `alpha`, `dim` and `masses`.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the `alpha` of the config file.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum, default_value_t = CentralMode::Any)]
    pub mode: CentralMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = expansive_core::central_config::DEFAULT_STARTS)]
    pub starts: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = expansive_core::central_config::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    /// JSON with `dim` and `masses` (and `alpha` unless given as a flag).
    #[arg(long)]
    pub config: PathBuf,
    /// JSON whose `positions` hold the asymptotic velocity `a`.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Hyperbolic,
    Parabolic,
    Hp,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Hyperbolic => "hyperbolic",
            Mode::Parabolic => "parabolic",
            Mode::Hp => "hp",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "hyperbolic" => Some(Mode::Hyperbolic),
            "parabolic" => Some(Mode::Parabolic),
            "hp" => Some(Mode::Hp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mesh {
    Geometric,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tail {
    Analytic,
    Truncate,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub alpha: f64,
    /// Configuration JSON with the positions at t = 1.
    #[arg(long)]
    pub initial: PathBuf,
    /// JSON whose `positions` hold the asymptotic velocity `a`.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Central configuration JSON; searched for when omitted.
    #[arg(long)]
    pub bm: Option<PathBuf>,
    #[arg(long, default_value_t = expansive_core::action::DEFAULT_HORIZON)]
    pub horizon: f64,
    /// Number of mesh intervals on [1, T].
    #[arg(long, default_value_t = expansive_core::action::DEFAULT_INTERVALS)]
    pub nodes: usize,
    #[arg(long, value_enum, default_value_t = Mesh::Geometric)]
    pub mesh: Mesh,
    #[arg(long, value_enum, default_value_t = Tail::Analytic)]
    pub tail: Tail,
    #[arg(long, default_value_t = expansive_core::trajectory::DEFAULT_OPT_TOL)]
    pub opt_tol: f64,
    #[arg(long, default_value_t = expansive_core::trajectory::DEFAULT_MAX_NEWTON_ITERS)]
    pub max_iters: usize,
    /// Seed for central configuration searches.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = expansive_core::central_config::DEFAULT_STARTS)]
    pub starts: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub cc_tol: f64,
    /// Relative radius for grouping equal asymptotic velocities.
    #[arg(long, default_value_t = expansive_core::central_config::DEFAULT_CLUSTER_EPS)]
    pub eps_cluster: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// JSON with `dim`, `masses`, `positions` and `velocities`.
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long)]
    pub t1: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    /// Number of log-spaced output samples.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Trajectory CSV; its `.meta.json` sidecar must sit next to it.
    #[arg(long)]
    pub traj: PathBuf,
    /// `auto` uses the regime recorded in the sidecar, otherwise a JSON file
    /// with `regime`, `target` and/or `bm`.
    #[arg(long, default_value = "auto")]
    pub spec: String,
    /// Slack added to one-sided exponent bounds before a check fails.
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
    /// Remainders below this fraction of the largest `‖γ‖_M` in the window
    /// are treated as resolved rather than fitted.
    #[arg(long, default_value_t = 1e-8)]
    pub resolution: f64,
    /// Fit window start (default T/10).
    #[arg(long)]
    pub t_lo: Option<f64>,
    /// Fit window end (default T).
    #[arg(long)]
    pub t_hi: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Sizes the global worker pool from [`THREADS_ENV`].
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::validation(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::validation(e.to_string()))
}

/// Runs one command and returns its exit code.
pub fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::CentralConfig(a) => commands::central_config(&a),
        Command::Gamma(a) => commands::gamma(&a),
        Command::Synthesize(a) => commands::synthesize(&a),
        Command::Integrate(a) => commands::integrate(&a),
        Command::Verify(a) => commands::verify(&a),
    }
}

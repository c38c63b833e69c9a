//! `catenoid` command line: constants, index, scan, eigenfunction, verify.
//!
//! Every flag can also be set through a `CATENOID_*` environment variable;
//! flags win over the environment, which wins over the built-in defaults.

pub mod commands;
pub mod output;

use std::ops::RangeInclusive;
use std::path::PathBuf;

use anyhow::{bail, Context};
use catenoid_core::spectrum::SpectrumSettings;
use catenoid_core::verify::VerifyConfig;
use catenoid_core::{Execution, Parity};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "catenoid", version, about = "Robin spectrum, Morse index and nullity of the critical catenoid")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Residual tolerance for L = coth(L).
    #[arg(long, global = true, env = "CATENOID_ROOT_TOL", default_value_t = 1e-12, value_parser = positive)]
    pub root_tol: f64,
    /// Local error tolerance of the ODE integrator.
    #[arg(long, global = true, env = "CATENOID_STEP_TOL", default_value_t = 1e-12, value_parser = positive)]
    pub step_tol: f64,
    /// Final bisection bracket width in lambda.
    #[arg(long, global = true, env = "CATENOID_BISECT_TOL", default_value_t = 1e-12, value_parser = positive)]
    pub bisect_tol: f64,
    /// Relative mismatch at lambda = 0 below which a kernel element is reported.
    #[arg(long, global = true, env = "CATENOID_NULLITY_TOL", default_value_t = 1e-8, value_parser = positive)]
    pub nullity_tol: f64,
    /// Scan points per certified window.
    #[arg(long, global = true, env = "CATENOID_N_SCAN", default_value_t = 256, value_parser = clap::value_parser!(u64).range(32..))]
    pub n_scan: u64,
    /// Interior points of the finite-difference oracle grid.
    #[arg(long, global = true, env = "CATENOID_ORACLE_N", default_value_t = 512, value_parser = clap::value_parser!(u64).range(64..))]
    pub oracle_n: u64,
    /// Mode orders to search, `a..b` (inclusive) or a comma list.
    #[arg(long, global = true, env = "CATENOID_MODES", default_value = "0..1", value_parser = parse_modes)]
    pub modes: ModeList,
    /// Output format; scan and eigenfunction default to csv, the rest to json.
    #[arg(long, global = true, env = "CATENOID_FORMAT", value_enum)]
    pub format: Option<Format>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true, env = "CATENOID_OUT")]
    pub out: Option<PathBuf>,
    /// Leave out the finite-difference cross-check.
    #[arg(long, global = true, env = "CATENOID_SKIP_ORACLE")]
    pub skip_oracle: bool,
    /// Run every map on the calling thread.
    #[arg(long, global = true, env = "CATENOID_SEQUENTIAL")]
    pub sequential: bool,
    #[arg(long, global = true, hide = true, env = "CATENOID_POTENTIAL_SIGN_FLIP")]
    pub potential_sign_flip: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeList(pub Vec<u32>);

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {s}"))
    }
}

fn parse_modes(s: &str) -> Result<ModeList, String> {
    let bad = |e: std::num::ParseIntError| format!("invalid mode list {s:?}: {e}");
    let mut modes: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let range: RangeInclusive<u32> = a.trim().parse().map_err(bad)?..=b.trim().trim_start_matches('=').parse().map_err(bad)?;
        if range.is_empty() {
            return Err(format!("empty mode range {s:?}"));
        }
        range.collect()
    } else {
        s.split(',').map(|t| t.trim().parse().map_err(bad)).collect::<Result<_, _>>()?
    };
    modes.sort_unstable();
    modes.dedup();
    Ok(ModeList(modes))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// L, R and the identities they satisfy.
    Constants,
    /// Morse index and nullity with per-mode breakdown.
    Index,
    /// Robin mismatch and gamma(L) over a lambda grid.
    Scan(ScanArgs),
    /// Normalized eigenfunction profile of one located eigenvalue.
    Eigenfunction(EigenfunctionArgs),
    /// Cross-module consistency suite.
    Verify,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long, short)]
    pub m: u32,
    #[arg(long, short)]
    pub parity: Parity,
    #[arg(long, default_value_t = 0.0)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub lambda_max: f64,
    /// Number of grid points, both ends included.
    #[arg(long, short, default_value_t = 100)]
    pub n: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EigenfunctionArgs {
    #[arg(long, short)]
    pub m: u32,
    #[arg(long, short)]
    pub parity: Parity,
    /// Record index within the mode, in increasing lambda.
    #[arg(long, short, default_value_t = 0)]
    pub which: usize,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
}

impl RunConfig {
    pub fn spectrum_settings(&self) -> SpectrumSettings {
        SpectrumSettings {
            step_tol: self.step_tol,
            bisect_tol: self.bisect_tol,
            nullity_tol: self.nullity_tol,
            n_scan: self.n_scan as usize,
            modes: self.modes.0.clone(),
            execution: if self.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            },
            flip_potential: self.potential_sign_flip,
        }
    }

    pub fn verify_config(&self) -> VerifyConfig {
        VerifyConfig {
            root_tol: self.root_tol,
            spectrum: self.spectrum_settings(),
            oracle_n: self.oracle_n as usize,
            ..VerifyConfig::default()
        }
    }
}

/// Rendered output of one command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub text: String,
    /// Nonzero when a check or regression target failed.
    pub exit_code: i32,
    /// Messages for stderr (solver diagnostics, verbatim).
    pub diagnostics: Vec<String>,
    /// Set when the text went to `--out` rather than stdout.
    pub written_to: Option<PathBuf>,
}

pub fn execute(cli: &Cli) -> anyhow::Result<Outcome> {
    let cfg = &cli.config;
    match &cli.command {
        Command::Constants => commands::constants(cfg),
        Command::Index => commands::index(cfg),
        Command::Scan(args) => commands::scan(cfg, args),
        Command::Eigenfunction(args) => commands::eigenfunction(cfg, args),
        Command::Verify => commands::verify(cfg),
    }
}

/// Parses `args` (including the program name), runs the command and writes
/// its output to `--out` if given. Returns the outcome either way.
pub fn run_with_args<I, T>(args: I) -> anyhow::Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let mut outcome = execute(&cli)?;
    if let Some(path) = &cli.config.out {
        std::fs::write(path, &outcome.text).with_context(|| format!("writing {}", path.display()))?;
        outcome.written_to = Some(path.clone());
    }
    Ok(outcome)
}

pub(crate) fn ensure_range(lo: f64, hi: f64) -> anyhow::Result<()> {
    if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
        bail!("scan range must satisfy 0 <= lambda_min < lambda_max, got [{lo}, {hi}]");
    }
    Ok(())
}

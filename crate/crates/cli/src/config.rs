use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use subpoisson::kernels::{Interval, KernelSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("dominance check failed: {0}")]
    Dominance(String),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn numerical(e: subpoisson::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "subpoisson", version, about = "Explicit tail and exponential-moment bounds for determinantal counts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound constants and the per-n tail table.
    Bound(RunArgs),
    /// Spectrum, counting law, tails and exponential moments.
    Exact(RunArgs),
    /// Samples, pair-functional moments and the association probe.
    Sample(RunArgs),
    /// Exact values against the bounds, with dominance flags.
    Compare(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Kernel id: sine, airy, bessel:s=<real>, ginibre, sine4, airy4.
    #[arg(long)]
    pub kernel: String,
    /// Window as a,b.
    #[arg(long, allow_hyphen_values = true)]
    pub window: String,
    /// Quadrature order.
    #[arg(long, default_value_t = 200)]
    pub order: usize,
    /// λ-grid as start:stop:points.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Largest n in tables (bound: also the certificate range of B).
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// JSON description of the pair functional q.
    #[arg(long = "q-spec")]
    pub q_spec: Option<PathBuf>,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: KernelSpec,
    pub window: Interval,
    pub order: usize,
    pub lambdas: Vec<f64>,
    pub nmax: usize,
    pub seed: u64,
    pub samples: usize,
    pub format: Format,
    pub out: PathBuf,
    pub q_spec: Option<PathBuf>,
}

pub fn parse_window(s: &str) -> Result<Interval, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(CliError::Config(format!("window '{s}' is not a,b")));
    }
    let a: f64 = parts[0].parse().map_err(|_| CliError::Config(format!("bad window bound '{}'", parts[0])))?;
    let b: f64 = parts[1].parse().map_err(|_| CliError::Config(format!("bad window bound '{}'", parts[1])))?;
    Interval::new(a, b).map_err(|e| CliError::Config(e.to_string()))
}

pub fn parse_lambda_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("lambda grid '{s}' is not start:stop:points with 0 < start <= stop"));
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].parse().map_err(|_| bad())?;
    let points: usize = parts[2].parse().map_err(|_| bad())?;
    if points == 0 {
        return Err(CliError::Config("lambda grid is empty".into()));
    }
    if !(start > 0.0) || !(stop >= start) || !stop.is_finite() {
        return Err(bad());
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    Ok((0..points).map(|i| start + (stop - start) * i as f64 / (points - 1) as f64).collect())
}

impl RunConfig {
    pub fn from_args(a: RunArgs, default_lambda: &str, default_nmax: usize) -> Result<Self, CliError> {
        let spec: KernelSpec = a.kernel.parse().map_err(|e: subpoisson::Error| CliError::Config(e.to_string()))?;
        let window = parse_window(&a.window)?;
        spec.check_window(&window).map_err(|e| CliError::Config(e.to_string()))?;
        if a.order < 8 {
            return Err(CliError::Config(format!("order {} below 8", a.order)));
        }
        let lambdas = parse_lambda_grid(a.lambda.as_deref().unwrap_or(default_lambda))?;
        let nmax = a.nmax.unwrap_or(default_nmax);
        if nmax == 0 {
            return Err(CliError::Config("nmax must be positive".into()));
        }
        Ok(Self {
            spec,
            window,
            order: a.order,
            lambdas,
            nmax,
            seed: a.seed,
            samples: a.samples,
            format: a.format,
            out: a.out,
            q_spec: a.q_spec,
        })
    }
}

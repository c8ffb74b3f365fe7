//! `hessdecay` command-line driver.
//!
//! Exit codes: 0 on success, 2 for invalid input (arguments, phase files,
//! configuration, degenerate data), 3 when a numerical budget is exhausted,
//! 1 for I/O failures.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hessdecay::Error;

mod commands;
pub mod config;

pub use config::Config;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_budget() => 3,
            CliError::Core(Error::DerivativeBudget { .. }) => 3,
            CliError::Core(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn dflt(text: &str, v: impl Display) -> String {
    format!("{text} [default: {v}]")
}

fn defaults() -> Config {
    Config::default()
}

#[derive(Parser, Debug)]
#[command(name = "hessdecay", version, about = "Oscillatory integrals with Hessian-determinant cutoffs")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; all cores when unset.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; standard output when unset.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Newton polygon, edge data and fold checks of a two-variable phase (JSON).
    Analyze(AnalyzeArgs),
    /// One oscillatory integral with a Hessian-determinant cutoff (JSON).
    Integrate(IntegrateArgs),
    /// Stationary-phase coefficients at a nondegenerate critical point (JSON).
    Expand(ExpandArgs),
    /// Fold curve of a cutoff function with the reduced phase along it (CSV).
    Foldcurve(FoldcurveArgs),
    /// One-dimensional van der Corput bound against quadrature (CSV).
    VdcCheck(VdcArgs),
    /// Supremum over ξ on a dyadic (λ, ε) grid plus exponent fit (CSV and JSON).
    Scan(ScanArgs),
    /// Bi-dyadic box classification (CSV).
    Boxes(BoxesArgs),
}

#[derive(Args, Debug)]
pub struct PhaseArg {
    /// Phase file: {"dimension": n, "terms": [{"exp": [..], "num": .., "den": ..}]}.
    #[arg(long)]
    pub phase: PathBuf,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub phase: PhaseArg,
    #[arg(long, help = dflt("Fold-check grid lines per unit length", defaults().fold_density))]
    pub density: Option<f64>,
    #[arg(long, help = dflt("Half-width of the fold-check square", defaults().fold_box))]
    pub fold_box: Option<f64>,
}

#[derive(Args, Debug)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub phase: PhaseArg,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub eps: f64,
    /// Linear frequency `a,b`.
    #[arg(long, value_delimiter = ',', default_value = "0,0", allow_hyphen_values = true)]
    pub xi: Vec<f64>,
    #[arg(long, help = dflt("Relative quadrature tolerance", defaults().tol))]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub phase: PhaseArg,
    /// Critical point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub point: Vec<f64>,
    /// Highest coefficient index N.
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    /// Smoothness index k of the error functional (2k > n).
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Centre of the bump amplitude; the critical point when unset.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub center: Option<Vec<f64>>,
    #[arg(long, help = dflt("Bump radius", defaults().bump_radius))]
    pub radius: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FoldcurveArgs {
    #[command(flatten)]
    pub phase: PhaseArg,
    /// Cutoff function file; the Hessian determinant of the phase when unset.
    #[arg(long)]
    pub u: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0,0", allow_hyphen_values = true)]
    pub xi: Vec<f64>,
    /// Parameter range `a,b` with u(γ(s)) = s.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub s_range: Vec<f64>,
    /// Search window `x1lo,x1hi,x2lo,x2hi`; the bump support when unset.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    #[arg(long, default_value_t = 65)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct VdcArgs {
    /// One-variable phase file for f.
    #[command(flatten)]
    pub phase: PhaseArg,
    /// Interval `a,b`; the weight is a bump on it.
    #[arg(long, value_delimiter = ',', default_value = "-1,1", allow_hyphen_values = true)]
    pub interval: Vec<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1e-1)]
    pub t_max: f64,
    #[arg(long, default_value_t = 9)]
    pub t_points: usize,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub phase: PhaseArg,
    #[arg(long, allow_hyphen_values = true, help = dflt("Smallest log2 λ", defaults().lambda_exp_min))]
    pub lambda_exp_min: Option<i32>,
    #[arg(long, allow_hyphen_values = true, help = dflt("Largest log2 λ", defaults().lambda_exp_max))]
    pub lambda_exp_max: Option<i32>,
    #[arg(long, allow_hyphen_values = true, help = dflt("Smallest log2 ε", defaults().eps_exp_min))]
    pub eps_exp_min: Option<i32>,
    #[arg(long, allow_hyphen_values = true, help = dflt("Largest log2 ε", defaults().eps_exp_max))]
    pub eps_exp_max: Option<i32>,
    #[arg(long, help = dflt("Coarse ξ grid points per axis", defaults().xi_grid))]
    pub xi_grid: Option<usize>,
    /// Expected power of log(1/ε); from the Newton polygon when unset.
    #[arg(long)]
    pub s_hint: Option<u32>,
    /// Where to write the JSON fit; standard error when unset.
    #[arg(long)]
    pub fit_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BoxesArgs {
    #[command(flatten)]
    pub phase: PhaseArg,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, help = dflt("Half-width of the edge band", defaults().c_edge))]
    pub c_edge: Option<f64>,
    #[arg(long, help = dflt("Largest dyadic index per axis", defaults().box_cap))]
    pub cap: Option<u32>,
}

/// Where results go.
pub struct Output {
    inner: Box<dyn Write>,
}

impl Output {
    fn open(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let inner: Box<dyn Write> = match path {
            Some(p) => Box::new(std::io::BufWriter::new(
                std::fs::File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
            )),
            None => Box::new(std::io::stdout().lock()),
        };
        Ok(Output { inner })
    }

    pub fn json<T: serde::Serialize>(&mut self, v: &T) -> Result<(), CliError> {
        serde_json::to_writer_pretty(&mut self.inner, v).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(self.inner)?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn csv(&mut self) -> csv::Writer<&mut dyn Write> {
        csv::Writer::from_writer(&mut *self.inner)
    }
}

/// Runs the driver; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(out) = cli.out {
        cfg.out = Some(out);
    }
    if let Some(n) = cli.threads {
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut out = Output::open(cfg.out.as_ref())?;
    match cli.command {
        Command::Analyze(a) => commands::analyze(&cfg, a, &mut out),
        Command::Integrate(a) => commands::integrate(&cfg, a, &mut out),
        Command::Expand(a) => commands::expand(&cfg, a, &mut out),
        Command::Foldcurve(a) => commands::foldcurve(&cfg, a, &mut out),
        Command::VdcCheck(a) => commands::vdc_check(&cfg, a, &mut out),
        Command::Scan(a) => commands::scan(&cfg, a, &mut out),
        Command::Boxes(a) => commands::boxes(&cfg, a, &mut out),
    }
}

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conekernel::cone::{BVariant, ConeError};
use conekernel::estimates::EstimatesError;
use conekernel::propagator::PropagatorError;
use conekernel::quadrature::QuadratureError;
use conekernel::specfun::SpecFunError;
use conekernel::spectral::SpectralError;

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::NonConvergence(_) => 2,
        }
    }
}

fn quadrature_is_input(e: &QuadratureError) -> bool {
    matches!(e, QuadratureError::Domain(_) | QuadratureError::InvalidSpec(_))
}

fn specfun_is_input(e: &SpecFunError) -> bool {
    matches!(e, SpecFunError::Domain(_))
}

fn propagator_is_input(e: &PropagatorError) -> bool {
    match e {
        PropagatorError::Domain(_) | PropagatorError::Cone(_) => true,
        PropagatorError::Quadrature(q) => quadrature_is_input(q),
        PropagatorError::SpecFun(s) => specfun_is_input(s),
        _ => false,
    }
}

fn spectral_is_input(e: &SpectralError) -> bool {
    match e {
        SpectralError::Domain(_) => true,
        SpectralError::Propagator(p) => propagator_is_input(p),
        SpectralError::SpecFun(s) => specfun_is_input(s),
        SpectralError::Quadrature(q) => quadrature_is_input(q),
    }
}

fn estimates_is_input(e: &EstimatesError) -> bool {
    match e {
        EstimatesError::Domain(_) | EstimatesError::Cone(_) => true,
        EstimatesError::Propagator(p) => propagator_is_input(p),
        EstimatesError::Spectral(s) => spectral_is_input(s),
        EstimatesError::Quadrature(q) => quadrature_is_input(q),
        EstimatesError::SpecFun(s) => specfun_is_input(s),
    }
}

fn classify(input: bool, msg: String) -> CliError {
    if input {
        CliError::Validation(msg)
    } else {
        CliError::NonConvergence(msg)
    }
}

impl From<ConeError> for CliError {
    fn from(e: ConeError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<PropagatorError> for CliError {
    fn from(e: PropagatorError) -> Self {
        classify(propagator_is_input(&e), e.to_string())
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        classify(spectral_is_input(&e), e.to_string())
    }
}

impl From<EstimatesError> for CliError {
    fn from(e: EstimatesError) -> Self {
        classify(estimates_is_input(&e), e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "conekernel",
    version,
    about = "Kernels and dispersive scans for Aharonov-Bohm flux on flat cones"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    DerivationConsistent,
    PaperLiteral,
}

impl From<VariantArg> for BVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::DerivationConsistent => BVariant::DerivationConsistent,
            VariantArg::PaperLiteral => BVariant::PaperLiteral,
        }
    }
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cone parameter ρ (aperture 2πρ).
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Flux α, |α| < 1/ρ; 0 selects the flux-free cone.
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, value_enum)]
    variant: Option<VariantArg>,
    /// Worker threads.
    #[arg(long, global = true, env = "CONEKERNEL_THREADS")]
    threads: Option<usize>,
    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the Schrödinger kernel at points by the closed form and the mode series.
    Kernel(commands::KernelArgs),
    /// Compare closed form against the mode series at sampled points.
    Compare,
    /// Outgoing and incoming resolvent kernels.
    Resolvent(commands::ResolventArgs),
    /// Spectral measure density.
    Specmeasure(commands::SpecmeasureArgs),
    /// Scan of sup |t||K(t, x, y)|.
    Dispersive,
    /// Scan of the frequency-localized half-wave kernels.
    WaveDispersive(commands::WaveArgs),
    /// Integrals of |B| and their component bounds.
    BBounds(commands::BBoundsArgs),
    /// Strichartz quotients on sampled data.
    Strichartz(commands::StrichartzArgs),
    /// Gaussian heat-kernel bound scan.
    HeatScan,
    /// Run the acceptance suite.
    Selftest(commands::SelftestArgs),
}

fn effective_config(g: &GlobalArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(r) = g.rho {
        cfg.cone.rho = r;
    }
    if let Some(a) = g.alpha {
        cfg.cone.alpha = a;
    }
    if let Some(v) = g.variant {
        cfg.cone.variant = v.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let cfg = effective_config(&cli.global)?;
    for w in cfg.params()?.warnings() {
        eprintln!("warning: {w}");
    }
    let out = cli.global.output.as_deref();
    match cli.command {
        Command::Kernel(a) => commands::kernel(&cfg, &a, out),
        Command::Compare => commands::compare(&cfg, out),
        Command::Resolvent(a) => commands::resolvent(&cfg, &a, out),
        Command::Specmeasure(a) => commands::specmeasure(&cfg, &a, out),
        Command::Dispersive => commands::dispersive(&cfg, out),
        Command::WaveDispersive(a) => commands::wave_dispersive(&cfg, &a, out),
        Command::BBounds(a) => commands::b_bounds(&cfg, &a, out),
        Command::Strichartz(a) => commands::strichartz(&cfg, &a, out),
        Command::HeatScan => commands::heat_scan(&cfg, out),
        Command::Selftest(a) => commands::selftest(&cfg, &a, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

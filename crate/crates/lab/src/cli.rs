//! Command-line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use shortcut_core::ActivationTriple;

use crate::data::DataSpec;

#[derive(Debug, Parser)]
#[command(name = "shortcut-lab", version, about = "Hessian, construction and training experiments on shortcut networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Zero-point Hessian spectra (closed form and finite differences).
    Spectrum(SpectrumArgs),
    /// Fitted order of the loss change away from the zero point.
    Probe(ProbeArgs),
    /// Small-norm network that fits a dataset exactly.
    Construct(ConstructArgs),
    /// Train every cell of a config and write per-run traces.
    Train(ConfigArgs),
    /// Learning-rate sweep with optimal-rate summaries.
    Sweep(ConfigArgs),
    /// Closed-form against finite-difference Hessian at zero.
    VerifyHessian(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// `synthetic:<seed>`, `sphere:<seed>` or a CSV of `label, feature…` rows.
    #[arg(long, default_value = "synthetic:0", value_parser = parse_data)]
    pub data: DataSpec,
    /// Width d (PCA components for CSV data).
    #[arg(long, default_value_t = 4)]
    pub width: usize,
    /// Sample count for generated data.
    #[arg(long, default_value_t = 60)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct NetArgs {
    /// Weight matrices per transformation path.
    #[arg(long)]
    pub n: usize,
    /// Residual units R.
    #[arg(long, alias = "units", default_value_t = 1)]
    pub depth: usize,
    /// `pre,mid,post`
    #[arg(long, default_value = "identity,identity,identity", value_parser = parse_acts)]
    pub acts: ActivationTriple,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Skip the finite-difference Hessian.
    #[arg(long)]
    pub no_fd: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConstructArgs {
    /// `sphere:<seed>` or a CSV of `label, feature…` rows used as given.
    #[arg(long, value_parser = parse_data)]
    pub data: DataSpec,
    #[arg(long, alias = "depth")]
    pub units: usize,
    /// Width for generated data.
    #[arg(long, default_value_t = 5)]
    pub width: usize,
    /// Sample count for generated data.
    #[arg(long, default_value_t = 3)]
    pub samples: usize,
    /// Minimum distance; defaults to the measured one.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Directory for `network.json` and `construction.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_data(s: &str) -> Result<DataSpec, String> {
    s.parse().map_err(|e: crate::LabError| e.to_string())
}

fn parse_acts(s: &str) -> Result<ActivationTriple, String> {
    s.parse().map_err(|e: shortcut_core::Error| e.to_string())
}

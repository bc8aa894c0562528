use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fdlcp::sweep::Transform;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "fdlcp",
    version,
    about = "Compressed-sensing MRI with direction-classified dictionaries"
)]
pub struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Write a synthetic phantom image.
    Phantom(PhantomArgs),
    /// Write a k-space sampling mask and print its achieved rate.
    Mask(MaskArgs),
    /// Encode an image and keep the masked k-space samples.
    Simulate(SimulateArgs),
    /// Reconstruct an image from undersampled k-space.
    Recon(ReconArgs),
    /// Sparse-approximation error against the retained coefficient fraction.
    SweepSparsity(SweepArgs),
    /// Append RLNE and SSIM of a reconstruction to a CSV file.
    Eval(EvalArgs),
    /// Re-run the command recorded in a run manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Kind {
    SheppLogan,
    DirectionalGrid,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct PhantomArgs {
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, value_enum, default_value = "shepp_logan")]
    pub kind: Kind,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Cartesian,
    Random2d,
    Radial,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct MaskArgs {
    #[arg(long, value_enum)]
    pub pattern: Pattern,
    #[arg(long)]
    pub rate: f64,
    /// Ignored by the radial pattern, which has no random component.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    /// Fraction of central rows always kept by the Cartesian pattern
    /// [default: min(0.04, rate/2)].
    #[arg(long)]
    pub center: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Zerofill,
    Sidwt,
    Fdlcp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyArg {
    L1,
    L0,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ReconArgs {
    #[arg(long)]
    pub kspace: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long, value_enum, default_value = "fdlcp")]
    pub method: Method,
    #[arg(long, value_enum, default_value = "l1")]
    pub penalty: PenaltyArg,
    /// Reference-image updates.
    #[arg(long = "T", default_value_t = 1)]
    pub updates: usize,
    /// Hard threshold for dictionary training.
    #[arg(long, default_value_t = 0.2)]
    pub eta: f64,
    #[arg(long, default_value_t = 1e3)]
    pub lambda: f64,
    /// Frame-penalty weight [default: 1e2 for l1, 1e3 for l0].
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 8)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground truth; enables the metric CSV.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Metric CSV path [default: <out>.metrics.csv].
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Per-iteration CSV of the final solve.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

fn parse_transform(s: &str) -> Result<String, String> {
    s.parse::<Transform>()
        .map(|t| t.to_string())
        .map_err(|e| e.to_string())
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = parse_transform,
          default_value = "haar2d,dct2d,fdl,fdlcp")]
    pub transforms: Vec<String>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.01,0.02,0.05,0.1,0.2,0.3,0.5,1"
    )]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 0.2)]
    pub eta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub recon: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Mask used for the acquisition; fills the rate column.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long, default_value = "")]
    pub pattern: String,
    #[arg(long, default_value = "")]
    pub method: String,
    #[arg(long, default_value = "")]
    pub penalty: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write the primary output here instead of the recorded path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

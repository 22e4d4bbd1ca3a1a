//! Command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "lgaxis",
    version,
    about = "Simulate and analyse entangled Laguerre-Gaussian photon-pair scans"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a coincidence scan map and its noiseless counterpart.
    Simulate(SimulateArgs),
    /// Recover axis, hologram-B pose, beam radius and phase from a scan map.
    Estimate(EstimateArgs),
    /// Correlations and S from a count-quad file or from the model.
    Chsh(ChshArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn from_extension(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "json" => Some(Self::Json),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed of the counting-noise streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// Optical axis x position on the stage (µm).
    #[arg(long, allow_hyphen_values = true)]
    pub axis_x: Option<f64>,
    /// Optical axis y position on the stage (µm).
    #[arg(long, allow_hyphen_values = true)]
    pub axis_y: Option<f64>,
    /// Distance of the hologram-B dislocation from its axis (µm).
    #[arg(long)]
    pub r_b: Option<f64>,
    /// Direction of the hologram-B dislocation (radians, or degrees with a `deg` suffix).
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true)]
    pub theta_b: Option<f64>,
    /// Source phase δ.
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub alpha_sq: Option<f64>,
    /// Beam radius ω (µm).
    #[arg(long)]
    pub omega: Option<f64>,
    /// Coincidence rate at the probability maximum (counts/s).
    #[arg(long)]
    pub peak_rate: Option<f64>,
    #[arg(long)]
    pub background_rate: Option<f64>,
    /// Efficiency at the axis of the clipped profile η0·max(0, 1 − (r/r_cut)^exponent).
    #[arg(long)]
    pub eta0: Option<f64>,
    #[arg(long)]
    pub r_cut: Option<f64>,
    #[arg(long)]
    pub eta_exponent: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<f64>,
    /// Grid pitch (µm).
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    /// Dwell time per grid point (s).
    #[arg(long)]
    pub dwell: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    #[arg(long)]
    pub smoothing_radius: Option<usize>,
    #[arg(long)]
    pub r_grid_points: Option<usize>,
    #[arg(long)]
    pub symmetry_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Noiseless map output; defaults to the `--out` name with an `_analytic` suffix.
    #[arg(long)]
    pub analytic_out: Option<PathBuf>,
    /// Displacement of hologram B as `x,y` (µm).
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub b_shift: Option<[f64; 2]>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Scan map (CSV, or JSON with a `.json` extension).
    #[arg(long)]
    pub map: PathBuf,
    /// Map recorded after displacing hologram B.
    #[arg(long)]
    pub aux_map: Option<PathBuf>,
    /// Displacement of hologram B for the auxiliary map, `x,y` (µm).
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub aux_shift: Option<[f64; 2]>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Args)]
pub struct ChshArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Count-quad CSV; without it S is predicted from the model.
    #[arg(long)]
    pub counts: Option<PathBuf>,
    /// Radial offset r of both dislocations (µm).
    #[arg(long)]
    pub r: Option<f64>,
    /// Beam radius ω (µm).
    #[arg(long)]
    pub omega: Option<f64>,
    /// Source phase δ.
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub alpha_sq: Option<f64>,
    /// Analyzer angle θ_A.
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true)]
    pub theta_a: Option<f64>,
    /// Analyzer angle θ'_A.
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true)]
    pub theta_a_prime: Option<f64>,
    /// Analyzer angle θ_B.
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true)]
    pub theta_b: Option<f64>,
    /// Analyzer angle θ'_B.
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true)]
    pub theta_b_prime: Option<f64>,
    /// Also draw Poisson count quads from the model and write them here.
    #[arg(long)]
    pub simulate_out: Option<PathBuf>,
    /// Coincidence rate at the probability maximum for `--simulate-out` (counts/s).
    #[arg(long)]
    pub peak_rate: Option<f64>,
    /// Accumulation time per quad for `--simulate-out` (s).
    #[arg(long)]
    pub accumulation_s: Option<f64>,
}

fn parse_angle_arg(text: &str) -> Result<f64, String> {
    lgaxis_core::parse_angle(text).map_err(|e| e.to_string())
}

fn parse_pair(text: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => {
            let x: f64 = x.parse().map_err(|_| format!("`{x}` is not a number"))?;
            let y: f64 = y.parse().map_err(|_| format!("`{y}` is not a number"))?;
            Ok([x, y])
        }
        _ => Err(format!("expected `x,y`, got `{text}`")),
    }
}

//! Run configuration: documented defaults, overridden by a TOML file,
//! overridden by command-line flags.

use std::path::{Path, PathBuf};

use lgaxis_core::angle::deserialize_opt_angle;
use lgaxis_core::{
    BeamGeometry, ChshSettings, EfficiencyProfile, EstimatorOptions, ExperimentConfig,
    HologramPose, ScanGrid, SourceState, DEFAULT_SEED, REFERENCE_DWELL_S,
};
use serde::{Deserialize, Serialize};

use crate::args::{EstimatorArgs, GridArgs, ModelArgs, OutputFormat};
use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub estimate: EstimateSection,
    #[serde(default)]
    pub chsh: ChshSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub axis_x: Option<f64>,
    pub axis_y: Option<f64>,
    pub r_b: Option<f64>,
    #[serde(default, deserialize_with = "deserialize_opt_angle")]
    pub theta_b: Option<f64>,
    #[serde(default, deserialize_with = "deserialize_opt_angle")]
    pub delta: Option<f64>,
    pub alpha_sq: Option<f64>,
    pub omega: Option<f64>,
    pub peak_rate: Option<f64>,
    pub background_rate: Option<f64>,
    pub profile: Option<EfficiencyProfile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x0: Option<f64>,
    pub y0: Option<f64>,
    pub step: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub dwell_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub smoothing_radius: Option<usize>,
    pub r_grid_points: Option<usize>,
    pub symmetry_threshold: Option<f64>,
    pub aux_shift: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshSection {
    pub r: Option<f64>,
    #[serde(default, deserialize_with = "deserialize_opt_angle")]
    pub theta_a: Option<f64>,
    #[serde(default, deserialize_with = "deserialize_opt_angle")]
    pub theta_a_prime: Option<f64>,
    #[serde(default, deserialize_with = "deserialize_opt_angle")]
    pub theta_b: Option<f64>,
    #[serde(default, deserialize_with = "deserialize_opt_angle")]
    pub theta_b_prime: Option<f64>,
    pub accumulation_s: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(DEFAULT_SEED)
    }

    pub fn format(&self, flag: Option<OutputFormat>, path: Option<&Path>) -> OutputFormat {
        flag.or(self.format)
            .or_else(|| path.and_then(OutputFormat::from_extension))
            .unwrap_or(OutputFormat::Csv)
    }

    /// Experiment parameters; defaults reproduce the reference scenario.
    pub fn experiment(&self, args: &ModelArgs, seed: u64) -> Result<ExperimentConfig, CliError> {
        let base = ExperimentConfig::reference_scenario();
        let e = &self.experiment;
        let r_b = args.r_b.or(e.r_b).unwrap_or(base.pose_b.r());
        let theta_b = args.theta_b.or(e.theta_b).unwrap_or(base.pose_b.theta());
        let profile = match (args.eta0, args.r_cut, args.eta_exponent) {
            (None, None, None) => e.profile.clone().unwrap_or(base.profile),
            (eta0, r_cut, exponent) => EfficiencyProfile::clipped(
                eta0.unwrap_or(1.0),
                r_cut.unwrap_or(1000.0),
                exponent.unwrap_or(2.0),
            )?,
        };
        let config = ExperimentConfig {
            axis: [
                args.axis_x.or(e.axis_x).unwrap_or(base.axis[0]),
                args.axis_y.or(e.axis_y).unwrap_or(base.axis[1]),
            ],
            pose_b: HologramPose::new(r_b, theta_b)?,
            source: self.source(args)?,
            beam: self.beam(args)?,
            profile,
            peak_rate: args.peak_rate.or(e.peak_rate).unwrap_or(base.peak_rate),
            background_rate: args
                .background_rate
                .or(e.background_rate)
                .unwrap_or(base.background_rate),
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn source(&self, args: &ModelArgs) -> Result<SourceState, CliError> {
        let base = ExperimentConfig::reference_scenario().source;
        let e = &self.experiment;
        Ok(SourceState::new(
            args.alpha_sq.or(e.alpha_sq).unwrap_or(base.alpha_sq()),
            args.delta.or(e.delta).unwrap_or(base.delta()),
        )?)
    }

    pub fn beam(&self, args: &ModelArgs) -> Result<BeamGeometry, CliError> {
        let base = ExperimentConfig::reference_scenario().beam;
        Ok(BeamGeometry::new(
            args.omega.or(self.experiment.omega).unwrap_or(base.omega()),
        )?)
    }

    /// Stage grid and dwell time; defaults are the 14 × 14, 150 µm grid.
    pub fn grid(&self, args: &GridArgs) -> Result<(ScanGrid, f64), CliError> {
        let base = ScanGrid::reference_default();
        let g = &self.grid;
        let grid = ScanGrid {
            x0: args.x0.or(g.x0).unwrap_or(base.x0),
            y0: args.y0.or(g.y0).unwrap_or(base.y0),
            step: args.step.or(g.step).unwrap_or(base.step),
            nx: args.nx.or(g.nx).unwrap_or(base.nx),
            ny: args.ny.or(g.ny).unwrap_or(base.ny),
        };
        grid.validate()?;
        let dwell = args.dwell.or(g.dwell_s).unwrap_or(REFERENCE_DWELL_S);
        if !(dwell.is_finite() && dwell > 0.0) {
            return Err(CliError::Validation(format!(
                "invalid parameter `dwell`: must be > 0 s, got {dwell}"
            )));
        }
        Ok((grid, dwell))
    }

    pub fn estimator(&self, args: &EstimatorArgs) -> Result<EstimatorOptions, CliError> {
        let base = EstimatorOptions::default();
        let e = &self.estimate;
        let options = EstimatorOptions {
            smoothing_radius: args
                .smoothing_radius
                .or(e.smoothing_radius)
                .unwrap_or(base.smoothing_radius),
            r_grid_points: args
                .r_grid_points
                .or(e.r_grid_points)
                .unwrap_or(base.r_grid_points),
            symmetry_threshold: args
                .symmetry_threshold
                .or(e.symmetry_threshold)
                .unwrap_or(base.symmetry_threshold),
        };
        options.validate()?;
        Ok(options)
    }

    pub fn settings(
        &self,
        a: Option<f64>,
        a_prime: Option<f64>,
        b: Option<f64>,
        b_prime: Option<f64>,
    ) -> ChshSettings {
        let base = ChshSettings::canonical();
        let c = &self.chsh;
        ChshSettings::new(
            a.or(c.theta_a).unwrap_or(base.theta_a),
            a_prime.or(c.theta_a_prime).unwrap_or(base.theta_a_prime),
            b.or(c.theta_b).unwrap_or(base.theta_b),
            b_prime.or(c.theta_b_prime).unwrap_or(base.theta_b_prime),
        )
    }
}

/// Effective parameters of a `simulate` run, recorded in output metadata.
#[derive(Debug, Serialize)]
pub struct SimulateRecord<'a> {
    pub experiment: &'a ExperimentConfig,
    pub grid: &'a ScanGrid,
    pub dwell_s: f64,
    pub b_shift: [f64; 2],
}

/// Rejects runs where two file arguments name the same path.
pub fn ensure_distinct(paths: &[(&str, Option<&Path>)]) -> Result<(), CliError> {
    let cwd = std::env::current_dir().unwrap_or_default();
    let resolved: Vec<(&str, PathBuf)> = paths
        .iter()
        .filter_map(|(name, p)| p.map(|p| (*name, normalize(&cwd.join(p)))))
        .collect();
    for (i, (a, pa)) in resolved.iter().enumerate() {
        for (b, pb) in &resolved[i + 1..] {
            if pa == pb {
                return Err(CliError::Validation(format!(
                    "--{a} and --{b} refer to the same file {}",
                    pa.display()
                )));
            }
        }
    }
    Ok(())
}

fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for part in path.components() {
        match part {
            std::path::Component::CurDir => {}
            std::path::Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out
}

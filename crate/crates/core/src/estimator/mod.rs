//! Recovery of the optical axis, hologram-B pose, beam radius and source
//! phase from scan maps.
//!
//! The pipeline runs [`locate_extrema`] on the map, [`fit_geometry`] along the
//! max–min distance constraint, which leaves a dual pair of candidates, and
//! optionally [`disambiguate`] with a second map taken after displacing
//! hologram B.

mod disambiguate;
mod extrema;
mod fit;
mod grid_ops;

pub use disambiguate::{
    asymmetry_metric, disambiguate, CandidateCheck, DisambiguationReport, RingProbe,
};
pub use extrema::{locate_extrema, ExtremaReport};
pub use fit::{fit_geometry, GeometryCandidate, GeometryFit};
pub use grid_ops::box_smooth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::EfficiencyProfile;
use crate::scan_map::ScanMap;

/// Tuning knobs of the estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorOptions {
    /// Half-width of the box average, in grid cells.
    pub smoothing_radius: usize,
    /// Log-spaced `r_B` samples over `(0.01 d, 0.99 d)`.
    pub r_grid_points: usize,
    /// Asymmetry below which an auxiliary map counts as symmetric.
    pub symmetry_threshold: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            smoothing_radius: 1,
            r_grid_points: 200,
            symmetry_threshold: 0.1,
        }
    }
}

impl EstimatorOptions {
    pub fn validate(&self) -> Result<()> {
        if self.r_grid_points < 3 {
            return Err(Error::invalid(
                "r_grid_points",
                format!("must be ≥ 3, got {}", self.r_grid_points),
            ));
        }
        if !(self.symmetry_threshold.is_finite() && self.symmetry_threshold > 0.0) {
            return Err(Error::invalid(
                "symmetry_threshold",
                format!("must be > 0, got {}", self.symmetry_threshold),
            ));
        }
        Ok(())
    }
}

/// A map recorded with hologram B displaced by `shift` (µm).
#[derive(Clone, Copy, Debug)]
pub struct AuxScan<'a> {
    pub map: &'a ScanMap,
    pub shift: [f64; 2],
}

/// Runs extremum location, the constrained fit and, given an auxiliary scan,
/// the disambiguation step.
pub fn estimate_axis(
    map: &ScanMap,
    profile: &EfficiencyProfile,
    aux: Option<AuxScan<'_>>,
    options: &EstimatorOptions,
) -> Result<GeometryFit> {
    options.validate()?;
    let extrema = locate_extrema(map, options.smoothing_radius)?;
    let fit = fit_geometry(map, &extrema, profile, options)?;
    match aux {
        Some(aux) => disambiguate(&fit, aux.map, aux.shift, profile, options),
        None => Ok(fit),
    }
}

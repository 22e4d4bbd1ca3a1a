//! Coincidence-probability forward model and synthetic scan maps.
//!
//! Hologram B is held at a fixed pose while hologram A is stepped across a
//! rectangular stage grid. At every stage point the dislocation of A sits at
//! polar offset `pose_A = polar(stage − axis)` from the optical axis of arm A,
//! and the coincidence probability is
//!
//! ```text
//! P = |α|² (4 rA² rB² + 4 rA rB ω² cos(δ − θA + θB) + ω⁴) / ((2rA² + ω²)(2rB² + ω²))
//! ```
//!
//! It peaks at `|α|²` for `pose_A = (rB, δ + θB)` and vanishes at
//! `pose_A = (ω²/(2rB), π + δ + θB)`; the two points sit on opposite sides of
//! the axis, `d = rB + ω²/(2rB)` apart.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lg::{basis_minus, basis_plus, BeamGeometry, HologramPose, SourceState};
use crate::sampling::{self, DEFAULT_SEED};
use crate::scan_map::{RateMap, ScanMap};

/// Dwell time per grid point that spreads a 40 minute budget over 14 × 14 points.
pub const REFERENCE_DWELL_S: f64 = 12.2;

/// Closed-form coincidence probability for hologram A at `pose_a` and B at `pose_b`.
pub fn coincidence_probability(
    pose_a: HologramPose,
    pose_b: HologramPose,
    source: SourceState,
    beam: BeamGeometry,
) -> f64 {
    let (ra, rb) = (pose_a.r(), pose_b.r());
    let w2 = beam.omega() * beam.omega();
    let phase = source.delta() - pose_a.theta() + pose_b.theta();
    let num = 4.0 * ra * ra * rb * rb + 4.0 * ra * rb * w2 * phase.cos() + w2 * w2;
    let den = (2.0 * ra * ra + w2) * (2.0 * rb * rb + w2);
    // Rounding can push the exact zero slightly negative.
    (source.alpha_sq() * num / den).max(0.0)
}

/// Truncated two-photon state as `(m_A, m_B, amplitude)` triples:
/// `α e^{iδ} |1⟩_A|−1⟩_B + α |0⟩_A|0⟩_B`.
pub fn truncated_source(source: SourceState) -> [(i32, i32, Complex64); 2] {
    let alpha = source.alpha_sq().sqrt();
    [
        (1, -1, Complex64::from_polar(alpha, source.delta())),
        (0, 0, Complex64::new(alpha, 0.0)),
    ]
}

/// Coincidence probability evaluated as `|⟨−(pose_a)|⟨+(pose_b)|Φ⟩|²` from
/// the basis kets, without the closed form.
pub fn coincidence_probability_oracle(
    pose_a: HologramPose,
    pose_b: HologramPose,
    source: SourceState,
    beam: BeamGeometry,
) -> f64 {
    let bra_a = basis_minus(pose_a, beam);
    let bra_b = basis_plus(pose_b, beam);
    truncated_source(source)
        .iter()
        .map(|&(ma, mb, c)| bra_a.amplitude(ma).conj() * bra_b.amplitude(mb).conj() * c)
        .sum::<Complex64>()
        .norm_sqr()
}

/// Poses of hologram A giving the maximum and the zero of the coincidence
/// probability, in that order.
pub fn extremum_poses(
    pose_b: HologramPose,
    source: SourceState,
    beam: BeamGeometry,
) -> Result<(HologramPose, HologramPose)> {
    if pose_b.r() <= 0.0 {
        return Err(Error::DegenerateInput(
            "hologram B on the axis: the zero of the coincidence map moves to infinity".into(),
        ));
    }
    let w2 = beam.omega() * beam.omega();
    let phi = source.delta() + pose_b.theta();
    let max = HologramPose::new(pose_b.r(), phi)?;
    let min = HologramPose::new(w2 / (2.0 * pose_b.r()), PI + phi)?;
    Ok((max, min))
}

/// Distance between the maximum and the zero: `rB + ω²/(2 rB)`.
pub fn min_max_distance(r_b: f64, beam: BeamGeometry) -> Result<f64> {
    if !(r_b > 0.0 && r_b.is_finite()) {
        return Err(Error::DegenerateInput(format!(
            "max–min distance needs r_B > 0, got {r_b}"
        )));
    }
    Ok(r_b + beam.omega() * beam.omega() / (2.0 * r_b))
}

/// Radial diffraction efficiency of hologram A as a function of the distance
/// between beam axis and dislocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EfficiencyProfile {
    /// `η(r) = eta0 · max(0, 1 − (r/r_cut)^exponent)`
    Clipped {
        eta0: f64,
        r_cut: f64,
        exponent: f64,
    },
    /// Measured `(radius, efficiency)` samples, linearly interpolated and held
    /// constant outside the sampled range.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

impl Default for EfficiencyProfile {
    fn default() -> Self {
        EfficiencyProfile::Clipped {
            eta0: 1.0,
            r_cut: 1000.0,
            exponent: 2.0,
        }
    }
}

impl EfficiencyProfile {
    pub fn clipped(eta0: f64, r_cut: f64, exponent: f64) -> Result<Self> {
        let p = EfficiencyProfile::Clipped {
            eta0,
            r_cut,
            exponent,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let p = EfficiencyProfile::Tabulated { radii, values };
        p.validate()?;
        Ok(p)
    }

    /// Flat unit efficiency (no position dependence).
    pub fn flat() -> Self {
        EfficiencyProfile::Clipped {
            eta0: 1.0,
            r_cut: f64::INFINITY,
            exponent: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EfficiencyProfile::Clipped {
                eta0,
                r_cut,
                exponent,
            } => {
                if !(*eta0 > 0.0 && *eta0 <= 1.0) {
                    return Err(Error::invalid(
                        "eta0",
                        format!("must lie in (0, 1], got {eta0}"),
                    ));
                }
                if !(*r_cut > 0.0) {
                    return Err(Error::invalid("r_cut", format!("must be > 0, got {r_cut}")));
                }
                if !(exponent.is_finite() && *exponent >= 1.0) {
                    return Err(Error::invalid(
                        "exponent",
                        format!("must be ≥ 1, got {exponent}"),
                    ));
                }
            }
            EfficiencyProfile::Tabulated { radii, values } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(Error::invalid(
                        "profile",
                        "tabulated profile needs equally many radii and values (at least one)",
                    ));
                }
                if radii[0] < 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid(
                        "radii",
                        "must be ≥ 0 and strictly increasing",
                    ));
                }
                if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::invalid("values", "efficiencies must lie in [0, 1]"));
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::invalid(
                        "values",
                        "efficiency must be non-increasing in r",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn efficiency(&self, r: f64) -> f64 {
        match self {
            EfficiencyProfile::Clipped {
                eta0,
                r_cut,
                exponent,
            } => eta0 * (1.0 - (r / r_cut).powf(*exponent)).max(0.0),
            EfficiencyProfile::Tabulated { radii, values } => {
                let last = radii.len() - 1;
                if r <= radii[0] {
                    return values[0];
                }
                if r >= radii[last] {
                    return values[last];
                }
                let hi = radii.partition_point(|&x| x <= r);
                let (r0, r1) = (radii[hi - 1], radii[hi]);
                let t = (r - r0) / (r1 - r0);
                values[hi - 1] + t * (values[hi] - values[hi - 1])
            }
        }
    }
}

/// Free function form of [`EfficiencyProfile::efficiency`].
pub fn efficiency(profile: &EfficiencyProfile, r: f64) -> f64 {
    profile.efficiency(r)
}

/// Rectangular stage grid. Point `(ix, iy)` sits at `(x0 + ix·step, y0 + iy·step)`
/// micrometers; flat index `iy·nx + ix`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub x0: f64,
    pub y0: f64,
    pub step: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ScanGrid {
    pub fn new(x0: f64, y0: f64, step: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = Self {
            x0,
            y0,
            step,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    /// 14 × 14 points at 150 µm pitch, centred on the stage origin.
    pub fn reference_default() -> Self {
        Self {
            x0: -975.0,
            y0: -975.0,
            step: 150.0,
            nx: 14,
            ny: 14,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::invalid(
                "step",
                format!("grid pitch must be > 0, got {}", self.step),
            ));
        }
        if !(self.x0.is_finite() && self.y0.is_finite()) {
            return Err(Error::invalid("x0/y0", "grid origin must be finite"));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::invalid(
                "nx/ny",
                format!(
                    "ScanGrid needs at least 2 points per axis, got {}×{}",
                    self.nx, self.ny
                ),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn cell(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    pub fn coords(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.x0 + ix as f64 * self.step,
            self.y0 + iy as f64 * self.step,
        ]
    }

    pub fn point(&self, index: usize) -> [f64; 2] {
        let (ix, iy) = self.cell(index);
        self.coords(ix, iy)
    }

    pub fn is_boundary(&self, ix: usize, iy: usize) -> bool {
        ix == 0 || iy == 0 || ix + 1 == self.nx || iy + 1 == self.ny
    }

    /// Fractional cell coordinates of a stage point.
    pub fn to_cell(&self, xy: [f64; 2]) -> [f64; 2] {
        [(xy[0] - self.x0) / self.step, (xy[1] - self.y0) / self.step]
    }

    pub fn from_cell(&self, cell: [f64; 2]) -> [f64; 2] {
        [self.x0 + cell[0] * self.step, self.y0 + cell[1] * self.step]
    }
}

/// Everything needed to predict a coincidence map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Optical axis of arm A in stage coordinates (µm).
    pub axis: [f64; 2],
    pub pose_b: HologramPose,
    pub source: SourceState,
    pub beam: BeamGeometry,
    pub profile: EfficiencyProfile,
    /// Coincidence rate (counts/s) at the probability maximum with η = 1.
    pub peak_rate: f64,
    /// Accidental coincidences (counts/s), added uniformly.
    pub background_rate: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Axis at (−50, 0) µm, hologram B at (200 µm, −π/2), δ = π, ω = 400 µm,
    /// 100 cps peak rate, default efficiency profile and no background.
    pub fn reference_scenario() -> Self {
        Self {
            axis: [-50.0, 0.0],
            pose_b: HologramPose::new(200.0, -PI / 2.0).expect("valid pose"),
            source: SourceState::maximal(PI).expect("valid source"),
            beam: BeamGeometry::new(400.0).expect("valid beam"),
            profile: EfficiencyProfile::default(),
            peak_rate: 100.0,
            background_rate: 0.0,
            seed: DEFAULT_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_rate.is_finite() && self.peak_rate > 0.0) {
            return Err(Error::invalid(
                "peak_rate",
                format!("must be > 0, got {}", self.peak_rate),
            ));
        }
        if !(self.background_rate.is_finite() && self.background_rate >= 0.0) {
            return Err(Error::invalid(
                "background_rate",
                format!("must be ≥ 0, got {}", self.background_rate),
            ));
        }
        if !(self.axis[0].is_finite() && self.axis[1].is_finite()) {
            return Err(Error::invalid("axis", "axis position must be finite"));
        }
        self.profile.validate()
    }

    /// Pose of hologram A when the stage sits at `stage_xy`.
    pub fn pose_a(&self, stage_xy: [f64; 2]) -> HologramPose {
        HologramPose::from_offset(stage_xy[0] - self.axis[0], stage_xy[1] - self.axis[1])
    }

    /// Stage coordinates that put hologram A at `pose`.
    pub fn stage_point(&self, pose: HologramPose) -> [f64; 2] {
        let [dx, dy] = pose.to_offset();
        [self.axis[0] + dx, self.axis[1] + dy]
    }

    /// Same experiment with hologram B displaced by `shift` (µm).
    pub fn with_b_shift(&self, shift: [f64; 2]) -> Self {
        Self {
            pose_b: self.pose_b.shifted(shift),
            ..self.clone()
        }
    }
}

/// Expected coincidence rate (counts/s) with hologram A at `stage_xy`.
pub fn expected_rate(config: &ExperimentConfig, stage_xy: [f64; 2]) -> f64 {
    let pose_a = config.pose_a(stage_xy);
    let p = coincidence_probability(pose_a, config.pose_b, config.source, config.beam);
    config.peak_rate * config.profile.efficiency(pose_a.r()) * p / config.source.alpha_sq()
        + config.background_rate
}

/// Noiseless rate map over `grid`.
pub fn analytic_map(config: &ExperimentConfig, grid: &ScanGrid) -> RateMap {
    let rates = (0..grid.len())
        .into_par_iter()
        .map(|i| expected_rate(config, grid.point(i)))
        .collect();
    RateMap::new(*grid, rates).expect("rate vector matches grid")
}

/// Poisson-sampled coincidence counts over `grid`, `dwell` seconds per point.
///
/// Point `i` draws from stream `i` of `config.seed`, so the map is identical
/// for any thread count or evaluation order.
pub fn simulate_scan(config: &ExperimentConfig, grid: &ScanGrid, dwell: f64) -> Result<ScanMap> {
    config.validate()?;
    grid.validate()?;
    if !(dwell.is_finite() && dwell > 0.0) {
        return Err(Error::invalid(
            "dwell",
            format!("must be > 0 s, got {dwell}"),
        ));
    }
    let counts = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mean = expected_rate(config, grid.point(i)) * dwell;
            sampling::poisson_at(config.seed, i as u64, mean)
        })
        .collect();
    let mut map = ScanMap::new(*grid, dwell, counts)?;
    map.metadata.insert("seed".into(), config.seed.to_string());
    Ok(map)
}

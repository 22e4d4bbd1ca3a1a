//! Choosing between the dual candidates with a map taken after moving
//! hologram B.
//!
//! If the shift brings the dislocation of B onto the axis, the auxiliary map
//! becomes rotationally symmetric about the axis. Each candidate predicts how
//! far from the axis B ends up, and the measured map either confirms the
//! predicted symmetry or not.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fit::{golden_section, weighted_scale_fit, GeometryCandidate, GeometryFit};
use super::grid_ops::bilinear;
use super::EstimatorOptions;
use crate::angle::normalize_angle;
use crate::error::{Error, Result};
use crate::forward::{coincidence_probability, EfficiencyProfile, ScanGrid};
use crate::lg::{BeamGeometry, HologramPose, SourceState};
use crate::scan_map::ScanMap;

const ANGULAR_BINS: usize = 8;
const SAMPLES_PER_BIN: usize = 4;
const DELTA_SCAN_POINTS: usize = 360;
/// Largest relative mismatch between measured and predicted ring brightness
/// for a predicted symmetry to count as confirmed.
const BRIGHTNESS_TOLERANCE: f64 = 0.3;

/// Angular profile of a map on the ring of largest mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingProbe {
    pub radius: f64,
    pub mean: f64,
    /// Variance of the 8 bin means over the squared ring mean.
    pub metric: f64,
}

/// Predicted and measured symmetry for one candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateCheck {
    /// Distance of B from the axis after the shift under this candidate.
    pub predicted_r_b: f64,
    pub predicted: Option<RingProbe>,
    pub measured: Option<RingProbe>,
    pub predicted_symmetric: bool,
    pub measured_symmetric: bool,
    /// Measured ring mean over the predicted one, scaled by the candidate's
    /// fitted count scale.
    pub brightness_ratio: Option<f64>,
}

impl CandidateCheck {
    /// A predicted symmetry must be seen with the predicted brightness: a
    /// round bright peak that happens to sit on the candidate's axis does not
    /// count.
    fn consistent(&self) -> bool {
        if self.predicted_symmetric {
            self.measured_symmetric
                && self
                    .brightness_ratio
                    .is_some_and(|q| (q - 1.0).abs() <= BRIGHTNESS_TOLERANCE)
        } else {
            !self.measured_symmetric
        }
    }

    fn confirmed(&self) -> bool {
        self.predicted_symmetric && self.consistent()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisambiguationReport {
    pub shift: [f64; 2],
    pub checks: [CandidateCheck; 2],
    /// `"symmetric"` when the auxiliary map confirmed a predicted symmetry,
    /// `"consistency"` when only one candidate matched the measurement.
    pub rule: String,
}

/// Asymmetry of `values` about `centre` (stage µm).
///
/// Rings start at one grid step and grow in half-step increments while they
/// stay inside the grid. Each ring is split into 8 angular bins, each the
/// mean of 4 bilinear samples, so the values need no prior smoothing. The
/// ring with the largest mean is reported.
pub fn asymmetry_metric(values: &[f64], grid: &ScanGrid, centre: [f64; 2]) -> Option<RingProbe> {
    let mut best: Option<RingProbe> = None;
    let mut radius = grid.step;
    while let Some(bins) = ring_bins(values, grid, centre, radius) {
        let mean = bins.iter().sum::<f64>() / ANGULAR_BINS as f64;
        if best.as_ref().map_or(true, |b| mean > b.mean) {
            let var = bins.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / ANGULAR_BINS as f64;
            let metric = if mean > 0.0 {
                var / (mean * mean)
            } else {
                f64::INFINITY
            };
            best = Some(RingProbe {
                radius,
                mean,
                metric,
            });
        }
        radius += 0.5 * grid.step;
    }
    best
}

fn ring_bins(
    values: &[f64],
    grid: &ScanGrid,
    centre: [f64; 2],
    radius: f64,
) -> Option<[f64; ANGULAR_BINS]> {
    let mut bins = [0.0; ANGULAR_BINS];
    for (b, bin) in bins.iter_mut().enumerate() {
        for s in 0..SAMPLES_PER_BIN {
            let angle = (b as f64 + (s as f64 + 0.5) / SAMPLES_PER_BIN as f64) * 2.0 * PI
                / ANGULAR_BINS as f64;
            let xy = [
                centre[0] + radius * angle.cos(),
                centre[1] + radius * angle.sin(),
            ];
            *bin += bilinear(values, grid, grid.to_cell(xy))?;
        }
        *bin /= SAMPLES_PER_BIN as f64;
    }
    Some(bins)
}

/// Uses `aux_map`, recorded after displacing hologram B by `aux_shift`, to
/// pick one of the two candidates and split `theta_sum` into `θ_B` and `δ`.
///
/// Each candidate is assumed to sit opposite the shift direction, so the
/// shift moves it to `|r_B − |shift||` from the axis. A candidate is confirmed
/// when it predicts a symmetric auxiliary map and the map measured about its
/// axis is symmetric with the predicted brightness; if both are, the one
/// predicting the smaller displacement wins. Otherwise the single candidate
/// whose prediction agrees with the measurement is chosen and `δ` is fitted
/// on the auxiliary map.
pub fn disambiguate(
    fit: &GeometryFit,
    aux_map: &ScanMap,
    aux_shift: [f64; 2],
    profile: &EfficiencyProfile,
    options: &EstimatorOptions,
) -> Result<GeometryFit> {
    aux_map.validate()?;
    profile.validate()?;
    options.validate()?;
    if !(aux_shift[0].is_finite() && aux_shift[1].is_finite()) {
        return Err(Error::invalid("aux_shift", "shift must be finite"));
    }
    let shift_len = aux_shift[0].hypot(aux_shift[1]);
    let theta_hyp = if shift_len > 0.0 {
        (-aux_shift[1]).atan2(-aux_shift[0])
    } else {
        fit.theta_sum
    };

    let grid = &aux_map.grid;
    let measured_values = aux_map.values();
    let tau = options.symmetry_threshold;
    let checks = fit.candidates.clone().map(|cand| {
        let pose_b = shifted_pose(&cand, theta_hyp, aux_shift);
        let source =
            SourceState::maximal(fit.theta_sum - theta_hyp).expect("maximal source is valid");
        let model = model_counts(&cand, pose_b, source, profile, grid);
        let predicted = asymmetry_metric(&model, grid, cand.axis_xy);
        let measured = asymmetry_metric(&measured_values, grid, cand.axis_xy);
        let brightness_ratio = match (&predicted, &measured) {
            (Some(p), Some(m)) if p.mean * cand.scale > 0.0 => Some(m.mean / (p.mean * cand.scale)),
            _ => None,
        };
        CandidateCheck {
            brightness_ratio,
            predicted_r_b: pose_b.r(),
            predicted_symmetric: predicted.as_ref().is_some_and(|p| p.metric < tau),
            measured_symmetric: measured.as_ref().is_some_and(|p| p.metric < tau),
            predicted,
            measured,
        }
    });

    let confirmed: Vec<usize> = (0..2).filter(|&k| checks[k].confirmed()).collect();
    let consistent: Vec<usize> = (0..2).filter(|&k| checks[k].consistent()).collect();
    let (chosen, rule, theta_b) = match (confirmed.as_slice(), consistent.as_slice()) {
        ([k], _) => (*k, "symmetric", theta_hyp),
        ([_, _], _) => {
            let k = if checks[0].predicted_r_b <= checks[1].predicted_r_b {
                0
            } else {
                1
            };
            (k, "symmetric", theta_hyp)
        }
        ([], [k]) => {
            let delta = fit_delta(
                &fit.candidates[*k],
                fit.theta_sum,
                aux_map,
                aux_shift,
                profile,
            );
            (*k, "consistency", fit.theta_sum - delta)
        }
        _ => {
            let summary = checks
                .iter()
                .map(|c| {
                    format!(
                        "predicted r_B {:.1} µm ({}), measured {}",
                        c.predicted_r_b,
                        symmetry_word(c.predicted_symmetric),
                        symmetry_word(c.measured_symmetric)
                    )
                })
                .collect::<Vec<_>>()
                .join("; ");
            return Err(Error::InconclusiveDisambiguation(format!(
                "the auxiliary map does not single out a candidate: {summary}"
            )));
        }
    };

    let mut out = fit.clone();
    out.chosen = Some(chosen);
    out.theta_b = Some(normalize_angle(theta_b));
    out.delta = Some(normalize_angle(fit.theta_sum - theta_b));
    out.disambiguation = Some(DisambiguationReport {
        shift: aux_shift,
        checks,
        rule: rule.to_string(),
    });
    Ok(out)
}

fn symmetry_word(symmetric: bool) -> &'static str {
    if symmetric {
        "symmetric"
    } else {
        "asymmetric"
    }
}

fn shifted_pose(cand: &GeometryCandidate, theta_b: f64, shift: [f64; 2]) -> HologramPose {
    HologramPose::new(cand.r_b, theta_b)
        .expect("candidate radius is positive")
        .shifted(shift)
}

fn model_counts(
    cand: &GeometryCandidate,
    pose_b: HologramPose,
    source: SourceState,
    profile: &EfficiencyProfile,
    grid: &ScanGrid,
) -> Vec<f64> {
    let Ok(beam) = BeamGeometry::new(cand.omega) else {
        return vec![0.0; grid.len()];
    };
    (0..grid.len())
        .map(|i| {
            let [x, y] = grid.point(i);
            let pose_a = HologramPose::from_offset(x - cand.axis_xy[0], y - cand.axis_xy[1]);
            profile.efficiency(pose_a.r()) * coincidence_probability(pose_a, pose_b, source, beam)
                / source.alpha_sq()
        })
        .collect()
}

/// Source phase that best explains `aux_map` for candidate `cand`, with
/// `θ_B = theta_sum − δ` before the shift.
fn fit_delta(
    cand: &GeometryCandidate,
    theta_sum: f64,
    aux_map: &ScanMap,
    shift: [f64; 2],
    profile: &EfficiencyProfile,
) -> f64 {
    let counts = aux_map.values();
    let residual = |delta: f64| {
        let pose_b = shifted_pose(cand, theta_sum - delta, shift);
        let source = SourceState::maximal(delta).expect("maximal source is valid");
        weighted_scale_fit(
            &counts,
            &model_counts(cand, pose_b, source, profile, &aux_map.grid),
        )
        .0
    };
    let step = 2.0 * PI / DELTA_SCAN_POINTS as f64;
    let best = (0..DELTA_SCAN_POINTS)
        .map(|i| -PI + i as f64 * step)
        .min_by(|a, b| residual(*a).total_cmp(&residual(*b)))
        .expect("scan is non-empty");
    golden_section(residual, best - step, best + step, 1e-6)
}

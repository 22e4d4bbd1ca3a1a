//! One-parameter fit of `(r_B, ω)` along the max–min distance constraint.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;

use super::extrema::ExtremaReport;
use super::EstimatorOptions;
use crate::error::{Error, Result};
use crate::forward::{coincidence_probability, EfficiencyProfile, ScanGrid};
use crate::lg::{BeamGeometry, HologramPose, SourceState};
use crate::scan_map::ScanMap;

/// One solution of the max–min distance constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryCandidate {
    pub r_b: f64,
    pub omega: f64,
    /// Optical axis in stage coordinates (µm).
    pub axis_xy: [f64; 2],
    /// Weighted sum of squared count residuals, `Σ (c − K·m)² / max(c, 1)`.
    pub residual: f64,
    /// Fitted counts at unit model probability ratio.
    pub scale: f64,
}

/// Dual pair of geometry candidates and, after disambiguation, the chosen one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryFit {
    /// Extrema defining the constraint, after bias correction.
    pub extrema: ExtremaReport,
    /// Extrema as located on the map.
    pub located: ExtremaReport,
    /// Sorted by `r_b` ascending.
    pub candidates: [GeometryCandidate; 2],
    pub chosen: Option<usize>,
    /// `θ_B + δ`.
    pub theta_sum: f64,
    pub theta_b: Option<f64>,
    pub delta: Option<f64>,
    pub disambiguation: Option<super::DisambiguationReport>,
    pub flags: Vec<String>,
}

impl GeometryFit {
    pub fn chosen_candidate(&self) -> Option<&GeometryCandidate> {
        self.chosen.map(|k| &self.candidates[k])
    }
}

/// Scans `r_B` over `(0, d)` with `ω² = 2 r_B (d − r_B)` and the axis at
/// distance `r_B` from the maximum toward the minimum.
///
/// Each trial geometry predicts counts `K·η(r_A)·P/|α|²` with a free scale
/// `K`, using `δ = 0` and `θ_B = φ_max` since only their sum matters. The
/// best interior minimum of the weighted residual is refined by golden-section
/// search; its dual `d − r_B` completes the pair.
///
/// The efficiency roll-off and the grid pitch pull the located extrema away
/// from the extrema of the probability, by over 100 µm when `r_B` is large.
/// The better candidate is therefore polished by a Nelder–Mead search over
/// axis, `r_B`, `ω` and direction together, and the scan is repeated on the
/// extrema of the polished geometry. The extrema as located are kept in
/// [`GeometryFit::located`].
pub fn fit_geometry(
    map: &ScanMap,
    extrema: &ExtremaReport,
    profile: &EfficiencyProfile,
    options: &EstimatorOptions,
) -> Result<GeometryFit> {
    map.validate()?;
    profile.validate()?;
    options.validate()?;
    let counts = map.values();
    let mut current = extrema.clone();
    let mut candidates = fit_pair(&counts, &map.grid, &current, profile, options)?;

    let best = if candidates[0].residual <= candidates[1].residual {
        &candidates[0]
    } else {
        &candidates[1]
    };
    let polished = polish(&counts, &map.grid, best, extrema.phi_max, profile);
    if let Some((geometry, residual)) = polished {
        if residual < best.residual {
            if let Some(model_extrema) = geometry.extrema(extrema) {
                if let Ok(pair) = fit_pair(&counts, &map.grid, &model_extrema, profile, options) {
                    current = model_extrema;
                    candidates = pair;
                }
            }
        }
    }

    Ok(GeometryFit {
        flags: extrema.flags(),
        theta_sum: current.phi_max,
        extrema: current,
        located: extrema.clone(),
        candidates,
        chosen: None,
        theta_b: None,
        delta: None,
        disambiguation: None,
    })
}

/// Unconstrained geometry `[axis_x, axis_y, r_B, ω, φ]`.
#[derive(Clone, Copy, Debug)]
struct FreeGeometry([f64; 5]);

impl FreeGeometry {
    fn extrema(&self, located: &ExtremaReport) -> Option<ExtremaReport> {
        let [ax, ay, r, omega, phi] = self.0;
        let (c, s) = (phi.cos(), phi.sin());
        let zero = omega * omega / (2.0 * r);
        let mut out =
            ExtremaReport::from_points([ax + r * c, ay + r * s], [ax - zero * c, ay - zero * s])
                .ok()?;
        out.max_value = located.max_value;
        out.min_value = located.min_value;
        out.max_on_edge = located.max_on_edge;
        out.min_on_edge = located.min_on_edge;
        Some(out)
    }
}

struct FreeResidual<'a> {
    counts: &'a [f64],
    grid: &'a ScanGrid,
    profile: &'a EfficiencyProfile,
}

/// Angle steps are scaled up so all simplex coordinates are of similar size.
const ANGLE_SCALE: f64 = 100.0;

impl FreeResidual<'_> {
    fn residual(&self, g: &FreeGeometry) -> f64 {
        let [ax, ay, r, omega, phi] = g.0;
        let (Ok(beam), Ok(pose_b)) = (BeamGeometry::new(omega), HologramPose::new(r, phi)) else {
            return f64::MAX;
        };
        if r <= 0.0 {
            return f64::MAX;
        }
        let source = SourceState::maximal(0.0).expect("maximal source is valid");
        let model: Vec<f64> = (0..self.grid.len())
            .map(|i| {
                model_ratio(
                    self.grid.point(i),
                    [ax, ay],
                    pose_b,
                    source,
                    beam,
                    self.profile,
                )
            })
            .collect();
        weighted_scale_fit(self.counts, &model).0
    }
}

impl CostFunction for FreeResidual<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.residual(&FreeGeometry([p[0], p[1], p[2], p[3], p[4] / ANGLE_SCALE])))
    }
}

fn polish(
    counts: &[f64],
    grid: &ScanGrid,
    start: &GeometryCandidate,
    phi: f64,
    profile: &EfficiencyProfile,
) -> Option<(FreeGeometry, f64)> {
    let x0 = vec![
        start.axis_xy[0],
        start.axis_xy[1],
        start.r_b,
        start.omega,
        phi * ANGLE_SCALE,
    ];
    let steps = [
        0.25 * grid.step,
        0.25 * grid.step,
        0.1 * start.r_b,
        0.1 * start.omega,
        0.1 * ANGLE_SCALE,
    ];
    let mut simplex = vec![x0.clone()];
    for (k, step) in steps.iter().enumerate() {
        let mut v = x0.clone();
        v[k] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-9).ok()?;
    let problem = FreeResidual {
        counts,
        grid,
        profile,
    };
    let result = Executor::new(problem, solver)
        .configure(|state| state.max_iters(3000))
        .run()
        .ok()?;
    let state = result.state();
    let p = state.get_best_param()?;
    let geometry = FreeGeometry([p[0], p[1], p[2], p[3], p[4] / ANGLE_SCALE]);
    Some((geometry, state.get_best_cost()))
}

fn fit_pair(
    counts: &[f64],
    grid: &ScanGrid,
    extrema: &ExtremaReport,
    profile: &EfficiencyProfile,
    options: &EstimatorOptions,
) -> Result<[GeometryCandidate; 2]> {
    let d = extrema.separation;
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::DegenerateInput(format!(
            "max–min separation must be > 0, got {d}"
        )));
    }
    let model = ConstrainedModel::new(counts, grid, extrema, profile);

    let n = options.r_grid_points;
    let (lo, hi) = (0.01 * d, 0.99 * d);
    let radii: Vec<f64> = (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect();
    let residuals: Vec<f64> = radii
        .par_iter()
        .map(|&r| model.evaluate(r).residual)
        .collect();

    let best = (1..n - 1)
        .filter(|&i| residuals[i] < residuals[i - 1] && residuals[i] <= residuals[i + 1])
        .min_by(|&a, &b| residuals[a].total_cmp(&residuals[b]))
        .ok_or_else(|| {
            Error::FitFailure(format!(
                "residual over r_B ∈ ({lo:.3}, {hi:.3}) µm has no interior minimum"
            ))
        })?;
    let r_star = golden_section(
        |r| model.evaluate(r).residual,
        radii[best - 1],
        radii[best + 1],
        1e-9 * d,
    );

    let mut pair = [model.evaluate(r_star), model.evaluate(d - r_star)];
    pair.sort_by(|a, b| a.r_b.total_cmp(&b.r_b));
    Ok(pair)
}

/// `η(r_A)·P/|α|²` with hologram A at `stage_xy`.
pub(crate) fn model_ratio(
    stage_xy: [f64; 2],
    axis_xy: [f64; 2],
    pose_b: HologramPose,
    source: SourceState,
    beam: BeamGeometry,
    profile: &EfficiencyProfile,
) -> f64 {
    let pose_a = HologramPose::from_offset(stage_xy[0] - axis_xy[0], stage_xy[1] - axis_xy[1]);
    profile.efficiency(pose_a.r()) * coincidence_probability(pose_a, pose_b, source, beam)
        / source.alpha_sq()
}

struct ConstrainedModel<'a> {
    counts: &'a [f64],
    grid: &'a ScanGrid,
    extrema: &'a ExtremaReport,
    profile: &'a EfficiencyProfile,
    source: SourceState,
}

impl<'a> ConstrainedModel<'a> {
    fn new(
        counts: &'a [f64],
        grid: &'a ScanGrid,
        extrema: &'a ExtremaReport,
        profile: &'a EfficiencyProfile,
    ) -> Self {
        let source = SourceState::maximal(0.0).expect("maximal source is valid");
        Self {
            counts,
            grid,
            extrema,
            profile,
            source,
        }
    }

    fn evaluate(&self, r_b: f64) -> GeometryCandidate {
        let ex = self.extrema;
        let d = ex.separation;
        let omega = (2.0 * r_b * (d - r_b)).max(0.0).sqrt();
        let t = r_b / d;
        let axis_xy = [
            ex.max_xy[0] + t * (ex.min_xy[0] - ex.max_xy[0]),
            ex.max_xy[1] + t * (ex.min_xy[1] - ex.max_xy[1]),
        ];
        let (residual, scale) = match (BeamGeometry::new(omega), HologramPose::new(r_b, ex.phi_max))
        {
            (Ok(beam), Ok(pose_b)) => {
                let model: Vec<f64> = (0..self.grid.len())
                    .map(|i| {
                        model_ratio(
                            self.grid.point(i),
                            axis_xy,
                            pose_b,
                            self.source,
                            beam,
                            self.profile,
                        )
                    })
                    .collect();
                weighted_scale_fit(self.counts, &model)
            }
            _ => (f64::INFINITY, 0.0),
        };
        GeometryCandidate {
            r_b,
            omega,
            axis_xy,
            residual,
            scale,
        }
    }
}

/// Minimizes `Σ w (y − K m)²` over `K` with `w = 1/max(y, 1)`; returns the
/// residual and `K`.
pub(crate) fn weighted_scale_fit(counts: &[f64], model: &[f64]) -> (f64, f64) {
    let weight = |y: f64| 1.0 / y.max(1.0);
    let (mut sym, mut smm) = (0.0, 0.0);
    for (&y, &m) in counts.iter().zip(model) {
        sym += weight(y) * y * m;
        smm += weight(y) * m * m;
    }
    let scale = if smm > 0.0 { sym / smm } else { 0.0 };
    let residual = counts
        .iter()
        .zip(model)
        .map(|(&y, &m)| weight(y) * (y - scale * m).powi(2))
        .sum();
    (residual, scale)
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    while (b - a).abs() > tol {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = f(e);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::locate_extrema;
    use crate::forward::{analytic_map, ExperimentConfig, REFERENCE_DWELL_S};
    use rand::{Rng, SeedableRng};

    fn noiseless(config: &ExperimentConfig, grid: &ScanGrid) -> ScanMap {
        ScanMap::noiseless(&analytic_map(config, grid), REFERENCE_DWELL_S).unwrap()
    }

    fn fit(map: &ScanMap, profile: &EfficiencyProfile) -> GeometryFit {
        let options = EstimatorOptions::default();
        let extrema = locate_extrema(map, options.smoothing_radius).unwrap();
        fit_geometry(map, &extrema, profile, &options).unwrap()
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let x = golden_section(|x| (x - 1.3).powi(2), 0.0, 4.0, 1e-10);
        assert!((x - 1.3).abs() < 1e-8);
    }

    #[test]
    fn scale_fit_is_exact_for_proportional_data() {
        let model = [0.5, 1.0, 0.0, 2.0];
        let counts: Vec<f64> = model.iter().map(|m| 7.0 * m).collect();
        let (res, k) = weighted_scale_fit(&counts, &model);
        assert!((k - 7.0).abs() < 1e-12 && res < 1e-20);
    }

    #[test]
    fn reference_scenario_candidates() {
        let fit = fit(
            &noiseless(
                &ExperimentConfig::reference_scenario(),
                &ScanGrid::reference_default(),
            ),
            &EfficiencyProfile::default(),
        );
        let [a, b] = &fit.candidates;
        assert!(
            (a.r_b - 200.0).abs() < 20.0 && (a.omega - 400.0).abs() < 40.0,
            "{a:?}"
        );
        assert!(
            (b.r_b - 400.0).abs() < 40.0 && (b.omega - 400.0).abs() < 40.0,
            "{b:?}"
        );
        assert!(
            (a.axis_xy[0] + 50.0).abs() <= 75.0 && a.axis_xy[1].abs() <= 75.0,
            "{a:?}"
        );
        assert!(fit.chosen.is_none() && fit.delta.is_none());
        assert!((fit.theta_sum - std::f64::consts::FRAC_PI_2).abs() < 0.1);
    }

    #[test]
    fn candidates_are_dual_and_between_extrema() {
        let fit = fit(
            &noiseless(
                &ExperimentConfig::reference_scenario(),
                &ScanGrid::reference_default(),
            ),
            &EfficiencyProfile::default(),
        );
        let [a, b] = &fit.candidates;
        let d = fit.extrema.separation;
        assert!((a.r_b * b.r_b - a.omega * a.omega / 2.0).abs() < 1e-6 * a.r_b * b.r_b);
        assert!((a.omega - b.omega).abs() < 1e-6 * a.omega);
        for c in [a, b] {
            assert!((c.r_b + c.omega * c.omega / (2.0 * c.r_b) - d).abs() < 1e-6 * d);
            let to_max =
                (c.axis_xy[0] - fit.extrema.max_xy[0]).hypot(c.axis_xy[1] - fit.extrema.max_xy[1]);
            let to_min =
                (c.axis_xy[0] - fit.extrema.min_xy[0]).hypot(c.axis_xy[1] - fit.extrema.min_xy[1]);
            assert!(to_max > 0.0 && to_min > 0.0 && (to_max + to_min - d).abs() < 1e-9 * d);
        }
    }

    #[test]
    fn dual_pair_coincides_at_the_turning_point() {
        // r_B = ω/√2 gives d = √2 ω, the minimum of the distance function.
        let omega = 400.0;
        let r = omega / 2f64.sqrt();
        let mut config = ExperimentConfig::reference_scenario();
        config.pose_b = HologramPose::new(r, -std::f64::consts::FRAC_PI_2).unwrap();
        config.profile = EfficiencyProfile::flat();
        let grid = ScanGrid::new(-1000.0, -1000.0, 50.0, 41, 41).unwrap();
        let fit = fit(&noiseless(&config, &grid), &config.profile);
        let [a, b] = &fit.candidates;
        assert!(
            (a.r_b - r).abs() < 0.05 * r && (b.r_b - r).abs() < 0.05 * r,
            "{a:?} {b:?}"
        );
    }

    #[test]
    fn noiseless_round_trip_over_random_truths() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let grid = ScanGrid::new(-1500.0, -1500.0, 50.0, 61, 61).unwrap();
        for _ in 0..10 {
            let r_b = rng.random_range(100.0..500.0);
            let omega = rng.random_range(300.0..500.0);
            let mut config = ExperimentConfig::reference_scenario();
            config.pose_b = HologramPose::new(r_b, rng.random_range(-3.0..3.0)).unwrap();
            config.beam = BeamGeometry::new(omega).unwrap();
            config.profile = EfficiencyProfile::clipped(1.0, 3000.0, 2.0).unwrap();
            let fit = fit(&noiseless(&config, &grid), &config.profile);
            let found = fit.candidates.iter().any(|c| {
                (c.r_b - r_b).abs() < 0.05 * r_b && (c.omega - omega).abs() < 0.05 * omega
            });
            assert!(
                found,
                "truth r_B={r_b:.1} ω={omega:.1}, got {:?}",
                fit.candidates
            );
        }
    }
}

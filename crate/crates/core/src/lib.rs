//! Simulation and estimation toolkit for entangled Laguerre-Gaussian photon
//! pairs detected through dislocated fork holograms and single-mode fibers.
//!
//! * [`lg`]: single-photon kets over the azimuthal index and the measurement
//!   basis states of each arm.
//! * [`forward`]: closed-form coincidence probability, its extrema, the
//!   efficiency-weighted rate model and Poisson scan-map simulation.
//! * [`estimator`]: recovers the optical-axis position, hologram-B pose, beam
//!   radius and source phase from scan maps.
//! * [`chsh`]: correlation functions and S-values from count quads or from the
//!   model.
//! * [`scan_map`]: scan-map containers and their CSV/JSON formats.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angle;
pub mod chsh;
pub mod error;
pub mod estimator;
pub mod forward;
pub mod lg;
pub mod sampling;
pub mod scan_map;

pub use angle::{normalize_angle, parse_angle};
pub use chsh::{
    correlation_from_counts, evaluate_records, optimal_radius, perp, predict_s, s_value,
    simulate_chsh_counts, ChshEvaluation, ChshSettings, CorrelationSet, CountQuad, QuadRecord,
};
pub use error::{Error, Result};
pub use estimator::{
    disambiguate, estimate_axis, fit_geometry, locate_extrema, AuxScan, EstimatorOptions,
    ExtremaReport, GeometryCandidate, GeometryFit,
};
pub use forward::{
    analytic_map, coincidence_probability, coincidence_probability_oracle, expected_rate,
    extremum_poses, min_max_distance, simulate_scan, EfficiencyProfile, ExperimentConfig, ScanGrid,
    REFERENCE_DWELL_S,
};
pub use lg::{
    basis_minus, basis_plus, hologram_output_state, inner_product, time_reverse, BeamGeometry,
    HologramPose, LgIndex, LgKet, SourceState,
};
pub use sampling::DEFAULT_SEED;
pub use scan_map::{RateMap, ScanMap};

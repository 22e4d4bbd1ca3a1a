//! Shared inputs for the criterion benchmarks.

use lgaxis_core::{analytic_map, ExperimentConfig, ScanGrid, ScanMap, REFERENCE_DWELL_S};

/// Noiseless reference-scenario map and its 200 µm upward-shifted companion.
pub fn reference_maps() -> (ScanMap, ScanMap) {
    let cfg = ExperimentConfig::reference_scenario();
    let grid = ScanGrid::reference_default();
    let main =
        ScanMap::noiseless(&analytic_map(&cfg, &grid), REFERENCE_DWELL_S).expect("valid map");
    let aux_cfg = cfg.with_b_shift([0.0, 200.0]);
    let aux =
        ScanMap::noiseless(&analytic_map(&aux_cfg, &grid), REFERENCE_DWELL_S).expect("valid map");
    (main, aux)
}

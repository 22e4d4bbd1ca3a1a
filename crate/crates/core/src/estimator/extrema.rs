//! Locating the bright spot and the dark spot of a coincidence map.

use serde::{Deserialize, Serialize};

use super::grid_ops::{box_smooth, neighbors, quadratic_peak, zero_offset};
use crate::error::{Error, Result};
use crate::forward::ScanGrid;
use crate::scan_map::ScanMap;

/// A dark spot must sit this many standard errors below the mean of its
/// neighbors to count as the zero of the coincidence map.
const MIN_DIP_SIGNIFICANCE: f64 = 4.0;

/// Coincidence maximum and minimum of a scan map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremaReport {
    pub max_xy: [f64; 2],
    pub min_xy: [f64; 2],
    /// Smoothed counts at the maximum and minimum cells.
    pub max_value: f64,
    pub min_value: f64,
    /// Distance between `max_xy` and `min_xy` (µm).
    pub separation: f64,
    /// Direction from `min_xy` to `max_xy`, equal to `θ_B + δ`.
    pub phi_max: f64,
    pub max_on_edge: bool,
    pub min_on_edge: bool,
}

impl ExtremaReport {
    /// Builds a report from two points, checking they are distinct.
    pub fn from_points(max_xy: [f64; 2], min_xy: [f64; 2]) -> Result<Self> {
        let (dx, dy) = (max_xy[0] - min_xy[0], max_xy[1] - min_xy[1]);
        let separation = dx.hypot(dy);
        if !(separation > 0.0 && separation.is_finite()) {
            return Err(Error::AmbiguousExtremum(
                "maximum and minimum coincide".into(),
            ));
        }
        Ok(Self {
            max_xy,
            min_xy,
            max_value: f64::NAN,
            min_value: f64::NAN,
            separation,
            phi_max: dy.atan2(dx),
            max_on_edge: false,
            min_on_edge: false,
        })
    }

    /// Warning flags for extrema on the grid boundary.
    pub fn flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if self.max_on_edge {
            flags.push("edge-extremum: maximum on grid boundary".to_string());
        }
        if self.min_on_edge {
            flags.push("edge-extremum: minimum on grid boundary".to_string());
        }
        flags
    }
}

/// Finds the maximum and the minimum of `map` after a box average of
/// `smoothing_radius` cells, refined to sub-grid precision.
///
/// The maximum is the global maximum of the smoothed map. It is rejected as
/// ambiguous when another local maximum, not adjacent to it, comes within
/// `√(max count)` of it.
///
/// The zero of the coincidence probability is narrower than a box average
/// at typical step sizes, so the minimum is searched on the raw counts: the
/// interior cell lying strictly below all 8 neighbors whose depth under the
/// neighbor mean is largest relative to its Poisson error. Regions where the
/// detection efficiency has fallen to zero are flat and never qualify.
/// Without any significant dip the global minimum of the smoothed map is
/// reported, usually on the boundary.
///
/// The maximum is refined by a quadratic fit to the raw counts over the
/// 3 × 3 neighborhood, since the box average skews the lopsided peak. The
/// dip is refined by [`zero_offset`](super::grid_ops::zero_offset).
pub fn locate_extrema(map: &ScanMap, smoothing_radius: usize) -> Result<ExtremaReport> {
    map.validate()?;
    locate_in_values(&map.values(), &map.grid, smoothing_radius)
}

/// [`locate_extrema`] on count-scaled values laid out over `grid`.
pub(crate) fn locate_in_values(
    raw: &[f64],
    grid: &ScanGrid,
    smoothing_radius: usize,
) -> Result<ExtremaReport> {
    if grid.nx < 3 || grid.ny < 3 {
        return Err(Error::invalid(
            "map",
            format!(
                "extremum search needs at least 3 × 3 points, got {} × {}",
                grid.nx, grid.ny
            ),
        ));
    }
    let (smoothed, _) = box_smooth(raw, grid, smoothing_radius);

    let i_max = argmax(&smoothed);
    let noise = raw.iter().cloned().fold(0.0, f64::max).sqrt().max(1.0);
    let (mx, my) = grid.cell(i_max);
    for j in local_extrema(&smoothed, grid, true) {
        let (jx, jy) = grid.cell(j);
        let adjacent = mx.abs_diff(jx) <= 1 && my.abs_diff(jy) <= 1;
        if !adjacent && smoothed[i_max] - smoothed[j] < noise {
            let [x1, y1] = grid.coords(mx, my);
            let [x2, y2] = grid.coords(jx, jy);
            return Err(Error::AmbiguousExtremum(format!(
                "maxima at ({x1}, {y1}) and ({x2}, {y2}) differ by less than the counting noise {noise:.3}"
            )));
        }
    }

    let dip = most_significant_dip(raw, grid);
    let report_min_is_fallback = dip.is_none();
    let i_min = dip.unwrap_or_else(|| argmin(&smoothed));

    let (nx_min, ny_min) = grid.cell(i_min);
    let max_xy = refine(raw, grid, i_max, true);
    let min_xy = match zero_offset(raw, grid, nx_min, ny_min) {
        Some([ox, oy]) if !report_min_is_fallback => {
            grid.from_cell([nx_min as f64 + ox, ny_min as f64 + oy])
        }
        _ => refine(raw, grid, i_min, false),
    };
    let mut report = ExtremaReport::from_points(max_xy, min_xy)?;
    report.max_value = smoothed[i_max];
    report.min_value = smoothed[i_min];
    report.max_on_edge = grid.is_boundary(mx, my);
    report.min_on_edge = grid.is_boundary(nx_min, ny_min);
    Ok(report)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

fn local_extrema<'a>(
    values: &'a [f64],
    grid: &'a ScanGrid,
    maximum: bool,
) -> impl Iterator<Item = usize> + 'a {
    (0..values.len()).filter(move |&i| {
        let (ix, iy) = grid.cell(i);
        neighbors(grid, ix, iy).all(|j| {
            if maximum {
                values[j] <= values[i]
            } else {
                values[j] >= values[i]
            }
        })
    })
}

fn most_significant_dip(raw: &[f64], grid: &ScanGrid) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..raw.len() {
        let (ix, iy) = grid.cell(i);
        if grid.is_boundary(ix, iy) || !neighbors(grid, ix, iy).all(|j| raw[j] > raw[i]) {
            continue;
        }
        let rim = neighbors(grid, ix, iy).map(|j| raw[j]).sum::<f64>() / 8.0;
        let sigma = (raw[i] + rim / 8.0).max(1.0).sqrt();
        let significance = (rim - raw[i]) / sigma;
        if significance >= MIN_DIP_SIGNIFICANCE && best.map_or(true, |(_, s)| significance > s) {
            best = Some((i, significance));
        }
    }
    best.map(|(i, _)| i)
}

fn refine(values: &[f64], grid: &ScanGrid, index: usize, maximum: bool) -> [f64; 2] {
    let (ix, iy) = grid.cell(index);
    let offset = quadratic_peak(values, grid, ix, iy, maximum).unwrap_or([0.0, 0.0]);
    grid.from_cell([ix as f64 + offset[0], iy as f64 + offset[1]])
}

//! Neighborhood operations on values laid out over a [`ScanGrid`].

use crate::forward::ScanGrid;

/// Box average over a `(2·radius+1)²` window, truncated at the grid edge.
/// Returns the smoothed values and the number of cells averaged per point.
pub fn box_smooth(values: &[f64], grid: &ScanGrid, radius: usize) -> (Vec<f64>, Vec<usize>) {
    let mut smoothed = vec![0.0; values.len()];
    let mut support = vec![0usize; values.len()];
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let (x_lo, x_hi) = (ix.saturating_sub(radius), (ix + radius).min(grid.nx - 1));
            let (y_lo, y_hi) = (iy.saturating_sub(radius), (iy + radius).min(grid.ny - 1));
            let mut sum = 0.0;
            let mut n = 0;
            for y in y_lo..=y_hi {
                for x in x_lo..=x_hi {
                    sum += values[grid.index(x, y)];
                    n += 1;
                }
            }
            let i = grid.index(ix, iy);
            smoothed[i] = sum / n as f64;
            support[i] = n;
        }
    }
    (smoothed, support)
}

/// Values of the 8 neighbors of an interior-or-edge cell (fewer at the edge).
pub fn neighbors(grid: &ScanGrid, ix: usize, iy: usize) -> impl Iterator<Item = usize> + '_ {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let (cx, cy) = (ix as isize, iy as isize);
    (-1isize..=1)
        .flat_map(move |dy| (-1isize..=1).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| dx != 0 || dy != 0)
        .filter_map(move |(dx, dy)| {
            let (x, y) = (cx + dx, cy + dy);
            (x >= 0 && y >= 0 && x < nx && y < ny).then(|| grid.index(x as usize, y as usize))
        })
}

/// Stationary point of the least-squares quadratic through the 3 × 3 block
/// centred on interior cell `(ix, iy)`, as a fractional cell offset.
///
/// Returns `None` when the surface is not strictly concave (`maximum`) or
/// convex (`!maximum`), or when the stationary point leaves the block.
pub fn quadratic_peak(
    values: &[f64],
    grid: &ScanGrid,
    ix: usize,
    iy: usize,
    maximum: bool,
) -> Option<[f64; 2]> {
    if grid.is_boundary(ix, iy) {
        return None;
    }
    let f = |dx: isize, dy: isize| {
        values[grid.index((ix as isize + dx) as usize, (iy as isize + dy) as usize)]
    };
    let col = |dx: isize| f(dx, -1) + f(dx, 0) + f(dx, 1);
    let row = |dy: isize| f(-1, dy) + f(0, dy) + f(1, dy);
    // f ≈ a + bx·x + by·y + cxx·x² + cxy·xy + cyy·y²; the basis is orthogonal on the block.
    let bx = (col(1) - col(-1)) / 6.0;
    let by = (row(1) - row(-1)) / 6.0;
    let cxx = (col(1) + col(-1) - 2.0 * col(0)) / 6.0;
    let cyy = (row(1) + row(-1) - 2.0 * row(0)) / 6.0;
    let cxy = (f(1, 1) + f(-1, -1) - f(1, -1) - f(-1, 1)) / 4.0;

    let (hxx, hyy, hxy) = (2.0 * cxx, 2.0 * cyy, cxy);
    let det = hxx * hyy - hxy * hxy;
    let definite = det > 0.0 && if maximum { hxx < 0.0 } else { hxx > 0.0 };
    if !definite {
        return None;
    }
    let x = (-bx * hyy + by * hxy) / det;
    let y = (-by * hxx + bx * hxy) / det;
    (x.abs() <= 1.0 && y.abs() <= 1.0).then_some([x, y])
}

/// Position of a zero of the counts near interior cell `(ix, iy)`, as a
/// fractional cell offset.
///
/// Around a zero of the two-photon amplitude the counts behave as
/// `|z − z0|²` times a slowly varying envelope, taken here as linear. For each
/// trial `z0` the envelope follows from weighted linear least squares over the
/// 3 × 3 block; `z0` is found by a coarse-to-fine search over the block.
pub fn zero_offset(values: &[f64], grid: &ScanGrid, ix: usize, iy: usize) -> Option<[f64; 2]> {
    if grid.is_boundary(ix, iy) {
        return None;
    }
    let block: Vec<(f64, f64, f64)> = (-1isize..=1)
        .flat_map(|dy| (-1isize..=1).map(move |dx| (dx, dy)))
        .map(|(dx, dy)| {
            let v = values[grid.index((ix as isize + dx) as usize, (iy as isize + dy) as usize)];
            (dx as f64, dy as f64, v)
        })
        .collect();
    let cost = |z0: [f64; 2]| zero_model_residual(&block, z0);

    let mut best = [0.0, 0.0];
    let mut best_cost = cost(best);
    let mut half_width = 1.0;
    for _ in 0..4 {
        let centre = best;
        let steps = 20;
        for i in 0..=steps {
            for j in 0..=steps {
                let z0 = [
                    (centre[0] - half_width + 2.0 * half_width * i as f64 / steps as f64)
                        .clamp(-1.0, 1.0),
                    (centre[1] - half_width + 2.0 * half_width * j as f64 / steps as f64)
                        .clamp(-1.0, 1.0),
                ];
                let c = cost(z0);
                if c < best_cost {
                    best_cost = c;
                    best = z0;
                }
            }
        }
        half_width /= 10.0;
    }
    best_cost.is_finite().then_some(best)
}

fn zero_model_residual(block: &[(f64, f64, f64)], z0: [f64; 2]) -> f64 {
    // Normal equations for v ≈ q·(a + b·dx + c·dy) with q = |z − z0|².
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for &(dx, dy, v) in block {
        let q = (dx - z0[0]).powi(2) + (dy - z0[1]).powi(2);
        let row = [q, q * dx, q * dy];
        let w = 1.0 / v.max(1.0);
        for r in 0..3 {
            atb[r] += w * row[r] * v;
            for c in 0..3 {
                ata[r][c] += w * row[r] * row[c];
            }
        }
    }
    let Some(coef) = solve3(ata, atb) else {
        return f64::INFINITY;
    };
    block
        .iter()
        .map(|&(dx, dy, v)| {
            let q = (dx - z0[0]).powi(2) + (dy - z0[1]).powi(2);
            let m = q * (coef[0] + coef[1] * dx + coef[2] * dy);
            (v - m).powi(2) / v.max(1.0)
        })
        .sum()
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d.abs()
        < 1e-12
            * a.iter()
                .flatten()
                .map(|v| v.abs())
                .fold(0.0, f64::max)
                .powi(3)
    {
        return None;
    }
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][k] = b[r];
        }
        *xk = det(m) / d;
    }
    Some(x)
}

/// Bilinear interpolation at fractional cell coordinates; `None` outside the grid.
pub fn bilinear(values: &[f64], grid: &ScanGrid, cell: [f64; 2]) -> Option<f64> {
    let [cx, cy] = cell;
    let (max_x, max_y) = ((grid.nx - 1) as f64, (grid.ny - 1) as f64);
    if !(cx >= 0.0 && cy >= 0.0 && cx <= max_x && cy <= max_y) {
        return None;
    }
    let x0 = (cx.floor() as usize).min(grid.nx - 2);
    let y0 = (cy.floor() as usize).min(grid.ny - 2);
    let (tx, ty) = (cx - x0 as f64, cy - y0 as f64);
    let v = |x: usize, y: usize| values[grid.index(x, y)];
    Some(
        v(x0, y0) * (1.0 - tx) * (1.0 - ty)
            + v(x0 + 1, y0) * tx * (1.0 - ty)
            + v(x0, y0 + 1) * (1.0 - tx) * ty
            + v(x0 + 1, y0 + 1) * tx * ty,
    )
}

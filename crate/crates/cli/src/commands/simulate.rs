use lgaxis_core::{analytic_map, simulate_scan, ScanMap};

use super::{with_suffix, write_rate_map, write_scan_map};
use crate::args::SimulateArgs;
use crate::config::{ensure_distinct, FileConfig, SimulateRecord};
use crate::CliError;

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let out = args
        .common
        .out
        .clone()
        .ok_or_else(|| CliError::Validation("simulate needs --out <path>".into()))?;
    let analytic_out = args
        .analytic_out
        .clone()
        .unwrap_or_else(|| with_suffix(&out, "_analytic"));
    ensure_distinct(&[
        ("config", args.common.config.as_deref()),
        ("out", Some(&out)),
        ("analytic-out", Some(&analytic_out)),
    ])?;

    let seed = file.seed(args.common.seed);
    let format = file.format(args.common.format, Some(&out));
    let experiment = file.experiment(&args.model, seed)?;
    let (grid, dwell) = file.grid(&args.grid)?;
    let b_shift = args.b_shift.unwrap_or([0.0, 0.0]);
    let record = serde_json::to_string(&SimulateRecord {
        experiment: &experiment,
        grid: &grid,
        dwell_s: dwell,
        b_shift,
    })
    .map_err(|e| CliError::Computation(format!("cannot serialize config: {e}")))?;

    let shifted = experiment.with_b_shift(b_shift);
    let mut map = simulate_scan(&shifted, &grid, dwell)?;
    map.metadata.insert("config".into(), record.clone());
    let mut rates = analytic_map(&shifted, &grid);
    rates.metadata.insert("config".into(), record);
    rates.metadata.insert("seed".into(), seed.to_string());

    write_scan_map(&map, &out, format)?;
    write_rate_map(&rates, &analytic_out, format)?;
    print_summary(&map);
    println!("wrote {} and {}", out.display(), analytic_out.display());
    Ok(())
}

fn print_summary(map: &ScanMap) {
    let grid = &map.grid;
    let (mut i_max, mut i_min) = (0, 0);
    for (i, &c) in map.counts.iter().enumerate() {
        if c > map.counts[i_max] {
            i_max = i;
        }
        if c < map.counts[i_min] {
            i_min = i;
        }
    }
    println!(
        "grid {}x{}, step {} um, dwell {} s, seed {}",
        grid.nx, grid.ny, grid.step, map.dwell, map.metadata["seed"]
    );
    for (label, i) in [("max", i_max), ("min", i_min)] {
        let (ix, iy) = grid.cell(i);
        let [x, y] = grid.point(i);
        println!(
            "{label}: cell ({ix}, {iy}) at ({x}, {y}) um, {} counts",
            map.counts[i]
        );
    }
    println!("total counts: {}", map.total());
}

use lgaxis_core::{estimate_axis, AuxScan, GeometryFit};

use super::{read_scan_map, to_json, write_text};
use crate::args::{EstimateArgs, OutputFormat};
use crate::config::{ensure_distinct, FileConfig};
use crate::CliError;

pub fn run(args: &EstimateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    ensure_distinct(&[
        ("config", args.common.config.as_deref()),
        ("map", Some(&args.map)),
        ("aux-map", args.aux_map.as_deref()),
        ("out", args.common.out.as_deref()),
    ])?;
    if args.common.format == Some(OutputFormat::Csv) {
        return Err(CliError::Validation(
            "estimate writes JSON reports; --format csv is not available".into(),
        ));
    }

    let seed = file.seed(args.common.seed);
    let profile = file.experiment(&args.model, seed)?.profile;
    let options = file.estimator(&args.estimator)?;
    let map = read_scan_map(&args.map)?;
    let aux = match &args.aux_map {
        Some(path) => {
            let shift = args.aux_shift.or(file.estimate.aux_shift).ok_or_else(|| {
                CliError::Validation(
                    "--aux-map needs the displacement of hologram B via --aux-shift x,y".into(),
                )
            })?;
            Some((read_scan_map(path)?, shift))
        }
        None => None,
    };
    let fit = estimate_axis(
        &map,
        &profile,
        aux.as_ref().map(|(m, shift)| AuxScan {
            map: m,
            shift: *shift,
        }),
        &options,
    )?;

    let report = to_json(&fit)?;
    match &args.common.out {
        Some(path) => {
            write_text(path, &report)?;
            print_summary(&fit);
            println!("wrote {}", path.display());
        }
        None => println!("{report}"),
    }
    Ok(())
}

fn print_summary(fit: &GeometryFit) {
    for (k, c) in fit.candidates.iter().enumerate() {
        let mark = if fit.chosen == Some(k) { "*" } else { " " };
        println!(
            "{mark} candidate {k}: r_B = {:.1} um, omega = {:.1} um, axis = ({:.1}, {:.1}) um, residual = {:.4e}",
            c.r_b, c.omega, c.axis_xy[0], c.axis_xy[1], c.residual
        );
    }
    println!("theta_B + delta = {:.4} rad", fit.theta_sum);
    if let (Some(theta_b), Some(delta)) = (fit.theta_b, fit.delta) {
        println!("theta_B = {theta_b:.4} rad, delta = {delta:.4} rad");
    }
    for flag in &fit.flags {
        println!("warning: {flag}");
    }
}

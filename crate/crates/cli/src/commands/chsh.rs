use std::fs::File;
use std::io::BufReader;

use lgaxis_core::chsh::{predict_correlations, read_quads, visibility, write_quads};
use lgaxis_core::{
    evaluate_records, s_value, simulate_chsh_counts, ChshEvaluation, ChshSettings, CorrelationSet,
};
use serde::Serialize;

use super::{create, io_error, to_json, write_text};
use crate::args::{ChshArgs, ModelArgs, OutputFormat};
use crate::config::{ensure_distinct, FileConfig};
use crate::CliError;

const DEFAULT_R_UM: f64 = 200.0;
const DEFAULT_ACCUMULATION_S: f64 = 5.0;

#[derive(Debug, Serialize)]
struct ChshReport {
    /// `"counts"` or `"model"`.
    source: &'static str,
    settings: ChshSettings,
    correlations: CorrelationSet,
    s: f64,
    abs_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    s_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_um: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    visibility: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulated: Option<ChshEvaluation>,
}

pub fn run(args: &ChshArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    ensure_distinct(&[
        ("config", args.common.config.as_deref()),
        ("counts", args.counts.as_deref()),
        ("out", args.common.out.as_deref()),
        ("simulate-out", args.simulate_out.as_deref()),
    ])?;
    let settings = file.settings(
        args.theta_a,
        args.theta_a_prime,
        args.theta_b,
        args.theta_b_prime,
    );

    let report = match &args.counts {
        Some(path) => {
            let records = read_quads(BufReader::new(
                File::open(path).map_err(|e| io_error(path, e))?,
            ))
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let explicit = settings_given(args, &file).then_some(&settings);
            let eval = evaluate_records(&records, explicit)?;
            ChshReport {
                source: "counts",
                settings: eval.settings,
                correlations: eval.correlations,
                s: eval.s,
                abs_s: eval.s.abs(),
                s_sigma: Some(eval.s_sigma),
                r_um: None,
                visibility: None,
                simulated: None,
            }
        }
        None => model_report(args, &file, settings)?,
    };

    print_report(&report);
    if let Some(path) = &args.common.out {
        match file.format(args.common.format, Some(path)) {
            OutputFormat::Json => write_text(path, &to_json(&report)?)?,
            OutputFormat::Csv => write_text(path, &report_csv(&report))?,
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn settings_given(args: &ChshArgs, file: &FileConfig) -> bool {
    let c = &file.chsh;
    [
        args.theta_a,
        args.theta_a_prime,
        args.theta_b,
        args.theta_b_prime,
        c.theta_a,
        c.theta_a_prime,
        c.theta_b,
        c.theta_b_prime,
    ]
    .iter()
    .any(Option::is_some)
}

fn model_report(
    args: &ChshArgs,
    file: &FileConfig,
    settings: ChshSettings,
) -> Result<ChshReport, CliError> {
    let model = ModelArgs {
        omega: args.omega,
        delta: args.delta,
        alpha_sq: args.alpha_sq,
        ..ModelArgs::default()
    };
    let beam = file.beam(&model)?;
    let source = file.source(&model)?;
    let r = args.r.or(file.chsh.r).unwrap_or(DEFAULT_R_UM);
    if !(r.is_finite() && r >= 0.0) {
        return Err(CliError::Validation(format!(
            "invalid parameter `r`: must be finite and ≥ 0, got {r}"
        )));
    }
    let correlations = predict_correlations(&settings, r, beam, source);
    let s = s_value(&correlations);

    let simulated = match &args.simulate_out {
        Some(path) => {
            let seed = file.seed(args.common.seed);
            let peak_rate = args
                .peak_rate
                .or(file.experiment.peak_rate)
                .unwrap_or(100.0);
            let accumulation = args
                .accumulation_s
                .or(file.chsh.accumulation_s)
                .unwrap_or(DEFAULT_ACCUMULATION_S);
            let records =
                simulate_chsh_counts(&settings, r, beam, source, peak_rate, accumulation, seed)?;
            match file.format(args.common.format, Some(path)) {
                OutputFormat::Csv => write_quads(create(path)?, &records)?,
                OutputFormat::Json => write_text(path, &to_json(&records)?)?,
            }
            println!("wrote {}", path.display());
            Some(evaluate_records(&records, Some(&settings))?)
        }
        None => None,
    };

    Ok(ChshReport {
        source: "model",
        settings,
        correlations,
        s,
        abs_s: s.abs(),
        s_sigma: None,
        r_um: Some(r),
        visibility: Some(visibility(r, beam)),
        simulated,
    })
}

fn labelled(report: &ChshReport) -> [(&'static str, f64, f64, f64); 4] {
    let (st, e) = (&report.settings, &report.correlations);
    [
        ("A,B", st.theta_a, st.theta_b, e.ab),
        ("A,B'", st.theta_a, st.theta_b_prime, e.a_b_prime),
        ("A',B", st.theta_a_prime, st.theta_b, e.a_prime_b),
        (
            "A',B'",
            st.theta_a_prime,
            st.theta_b_prime,
            e.a_prime_b_prime,
        ),
    ]
}

fn print_report(report: &ChshReport) {
    if let (Some(r), Some(v)) = (report.r_um, report.visibility) {
        println!("model: r = {r} um, visibility = {v:.6}");
    }
    for (label, a, b, e) in labelled(report) {
        println!("E({label}) at (theta_A = {a:.6}, theta_B = {b:.6}) = {e:.6}");
    }
    println!("S = {:.6}", report.s);
    println!("|S| = {:.3}", report.abs_s);
    if let Some(sigma) = report.s_sigma {
        println!("sigma(S) = {sigma:.3}");
    }
    if let Some(sim) = &report.simulated {
        println!(
            "simulated counts: S = {:.6} +/- {:.6}, |S| = {:.3}",
            sim.s,
            sim.s_sigma,
            sim.s.abs()
        );
    }
}

fn report_csv(report: &ChshReport) -> String {
    let mut out = String::from("pair,theta_A,theta_B,E\n");
    for (label, a, b, e) in labelled(report) {
        out.push_str(&format!("\"{label}\",{a},{b},{e}\n"));
    }
    out.push_str(&format!("S,,,{}\n", report.s));
    out
}

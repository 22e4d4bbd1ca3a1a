//! Acceptance checks, one PASS/FAIL line each. Exits non-zero if any fails.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use lgaxis_core::angle::angle_diff;
use lgaxis_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn within(label: &str, got: f64, want: f64, tol: f64) -> Outcome {
    let msg = format!("{label} = {got:.6} (want {want} ± {tol})");
    if (got - want).abs() <= tol {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f()?;
    let elapsed = start.elapsed();
    let msg = format!("{out}, {:.3} s", elapsed.as_secs_f64());
    if elapsed < limit {
        Ok(msg)
    } else {
        Err(format!("{msg} exceeds {:.0} s", limit.as_secs_f64()))
    }
}

fn measured_quads_via_cli() -> Outcome {
    timed(Duration::from_secs(1), || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let report = dir.path().join("s.json");
        let status = Command::new(env!("CARGO_BIN_EXE_lgaxis"))
            .arg("chsh")
            .arg("--counts")
            .arg(fixture("table1_quads.csv"))
            .arg("--out")
            .arg(&report)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&report).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        let abs_s = json["abs_s"].as_f64().ok_or("report lacks abs_s")?;
        within("|S|", abs_s, 2.127, 0.001)
    })
}

fn model_prediction() -> Outcome {
    timed(Duration::from_secs(1), || {
        let beam = BeamGeometry::new(400.0).map_err(|e| e.to_string())?;
        let source = SourceState::maximal(0.0).map_err(|e| e.to_string())?;
        let s = predict_s(&ChshSettings::canonical(), 200.0, beam, source)
            .map_err(|e| e.to_string())?;
        within("|S|(r=200)", s.abs(), 2.263, 0.01)
    })
}

fn tsirelson_point() -> Outcome {
    let beam = BeamGeometry::new(400.0).map_err(|e| e.to_string())?;
    let source = SourceState::maximal(0.0).map_err(|e| e.to_string())?;
    let s = predict_s(&ChshSettings::canonical(), 400.0 / SQRT_2, beam, source)
        .map_err(|e| e.to_string())?;
    let a = within("|S|(r=ω/√2)", s.abs(), 2.0 * SQRT_2, 1e-9);
    let b = within("optimal_radius(400)", optimal_radius(beam), 282.84, 0.01);
    match (a, b) {
        (Ok(a), Ok(b)) => Ok(format!("{a}; {b}")),
        (a, b) => Err(format!(
            "{}; {}",
            a.unwrap_or_else(|e| e),
            b.unwrap_or_else(|e| e)
        )),
    }
}

fn extrema_values() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let r_b = rng.random_range(10.0..1000.0);
        let omega = rng.random_range(50.0..1000.0);
        let delta = rng.random_range(-PI..PI);
        let theta_b = rng.random_range(-PI..PI);
        let alpha_sq = rng.random_range(0.05..0.5);
        let beam = BeamGeometry::new(omega).map_err(|e| e.to_string())?;
        let source = SourceState::new(alpha_sq, delta).map_err(|e| e.to_string())?;
        let pose_b = HologramPose::new(r_b, theta_b).map_err(|e| e.to_string())?;
        let at_max = HologramPose::new(r_b, delta + theta_b).map_err(|e| e.to_string())?;
        let at_min = HologramPose::new(omega * omega / (2.0 * r_b), PI + delta + theta_b)
            .map_err(|e| e.to_string())?;
        let p_max = coincidence_probability(at_max, pose_b, source, beam);
        let p_min = coincidence_probability(at_min, pose_b, source, beam);
        worst = worst.max((p_max - alpha_sq).abs()).max(p_min.abs());
    }
    let msg = format!("worst deviation {worst:.2e} over 1000 draws");
    if worst <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let beam = BeamGeometry::new(rng.random_range(10.0..2000.0)).map_err(|e| e.to_string())?;
        let source = SourceState::new(rng.random_range(0.0..0.5), rng.random_range(-PI..PI))
            .map_err(|e| e.to_string())?;
        let a = HologramPose::new(rng.random_range(0.0..2000.0), rng.random_range(-PI..PI))
            .map_err(|e| e.to_string())?;
        let b = HologramPose::new(rng.random_range(0.0..2000.0), rng.random_range(-PI..PI))
            .map_err(|e| e.to_string())?;
        let closed = coincidence_probability(a, b, source, beam);
        let direct = coincidence_probability_oracle(a, b, source, beam);
        worst = worst.max((closed - direct).abs());
    }
    let msg = format!("worst |closed − inner product| {worst:.2e} over 10⁴ draws");
    if worst <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn distance_and_duality() -> Outcome {
    let beam = BeamGeometry::new(400.0).map_err(|e| e.to_string())?;
    let d = min_max_distance(200.0, beam).map_err(|e| e.to_string())?;
    if d != 600.0 {
        return Err(format!("min_max_distance(200, 400) = {d}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let beam = BeamGeometry::new(rng.random_range(50.0..1000.0)).map_err(|e| e.to_string())?;
        let r = rng.random_range(1.0..2000.0);
        let dual = beam.omega().powi(2) / (2.0 * r);
        let a = min_max_distance(r, beam).map_err(|e| e.to_string())?;
        let b = min_max_distance(dual, beam).map_err(|e| e.to_string())?;
        worst = worst.max((a - b).abs() / a);
    }
    let msg = format!("d(200) = 600 exactly; worst relative duality gap {worst:.2e}");
    if worst <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn check_fit(fit: &GeometryFit) -> Outcome {
    let c = fit.chosen_candidate().ok_or("no candidate chosen")?;
    let theta_b = fit.theta_b.ok_or("θ_B unresolved")?;
    let delta = fit.delta.ok_or("δ unresolved")?;
    let msg = format!(
        "r_B={:.1} ω={:.1} θ_B={:.3} δ={:.3} axis=({:.1}, {:.1})",
        c.r_b, c.omega, theta_b, delta, c.axis_xy[0], c.axis_xy[1]
    );
    let ok = (c.r_b - 200.0).abs() <= 20.0
        && (c.omega - 400.0).abs() <= 40.0
        && angle_diff(theta_b, -FRAC_PI_2).abs() <= 0.15
        && angle_diff(delta, PI).abs() <= 0.15
        && (c.axis_xy[0] + 50.0).abs() <= 75.0
        && c.axis_xy[1].abs() <= 75.0;
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

const AUX_SHIFT: [f64; 2] = [0.0, 200.0];

fn noiseless_round_trip() -> Outcome {
    timed(Duration::from_secs(30), || {
        let config = ExperimentConfig::reference_scenario();
        let grid = ScanGrid::new(-975.0, -975.0, 150.0, 14, 14).map_err(|e| e.to_string())?;
        let map = ScanMap::noiseless(&analytic_map(&config, &grid), REFERENCE_DWELL_S)
            .map_err(|e| e.to_string())?;
        let aux = ScanMap::noiseless(
            &analytic_map(&config.with_b_shift(AUX_SHIFT), &grid),
            REFERENCE_DWELL_S,
        )
        .map_err(|e| e.to_string())?;
        let fit = estimate_axis(
            &map,
            &config.profile,
            Some(AuxScan {
                map: &aux,
                shift: AUX_SHIFT,
            }),
            &EstimatorOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        check_fit(&fit)
    })
}

fn noisy_robustness() -> Outcome {
    let grid = ScanGrid::reference_default();
    let mut hits = 0;
    let mut misses = Vec::new();
    for run in 0..50u64 {
        let mut config = ExperimentConfig::reference_scenario();
        config.seed = 1000 + run;
        let mut aux_config = config.with_b_shift(AUX_SHIFT);
        aux_config.seed = 5000 + run;
        let outcome = simulate_scan(&config, &grid, REFERENCE_DWELL_S)
            .and_then(|map| {
                let aux = simulate_scan(&aux_config, &grid, REFERENCE_DWELL_S)?;
                estimate_axis(
                    &map,
                    &config.profile,
                    Some(AuxScan {
                        map: &aux,
                        shift: AUX_SHIFT,
                    }),
                    &EstimatorOptions::default(),
                )
            })
            .map_err(|e| e.to_string())
            .and_then(|fit| {
                fit.chosen_candidate()
                    .cloned()
                    .ok_or_else(|| "no candidate chosen".to_string())
            });
        match outcome {
            Ok(c) if (c.r_b - 200.0).abs() <= 20.0 && (c.omega - 400.0).abs() <= 40.0 => hits += 1,
            Ok(c) => misses.push(format!(
                "seed {}: r_B={:.0} ω={:.0}",
                config.seed, c.r_b, c.omega
            )),
            Err(e) => misses.push(format!("seed {}: {e}", config.seed)),
        }
    }
    let msg = format!(
        "{hits}/50 runs within tolerance{}",
        if misses.is_empty() {
            String::new()
        } else {
            format!(" [{}]", misses.join("; "))
        }
    );
    if hits >= 45 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism() -> Outcome {
    let run = || -> std::result::Result<(String, Vec<u8>), String> {
        let config = ExperimentConfig::reference_scenario();
        let map = simulate_scan(&config, &ScanGrid::reference_default(), REFERENCE_DWELL_S)
            .map_err(|e| e.to_string())?;
        let quads = simulate_chsh_counts(
            &ChshSettings::canonical(),
            200.0,
            config.beam,
            config.source,
            100.0,
            5.0,
            config.seed,
        )
        .map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        chsh::write_quads(&mut buf, &quads).map_err(|e| e.to_string())?;
        Ok((map.to_csv_string().map_err(|e| e.to_string())?, buf))
    };
    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?
            .install(run)
    };
    let first = run()?;
    let second = run()?;
    let single = in_pool(1)?;
    let quad = in_pool(4)?;
    if first == second && first == single && first == quad {
        Ok(format!(
            "{} map bytes and {} quad bytes identical over 2 runs and 1/4 threads",
            first.0.len(),
            first.1.len()
        ))
    } else {
        Err("outputs differ between runs or thread counts".into())
    }
}

fn time_reversal() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let beam = BeamGeometry::new(rng.random_range(10.0..2000.0)).map_err(|e| e.to_string())?;
        let pose = HologramPose::new(rng.random_range(0.0..3000.0), rng.random_range(-PI..PI))
            .map_err(|e| e.to_string())?;
        let reversed = hologram_output_state(pose, beam).time_reverse();
        let factor = reversed
            .global_phase_to(&basis_minus(pose, beam), 1e-12)
            .ok_or_else(|| {
                format!(
                    "not proportional at r={:.1} θ={:.3}",
                    pose.r(),
                    pose.theta()
                )
            })?;
        worst = worst.max((factor.norm() - 1.0).abs());
    }
    let msg = format!("proportional over 1000 poses, worst |factor| − 1 = {worst:.2e}");
    if worst <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let checks: [Check; 10] = [
        ("measured quads S value via cli", measured_quads_via_cli),
        ("model S prediction at r=200", model_prediction),
        ("tsirelson point and optimal radius", tsirelson_point),
        ("closed-form extrema", extrema_values),
        ("closed form vs inner products", oracle_equivalence),
        ("max-min distance and duality", distance_and_duality),
        ("noiseless round-trip estimation", noiseless_round_trip),
        ("noisy round-trip robustness", noisy_robustness),
        ("determinism", determinism),
        ("time reversal", time_reversal),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        match check() {
            Ok(msg) => println!("PASS {:>2} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}

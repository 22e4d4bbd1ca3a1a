use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use lgaxis_core::chsh::{read_quads, write_quads};
use lgaxis_core::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

#[test]
fn table1_fixture_gives_the_measured_s_value() {
    let records = read_quads(BufReader::new(
        File::open(fixture("table1_quads.csv")).unwrap(),
    ))
    .unwrap();
    assert_eq!(records.len(), 4);
    assert_eq!(records[0].quad.c, 53);
    assert_eq!(records[3].quad.c_perp_perp, 26);
    let eval = evaluate_records(&records, Some(&ChshSettings::canonical())).unwrap();
    assert!((eval.s.abs() - 2.127).abs() < 1e-3, "S = {}", eval.s);
    assert!((eval.correlations.ab + 707.0 / 933.0).abs() < 1e-12);
    // Inferring the settings from row order gives the same result.
    let inferred = evaluate_records(&records, None).unwrap();
    assert_eq!(inferred.s, eval.s);
}

#[test]
fn quads_in_degrees_read_like_radians() {
    let text = "theta_A,theta_B,c,c_ab_perp,c_a_perp_b,c_perp_perp,accumulation_s\n\
                -45deg,-90deg,53,371,449,60,5\n";
    let rec = &read_quads(text.as_bytes()).unwrap()[0];
    assert!((rec.theta_a + FRAC_PI_4).abs() < 1e-15 && (rec.theta_b + FRAC_PI_2).abs() < 1e-15);
}

#[test]
fn quad_files_round_trip() {
    let records = simulate_chsh_counts(
        &ChshSettings::canonical(),
        200.0,
        BeamGeometry::new(400.0).unwrap(),
        SourceState::maximal(0.0).unwrap(),
        100.0,
        5.0,
        11,
    )
    .unwrap();
    let mut buf = Vec::new();
    write_quads(&mut buf, &records).unwrap();
    let back = read_quads(buf.as_slice()).unwrap();
    assert_eq!(back.as_slice(), records.as_slice());
}

#[test]
fn scan_maps_round_trip_through_files() {
    let config = ExperimentConfig::reference_scenario();
    let grid = ScanGrid::reference_default();
    let map = simulate_scan(&config, &grid, REFERENCE_DWELL_S).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let csv_path = dir.path().join("scan.csv");
    map.write_csv(File::create(&csv_path).unwrap()).unwrap();
    let from_csv = ScanMap::read_csv(File::open(&csv_path).unwrap()).unwrap();
    assert_eq!(from_csv, map);
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 197);
    assert!(text.contains("# seed=20061208"));

    let json_path = dir.path().join("scan.json");
    std::fs::write(&json_path, map.to_json().unwrap()).unwrap();
    assert_eq!(
        ScanMap::from_json(&std::fs::read_to_string(&json_path).unwrap()).unwrap(),
        map
    );

    let rates = analytic_map(&config, &grid);
    let back = RateMap::read_csv(rates.to_csv_string().unwrap().as_bytes()).unwrap();
    assert_eq!(back, rates);
}

#[test]
fn malformed_maps_are_rejected() {
    let grid = ScanGrid::new(0.0, 0.0, 10.0, 2, 2).unwrap();
    let good = ScanMap::new(grid, 1.0, vec![1, 2, 3, 4])
        .unwrap()
        .to_csv_string()
        .unwrap();
    let missing_row: String = good
        .lines()
        .take(good.lines().count() - 1)
        .map(|l| format!("{l}\n"))
        .collect();
    assert!(ScanMap::read_csv(missing_row.as_bytes())
        .unwrap_err()
        .is_validation());
    let shifted = good.replace("10,10,4", "12,10,4");
    assert!(ScanMap::read_csv(shifted.as_bytes())
        .unwrap_err()
        .is_validation());
}

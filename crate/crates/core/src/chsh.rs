//! CHSH correlations and S-values, from measured count quads or from the
//! angle-resolved coincidence model at equal radii `r_A = r_B = r`.
//!
//! Each analyzer setting `θ` has an orthogonal partner channel `θ⊥ = θ + π`,
//! so one correlation needs four coincidence counts:
//!
//! ```text
//! E(θA, θB) = (C(θA,θB) + C(θA⊥,θB⊥) − C(θA⊥,θB) − C(θA,θB⊥)) / (sum of all four)
//! S = E(θA,θB) − E(θA',θB) + E(θA,θB') + E(θA',θB')
//! ```

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::angle::{deserialize_angle, normalize_angle};
use crate::error::{Error, Result};
use crate::lg::{BeamGeometry, SourceState};
use crate::sampling;

const ANGLE_MATCH_TOL: f64 = 1e-6;

/// The four analyzer angles, normalized to (−π, π].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub theta_a: f64,
    pub theta_a_prime: f64,
    pub theta_b: f64,
    pub theta_b_prime: f64,
}

impl ChshSettings {
    pub fn new(theta_a: f64, theta_a_prime: f64, theta_b: f64, theta_b_prime: f64) -> Self {
        Self {
            theta_a: normalize_angle(theta_a),
            theta_a_prime: normalize_angle(theta_a_prime),
            theta_b: normalize_angle(theta_b),
            theta_b_prime: normalize_angle(theta_b_prime),
        }
    }

    /// θA = −π/4, θA' = π/4, θB = −π/2, θB' = 0.
    pub fn canonical() -> Self {
        Self::new(-FRAC_PI_4, FRAC_PI_4, -FRAC_PI_2, 0.0)
    }

    /// The four `(θA, θB)` pairs in measurement-table order:
    /// `(A,B), (A,B'), (A',B), (A',B')`.
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.theta_a, self.theta_b),
            (self.theta_a, self.theta_b_prime),
            (self.theta_a_prime, self.theta_b),
            (self.theta_a_prime, self.theta_b_prime),
        ]
    }

    /// Every setting shifted by the same angle.
    pub fn rotated(&self, by: f64) -> Self {
        Self::new(
            self.theta_a + by,
            self.theta_a_prime + by,
            self.theta_b + by,
            self.theta_b_prime + by,
        )
    }
}

/// Coincidence counts for one `(θA, θB)` setting pair and its ⊥ partners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountQuad {
    /// C(θA, θB)
    pub c: u64,
    /// C(θA, θB⊥)
    pub c_ab_perp: u64,
    /// C(θA⊥, θB)
    pub c_a_perp_b: u64,
    /// C(θA⊥, θB⊥)
    pub c_perp_perp: u64,
    pub accumulation_s: f64,
}

impl CountQuad {
    pub fn total(&self) -> u64 {
        self.c + self.c_ab_perp + self.c_a_perp_b + self.c_perp_perp
    }

    fn same_minus_cross(&self) -> (f64, f64) {
        (
            (self.c + self.c_perp_perp) as f64,
            (self.c_ab_perp + self.c_a_perp_b) as f64,
        )
    }
}

/// One row of a count-quad file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadRecord {
    #[serde(rename = "theta_A", deserialize_with = "deserialize_angle")]
    pub theta_a: f64,
    #[serde(rename = "theta_B", deserialize_with = "deserialize_angle")]
    pub theta_b: f64,
    #[serde(flatten)]
    pub quad: CountQuad,
    /// Singles rates per arm; carried through, not used by any S-value.
    #[serde(rename = "singles_A", default, skip_serializing_if = "Option::is_none")]
    pub singles_a: Option<u64>,
    #[serde(rename = "singles_B", default, skip_serializing_if = "Option::is_none")]
    pub singles_b: Option<u64>,
}

impl QuadRecord {
    pub fn new(theta_a: f64, theta_b: f64, quad: CountQuad) -> Self {
        Self {
            theta_a: normalize_angle(theta_a),
            theta_b: normalize_angle(theta_b),
            quad,
            singles_a: None,
            singles_b: None,
        }
    }
}

/// Correlations for the four setting pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSet {
    /// E(θA, θB)
    pub ab: f64,
    /// E(θA', θB)
    pub a_prime_b: f64,
    /// E(θA, θB')
    pub a_b_prime: f64,
    /// E(θA', θB')
    pub a_prime_b_prime: f64,
}

impl CorrelationSet {
    pub fn values(&self) -> [f64; 4] {
        [
            self.ab,
            self.a_prime_b,
            self.a_b_prime,
            self.a_prime_b_prime,
        ]
    }
}

/// θ + π, normalized.
pub fn perp(theta: f64) -> f64 {
    normalize_angle(theta + PI)
}

pub fn correlation_from_counts(quad: &CountQuad) -> Result<f64> {
    let (same, cross) = quad.same_minus_cross();
    let total = same + cross;
    if total == 0.0 {
        return Err(Error::ZeroTotal {
            theta_a: f64::NAN,
            theta_b: f64::NAN,
        });
    }
    Ok((same - cross) / total)
}

pub fn s_value(e: &CorrelationSet) -> f64 {
    e.ab - e.a_prime_b + e.a_b_prime + e.a_prime_b_prime
}

/// Angle-resolved coincidence probability with both dislocations at radius `r`.
///
/// Same convention as [`crate::forward::coincidence_probability`]: the phase
/// enters as `cos(δ − θA + θB)`.
pub fn angle_coincidence_probability(
    theta_a: f64,
    theta_b: f64,
    r: f64,
    beam: BeamGeometry,
    source: SourceState,
) -> f64 {
    let (r2, w2) = (r * r, beam.omega() * beam.omega());
    let phase = source.delta() - theta_a + theta_b;
    let num = 4.0 * r2 * r2 + w2 * w2 + 4.0 * r2 * w2 * phase.cos();
    (source.alpha_sq() * num / (2.0 * r2 + w2).powi(2)).max(0.0)
}

/// Fringe visibility `4r²ω² / (4r⁴ + ω⁴)` at radius `r`.
pub fn visibility(r: f64, beam: BeamGeometry) -> f64 {
    let (r2, w2) = (r * r, beam.omega() * beam.omega());
    4.0 * r2 * w2 / (4.0 * r2 * r2 + w2 * w2)
}

/// Model correlation `E = v·cos(δ − θA + θB)` for one setting pair.
pub fn predict_correlation(
    theta_a: f64,
    theta_b: f64,
    r: f64,
    beam: BeamGeometry,
    source: SourceState,
) -> f64 {
    visibility(r, beam) * (source.delta() - theta_a + theta_b).cos()
}

pub fn predict_correlations(
    settings: &ChshSettings,
    r: f64,
    beam: BeamGeometry,
    source: SourceState,
) -> CorrelationSet {
    let e = |a, b| predict_correlation(a, b, r, beam, source);
    CorrelationSet {
        ab: e(settings.theta_a, settings.theta_b),
        a_prime_b: e(settings.theta_a_prime, settings.theta_b),
        a_b_prime: e(settings.theta_a, settings.theta_b_prime),
        a_prime_b_prime: e(settings.theta_a_prime, settings.theta_b_prime),
    }
}

/// Model S-value at radius `r`.
pub fn predict_s(
    settings: &ChshSettings,
    r: f64,
    beam: BeamGeometry,
    source: SourceState,
) -> Result<f64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::invalid(
            "r",
            format!("must be finite and ≥ 0, got {r}"),
        ));
    }
    Ok(s_value(&predict_correlations(settings, r, beam, source)))
}

/// Radius of unit visibility, `ω/√2`.
pub fn optimal_radius(beam: BeamGeometry) -> f64 {
    beam.omega() * FRAC_1_SQRT_2
}

/// Poisson-sampled count quads for the four setting pairs, in table order.
///
/// Channel `j` of pair `k` draws from stream `4k + j` of `seed`.
pub fn simulate_chsh_counts(
    settings: &ChshSettings,
    r: f64,
    beam: BeamGeometry,
    source: SourceState,
    peak_rate: f64,
    accumulation_s: f64,
    seed: u64,
) -> Result<[QuadRecord; 4]> {
    if !(accumulation_s.is_finite() && accumulation_s > 0.0) {
        return Err(Error::invalid(
            "accumulation_s",
            format!("must be > 0, got {accumulation_s}"),
        ));
    }
    if !(peak_rate.is_finite() && peak_rate > 0.0) {
        return Err(Error::invalid(
            "peak_rate",
            format!("must be > 0, got {peak_rate}"),
        ));
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::invalid(
            "r",
            format!("must be finite and ≥ 0, got {r}"),
        ));
    }
    let scale = peak_rate * accumulation_s / source.alpha_sq();
    let draw = |k: usize, j: usize, a: f64, b: f64| {
        let mean = scale * angle_coincidence_probability(a, b, r, beam, source);
        sampling::poisson_at(seed, (4 * k + j) as u64, mean)
    };
    let pairs = settings.pairs();
    let out = std::array::from_fn(|k| {
        let (a, b) = pairs[k];
        let quad = CountQuad {
            c: draw(k, 0, a, b),
            c_ab_perp: draw(k, 1, a, perp(b)),
            c_a_perp_b: draw(k, 2, perp(a), b),
            c_perp_perp: draw(k, 3, perp(a), perp(b)),
            accumulation_s,
        };
        QuadRecord::new(a, b, quad)
    });
    Ok(out)
}

/// Correlations and S from measured quads.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChshEvaluation {
    pub settings: ChshSettings,
    pub correlations: CorrelationSet,
    pub s: f64,
    /// One-standard-deviation Poisson uncertainty of S.
    pub s_sigma: f64,
}

/// Matches `records` to the four setting pairs and evaluates S.
///
/// Without explicit `settings`, the first distinct θA (θB) in file order is
/// taken as θA (θB) and the second as θA' (θB').
pub fn evaluate_records(
    records: &[QuadRecord],
    settings: Option<&ChshSettings>,
) -> Result<ChshEvaluation> {
    let settings = match settings {
        Some(s) => *s,
        None => infer_settings(records)?,
    };
    let find = |a: f64, b: f64| -> Result<&QuadRecord> {
        let mut hits = records.iter().filter(|r| {
            normalize_angle(r.theta_a - a).abs() < ANGLE_MATCH_TOL
                && normalize_angle(r.theta_b - b).abs() < ANGLE_MATCH_TOL
        });
        let first = hits.next().ok_or_else(|| {
            Error::invalid(
                "records",
                format!("no count quad for setting pair (θA={a:.6}, θB={b:.6})"),
            )
        })?;
        if hits.next().is_some() {
            return Err(Error::invalid(
                "records",
                format!("duplicate count quads for (θA={a:.6}, θB={b:.6})"),
            ));
        }
        Ok(first)
    };
    let corr = |a: f64, b: f64| -> Result<(f64, f64)> {
        let rec = find(a, b)?;
        let e = correlation_from_counts(&rec.quad).map_err(|_| Error::ZeroTotal {
            theta_a: rec.theta_a,
            theta_b: rec.theta_b,
        })?;
        let (same, cross) = rec.quad.same_minus_cross();
        let total = same + cross;
        Ok((e, 4.0 * same * cross / total.powi(3)))
    };
    let s_ = &settings;
    let (ab, v1) = corr(s_.theta_a, s_.theta_b)?;
    let (apb, v2) = corr(s_.theta_a_prime, s_.theta_b)?;
    let (abp, v3) = corr(s_.theta_a, s_.theta_b_prime)?;
    let (apbp, v4) = corr(s_.theta_a_prime, s_.theta_b_prime)?;
    let correlations = CorrelationSet {
        ab,
        a_prime_b: apb,
        a_b_prime: abp,
        a_prime_b_prime: apbp,
    };
    Ok(ChshEvaluation {
        settings,
        correlations,
        s: s_value(&correlations),
        s_sigma: (v1 + v2 + v3 + v4).sqrt(),
    })
}

fn infer_settings(records: &[QuadRecord]) -> Result<ChshSettings> {
    let distinct = |pick: fn(&QuadRecord) -> f64| {
        let mut seen: Vec<f64> = Vec::new();
        for r in records {
            let t = pick(r);
            if !seen
                .iter()
                .any(|s| normalize_angle(s - t).abs() < ANGLE_MATCH_TOL)
            {
                seen.push(t);
            }
        }
        seen
    };
    let a = distinct(|r| r.theta_a);
    let b = distinct(|r| r.theta_b);
    if a.len() != 2 || b.len() != 2 || records.len() != 4 {
        return Err(Error::invalid(
            "records",
            format!(
                "need 4 quads over 2 θA × 2 θB settings, got {} quads with {} θA and {} θB values",
                records.len(),
                a.len(),
                b.len()
            ),
        ));
    }
    Ok(ChshSettings::new(a[0], a[1], b[0], b[1]))
}

/// Reads a count-quad CSV
/// (`theta_A,theta_B,c,c_ab_perp,c_a_perp_b,c_perp_perp,accumulation_s`,
/// optional `singles_A,singles_B`). Angles are radians or carry a `deg` suffix.
pub fn read_quads<R: Read>(input: R) -> Result<Vec<QuadRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<QuadRecord>().enumerate() {
        let rec = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(i + 2),
            reason: e.to_string(),
        })?;
        if !(rec.quad.accumulation_s.is_finite() && rec.quad.accumulation_s > 0.0) {
            return Err(Error::invalid(
                "accumulation_s",
                format!("row {} must have accumulation_s > 0", i + 1),
            ));
        }
        out.push(QuadRecord {
            theta_a: normalize_angle(rec.theta_a),
            theta_b: normalize_angle(rec.theta_b),
            ..rec
        });
    }
    Ok(out)
}

pub fn write_quads<W: Write>(out: W, records: &[QuadRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let with_singles = records
        .iter()
        .any(|r| r.singles_a.is_some() || r.singles_b.is_some());
    let mut header = vec![
        "theta_A",
        "theta_B",
        "c",
        "c_ab_perp",
        "c_a_perp_b",
        "c_perp_perp",
        "accumulation_s",
    ];
    if with_singles {
        header.extend(["singles_A", "singles_B"]);
    }
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    writer.write_record(&header).map_err(io)?;
    for r in records {
        let q = &r.quad;
        let mut row = vec![
            r.theta_a.to_string(),
            r.theta_b.to_string(),
            q.c.to_string(),
            q.c_ab_perp.to_string(),
            q.c_a_perp_b.to_string(),
            q.c_perp_perp.to_string(),
            q.accumulation_s.to_string(),
        ];
        if with_singles {
            row.push(r.singles_a.map(|v| v.to_string()).unwrap_or_default());
            row.push(r.singles_b.map(|v| v.to_string()).unwrap_or_default());
        }
        writer.write_record(&row).map_err(io)?;
    }
    writer.flush()?;
    Ok(())
}

//! Angle helpers. Every angle stored by this crate lives in (−π, π].

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Deserializer};

use crate::error::{Error, Result};

/// Wraps `theta` into (−π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

/// Smallest signed difference `a − b`, wrapped into (−π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}

/// Parses an angle written in radians, or in degrees with a `deg` suffix
/// (`"-90deg"`, `"45 deg"`). The result is not normalized.
pub fn parse_angle(text: &str) -> Result<f64> {
    let s = text.trim();
    let (number, scale) = match s.strip_suffix("deg") {
        Some(rest) => (rest.trim_end(), PI / 180.0),
        None => (s, 1.0),
    };
    number
        .parse::<f64>()
        .map(|v| v * scale)
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::invalid("angle", format!("cannot parse {text:?} as an angle")))
}

/// Serde helper accepting either a bare number (radians) or a string
/// understood by [`parse_angle`].
pub fn deserialize_angle<'de, D>(deserializer: D) -> std::result::Result<f64, D::Error>
where
    D: Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }
    match Raw::deserialize(deserializer)? {
        Raw::Number(v) => Ok(v),
        Raw::Text(s) => parse_angle(&s).map_err(serde::de::Error::custom),
    }
}

/// Optional variant of [`deserialize_angle`].
pub fn deserialize_opt_angle<'de, D>(deserializer: D) -> std::result::Result<Option<f64>, D::Error>
where
    D: Deserializer<'de>,
{
    #[derive(Deserialize)]
    struct Wrap(#[serde(deserialize_with = "deserialize_angle")] f64);
    Option::<Wrap>::deserialize(deserializer).map(|w| w.map(|Wrap(v)| v))
}

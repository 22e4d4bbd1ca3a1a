//! Single-photon states over Laguerre-Gaussian angular-momentum indices and
//! the measurement-basis states selected by a dislocated fork hologram
//! followed by a single-mode fiber.
//!
//! Only the azimuthal index `m` is tracked. A hologram whose dislocation sits
//! at polar offset `(r, θ)` from the beam axis, with beam radius `ω`, maps a
//! Gaussian input onto
//!
//! ```text
//! e^{i(θ+π)} √(2r²/(2r²+ω²)) |0⟩ + √(ω²/(2r²+ω²)) |1⟩
//! ```
//!
//! and, by time reversal, the states that couple into the fiber are
//!
//! ```text
//! |−(r,θ)⟩ = e^{−iθ} √(2r²/(2r²+ω²)) |0⟩ + √(ω²/(2r²+ω²)) |1⟩    (arm A, −1st order)
//! |+(r,θ)⟩ = e^{+iθ} √(2r²/(2r²+ω²)) |0⟩ + √(ω²/(2r²+ω²)) |−1⟩   (arm B, +1st order)
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angle::normalize_angle;
use crate::error::{Error, Result};

/// Largest |m| this crate works with.
pub const MAX_ABS_INDEX: i32 = 2;

/// Azimuthal (orbital angular momentum) index of an LG mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LgIndex(i32);

impl LgIndex {
    pub fn new(m: i32) -> Result<Self> {
        if m.abs() > MAX_ABS_INDEX {
            return Err(Error::invalid(
                "m",
                format!("|m| must be at most {MAX_ABS_INDEX}, got {m}"),
            ));
        }
        Ok(Self(m))
    }

    pub fn value(self) -> i32 {
        self.0
    }

    /// (−1)^m
    fn parity_sign(self) -> f64 {
        if self.0.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Sparse complex superposition `Σ c_m |m⟩`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LgKet {
    amplitudes: BTreeMap<LgIndex, Complex64>,
}

impl LgKet {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The pure mode `|m⟩`.
    pub fn mode(m: i32) -> Result<Self> {
        Self::from_amplitudes([(m, Complex64::new(1.0, 0.0))])
    }

    /// Builds a ket from `(m, amplitude)` pairs. Repeated indices add up.
    pub fn from_amplitudes<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i32, Complex64)>,
    {
        let mut amplitudes = BTreeMap::new();
        for (m, c) in pairs {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::invalid("amplitude", "amplitudes must be finite"));
            }
            *amplitudes
                .entry(LgIndex::new(m)?)
                .or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let ket = Self { amplitudes };
        if ket.norm_sqr() > 1.0 + 1e-12 {
            return Err(Error::invalid(
                "amplitudes",
                format!("squared-amplitude sum {} exceeds 1", ket.norm_sqr()),
            ));
        }
        Ok(ket)
    }

    /// Amplitude of `|m⟩`, zero when `m` is outside the support.
    pub fn amplitude(&self, m: i32) -> Complex64 {
        LgIndex::new(m)
            .ok()
            .and_then(|idx| self.amplitudes.get(&idx).copied())
            .unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.amplitudes.iter().map(|(m, c)| (m.value(), *c))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|c| c.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &LgKet) -> Complex64 {
        self.amplitudes
            .iter()
            .filter_map(|(m, a)| other.amplitudes.get(m).map(|b| a.conj() * b))
            .sum()
    }

    /// Time inversion: `c_m |m⟩ ↦ conj(c_m) (−1)^m |m⟩`.
    pub fn time_reverse(&self) -> LgKet {
        LgKet {
            amplitudes: self
                .amplitudes
                .iter()
                .map(|(m, c)| (*m, c.conj() * m.parity_sign()))
                .collect(),
        }
    }

    /// If `self = e^{iφ}·other` to within `tol` on every amplitude, returns
    /// `e^{iφ}`.
    pub fn global_phase_to(&self, other: &LgKet, tol: f64) -> Option<Complex64> {
        let overlap = other.inner(self);
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else if self.norm_sqr() <= tol * tol && other.norm_sqr() <= tol * tol {
            Complex64::new(1.0, 0.0)
        } else {
            return None;
        };
        let indices = self.amplitudes.keys().chain(other.amplitudes.keys());
        let worst = indices
            .map(|m| (self.amplitude(m.value()) - phase * other.amplitude(m.value())).norm())
            .fold(0.0, f64::max);
        (worst <= tol).then_some(phase)
    }
}

/// Polar position `(r, θ)` of a hologram dislocation relative to the beam
/// axis. `r` in micrometers, `θ` normalized into (−π, π].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr")]
pub struct HologramPose {
    r: f64,
    theta: f64,
}

impl HologramPose {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::invalid(
                "r",
                format!("must be finite and ≥ 0, got {r}"),
            ));
        }
        if !theta.is_finite() {
            return Err(Error::invalid("theta", "must be finite"));
        }
        Ok(Self {
            r,
            theta: normalize_angle(theta),
        })
    }

    /// Polar form of the Cartesian offset `(x, y)`. The angle of the origin is 0.
    pub fn from_offset(x: f64, y: f64) -> Self {
        let r = x.hypot(y);
        let theta = if r == 0.0 {
            0.0
        } else {
            normalize_angle(y.atan2(x))
        };
        Self { r, theta }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn to_offset(&self) -> [f64; 2] {
        [self.r * self.theta.cos(), self.r * self.theta.sin()]
    }

    /// Pose after displacing the dislocation by `(dx, dy)`.
    pub fn shifted(&self, shift: [f64; 2]) -> Self {
        let [x, y] = self.to_offset();
        Self::from_offset(x + shift[0], y + shift[1])
    }
}

/// Beam radius ω in micrometers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BeamRepr")]
pub struct BeamGeometry {
    omega: f64,
}

impl BeamGeometry {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::invalid(
                "omega",
                format!("beam radius must be finite and > 0, got {omega}"),
            ));
        }
        Ok(Self { omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `(√(2r²/(2r²+ω²)), √(ω²/(2r²+ω²)))`: magnitudes of the |0⟩ and |±1⟩
    /// components of a basis state at radius `r`.
    pub fn mixing(&self, r: f64) -> (f64, f64) {
        let w2 = self.omega * self.omega;
        let denom = 2.0 * r * r + w2;
        ((2.0 * r * r / denom).sqrt(), (w2 / denom).sqrt())
    }
}

/// Truncated two-photon source: two equal-weight terms `|α|²` with relative
/// phase `δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SourceRepr")]
pub struct SourceState {
    alpha_sq: f64,
    delta: f64,
}

impl SourceState {
    pub fn new(alpha_sq: f64, delta: f64) -> Result<Self> {
        if !(alpha_sq > 0.0 && alpha_sq <= 0.5) {
            return Err(Error::invalid(
                "alpha_sq",
                format!("must lie in (0, 0.5], got {alpha_sq}"),
            ));
        }
        if !delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        Ok(Self {
            alpha_sq,
            delta: normalize_angle(delta),
        })
    }

    /// Maximally entangled truncation, `|α|² = 1/2`.
    pub fn maximal(delta: f64) -> Result<Self> {
        Self::new(0.5, delta)
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha_sq
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

// Deserialization goes through the validating constructors.

#[derive(Deserialize)]
struct PoseRepr {
    r: f64,
    #[serde(deserialize_with = "crate::angle::deserialize_angle")]
    theta: f64,
}

impl TryFrom<PoseRepr> for HologramPose {
    type Error = Error;
    fn try_from(p: PoseRepr) -> Result<Self> {
        Self::new(p.r, p.theta)
    }
}

#[derive(Deserialize)]
struct BeamRepr {
    omega: f64,
}

impl TryFrom<BeamRepr> for BeamGeometry {
    type Error = Error;
    fn try_from(b: BeamRepr) -> Result<Self> {
        Self::new(b.omega)
    }
}

#[derive(Deserialize)]
struct SourceRepr {
    alpha_sq: f64,
    #[serde(deserialize_with = "crate::angle::deserialize_angle")]
    delta: f64,
}

impl TryFrom<SourceRepr> for SourceState {
    type Error = Error;
    fn try_from(s: SourceRepr) -> Result<Self> {
        Self::new(s.alpha_sq, s.delta)
    }
}

/// Measurement basis state of arm A, `|−(r,θ)⟩` over `{|0⟩, |1⟩}`.
pub fn basis_minus(pose: HologramPose, beam: BeamGeometry) -> LgKet {
    let (s, c) = beam.mixing(pose.r);
    two_mode(Complex64::from_polar(s, -pose.theta), 1, c)
}

/// Measurement basis state of arm B, `|+(r,θ)⟩` over `{|0⟩, |−1⟩}`.
pub fn basis_plus(pose: HologramPose, beam: BeamGeometry) -> LgKet {
    let (s, c) = beam.mixing(pose.r);
    two_mode(Complex64::from_polar(s, pose.theta), -1, c)
}

/// State produced from a Gaussian input by a hologram dislocated to `pose`.
pub fn hologram_output_state(pose: HologramPose, beam: BeamGeometry) -> LgKet {
    let (s, c) = beam.mixing(pose.r);
    two_mode(Complex64::from_polar(s, pose.theta + PI), 1, c)
}

/// `Σ conj(a_m) b_m`.
pub fn inner_product(a: &LgKet, b: &LgKet) -> Complex64 {
    a.inner(b)
}

pub fn time_reverse(ket: &LgKet) -> LgKet {
    ket.time_reverse()
}

fn two_mode(gaussian: Complex64, m: i32, vortex: f64) -> LgKet {
    let mut amplitudes = BTreeMap::new();
    amplitudes.insert(LgIndex(0), gaussian);
    amplitudes.insert(LgIndex(m), Complex64::new(vortex, 0.0));
    LgKet { amplitudes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    const TOL: f64 = 1e-12;

    fn beam() -> BeamGeometry {
        BeamGeometry::new(400.0).unwrap()
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < TOL
    }

    #[test]
    fn basis_minus_examples() {
        let k = basis_minus(HologramPose::new(0.0, 1.234).unwrap(), beam());
        assert_eq!(k.amplitude(0).norm(), 0.0);
        assert!(close(k.amplitude(1), Complex64::new(1.0, 0.0)));

        let k = basis_minus(
            HologramPose::new(400.0 * FRAC_1_SQRT_2, 0.0).unwrap(),
            beam(),
        );
        assert!(close(k.amplitude(0), Complex64::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(k.amplitude(1), Complex64::new(FRAC_1_SQRT_2, 0.0)));

        // 2r² = 8e4, ω² = 1.6e5 → weights 1/3 and 2/3
        let k = basis_minus(HologramPose::new(200.0, FRAC_PI_2).unwrap(), beam());
        assert!(close(
            k.amplitude(0),
            Complex64::from_polar((1.0f64 / 3.0).sqrt(), -FRAC_PI_2)
        ));
        assert!(close(
            k.amplitude(1),
            Complex64::new((2.0f64 / 3.0).sqrt(), 0.0)
        ));
    }

    #[test]
    fn basis_plus_examples() {
        let k = basis_plus(HologramPose::new(0.0, -2.0).unwrap(), beam());
        assert!(close(k.amplitude(-1), Complex64::new(1.0, 0.0)));
        assert_eq!(k.amplitude(0).norm(), 0.0);
        assert_eq!(k.amplitude(1).norm(), 0.0);

        let k = basis_plus(
            HologramPose::new(400.0 * FRAC_1_SQRT_2, 0.0).unwrap(),
            beam(),
        );
        assert!(close(k.amplitude(0), Complex64::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(k.amplitude(-1), Complex64::new(FRAC_1_SQRT_2, 0.0)));

        let k = basis_plus(HologramPose::new(200.0, -FRAC_PI_2).unwrap(), beam());
        assert!(close(
            k.amplitude(0),
            Complex64::from_polar((1.0f64 / 3.0).sqrt(), -FRAC_PI_2)
        ));
        assert!(close(
            k.amplitude(-1),
            Complex64::new((2.0f64 / 3.0).sqrt(), 0.0)
        ));
    }

    #[test]
    fn hologram_output_examples() {
        let k = hologram_output_state(HologramPose::new(0.0, 0.0).unwrap(), beam());
        assert!(close(k.amplitude(1), Complex64::new(1.0, 0.0)));
        assert_eq!(k.amplitude(0).norm(), 0.0);

        let k = hologram_output_state(HologramPose::new(1e6, 0.0).unwrap(), beam());
        assert!(k.amplitude(0).norm() >= 1.0 - 1e-6);

        let k = hologram_output_state(
            HologramPose::new(400.0 * FRAC_1_SQRT_2, FRAC_PI_4).unwrap(),
            beam(),
        );
        assert!(close(
            k.amplitude(0),
            Complex64::from_polar(FRAC_1_SQRT_2, FRAC_PI_4 + PI)
        ));
        assert!(close(k.amplitude(1), Complex64::new(FRAC_1_SQRT_2, 0.0)));
    }

    #[test]
    fn time_reverse_examples() {
        let zero = LgKet::mode(0).unwrap();
        assert_eq!(zero.time_reverse(), zero);

        let k = LgKet::from_amplitudes([(1, Complex64::from_polar(1.0, -FRAC_PI_3))]).unwrap();
        let expected = -Complex64::from_polar(1.0, FRAC_PI_3);
        assert!(close(k.time_reverse().amplitude(1), expected));
    }

    #[test]
    fn inner_product_examples() {
        let zero = LgKet::mode(0).unwrap();
        let one = LgKet::mode(1).unwrap();
        assert_eq!(inner_product(&zero, &one), Complex64::new(0.0, 0.0));
        assert!(close(inner_product(&one, &one), Complex64::new(1.0, 0.0)));
        let b = basis_minus(HologramPose::new(200.0, 0.0).unwrap(), beam());
        assert!(close(
            inner_product(&b, &zero),
            Complex64::new((1.0f64 / 3.0).sqrt(), 0.0)
        ));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(LgIndex::new(3).is_err());
        assert!(HologramPose::new(-1.0, 0.0).is_err());
        assert!(BeamGeometry::new(0.0).is_err());
        assert!(SourceState::new(0.6, 0.0).is_err());
        assert!(SourceState::new(0.0, 0.0).is_err());
        let too_big =
            LgKet::from_amplitudes([(0, Complex64::new(1.0, 0.0)), (1, Complex64::new(0.1, 0.0))]);
        assert!(too_big.is_err());
    }

    #[test]
    fn pose_angle_is_normalized() {
        let p = HologramPose::new(10.0, 3.0 * PI / 2.0).unwrap();
        assert!((p.theta() + FRAC_PI_2).abs() < 1e-12);
        let q = p.shifted([0.0, 10.0]);
        assert!(q.r() < 1e-12);
    }

    fn arb_pose() -> impl Strategy<Value = HologramPose> {
        (0.0f64..2000.0, -PI..PI).prop_map(|(r, t)| HologramPose::new(r, t).unwrap())
    }

    fn arb_beam() -> impl Strategy<Value = BeamGeometry> {
        (1.0f64..2000.0).prop_map(|w| BeamGeometry::new(w).unwrap())
    }

    fn arb_ket() -> impl Strategy<Value = LgKet> {
        proptest::collection::vec(proptest::option::of((-1.0f64..1.0, -1.0f64..1.0)), 5).prop_map(
            |v| {
                let raw: Vec<(i32, Complex64)> = v
                    .into_iter()
                    .zip(-2..=2)
                    .filter_map(|(c, m)| c.map(|(a, b)| (m, Complex64::new(a, b))))
                    .collect();
                let norm = raw.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
                let scale = if norm > 1.0 { 1.0 / norm } else { 1.0 };
                LgKet::from_amplitudes(raw.into_iter().map(|(m, c)| (m, c * scale))).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn basis_states_have_unit_norm(p in arb_pose(), b in arb_beam()) {
            prop_assert!((basis_minus(p, b).norm_sqr() - 1.0).abs() < 1e-12);
            prop_assert!((basis_plus(p, b).norm_sqr() - 1.0).abs() < 1e-12);
            prop_assert!((hologram_output_state(p, b).norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn time_reverse_is_involution(k in arb_ket()) {
            prop_assert_eq!(k.time_reverse().time_reverse(), k.clone());
            prop_assert!((k.time_reverse().norm_sqr() - k.norm_sqr()).abs() < 1e-15);
        }

        #[test]
        fn cauchy_schwarz(a in arb_ket(), b in arb_ket()) {
            prop_assert!(a.inner(&b).norm_sqr() <= a.norm_sqr() * b.norm_sqr() + 1e-15);
            let self_overlap = a.inner(&a);
            prop_assert!(self_overlap.im.abs() < 1e-15 && self_overlap.re >= 0.0);
        }

        #[test]
        fn reversed_output_matches_arm_a_basis(p in arb_pose(), b in arb_beam()) {
            let reversed = hologram_output_state(p, b).time_reverse();
            let phase = reversed.global_phase_to(&basis_minus(p, b), 1e-12);
            prop_assert!(phase.is_some());
            prop_assert!((phase.unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }
}

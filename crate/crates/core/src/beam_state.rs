//! Multimode Gaussian beam state and the first-order spatial encodings.
//!
//! Coherent amplitudes are stored relative to the carrier amplitude `√N`, so a
//! displacement `d` appears verbatim as `Re(c_1) = d/w` and a tilt `θ` as
//! `Im(c_1) = πwθ/λ`. Noise is Gaussian and mode-diagonal. Variances are in
//! shot-noise units (vacuum = 1) and squeeze angles are measured from the
//! carrier's amplitude quadrature.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, ensure_unit_interval, invalid, Error, Result};
use crate::hg_modes::Basis;

/// Index of the bright fundamental mode.
pub const CARRIER_MODE: usize = 0;
/// Index of the mode carrying displacement and tilt.
pub const SIGNAL_MODE: usize = 1;

/// Slack on the uncertainty product so that `(x dB, -x dB)` pairs pass after rounding.
const UNCERTAINTY_SLACK: f64 = 1e-12;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// Gaussian noise of one mode: squeezed and anti-squeezed variances and the
/// quadrature angle of the squeezed one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureNoise {
    v_minus: f64,
    v_plus: f64,
    squeeze_angle: f64,
}

impl QuadratureNoise {
    pub fn new(v_minus: f64, v_plus: f64, squeeze_angle: f64) -> Result<Self> {
        ensure_positive("v_minus", v_minus)?;
        ensure_positive("v_plus", v_plus)?;
        if !squeeze_angle.is_finite() {
            return Err(invalid("squeeze_angle", "must be finite"));
        }
        let product = v_minus * v_plus;
        if product < 1.0 - UNCERTAINTY_SLACK {
            return Err(Error::UncertaintyViolation { product });
        }
        Ok(Self {
            v_minus,
            v_plus,
            squeeze_angle,
        })
    }

    pub const fn vacuum() -> Self {
        Self {
            v_minus: 1.0,
            v_plus: 1.0,
            squeeze_angle: 0.0,
        }
    }

    pub fn from_db(v_minus_db: f64, v_plus_db: f64, squeeze_angle: f64) -> Result<Self> {
        if !v_minus_db.is_finite() || !v_plus_db.is_finite() {
            return Err(invalid("squeezing", "dB levels must be finite"));
        }
        Self::new(db_to_linear(v_minus_db), db_to_linear(v_plus_db), squeeze_angle)
    }

    /// Pure squeezed vacuum with `v_plus = 1/v_minus`.
    pub fn minimum_uncertainty(v_minus: f64, squeeze_angle: f64) -> Result<Self> {
        ensure_positive("v_minus", v_minus)?;
        Self::new(v_minus, 1.0 / v_minus, squeeze_angle)
    }

    pub fn v_minus(&self) -> f64 {
        self.v_minus
    }

    pub fn v_plus(&self) -> f64 {
        self.v_plus
    }

    pub fn squeeze_angle(&self) -> f64 {
        self.squeeze_angle
    }

    pub fn v_minus_db(&self) -> f64 {
        linear_to_db(self.v_minus)
    }

    pub fn v_plus_db(&self) -> f64 {
        linear_to_db(self.v_plus)
    }

    pub fn uncertainty_product(&self) -> f64 {
        self.v_minus * self.v_plus
    }

    pub fn is_vacuum(&self) -> bool {
        self.v_minus == 1.0 && self.v_plus == 1.0
    }

    /// Variance of the quadrature at angle `phi`:
    /// `v_minus·cos²(φ−θ) + v_plus·sin²(φ−θ)`.
    pub fn variance_at(&self, phi: f64) -> f64 {
        let s = (phi - self.squeeze_angle).sin();
        self.v_minus + (self.v_plus - self.v_minus) * s * s
    }
}

impl Default for QuadratureNoise {
    fn default() -> Self {
        Self::vacuum()
    }
}

/// Beam-splitter loss on a single variance: `V' = ηV + (1 − η)`.
pub fn attenuate_variance(variance: f64, eta: f64) -> Result<f64> {
    ensure_unit_interval("eta", eta)?;
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(invalid("variance", format!("must be finite and >= 0, got {variance}")));
    }
    // Written around the vacuum level so V = 1 maps to exactly 1.
    Ok(1.0 + eta * (variance - 1.0))
}

/// Transmission `eta` applied to both quadratures. Vacuum is a fixed point.
pub fn apply_loss(noise: &QuadratureNoise, eta: f64) -> Result<QuadratureNoise> {
    Ok(QuadratureNoise {
        v_minus: attenuate_variance(noise.v_minus, eta)?,
        v_plus: attenuate_variance(noise.v_plus, eta)?,
        squeeze_angle: noise.squeeze_angle,
    })
}

/// Applies a sequence of transmissions in order.
pub fn apply_loss_chain(noise: &QuadratureNoise, chain: &[f64]) -> Result<QuadratureNoise> {
    chain
        .iter()
        .try_fold(*noise, |acc, &eta| apply_loss(&acc, eta))
}

/// Bounds on `|c|` of a non-carrier mode for the first-order encoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingLimits {
    /// Above this a warning is logged; quadratic terms reach ~1%.
    pub warn: f64,
    /// Above this the encoding is rejected.
    pub reject: f64,
}

impl Default for EncodingLimits {
    fn default() -> Self {
        Self {
            warn: 1e-2,
            reject: 1e-1,
        }
    }
}

/// Photon number per interval, per-mode coherent amplitudes and per-mode noise.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    n_photons: f64,
    basis: Basis,
    coefficients: BTreeMap<usize, Complex64>,
    noise: BTreeMap<usize, QuadratureNoise>,
    limits: EncodingLimits,
}

impl BeamState {
    /// Unmodulated coherent carrier with vacuum noise in every mode.
    pub fn coherent(n_photons: f64, basis: Basis) -> Result<Self> {
        ensure_positive("n_photons", n_photons)?;
        Ok(Self {
            n_photons,
            basis,
            coefficients: BTreeMap::new(),
            noise: BTreeMap::new(),
            limits: EncodingLimits::default(),
        })
    }

    pub fn with_limits(mut self, limits: EncodingLimits) -> Result<Self> {
        ensure_positive("limits.warn", limits.warn)?;
        ensure_positive("limits.reject", limits.reject)?;
        if limits.warn > limits.reject {
            return Err(invalid("limits", "warn threshold exceeds reject threshold"));
        }
        self.limits = limits;
        Ok(self)
    }

    pub fn n_photons(&self) -> f64 {
        self.n_photons
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn limits(&self) -> EncodingLimits {
        self.limits
    }

    /// Amplitude relative to `√N`; the carrier is 1, unset modes are 0.
    pub fn coefficient(&self, mode: usize) -> Complex64 {
        if mode == CARRIER_MODE {
            Complex64::new(1.0, 0.0)
        } else {
            self.coefficients
                .get(&mode)
                .copied()
                .unwrap_or_default()
        }
    }

    /// Noise of `mode`; vacuum if never set.
    pub fn noise(&self, mode: usize) -> QuadratureNoise {
        self.noise.get(&mode).copied().unwrap_or_default()
    }

    /// Modes that carry a non-default coefficient or noise entry.
    pub fn modes(&self) -> impl Iterator<Item = usize> + '_ {
        let mut all: Vec<usize> = std::iter::once(CARRIER_MODE)
            .chain(self.coefficients.keys().copied())
            .chain(self.noise.keys().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all.into_iter()
    }

    /// Adds `delta` to a non-carrier mode, enforcing the first-order limits.
    pub fn add_to_mode(&self, mode: usize, delta: Complex64) -> Result<Self> {
        self.check_mode(mode)?;
        if mode == CARRIER_MODE {
            return Err(invalid("mode", "the carrier amplitude is fixed at 1"));
        }
        if !delta.is_finite() {
            return Err(invalid("modulation", "must be finite"));
        }
        let updated = self.coefficient(mode) + delta;
        let magnitude = updated.norm();
        if magnitude > self.limits.reject {
            return Err(Error::EncodingOutOfRange {
                magnitude,
                limit: self.limits.reject,
            });
        }
        if magnitude > self.limits.warn {
            log::warn!(
                "mode {mode} amplitude {magnitude:.3e} exceeds {:.1e}; first-order encoding is approximate",
                self.limits.warn
            );
        }
        let mut next = self.clone();
        next.coefficients.insert(mode, updated);
        Ok(next)
    }

    /// Transverse displacement `d` (m): `Re(c_1) += d/w`.
    pub fn encode_displacement(&self, d: f64) -> Result<Self> {
        self.add_to_mode(SIGNAL_MODE, Complex64::new(d / self.basis.waist(), 0.0))
    }

    /// Tilt `θ` (rad): `Im(c_1) += πwθ/λ`.
    pub fn encode_tilt(&self, theta: f64) -> Result<Self> {
        let k = PI * self.basis.waist() / self.basis.wavelength();
        self.add_to_mode(SIGNAL_MODE, Complex64::new(0.0, k * theta))
    }

    /// Mixed displacement and tilt written by a single actuator.
    ///
    /// `signal_power_db` is the total added signal power relative to the quantum
    /// noise limit, i.e. the optimal-phase homodyne power `4N|Δc|²` in
    /// shot-noise units. A fraction `tilt_fraction` of it goes on `Im(c_1)` and
    /// the rest on `Re(c_1)`. `-∞` dB adds nothing.
    pub fn pzt_modulation(&self, signal_power_db: f64, tilt_fraction: f64) -> Result<Self> {
        ensure_unit_interval("tilt_fraction", tilt_fraction)?;
        if signal_power_db.is_nan() || signal_power_db == f64::INFINITY {
            return Err(invalid("signal_power_db", "must be finite or -inf"));
        }
        self.pzt_modulation_linear(db_to_linear(signal_power_db), tilt_fraction)
    }

    /// Same as [`BeamState::pzt_modulation`] with a linear power in shot-noise units.
    pub fn pzt_modulation_linear(&self, signal_power: f64, tilt_fraction: f64) -> Result<Self> {
        ensure_unit_interval("tilt_fraction", tilt_fraction)?;
        if !(signal_power.is_finite() && signal_power >= 0.0) {
            return Err(invalid(
                "signal_power",
                format!("must be finite and >= 0, got {signal_power}"),
            ));
        }
        let per_unit = signal_power / (4.0 * self.n_photons);
        let delta = Complex64::new(
            ((1.0 - tilt_fraction) * per_unit).sqrt(),
            (tilt_fraction * per_unit).sqrt(),
        );
        self.add_to_mode(SIGNAL_MODE, delta)
    }

    /// Replaces the noise of `mode` with a squeezed state given in dB.
    pub fn set_noise_mode_squeezing(
        &self,
        mode: usize,
        v_minus_db: f64,
        v_plus_db: f64,
        squeeze_angle: f64,
    ) -> Result<Self> {
        self.with_noise(mode, QuadratureNoise::from_db(v_minus_db, v_plus_db, squeeze_angle)?)
    }

    pub fn with_noise(&self, mode: usize, noise: QuadratureNoise) -> Result<Self> {
        self.check_mode(mode)?;
        let mut next = self.clone();
        next.noise.insert(mode, noise);
        Ok(next)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode > self.basis.max_order() {
            Err(Error::ModeOutOfRange {
                order: mode,
                max_order: self.basis.max_order(),
            })
        } else {
            Ok(())
        }
    }

    pub fn to_document(&self) -> BeamStateDocument {
        BeamStateDocument {
            n_photons: self.n_photons,
            basis: self.basis,
            modes: self
                .modes()
                .map(|index| {
                    let c = self.coefficient(index);
                    let n = self.noise(index);
                    ModeEntry {
                        index,
                        re: c.re,
                        im: c.im,
                        v_minus_db: n.v_minus_db(),
                        v_plus_db: n.v_plus_db(),
                        angle: n.squeeze_angle(),
                    }
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &BeamStateDocument) -> Result<Self> {
        let mut state = Self::coherent(doc.n_photons, doc.basis.validated()?)?;
        for m in &doc.modes {
            state.check_mode(m.index)?;
            let c = Complex64::new(m.re, m.im);
            if m.index == CARRIER_MODE {
                if c != Complex64::new(1.0, 0.0) {
                    return Err(invalid("modes[0]", "carrier amplitude must be re=1, im=0"));
                }
            } else if c != Complex64::default() {
                state = state.add_to_mode(m.index, c)?;
            }
            let noise = QuadratureNoise::from_db(m.v_minus_db, m.v_plus_db, m.angle)?;
            if !noise.is_vacuum() || m.angle != 0.0 {
                state.noise.insert(m.index, noise);
            }
        }
        Ok(state)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(text)?)
    }
}

/// JSON form of a [`BeamState`].
///
/// ```json
/// { "n_photons": 9.1e9,
///   "basis": { "waist": 1.06e-4, "wavelength": 1.064e-6, "max_order": 8 },
///   "modes": [ { "index": 1, "re": 5.7e-6, "im": 0.0,
///                "v_minus_db": -2.0, "v_plus_db": 8.0, "angle": 0.0 } ] }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamStateDocument {
    pub n_photons: f64,
    pub basis: Basis,
    pub modes: Vec<ModeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub index: usize,
    pub re: f64,
    pub im: f64,
    pub v_minus_db: f64,
    pub v_plus_db: f64,
    pub angle: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn experiment_state() -> BeamState {
        let basis = Basis::with_default_order(106e-6, 1.064e-6).unwrap();
        BeamState::coherent(9.105_710_047e9, basis).unwrap()
    }

    #[test]
    fn zero_encodings_leave_state_unchanged() {
        let s = experiment_state();
        assert_eq!(s.encode_displacement(0.0).unwrap().coefficient(1), Complex64::default());
        assert_eq!(s.encode_tilt(0.0).unwrap().coefficient(1), Complex64::default());
    }

    #[test]
    fn displacement_coefficient() {
        let s = experiment_state().encode_displacement(0.6e-9).unwrap();
        assert_relative_eq!(s.coefficient(1).re, 5.660_377_358_490_566e-6, max_relative = 1e-12);
        assert_eq!(s.coefficient(1).im, 0.0);
        assert_eq!(s.noise(1), QuadratureNoise::vacuum());
    }

    #[test]
    fn qnl_displacement_gives_half_inverse_root_n() {
        let s = experiment_state();
        let n = s.n_photons();
        let d_qnl = s.basis().waist() / (2.0 * n.sqrt());
        let s = s.encode_displacement(d_qnl).unwrap();
        assert_relative_eq!(s.coefficient(1).re, 0.5 / n.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn tilt_coefficient() {
        let s = experiment_state().encode_tilt(1e-7).unwrap();
        assert_relative_eq!(s.coefficient(1).im, 3.129_782_154_892_087e-5, max_relative = 1e-12);
        assert_eq!(s.coefficient(1).re, 0.0);
    }

    #[test]
    fn encodings_commute() {
        let s = experiment_state();
        let a = s.encode_displacement(3e-9).unwrap().encode_tilt(2e-8).unwrap();
        let b = s.encode_tilt(2e-8).unwrap().encode_displacement(3e-9).unwrap();
        assert_eq!(a.coefficient(1), b.coefficient(1));
    }

    #[test]
    fn encoding_limits() {
        let s = experiment_state();
        let w = s.basis().waist();
        assert!(s.encode_displacement(0.05 * w).is_ok());
        assert!(matches!(
            s.encode_displacement(0.2 * w),
            Err(Error::EncodingOutOfRange { .. })
        ));
        let tight = s.clone().with_limits(EncodingLimits { warn: 1e-4, reject: 1e-3 }).unwrap();
        assert!(tight.encode_displacement(0.01 * w).is_err());
        assert!(s.clone().with_limits(EncodingLimits { warn: 1.0, reject: 0.1 }).is_err());
    }

    #[test]
    fn pzt_split() {
        let s = experiment_state();
        let pure = s.pzt_modulation(10.0, 0.0).unwrap().coefficient(1);
        assert_eq!(pure.im, 0.0);
        assert!(pure.re > 0.0);

        let c = s.pzt_modulation(15.0, 0.9).unwrap().coefficient(1);
        assert_relative_eq!(c.im * c.im / c.norm_sqr(), 0.9, max_relative = 1e-12);
        assert_relative_eq!(4.0 * s.n_photons() * c.norm_sqr(), db_to_linear(15.0), max_relative = 1e-12);

        let c = s.pzt_modulation(-3.0, 0.5).unwrap().coefficient(1);
        assert_relative_eq!(c.re, c.im, max_relative = 1e-15);

        assert_eq!(s.pzt_modulation(f64::NEG_INFINITY, 0.3).unwrap().coefficient(1), Complex64::default());
        assert!(s.pzt_modulation(f64::NAN, 0.3).is_err());
        assert!(s.pzt_modulation(0.0, 1.2).is_err());
        assert!(s.pzt_modulation_linear(-1.0, 0.2).is_err());
    }

    #[test]
    fn squeezing_from_db() {
        let s = experiment_state().set_noise_mode_squeezing(1, -2.0, 8.0, 0.0).unwrap();
        let n = s.noise(1);
        assert_relative_eq!(n.v_minus(), 0.630_957_344_480_193_2, max_relative = 1e-14);
        assert_relative_eq!(n.v_plus(), 6.309_573_444_801_933, max_relative = 1e-14);
        assert_relative_eq!(n.uncertainty_product(), 3.981_071_705_534_973, max_relative = 1e-14);

        let vac = experiment_state().set_noise_mode_squeezing(1, 0.0, 0.0, 0.0).unwrap();
        assert!(vac.noise(1).is_vacuum());

        // 10^(-0.3)·10^(0.29) = 0.977
        assert!(matches!(
            experiment_state().set_noise_mode_squeezing(1, -3.0, 2.9, 0.0),
            Err(Error::UncertaintyViolation { .. })
        ));
        assert!(experiment_state().set_noise_mode_squeezing(1, -3.0, 3.0, 0.0).is_ok());
        assert!(experiment_state().set_noise_mode_squeezing(99, -3.0, 3.0, 0.0).is_err());
    }

    #[test]
    fn loss_examples() {
        let sq = QuadratureNoise::from_db(-3.0, 5.0, 0.2).unwrap();
        assert_eq!(apply_loss(&sq, 1.0).unwrap(), sq);
        assert_relative_eq!(attenuate_variance(0.0, 0.8).unwrap(), 0.2, max_relative = 1e-15);
        assert!(apply_loss(&sq, 1.1).is_err());
        assert!(apply_loss(&sq, -0.1).is_err());

        // Source -3.6 dB, then 80% conversion and 95% combining.
        let source = QuadratureNoise::minimum_uncertainty(db_to_linear(-3.6), 0.0).unwrap();
        let after = apply_loss_chain(&source, &[0.80, 0.95]).unwrap();
        assert_relative_eq!(
            apply_loss(&source, 0.8).unwrap().v_minus(),
            0.549_212_665_792_132_8,
            max_relative = 1e-13
        );
        assert_relative_eq!(after.v_minus(), 0.571_752_032_502_526_1, max_relative = 1e-13);
        assert_relative_eq!(after.v_minus_db(), -2.427_922_828_592_767, max_relative = 1e-12);
    }

    #[test]
    fn loss_can_lower_product_of_mixed_state() {
        // A thermal excess is removed entirely at eta = 0; the product falls
        // towards (but never below) 1.
        let mixed = QuadratureNoise::from_db(0.0, 2.6, 0.0).unwrap();
        let out = apply_loss(&mixed, 0.0).unwrap();
        assert!(out.uncertainty_product() < mixed.uncertainty_product());
        assert_eq!(out.uncertainty_product(), 1.0);
    }

    #[test]
    fn json_round_trip() {
        let s = experiment_state()
            .encode_displacement(1e-9)
            .unwrap()
            .encode_tilt(1e-7)
            .unwrap()
            .set_noise_mode_squeezing(1, -2.0, 8.0, 0.1)
            .unwrap();
        let text = s.to_json().unwrap();
        let back = BeamState::from_json(&text).unwrap();
        assert_eq!(back.coefficient(1), s.coefficient(1));
        assert_relative_eq!(back.noise(1).v_minus(), s.noise(1).v_minus(), max_relative = 1e-14);
        assert_eq!(back.n_photons(), s.n_photons());

        let bad = text.replace("\"angle\"", "\"angel\"");
        assert!(BeamState::from_json(&bad).is_err());
    }

    proptest! {
        #[test]
        fn loss_preserves_uncertainty_relation(
            vm_db in -15.0f64..0.0, excess_db in 0.0f64..10.0,
            angle in -3.0f64..3.0, eta in 0.0f64..=1.0,
        ) {
            let vp_db = -vm_db + excess_db;
            let n = QuadratureNoise::from_db(vm_db, vp_db, angle).unwrap();
            let out = apply_loss(&n, eta).unwrap();
            prop_assert!(out.uncertainty_product() >= 1.0 - 1e-12);
            prop_assert_eq!(out.squeeze_angle(), angle);
        }

        #[test]
        fn loss_never_decreases_minimum_uncertainty_product(
            vm_db in -15.0f64..15.0, eta in 0.0f64..=1.0,
        ) {
            let n = QuadratureNoise::minimum_uncertainty(db_to_linear(vm_db), 0.0).unwrap();
            let out = apply_loss(&n, eta).unwrap();
            prop_assert!(out.uncertainty_product() >= n.uncertainty_product() * (1.0 - 1e-12));
        }

        #[test]
        fn loss_composes_multiplicatively(
            v in 0.01f64..20.0, e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0,
        ) {
            let two = attenuate_variance(attenuate_variance(v, e1).unwrap(), e2).unwrap();
            let one = attenuate_variance(v, e1 * e2).unwrap();
            prop_assert!((two - one).abs() <= 1e-14 * one.max(1.0));
        }

        #[test]
        fn vacuum_is_a_loss_fixed_point(eta in 0.0f64..=1.0) {
            let out = apply_loss(&QuadratureNoise::vacuum(), eta).unwrap();
            prop_assert!((out.v_minus() - 1.0).abs() < 1e-15);
            prop_assert!((out.v_plus() - 1.0).abs() < 1e-15);
        }

        #[test]
        fn displacement_encoding_is_additive(d1 in -1e-7f64..1e-7, d2 in -1e-7f64..1e-7) {
            let s = experiment_state();
            let a = s.encode_displacement(d1).unwrap().encode_displacement(d2).unwrap();
            let b = s.encode_displacement(d1 + d2).unwrap();
            prop_assert!((a.coefficient(1) - b.coefficient(1)).norm() <= 1e-18);
        }
    }
}

//! Photon bookkeeping and quantum-noise-limit calculators.
//!
//! All noise and signal powers in dB are `10·log₁₀` of linear power ratios
//! against shot noise. Displacements and tilts derived from a level use the
//! amplitude form `x = x_ref · 10^(level_db/20)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::beam_state::{linear_to_db, BeamState};
use crate::detection::{homodyne_expectation, LocalOscillator};
use crate::error::{ensure_positive, invalid, Result};

/// Planck constant (J·s), exact SI value.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum (m/s), exact SI value.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Optical power and spectrum-analyzer bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiometryParams {
    /// Optical power (W).
    pub power: f64,
    /// Wavelength (m).
    pub wavelength: f64,
    /// Resolution bandwidth (Hz); the measurement interval is `1/rbw`.
    pub rbw: f64,
    /// Video bandwidth (Hz).
    pub vbw: f64,
}

impl RadiometryParams {
    pub fn new(power: f64, wavelength: f64, rbw: f64, vbw: f64) -> Result<Self> {
        let p = Self {
            power,
            wavelength,
            rbw,
            vbw,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("power", self.power)?;
        ensure_positive("wavelength", self.wavelength)?;
        ensure_positive("rbw", self.rbw)?;
        ensure_positive("vbw", self.vbw)?;
        if self.vbw > self.rbw {
            return Err(invalid(
                "vbw",
                format!("video bandwidth {} Hz exceeds resolution bandwidth {} Hz", self.vbw, self.rbw),
            ));
        }
        Ok(())
    }

    /// Number of RBW intervals averaged per displayed point, `RBW/VBW`.
    pub fn averaging_factor(&self) -> f64 {
        self.rbw / self.vbw
    }
}

/// Photons per measurement interval: `N = P·λ / (h·c·RBW)`.
pub fn photons_per_interval(params: &RadiometryParams) -> f64 {
    params.power * params.wavelength / (PLANCK * SPEED_OF_LIGHT * params.rbw)
}

/// Displacement at unit SNR: `w / (2√N)`.
pub fn qnl_displacement(waist: f64, n_photons: f64) -> Result<f64> {
    ensure_positive("waist", waist)?;
    ensure_positive("n_photons", n_photons)?;
    Ok(waist / (2.0 * n_photons.sqrt()))
}

/// Tilt at unit SNR: `λ / (2πw√N)`.
pub fn qnl_tilt(waist: f64, wavelength: f64, n_photons: f64) -> Result<f64> {
    ensure_positive("wavelength", wavelength)?;
    Ok(qnl_displacement(waist, n_photons)? / waist * wavelength / (PI * waist))
}

/// Smallest resolvable value after averaging `RBW/VBW` intervals:
/// `x_qnl / √(RBW/VBW)`.
pub fn min_detectable(x_qnl: f64, rbw: f64, vbw: f64) -> Result<f64> {
    ensure_positive("x_qnl", x_qnl)?;
    ensure_positive("rbw", rbw)?;
    ensure_positive("vbw", vbw)?;
    if vbw > rbw {
        return Err(invalid("vbw", "must not exceed rbw"));
    }
    Ok(x_qnl / (rbw / vbw).sqrt())
}

/// `reference · 10^(level_db/20)`.
pub fn amplitude_at_level(reference: f64, level_db: f64) -> f64 {
    reference * 10f64.powf(level_db / 20.0)
}

pub const LEVEL_CONVENTION: &str =
    "power levels are 10*log10(P/P_shot); displacements and tilts scale as 10^(level_db/20)";

/// Analytic readout summary for one state and local oscillator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub params: RadiometryParams,
    pub waist: f64,
    pub lo_mode: usize,
    pub lo_phase: f64,
    pub mode_match_efficiency: f64,
    pub n_photons: f64,
    pub d_qnl: f64,
    pub theta_qnl: f64,
    pub d_min: f64,
    pub theta_min: f64,
    /// Detector noise relative to shot noise (dB); negative when squeezed.
    pub noise_floor_db: f64,
    /// Modulation power relative to shot noise (dB).
    pub signal_db: f64,
    pub snr_db: f64,
    /// Displacement giving unit SNR against the actual noise floor.
    pub displacement_sensitivity: f64,
    pub tilt_sensitivity: f64,
    /// Measured quadrature expressed as a displacement (`φ = 0` reading).
    pub displacement_equivalent: f64,
    /// Measured quadrature expressed as a tilt (`φ = π/2` reading).
    pub tilt_equivalent: f64,
    pub convention: String,
}

/// Inverts the homodyne SNR chain into physical displacement and tilt values.
///
/// The state's photon number must match `params` to 1e-6 relative.
pub fn snr_report(
    state: &BeamState,
    lo: &LocalOscillator,
    params: &RadiometryParams,
) -> Result<SnrReport> {
    params.validate()?;
    let n = state.n_photons();
    let n_params = photons_per_interval(params);
    if ((n - n_params) / n_params).abs() > 1e-6 {
        return Err(invalid(
            "n_photons",
            format!("state has N = {n:.6e} but radiometry gives {n_params:.6e}"),
        ));
    }
    let basis = state.basis();
    if ((basis.wavelength() - params.wavelength) / params.wavelength).abs() > 1e-12 {
        return Err(invalid("wavelength", "basis and radiometry wavelengths differ"));
    }
    let w = basis.waist();
    let d_qnl = qnl_displacement(w, n)?;
    let theta_qnl = qnl_tilt(w, params.wavelength, n)?;
    let eta = lo.mode_match_efficiency();

    let out = homodyne_expectation(state, lo);
    let floor_db = linear_to_db(out.noise_variance);
    // A quadrature reading q = mean / (2√(Nη)); unit SNR needs q = √(V)/(2√(Nη)).
    let (sensitivity_scale, q) = if eta > 0.0 {
        (
            (out.noise_variance / eta).sqrt(),
            out.signal_mean / (2.0 * (n * eta).sqrt()),
        )
    } else {
        (f64::INFINITY, 0.0)
    };

    Ok(SnrReport {
        params: *params,
        waist: w,
        lo_mode: lo.mode(),
        lo_phase: lo.phase(),
        mode_match_efficiency: eta,
        n_photons: n,
        d_qnl,
        theta_qnl,
        d_min: min_detectable(d_qnl, params.rbw, params.vbw)?,
        theta_min: min_detectable(theta_qnl, params.rbw, params.vbw)?,
        noise_floor_db: floor_db,
        signal_db: linear_to_db(out.signal_power()),
        snr_db: out.snr_db,
        displacement_sensitivity: d_qnl * sensitivity_scale,
        tilt_sensitivity: theta_qnl * sensitivity_scale,
        displacement_equivalent: q * w,
        tilt_equivalent: q * params.wavelength / (PI * w),
        convention: LEVEL_CONVENTION.to_string(),
    })
}

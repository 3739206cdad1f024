//! Detector models: spatial homodyne detection with an arbitrary local
//! oscillator, and the split (two-segment) detector.
//!
//! Outcomes are in shot-noise units: vacuum noise has variance 1 and a
//! displacement of `w/(2√N)` read at the optimal phase gives a mean of 1.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::beam_state::{BeamState, QuadratureNoise, CARRIER_MODE};
use crate::error::{ensure_unit_interval, invalid, Result};

/// Transverse mode, phase and mode-matching efficiency of the local oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalOscillator {
    mode: usize,
    phase: f64,
    mode_match_efficiency: f64,
}

impl LocalOscillator {
    /// `phase` is reduced to `[0, 2π)`.
    pub fn new(mode: usize, phase: f64, mode_match_efficiency: f64) -> Result<Self> {
        if !phase.is_finite() {
            return Err(invalid("lo_phase", "must be finite"));
        }
        ensure_unit_interval("mode_match_efficiency", mode_match_efficiency)?;
        Ok(Self {
            mode,
            phase: phase.rem_euclid(TAU),
            mode_match_efficiency,
        })
    }

    /// Perfectly mode-matched LO.
    pub fn ideal(mode: usize, phase: f64) -> Result<Self> {
        Self::new(mode, phase, 1.0)
    }

    pub fn from_visibility(mode: usize, phase: f64, visibility: f64) -> Result<Self> {
        Self::new(mode, phase, visibility_to_efficiency(visibility)?)
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn mode_match_efficiency(&self) -> f64 {
        self.mode_match_efficiency
    }

    pub fn with_phase(&self, phase: f64) -> Result<Self> {
        Self::new(self.mode, phase, self.mode_match_efficiency)
    }
}

/// Mean, variance and SNR of one detector readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub signal_mean: f64,
    pub noise_variance: f64,
    pub snr_power: f64,
    /// `-inf` when the signal vanishes.
    pub snr_db: f64,
}

impl MeasurementOutcome {
    pub fn new(signal_mean: f64, noise_variance: f64) -> Self {
        debug_assert!(noise_variance > 0.0);
        let snr_power = signal_mean * signal_mean / noise_variance;
        Self {
            signal_mean,
            noise_variance,
            snr_power,
            snr_db: 10.0 * snr_power.log10(),
        }
    }

    /// `signal_mean²`, the modulation power in shot-noise units.
    pub fn signal_power(&self) -> f64 {
        self.signal_mean * self.signal_mean
    }

    /// Signal amplitude-to-noise ratio, `√snr_power`.
    pub fn snr_amplitude(&self) -> f64 {
        self.snr_power.sqrt()
    }
}

/// Variance of the quadrature at angle `phi` for the given noise state.
pub fn noise_variance_at(noise: &QuadratureNoise, phi: f64) -> f64 {
    noise.variance_at(phi)
}

/// Balanced homodyne readout of `lo.mode()` at `lo.phase()`.
///
/// Mean `2√(Nη)·(Re c·cos φ + Im c·sin φ)`, variance `η·V(φ) + 1 − η`.
pub fn homodyne_expectation(state: &BeamState, lo: &LocalOscillator) -> MeasurementOutcome {
    let eta = lo.mode_match_efficiency;
    let c = state.coefficient(lo.mode);
    let (s, co) = lo.phase.sin_cos();
    let signal = 2.0 * (state.n_photons() * eta).sqrt() * (c.re * co + c.im * s);
    let variance = eta * state.noise(lo.mode).variance_at(lo.phase) + (1.0 - eta);
    MeasurementOutcome::new(signal, variance)
}

/// `⟨sign(x)·u_0, u_n⟩`, the weight of mode `n` in the split detector's
/// flipped mode. Zero for even `n`; `√(2/π)` for `n = 1`.
pub fn flipped_mode_overlap(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        return 0.0;
    }
    // a_{n+2} = -a_n · n / √((n+1)(n+2))
    let mut a = (2.0 / PI).sqrt();
    let mut k = 1;
    while k < n {
        let kf = k as f64;
        a *= -kf / ((kf + 1.0) * (kf + 2.0)).sqrt();
        k += 2;
    }
    a
}

/// Difference signal of a split detector centred on the beam axis.
///
/// The detector projects the amplitude quadrature (relative to the carrier)
/// onto the flipped mode `sign(x)·u_0`, whose overlap with `u_1` is `√(2/π)`.
/// Tilt lives on the phase quadrature and produces no signal. The noise is the
/// flipped-mode projection of the mode-diagonal noise; for coherent light it
/// is exactly 1.
pub fn split_detector_expectation(state: &BeamState) -> MeasurementOutcome {
    let root_n = state.n_photons().sqrt();
    let mut signal = 0.0;
    let mut variance = 1.0;
    for mode in state.modes().filter(|&m| m != CARRIER_MODE) {
        let a = flipped_mode_overlap(mode);
        if a == 0.0 {
            continue;
        }
        signal += 2.0 * root_n * a * state.coefficient(mode).re;
        variance += a * a * (state.noise(mode).variance_at(0.0) - 1.0);
    }
    MeasurementOutcome::new(signal, variance)
}

/// Mode-matching efficiency from fringe visibility: `η = v²`.
pub fn visibility_to_efficiency(visibility: f64) -> Result<f64> {
    ensure_unit_interval("visibility", visibility)?;
    Ok(visibility * visibility)
}

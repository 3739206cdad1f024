//! Simulation of quantum-noise-limited displacement and tilt measurements on a
//! Gaussian beam with a spatial (TEM₁₀ local oscillator) homodyne detector.
//!
//! * [`hg_modes`]: Hermite-Gauss modes, overlaps, decomposition and the
//!   first-order derivative modes of displacement and tilt.
//! * [`beam_state`]: multimode Gaussian beam state, encodings and loss.
//! * [`detection`]: homodyne and split-detector readout models.
//! * [`radiometry`]: photon numbers, quantum noise limits and SNR reports.
//! * [`trace`]: seeded Monte Carlo spectrum-analyzer traces and envelope fits.
//! * [`validation`]: invariant suites used by `selftest`.

pub mod beam_state;
pub mod detection;
pub mod error;
pub mod hg_modes;
pub mod quadrature;
pub mod radiometry;
pub mod trace;
pub mod validation;

pub use beam_state::{
    apply_loss, apply_loss_chain, db_to_linear, linear_to_db, BeamState, EncodingLimits, QuadratureNoise,
    CARRIER_MODE, SIGNAL_MODE,
};
pub use detection::{
    homodyne_expectation, noise_variance_at, split_detector_expectation, visibility_to_efficiency,
    LocalOscillator, MeasurementOutcome,
};
pub use error::{Error, Result};
pub use hg_modes::{
    decompose, derivative_profile, hg_amplitude, overlap, Basis, Decomposition, ModeCoefficients,
    Parameter, SampledProfile,
};
pub use radiometry::{
    min_detectable, photons_per_interval, qnl_displacement, qnl_tilt, snr_report, RadiometryParams,
    SnrReport,
};
pub use trace::{fit_modulation_envelope, simulate_homodyne_trace, Acquisition, EnvelopeFit, Trace, TraceConfig};

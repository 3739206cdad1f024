//! Scenario configuration files.
//!
//! One JSON document per scenario. Every section rejects unknown keys, and
//! [`ScenarioConfig::resolved`] fills defaults so that reports can echo a
//! complete, re-runnable configuration.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use homodyne_core::{
    apply_loss_chain, photons_per_interval, Acquisition, BeamState, Basis, LocalOscillator,
    QuadratureNoise, RadiometryParams,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub radiometry: RadiometryConfig,
    pub basis: BasisConfig,
    #[serde(default)]
    pub signal: SignalConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub trace: TraceSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiometryConfig {
    pub power_w: f64,
    pub wavelength_m: f64,
    pub rbw_hz: f64,
    pub vbw_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub waist_m: f64,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
}

fn default_max_order() -> usize {
    homodyne_core::hg_modes::DEFAULT_MAX_ORDER
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    #[serde(default)]
    pub displacement_m: f64,
    #[serde(default)]
    pub tilt_rad: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pzt: Option<PztConfig>,
}

/// Actuator modulation: total power relative to the QNL and its tilt share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PztConfig {
    pub power_db: f64,
    pub tilt_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "signal_mode")]
    pub mode: usize,
    #[serde(default)]
    pub v_minus_db: f64,
    #[serde(default)]
    pub v_plus_db: f64,
    #[serde(default)]
    pub angle_rad: f64,
    /// Transmissions applied in order after the source.
    #[serde(default)]
    pub loss_chain: Vec<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            mode: signal_mode(),
            v_minus_db: 0.0,
            v_plus_db: 0.0,
            angle_rad: 0.0,
            loss_chain: Vec::new(),
        }
    }
}

fn signal_mode() -> usize {
    homodyne_core::SIGNAL_MODE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorConfig {
    Homodyne {
        #[serde(default = "signal_mode")]
        lo_mode: usize,
        #[serde(default)]
        lo_phase_rad: f64,
        #[serde(default = "unit")]
        visibility: f64,
    },
    Split {},
}

fn unit() -> f64 {
    1.0
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig::Homodyne {
            lo_mode: signal_mode(),
            lo_phase_rad: 0.0,
            visibility: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_intervals")]
    pub intervals_per_point: usize,
    #[serde(default = "default_acquisitions")]
    pub acquisitions: Vec<Acquisition>,
}

fn default_samples() -> usize {
    10_000
}

fn default_intervals() -> usize {
    1
}

fn default_acquisitions() -> Vec<Acquisition> {
    vec![
        Acquisition::Scan,
        Acquisition::Locked(0.0),
        Acquisition::Locked(FRAC_PI_2),
    ]
}

impl Default for TraceSection {
    fn default() -> Self {
        Self {
            n_samples: default_samples(),
            seed: 0,
            intervals_per_point: default_intervals(),
            acquisitions: default_acquisitions(),
        }
    }
}

/// A measured level (dB relative to shot noise) to convert into a displacement and tilt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutConfig {
    pub measured_level_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

fn default_dir() -> String {
    "out".to_string()
}

fn default_prefix() -> String {
    "scenario".to_string()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            prefix: default_prefix(),
        }
    }
}

/// Objects built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: RadiometryParams,
    pub basis: Basis,
    pub n_photons: f64,
    /// Carrier plus encoded signal, with the configured noise.
    pub state: BeamState,
    /// Same noise, no signal.
    pub noise_only: BeamState,
    pub noise: QuadratureNoise,
    pub lo: Option<LocalOscillator>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies command-line overrides.
    pub fn resolved(mut self, seed: Option<u64>, out: Option<&Path>) -> Self {
        if let Some(seed) = seed {
            self.trace.seed = seed;
        }
        if let Some(out) = out {
            self.output.dir = out.display().to_string();
        }
        self
    }

    pub fn params(&self) -> CliResult<RadiometryParams> {
        let r = &self.radiometry;
        RadiometryParams::new(r.power_w, r.wavelength_m, r.rbw_hz, r.vbw_hz).map_err(field("radiometry"))
    }

    pub fn build(&self) -> CliResult<Scenario> {
        let params = self.params()?;
        let basis = Basis::new(self.basis.waist_m, params.wavelength, self.basis.max_order)
            .map_err(field("basis"))?;
        let n_photons = photons_per_interval(&params);

        let source = QuadratureNoise::from_db(self.noise.v_minus_db, self.noise.v_plus_db, self.noise.angle_rad)
            .map_err(field("noise"))?;
        let noise = apply_loss_chain(&source, &self.noise.loss_chain).map_err(field("noise.loss_chain"))?;

        let carrier = BeamState::coherent(n_photons, basis).map_err(field("radiometry"))?;
        let noise_only = carrier.with_noise(self.noise.mode, noise).map_err(field("noise.mode"))?;
        let mut state = noise_only
            .encode_displacement(self.signal.displacement_m)
            .map_err(field("signal.displacement_m"))?
            .encode_tilt(self.signal.tilt_rad)
            .map_err(field("signal.tilt_rad"))?;
        if let Some(pzt) = self.signal.pzt {
            state = state
                .pzt_modulation(pzt.power_db, pzt.tilt_fraction)
                .map_err(field("signal.pzt"))?;
        }

        let lo = match self.detector {
            DetectorConfig::Homodyne {
                lo_mode,
                lo_phase_rad,
                visibility,
            } => {
                if lo_mode > basis.max_order() {
                    return Err(CliError::Validation(format!(
                        "detector.lo_mode: {lo_mode} exceeds basis.max_order {}",
                        basis.max_order()
                    )));
                }
                Some(LocalOscillator::from_visibility(lo_mode, lo_phase_rad, visibility).map_err(field("detector"))?)
            }
            DetectorConfig::Split {} => None,
        };

        if self.trace.n_samples == 0 {
            return Err(CliError::Validation("trace.n_samples: must be at least 1".into()));
        }
        if self.trace.intervals_per_point == 0 {
            return Err(CliError::Validation("trace.intervals_per_point: must be at least 1".into()));
        }
        if let Some(r) = self.readout {
            if !r.measured_level_db.is_finite() {
                return Err(CliError::Validation("readout.measured_level_db: must be finite".into()));
            }
        }

        Ok(Scenario {
            params,
            basis,
            n_photons,
            state,
            noise_only,
            noise,
            lo,
        })
    }
}

fn field(name: &'static str) -> impl Fn(homodyne_core::Error) -> CliError {
    move |e| CliError::Validation(format!("{name}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "radiometry": {"power_w": 1e-3, "wavelength_m": 1e-6, "rbw_hz": 1e5, "vbw_hz": 100},
        "basis": {"waist_m": 1e-4}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.basis.max_order, 8);
        assert_eq!(cfg.noise.mode, 1);
        assert_eq!(cfg.trace.acquisitions.len(), 3);
        assert!(matches!(cfg.detector, DetectorConfig::Homodyne { lo_mode: 1, .. }));
        let s = cfg.build().unwrap();
        assert!(s.state.noise(1).is_vacuum());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap().resolved(Some(42), None);
        let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.trace.seed, 42);
    }

    #[test]
    fn misspelled_keys_rejected() {
        for bad in [
            MINIMAL.replace("power_w", "powr_w"),
            MINIMAL.replace("\"waist_m\": 1e-4", "\"waist_m\": 1e-4, \"extra\": 1"),
            MINIMAL.replace("\"basis\"", "\"noise\": {\"v_minus\": -2}, \"basis\""),
            MINIMAL.replace("\"basis\"", "\"detector\": {\"kind\": \"split\", \"lo_mode\": 1}, \"basis\""),
        ] {
            let err = ScenarioConfig::from_json(&bad).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{bad}");
        }
    }

    #[test]
    fn validation_names_field() {
        let cfg = ScenarioConfig::from_json(&MINIMAL.replace("1e-3", "0")).unwrap();
        let msg = cfg.build().unwrap_err().to_string();
        assert!(msg.contains("power"), "{msg}");

        let cfg = ScenarioConfig::from_json(&MINIMAL.replace(
            "\"basis\"",
            "\"noise\": {\"v_minus_db\": -3, \"v_plus_db\": 2.9}, \"basis\"",
        ))
        .unwrap();
        let msg = cfg.build().unwrap_err().to_string();
        assert!(msg.starts_with("invalid configuration: noise"), "{msg}");
    }

    #[test]
    fn loss_chain_applied() {
        let cfg = ScenarioConfig::from_json(&MINIMAL.replace(
            "\"basis\"",
            "\"noise\": {\"v_minus_db\": -3.6, \"v_plus_db\": 3.6, \"loss_chain\": [0.8, 0.95]}, \"basis\"",
        ))
        .unwrap();
        let s = cfg.build().unwrap();
        assert!((s.noise.v_minus_db() + 2.4279).abs() < 1e-3);
    }
}

//! Subcommand implementations. Each returns a serializable report that echoes
//! the resolved configuration it was computed from.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use homodyne_core::detection::flipped_mode_overlap;
use homodyne_core::radiometry::{amplitude_at_level, LEVEL_CONVENTION};
use homodyne_core::validation::{self, SuiteResult};
use homodyne_core::{
    fit_modulation_envelope, homodyne_expectation, linear_to_db, min_detectable, qnl_displacement, qnl_tilt,
    simulate_homodyne_trace, snr_report, split_detector_expectation, Acquisition, BeamState, EnvelopeFit,
    LocalOscillator, MeasurementOutcome, SnrReport, TraceConfig,
};
use serde::Serialize;

use crate::config::{Scenario, ScenarioConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QnlReport {
    pub config: ScenarioConfig,
    pub n_photons: f64,
    pub d_qnl_m: f64,
    pub theta_qnl_rad: f64,
    pub averaging_factor: f64,
    pub d_min_m: f64,
    pub theta_min_rad: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutReport>,
    /// Homodyne readout of the configured state; absent for the split detector.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr: Option<SnrReport>,
    pub convention: &'static str,
}

/// Displacement and tilt corresponding to a measured level relative to shot noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadoutReport {
    pub measured_level_db: f64,
    pub displacement_m: f64,
    pub tilt_rad: f64,
}

pub fn cmd_qnl(cfg: &ScenarioConfig) -> CliResult<QnlReport> {
    let sc = cfg.build()?;
    let w = sc.basis.waist();
    let d_qnl = qnl_displacement(w, sc.n_photons)?;
    let theta_qnl = qnl_tilt(w, sc.params.wavelength, sc.n_photons)?;
    let snr = match &sc.lo {
        Some(lo) => Some(snr_report(&sc.state, lo, &sc.params)?),
        None => None,
    };
    Ok(QnlReport {
        config: cfg.clone(),
        n_photons: sc.n_photons,
        d_qnl_m: d_qnl,
        theta_qnl_rad: theta_qnl,
        averaging_factor: sc.params.averaging_factor(),
        d_min_m: min_detectable(d_qnl, sc.params.rbw, sc.params.vbw)?,
        theta_min_rad: min_detectable(theta_qnl, sc.params.rbw, sc.params.vbw)?,
        readout: cfg.readout.map(|r| ReadoutReport {
            measured_level_db: r.measured_level_db,
            displacement_m: amplitude_at_level(d_qnl, r.measured_level_db),
            tilt_rad: amplitude_at_level(theta_qnl, r.measured_level_db),
        }),
        snr,
        convention: LEVEL_CONVENTION,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub config: ScenarioConfig,
    pub homodyne: MeasurementOutcome,
    pub split: MeasurementOutcome,
    /// Split over homodyne amplitude SNR; absent when the homodyne signal vanishes.
    pub amplitude_snr_ratio: Option<f64>,
    pub homodyne_advantage: Option<f64>,
    /// `⟨sign(x)u_0, u_1⟩ = √(2/π)`.
    pub split_efficiency: f64,
}

/// Homodyne (configured LO, or an ideal TEM₁₀ LO at φ = 0 when the scenario
/// uses the split detector) side by side with the split detector.
pub fn cmd_compare_detectors(cfg: &ScenarioConfig) -> CliResult<CompareReport> {
    let sc = cfg.build()?;
    let lo = match sc.lo {
        Some(lo) => lo,
        None => LocalOscillator::ideal(homodyne_core::SIGNAL_MODE, 0.0)?,
    };
    let homodyne = homodyne_expectation(&sc.state, &lo);
    let split = split_detector_expectation(&sc.state);
    let ratio = (homodyne.snr_power > 0.0).then(|| split.snr_amplitude() / homodyne.snr_amplitude());
    Ok(CompareReport {
        config: cfg.clone(),
        homodyne,
        split,
        amplitude_snr_ratio: ratio,
        homodyne_advantage: ratio.filter(|r| *r > 0.0).map(|r| 1.0 / r),
        split_efficiency: flipped_mode_overlap(1),
    })
}

/// Which of the four reference curves a trace file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    /// Coherent light, no modulation.
    Qnl,
    /// Configured noise, no modulation.
    Sqz,
    /// Coherent light with modulation.
    Mod,
    /// Configured noise with modulation.
    ModSqz,
}

impl Curve {
    pub const ALL: [Curve; 4] = [Curve::Qnl, Curve::Sqz, Curve::Mod, Curve::ModSqz];

    pub fn label(&self) -> &'static str {
        match self {
            Curve::Qnl => "qnl",
            Curve::Sqz => "sqz",
            Curve::Mod => "mod",
            Curve::ModSqz => "mod_sqz",
        }
    }

    fn state(&self, sc: &Scenario, coherent_mod: &BeamState, coherent: &BeamState) -> BeamState {
        match self {
            Curve::Qnl => coherent.clone(),
            Curve::Sqz => sc.noise_only.clone(),
            Curve::Mod => coherent_mod.clone(),
            Curve::ModSqz => sc.state.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceFileSummary {
    pub acquisition: Acquisition,
    pub curve: Curve,
    pub file: String,
    pub seed: u64,
    pub mean_level_db: f64,
    /// Mean power predicted by the analytic outcome over the same phases.
    pub expected_level_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeSummary {
    pub acquisition_index: usize,
    pub curve: Curve,
    pub reference: Curve,
    pub fit: EnvelopeFit,
    pub tilt_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceReport {
    pub config: ScenarioConfig,
    pub files: Vec<TraceFileSummary>,
    pub envelopes: Vec<EnvelopeSummary>,
    pub plot_script: String,
}

/// Seed of curve `curve_index` in acquisition `acq_index`.
pub fn curve_seed(base: u64, acq_index: usize, curve_index: usize) -> u64 {
    base.wrapping_add((acq_index * Curve::ALL.len() + curve_index) as u64)
}

/// Writes every acquisition × curve as CSV plus a gnuplot script and a JSON report.
pub fn cmd_trace(cfg: &ScenarioConfig) -> CliResult<TraceReport> {
    let sc = cfg.build()?;
    let lo = sc.lo.ok_or_else(|| {
        CliError::Validation("detector: trace simulation needs a homodyne detector".into())
    })?;
    if cfg.trace.acquisitions.is_empty() {
        return Err(CliError::Validation("trace.acquisitions: at least one entry required".into()));
    }
    let dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;

    let coherent = BeamState::coherent(sc.n_photons, sc.basis)?;
    let coherent_mod = modulated_coherent(cfg, &coherent)?;

    let mut files = Vec::new();
    let mut envelopes = Vec::new();
    let mut script = String::new();
    writeln!(script, "# gnuplot script; run from this directory: gnuplot -p {}_plot.gp", cfg.output.prefix).ok();
    writeln!(script, "set datafile separator ','").ok();
    writeln!(script, "set ylabel 'power relative to shot noise (dB)'").ok();

    for (ai, acq) in cfg.trace.acquisitions.iter().enumerate() {
        let mut traces = Vec::new();
        let mut plot_parts = Vec::new();
        let tag = match acq {
            Acquisition::Scan => format!("scan{ai}"),
            Acquisition::Locked(_) => format!("locked{ai}"),
        };
        for (ci, curve) in Curve::ALL.iter().enumerate() {
            let seed = curve_seed(cfg.trace.seed, ai, ci);
            let state = curve.state(&sc, &coherent_mod, &coherent);
            let tc = TraceConfig::new(state.clone(), lo, *acq, cfg.trace.n_samples, seed)
                .with_intervals_per_point(cfg.trace.intervals_per_point);
            let trace = simulate_homodyne_trace(&tc)?;
            let file = format!("{}_{}_{}.csv", cfg.output.prefix, tag, curve.label());
            let path = dir.join(&file);
            write_trace(&trace, &path)?;

            let expected = trace
                .points
                .iter()
                .map(|p| {
                    let o = homodyne_expectation(&state, &lo.with_phase(p.phi).expect("finite phase"));
                    o.signal_power() + o.noise_variance
                })
                .sum::<f64>()
                / trace.len() as f64;
            files.push(TraceFileSummary {
                acquisition: *acq,
                curve: *curve,
                file: file.clone(),
                seed,
                mean_level_db: trace.mean_level_db(),
                expected_level_db: linear_to_db(expected),
            });
            let x_col = if matches!(acq, Acquisition::Scan) { 2 } else { 1 };
            plot_parts.push(format!("'{file}' using {x_col}:3 with lines title '{}'", curve.label().to_uppercase()));
            traces.push(trace);
        }
        match acq {
            Acquisition::Scan => {
                writeln!(script, "set title '{tag}: LO phase scan'\nset xlabel 'LO phase (rad)'").ok();
                if cfg.trace.n_samples >= 3 {
                    for (curve, reference) in [(2usize, 0usize), (3, 1)] {
                        let fit = fit_modulation_envelope(&traces[curve], Some(&traces[reference]))?;
                        envelopes.push(EnvelopeSummary {
                            acquisition_index: ai,
                            curve: Curve::ALL[curve],
                            reference: Curve::ALL[reference],
                            fit,
                            tilt_fraction: fit.tilt_fraction(),
                        });
                    }
                }
            }
            Acquisition::Locked(phi) => {
                writeln!(script, "set title '{tag}: LO locked at {phi:.4} rad'\nset xlabel 'sample'").ok();
            }
        }
        writeln!(script, "plot {}", plot_parts.join(", \\\n     ")).ok();
        writeln!(script, "pause -1").ok();
    }

    let plot_script = format!("{}_plot.gp", cfg.output.prefix);
    let script_path = dir.join(&plot_script);
    std::fs::write(&script_path, script).map_err(|e| CliError::io(&script_path, e))?;

    let report = TraceReport {
        config: cfg.clone(),
        files,
        envelopes,
        plot_script,
    };
    write_json(&dir.join(format!("{}_trace.json", cfg.output.prefix)), &report)?;
    Ok(report)
}

fn modulated_coherent(cfg: &ScenarioConfig, coherent: &BeamState) -> CliResult<BeamState> {
    let mut s = coherent
        .encode_displacement(cfg.signal.displacement_m)?
        .encode_tilt(cfg.signal.tilt_rad)?;
    if let Some(p) = cfg.signal.pzt {
        s = s.pzt_modulation(p.power_db, p.tilt_fraction)?;
    }
    Ok(s)
}

fn write_trace(trace: &homodyne_core::Trace, path: &Path) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    trace.write_csv(std::io::BufWriter::new(file)).map_err(|e| match e {
        homodyne_core::Error::Io(source) => CliError::io(path, source),
        homodyne_core::Error::Csv(c) => CliError::io(path, std::io::Error::other(c.to_string())),
        other => other.into(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub suites: Vec<SuiteResult>,
    pub passed: usize,
    pub failed: usize,
}

pub fn cmd_selftest() -> SelftestReport {
    summarize(validation::run_all())
}

pub fn summarize(suites: Vec<SuiteResult>) -> SelftestReport {
    let passed = suites.iter().filter(|s| s.passed).count();
    let failed = suites.len() - passed;
    SelftestReport {
        suites,
        passed,
        failed,
    }
}

impl SelftestReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            let mark = if s.passed { "PASS" } else { "FAIL" };
            writeln!(out, "[{mark}] {:<24} {}", s.name, s.detail).ok();
        }
        writeln!(out, "{} passed, {} failed", self.passed, self.failed).ok();
        out
    }

    pub fn into_result(self) -> CliResult<Self> {
        if self.failed == 0 {
            Ok(self)
        } else {
            Err(CliError::SelftestFailed(self.failed))
        }
    }
}

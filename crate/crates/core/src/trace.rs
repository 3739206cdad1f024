//! Monte Carlo spectrum-analyzer traces of the homodyne photocurrent.
//!
//! The photocurrent is synthesized at baseband, one quadrature sample per
//! resolution interval `τ = 1/RBW`: `q = mean + √V·g` with `g ~ N(0, 1)`.
//! A displayed point averages `q²` over `intervals_per_point` consecutive
//! intervals (the video-bandwidth filter) and is reported as
//! `10·log₁₀` of that power relative to shot noise.
//!
//! Every displayed point owns an independent ChaCha8 stream selected by its
//! index, so a trace is bit-identical whatever the thread count.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam_state::{linear_to_db, BeamState};
use crate::detection::{homodyne_expectation, LocalOscillator, MeasurementOutcome};
use crate::error::{invalid, Result};

/// How the LO phase evolves across a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acquisition {
    /// Linear sweep from 0 to 2π inclusive.
    Scan,
    /// Fixed phase (rad).
    Locked(f64),
}

impl Acquisition {
    pub fn label(&self) -> String {
        match self {
            Acquisition::Scan => "scan".to_string(),
            Acquisition::Locked(phi) => format!("locked_{phi:.4}"),
        }
    }

    pub fn phase(&self, index: usize, n_samples: usize) -> f64 {
        match *self {
            Acquisition::Scan if n_samples > 1 => TAU * index as f64 / (n_samples - 1) as f64,
            Acquisition::Scan => 0.0,
            Acquisition::Locked(phi) => phi,
        }
    }
}

/// Everything needed to synthesize one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    pub acquisition: Acquisition,
    pub n_samples: usize,
    pub seed: u64,
    /// Resolution intervals averaged per displayed point (`RBW/VBW`).
    pub intervals_per_point: usize,
    pub state: BeamState,
    pub lo: LocalOscillator,
}

impl TraceConfig {
    pub fn new(state: BeamState, lo: LocalOscillator, acquisition: Acquisition, n_samples: usize, seed: u64) -> Self {
        Self {
            acquisition,
            n_samples,
            seed,
            intervals_per_point: 1,
            state,
            lo,
        }
    }

    pub fn with_intervals_per_point(mut self, k: usize) -> Self {
        self.intervals_per_point = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(invalid("n_samples", "must be at least 1"));
        }
        if self.intervals_per_point == 0 {
            return Err(invalid("intervals_per_point", "must be at least 1"));
        }
        if let Acquisition::Locked(phi) = self.acquisition {
            if !phi.is_finite() {
                return Err(invalid("locked phase", "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub index: usize,
    pub phi: f64,
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub points: Vec<TracePoint>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn linear_powers(&self) -> Vec<f64> {
        self.points.iter().map(|p| 10f64.powf(p.power_db / 10.0)).collect()
    }

    /// Mean linear power.
    pub fn mean_power(&self) -> f64 {
        let p = self.linear_powers();
        p.iter().sum::<f64>() / p.len() as f64
    }

    /// `10·log₁₀` of the mean linear power, as a level relative to shot noise.
    pub fn mean_level_db(&self) -> f64 {
        linear_to_db(self.mean_power())
    }

    /// Standard error of [`Trace::mean_power`] from the sample scatter.
    pub fn mean_power_std_error(&self) -> f64 {
        let p = self.linear_powers();
        let n = p.len() as f64;
        let mean = p.iter().sum::<f64>() / n;
        let var = p.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }

    /// CSV with header `index,phi_rad,power_db`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["index", "phi_rad", "power_db"])?;
        for p in &self.points {
            wtr.write_record([p.index.to_string(), p.phi.to_string(), p.power_db.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut points = Vec::new();
        for record in rdr.records() {
            let r = record?;
            let parse = |i: usize| -> Result<&str> {
                r.get(i).ok_or_else(|| invalid("trace csv", "short row"))
            };
            points.push(TracePoint {
                index: parse(0)?.parse().map_err(|e| invalid("trace csv", format!("{e}")))?,
                phi: parse(1)?.parse().map_err(|e| invalid("trace csv", format!("{e}")))?,
                power_db: parse(2)?.parse().map_err(|e| invalid("trace csv", format!("{e}")))?,
            });
        }
        Ok(Self { points })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Random stream for displayed point `index`.
fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn sample_point(outcome: &MeasurementOutcome, seed: u64, index: usize, k: usize) -> f64 {
    let mut rng = point_rng(seed, index);
    let sigma = outcome.noise_variance.sqrt();
    let mut acc = 0.0;
    for _ in 0..k {
        let g: f64 = StandardNormal.sample(&mut rng);
        let q = outcome.signal_mean + sigma * g;
        acc += q * q;
    }
    acc / k as f64
}

/// Synthesizes a trace on the current rayon pool.
pub fn simulate_homodyne_trace(cfg: &TraceConfig) -> Result<Trace> {
    cfg.validate()?;
    let locked = match cfg.acquisition {
        Acquisition::Locked(phi) => Some(homodyne_expectation(&cfg.state, &cfg.lo.with_phase(phi)?)),
        Acquisition::Scan => None,
    };
    let points = (0..cfg.n_samples)
        .into_par_iter()
        .map(|index| {
            let phi = cfg.acquisition.phase(index, cfg.n_samples);
            let outcome = match locked {
                Some(o) => o,
                None => homodyne_expectation(
                    &cfg.state,
                    &cfg.lo.with_phase(phi).expect("finite phase"),
                ),
            };
            let power = sample_point(&outcome, cfg.seed, index, cfg.intervals_per_point);
            TracePoint {
                index,
                phi,
                power_db: linear_to_db(power),
            }
        })
        .collect();
    Ok(Trace { points })
}

/// Least-squares fit of `A·cos²(φ − ψ) + B` to the linear power of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub amplitude: f64,
    /// Phase of the maximum, in `(-π/2, π/2]`.
    pub phase: f64,
    pub offset: f64,
    pub residual_rms: f64,
}

impl EnvelopeFit {
    /// Fraction of modulation power on the phase quadrature, `sin²ψ`
    /// (equivalently `tan²ψ = t/(1−t)`).
    pub fn tilt_fraction(&self) -> f64 {
        self.phase.sin().powi(2)
    }

    pub fn eval(&self, phi: f64) -> f64 {
        self.amplitude * (phi - self.phase).cos().powi(2) + self.offset
    }
}

/// Fits the modulation envelope of a scan.
///
/// With `reference` (a noise-only scan on the same phase grid), its power is
/// subtracted point by point first, which removes a phase-dependent
/// squeezed noise floor.
pub fn fit_modulation_envelope(trace: &Trace, reference: Option<&Trace>) -> Result<EnvelopeFit> {
    if trace.len() < 3 {
        return Err(invalid("trace", "envelope fit needs at least 3 points"));
    }
    let mut power = trace.linear_powers();
    if let Some(r) = reference {
        if r.len() != trace.len() {
            return Err(invalid("reference", "length differs from trace"));
        }
        for (p, q) in power.iter_mut().zip(r.linear_powers()) {
            *p -= q;
        }
    }
    // p = a0 + a1·cos2φ + a2·sin2φ
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for (pt, &p) in trace.points.iter().zip(&power) {
        let (s, c) = (2.0 * pt.phi).sin_cos();
        let row = [1.0, c, s];
        for i in 0..3 {
            atb[i] += row[i] * p;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let [a0, a1, a2] = solve3(ata, atb).ok_or_else(|| invalid("trace", "phases do not span the envelope"))?;
    let half = a1.hypot(a2);
    let amplitude = 2.0 * half;
    let phase = 0.5 * a2.atan2(a1);
    let offset = a0 - half;
    let ss: f64 = trace
        .points
        .iter()
        .zip(&power)
        .map(|(pt, &p)| {
            let (s, c) = (2.0 * pt.phi).sin_cos();
            (p - (a0 + a1 * c + a2 * s)).powi(2)
        })
        .sum();
    Ok(EnvelopeFit {
        amplitude,
        phase,
        offset,
        residual_rms: (ss / power.len() as f64).sqrt(),
    })
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    let scale: f64 = a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    if d.abs() <= 1e-12 * scale.powi(3) {
        return None;
    }
    let mut x = [0.0; 3];
    for (col, out) in x.iter_mut().enumerate() {
        let mut m = a;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *out = det(&m) / d;
    }
    Some(x)
}

//! Invariant suites behind the `selftest` command.
//!
//! Each suite returns a [`SuiteResult`] instead of panicking so a runner can
//! report every failure at once.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use crate::beam_state::{apply_loss, attenuate_variance, BeamState, QuadratureNoise};
use crate::detection::{flipped_mode_overlap, homodyne_expectation, split_detector_expectation, LocalOscillator};
use crate::hg_modes::{
    decompose_analytic, derivative_profile, hg_amplitudes, overlap, Basis, Parameter, SampledProfile,
};
use crate::quadrature::GaussHermite;
use crate::trace::{simulate_homodyne_trace, Acquisition, Trace, TraceConfig};

pub const ORTHONORMALITY_TOL: f64 = 1e-8;
pub const DERIVATIVE_TOL: f64 = 1e-5;
pub const CLOSED_FORM_TOL: f64 = 1e-8;
/// Composition of two losses equals one combined loss up to rounding.
pub const LOSS_COMPOSITION_TOL: f64 = 1e-14;
pub const GOLDEN_TOL: f64 = 1e-12;

/// Bundled golden trace, regenerated with `HOMODYNE_BLESS=1 cargo test -p homodyne-core bless_golden`.
pub const GOLDEN_TRACE_CSV: &str = include_str!("../golden/trace_seed7.csv");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

fn reference_basis() -> Basis {
    Basis::new(106e-6, 1.064e-6, 12).expect("valid reference basis")
}

/// `|⟨u_m, u_n⟩ − δ_mn|` over all pairs, integrated with the 128-node rule.
///
/// `mode_fn(n, x, w)` supplies the mode values so that a perturbed
/// implementation can be checked against the same threshold.
pub fn orthonormality_suite_with<F>(basis: &Basis, mode_fn: F) -> SuiteResult
where
    F: Fn(usize, f64, f64) -> f64,
{
    let rule = GaussHermite::default_rule();
    let w = basis.waist();
    let max = basis.max_order();
    let mut worst = 0.0f64;
    for m in 0..=max {
        for n in m..=max {
            let v = rule
                .integrate(w / SQRT_2, |x| Complex64::new(mode_fn(m, x, w) * mode_fn(n, x, w), 0.0))
                .re;
            let target = if m == n { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    SuiteResult::new(
        "hg_orthonormality",
        worst < ORTHONORMALITY_TOL,
        format!("max |<u_m,u_n> - delta| = {worst:.3e} for orders <= {max} (tol {ORTHONORMALITY_TOL:.0e})"),
    )
}

pub fn orthonormality_suite() -> SuiteResult {
    orthonormality_suite_with(&reference_basis(), |n, x, w| hg_amplitudes(n, x, w)[n])
}

/// Central difference of the shifted carrier against the displacement derivative mode.
pub fn derivative_identity_suite() -> SuiteResult {
    let basis = reference_basis();
    let w = basis.waist();
    let h = 1e-6 * w;
    let exact = derivative_profile(Parameter::Displacement, &basis);
    let fd = SampledProfile::from_fn(exact.x().to_vec(), |x| {
        let a = hg_amplitudes(0, x - h, w)[0];
        let b = hg_amplitudes(0, x + h, w)[0];
        Complex64::new((a - b) / (2.0 * h), 0.0)
    })
    .expect("finite samples");
    let diff = SampledProfile::new(
        exact.x().to_vec(),
        exact.values().iter().zip(fd.values()).map(|(a, b)| a - b).collect(),
    )
    .expect("finite samples");
    let rel = (diff.norm_sq() / exact.norm_sq()).sqrt();
    SuiteResult::new(
        "derivative_identity",
        rel < DERIVATIVE_TOL,
        format!("relative L2 error {rel:.3e} at h = 1e-6 w (tol {DERIVATIVE_TOL:.0e})"),
    )
}

/// Displaced-Gaussian coefficients against `exp(-α²/2) αⁿ/√n!` and the first-order `d/w`.
pub fn displaced_coefficients_suite() -> SuiteResult {
    let basis = reference_basis();
    let w = basis.waist();
    let mut worst_closed = 0.0f64;
    let mut first_order_ok = true;
    let mut worst_first = 0.0f64;
    for alpha in [1e-4, 1e-3, 1e-2, 0.05, 0.2, 0.5] {
        let d = alpha * w;
        let dec = match decompose_analytic(|x| Complex64::new(hg_amplitudes(0, x - d, w)[0], 0.0), &basis) {
            Ok(v) => v,
            Err(e) => return SuiteResult::new("displaced_coefficients", false, e.to_string()),
        };
        let mut fact = 1.0;
        for (n, c) in dec.coefficients.as_slice().iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = (-alpha * alpha / 2.0).exp() * alpha.powi(n as i32) / fact.sqrt();
            worst_closed = worst_closed.max((c - expected).norm());
        }
        if alpha <= 1e-2 {
            let c1 = dec.coefficients.as_slice()[1].re;
            let err = (c1 - alpha).abs();
            worst_first = worst_first.max(err / alpha.powi(3));
            first_order_ok &= err <= alpha.powi(3);
        }
    }
    SuiteResult::new(
        "displaced_coefficients",
        worst_closed < CLOSED_FORM_TOL && first_order_ok,
        format!(
            "closed-form error {worst_closed:.3e} (tol {CLOSED_FORM_TOL:.0e}); max |c1 - d/w|/(d/w)^3 = {worst_first:.3}"
        ),
    )
}

fn noise_grid() -> Vec<QuadratureNoise> {
    let mut out = Vec::new();
    for vm_db in [-12.0, -6.0, -3.6, -2.0, -0.5, 0.0] {
        for excess in [0.0, 1.0, 6.0] {
            for angle in [0.0, 0.4, FRAC_PI_2] {
                out.push(QuadratureNoise::from_db(vm_db, -vm_db + excess, angle).expect("valid grid point"));
            }
        }
    }
    out
}

const ETA_GRID: [f64; 7] = [0.0, 0.05, 0.3, 0.5, 0.8, 0.95, 1.0];

/// Loss keeps `V₋V₊ ≥ 1` for every state and never lowers the product of a
/// minimum-uncertainty state. (A mixed state can lose excess noise to vacuum.)
pub fn loss_uncertainty_suite() -> SuiteResult {
    let mut min_product = f64::INFINITY;
    let mut min_ratio_pure = f64::INFINITY;
    for n in noise_grid() {
        let pure = (n.uncertainty_product() - 1.0).abs() < 1e-12;
        for eta in ETA_GRID {
            let out = apply_loss(&n, eta).expect("eta in range");
            min_product = min_product.min(out.uncertainty_product());
            if pure {
                min_ratio_pure = min_ratio_pure.min(out.uncertainty_product() / n.uncertainty_product());
            }
        }
    }
    SuiteResult::new(
        "loss_uncertainty",
        min_product >= 1.0 - 1e-12 && min_ratio_pure >= 1.0 - 1e-12,
        format!("min product after loss {min_product:.6}; min ratio for pure states {min_ratio_pure:.6}"),
    )
}

pub fn loss_composition_suite() -> SuiteResult {
    let mut worst = 0.0f64;
    for n in noise_grid() {
        for e1 in ETA_GRID {
            for e2 in ETA_GRID {
                for v in [n.v_minus(), n.v_plus(), 0.0] {
                    let two = attenuate_variance(attenuate_variance(v, e1).unwrap(), e2).unwrap();
                    let one = attenuate_variance(v, e1 * e2).unwrap();
                    worst = worst.max((two - one).abs() / one.max(1.0));
                }
            }
        }
    }
    SuiteResult::new(
        "loss_composition",
        worst <= LOSS_COMPOSITION_TOL,
        format!("max relative deviation {worst:.3e} (tol {LOSS_COMPOSITION_TOL:.0e})"),
    )
}

/// Split-detector efficiency against the analytic flipped-mode overlap.
pub fn split_efficiency_suite() -> SuiteResult {
    let basis = Basis::new(106e-6, 1.064e-6, 8).expect("valid");
    let n = 9.1e9;
    let state = BeamState::coherent(n, basis)
        .and_then(|s| s.encode_displacement(basis.waist() / (2.0 * n.sqrt())))
        .expect("valid state");
    let split = split_detector_expectation(&state);
    let homo = homodyne_expectation(&state, &LocalOscillator::ideal(1, 0.0).expect("valid lo"));
    let ratio = split.snr_amplitude() / homo.snr_amplitude();
    let flipped = SampledProfile::from_fn(basis.default_grid(), |x| {
        let sign = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        Complex64::new(sign * hg_amplitudes(0, x, basis.waist())[0], 0.0)
    })
    .expect("finite");
    let numeric = overlap(&flipped, &basis.sample_mode(1).expect("order 1")).expect("same grid").re;
    let ok = (ratio - numeric).abs() < 1e-6 && (flipped_mode_overlap(1) - numeric).abs() < 1e-6;
    SuiteResult::new(
        "split_efficiency",
        ok,
        format!("detector ratio {ratio:.9}, quadrature overlap {numeric:.9}"),
    )
}

/// Small squeezed scan used by the determinism and golden-file suites.
pub fn golden_trace_config() -> TraceConfig {
    let basis = Basis::with_default_order(106e-6, 1.064e-6).expect("valid");
    let state = BeamState::coherent(9.1e9, basis)
        .and_then(|s| s.set_noise_mode_squeezing(1, -2.0, 8.0, 0.0))
        .and_then(|s| s.pzt_modulation(6.0, 0.9))
        .expect("valid state");
    TraceConfig::new(state, LocalOscillator::ideal(1, 0.0).expect("valid"), Acquisition::Scan, 256, 7)
        .with_intervals_per_point(8)
}

pub fn trace_determinism_suite() -> SuiteResult {
    let cfg = golden_trace_config();
    let runs: Vec<Trace> = [1usize, 2, 4]
        .iter()
        .map(|&threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("thread pool")
                .install(|| simulate_homodyne_trace(&cfg).expect("valid config"))
        })
        .collect();
    let same = runs.windows(2).all(|pair| {
        pair[0].len() == pair[1].len()
            && pair[0]
                .points
                .iter()
                .zip(&pair[1].points)
                .all(|(a, b)| a.power_db.to_bits() == b.power_db.to_bits() && a.phi.to_bits() == b.phi.to_bits())
    });
    SuiteResult::new(
        "trace_determinism",
        same,
        format!("{} points compared across 1, 2 and 4 threads", cfg.n_samples),
    )
}

pub fn golden_trace_suite() -> SuiteResult {
    let golden = match Trace::read_csv(GOLDEN_TRACE_CSV.as_bytes()) {
        Ok(t) => t,
        Err(e) => return SuiteResult::new("golden_trace", false, format!("unreadable golden file: {e}")),
    };
    let fresh = simulate_homodyne_trace(&golden_trace_config()).expect("valid config");
    if golden.len() != fresh.len() {
        return SuiteResult::new(
            "golden_trace",
            false,
            format!("golden has {} points, simulation {}", golden.len(), fresh.len()),
        );
    }
    let worst = golden
        .points
        .iter()
        .zip(&fresh.points)
        .map(|(g, f)| (g.power_db - f.power_db).abs().max((g.phi - f.phi).abs()))
        .fold(0.0f64, f64::max);
    SuiteResult::new(
        "golden_trace",
        worst <= GOLDEN_TOL,
        format!("max deviation {worst:.3e} dB over {} points", golden.len()),
    )
}

/// Runs every suite in a fixed order.
pub fn run_all() -> Vec<SuiteResult> {
    vec![
        orthonormality_suite(),
        derivative_identity_suite(),
        displaced_coefficients_suite(),
        loss_uncertainty_suite(),
        loss_composition_suite(),
        split_efficiency_suite(),
        trace_determinism_suite(),
        golden_trace_suite(),
    ]
}

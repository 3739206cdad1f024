//! Hermite-Gauss transverse modes along one axis.
//!
//! Conventions used throughout the crate:
//!
//! * `w` is the field-amplitude 1/e half-width, so the intensity of the
//!   fundamental mode falls as `exp(-2x²/w²)`.
//! * `u_n(x) = (2/(πw²))^(1/4) · H_n(√2·x/w) · exp(-x²/w²) / sqrt(2ⁿ n!)`, with
//!   `H_n` the physicists' Hermite polynomial. In particular
//!   `u_1 = (2x/w)·u_0 = -w·∂ₓu_0`, so a beam displaced by `+d` picks up a
//!   `+d/w` component on `u_1`.
//! * Profiles are normalized so that `∫|u|² dx = 1` (units m^(-1/2)).
//!
//! Overlaps of sampled profiles use composite Simpson integration on the
//! profile grid; [`decompose_analytic`] projects closures with the 128-node
//! Gauss-Hermite rule scaled to the basis waist. The two routes are independent
//! and are cross-checked in the tests.

use std::f64::consts::{PI, SQRT_2};
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, invalid, Error, Result};
use crate::quadrature::{integrate_sampled, GaussHermite};

pub const DEFAULT_MAX_ORDER: usize = 8;

/// Points in [`Basis::default_grid`]; odd so the Simpson rule applies and
/// `x = 0` is a node.
pub const DEFAULT_GRID_POINTS: usize = 4097;

/// Maximum allowed deviation of `∫|u|²dx` from one for inputs to [`decompose`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Hermite-Gauss frame: waist, wavelength and truncation order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Basis {
    waist: f64,
    wavelength: f64,
    max_order: usize,
}

impl Basis {
    pub fn new(waist: f64, wavelength: f64, max_order: usize) -> Result<Self> {
        ensure_positive("waist", waist)?;
        ensure_positive("wavelength", wavelength)?;
        if max_order < 1 {
            return Err(invalid("max_order", "must be at least 1"));
        }
        Ok(Self {
            waist,
            wavelength,
            max_order,
        })
    }

    /// Basis truncated at [`DEFAULT_MAX_ORDER`].
    pub fn with_default_order(waist: f64, wavelength: f64) -> Result<Self> {
        Self::new(waist, wavelength, DEFAULT_MAX_ORDER)
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Re-validates after deserialization.
    pub fn validated(self) -> Result<Self> {
        Self::new(self.waist, self.wavelength, self.max_order)
    }

    /// Uniform grid wide enough for every mode up to `max_order`.
    pub fn default_grid(&self) -> Vec<f64> {
        let half = self.waist * (10.0 + (2.0 * self.max_order as f64 + 1.0).sqrt());
        let step = 2.0 * half / (DEFAULT_GRID_POINTS - 1) as f64;
        (0..DEFAULT_GRID_POINTS)
            .map(|i| -half + step * i as f64)
            .collect()
    }

    /// Mode `n` sampled on [`Basis::default_grid`].
    pub fn sample_mode(&self, n: usize) -> Result<SampledProfile> {
        self.check_order(n)?;
        let grid = self.default_grid();
        let w = self.waist;
        SampledProfile::from_fn(grid, |x| Complex64::new(mode_value(n, x, w), 0.0))
    }

    fn check_order(&self, n: usize) -> Result<()> {
        if n > self.max_order {
            Err(Error::ModeOutOfRange {
                order: n,
                max_order: self.max_order,
            })
        } else {
            Ok(())
        }
    }
}

/// Value of the L²-normalized mode `u_n` at `x`.
pub fn hg_amplitude(n: usize, x: f64, basis: &Basis) -> Result<f64> {
    basis.check_order(n)?;
    if !x.is_finite() {
        return Err(invalid("x", format!("must be finite, got {x}")));
    }
    Ok(mode_value(n, x, basis.waist))
}

/// `[u_0(x), …, u_max(x)]` in one pass of the recurrence.
pub fn hg_amplitudes(max: usize, x: f64, waist: f64) -> Vec<f64> {
    let xi = SQRT_2 * x / waist;
    let norm = (SQRT_2 / waist).sqrt();
    let mut out = Vec::with_capacity(max + 1);
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    out.push(norm * cur);
    for j in 0..max {
        let jf = j as f64;
        let next = xi * (2.0 / (jf + 1.0)).sqrt() * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        out.push(norm * cur);
    }
    out
}

pub(crate) fn mode_value(n: usize, x: f64, waist: f64) -> f64 {
    hg_amplitudes(n, x, waist)[n]
}

/// A complex 1-D field sampled on a strictly increasing grid of positions (m).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    x: Vec<f64>,
    values: Vec<Complex64>,
}

impl SampledProfile {
    pub fn new(x: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if x.len() != values.len() {
            return Err(invalid(
                "profile",
                format!("{} positions but {} values", x.len(), values.len()),
            ));
        }
        if x.len() < 2 {
            return Err(invalid("profile", "needs at least two samples"));
        }
        if x.iter().any(|v| !v.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("profile", "contains non-finite values"));
        }
        if x.windows(2).any(|p| p[1] <= p[0]) {
            return Err(invalid("profile", "grid must be strictly increasing"));
        }
        Ok(Self { x, values })
    }

    pub fn from_fn<F>(x: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
    {
        let values = x.iter().map(|&p| f(p)).collect();
        Self::new(x, values)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `∫|u|² dx`.
    pub fn norm_sq(&self) -> f64 {
        let sq: Vec<Complex64> = self
            .values
            .iter()
            .map(|v| Complex64::new(v.norm_sqr(), 0.0))
            .collect();
        integrate_sampled(&self.x, &sq).re
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            x: self.x.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Linear interpolation onto `grid`; zero outside the sampled span.
    pub fn resample(&self, grid: &[f64]) -> Result<Self> {
        let values = grid
            .iter()
            .map(|&p| {
                if p < self.x[0] || p > self.x[self.x.len() - 1] {
                    return Complex64::new(0.0, 0.0);
                }
                let hi = self.x.partition_point(|&q| q < p).max(1);
                let lo = hi - 1;
                let t = (p - self.x[lo]) / (self.x[hi] - self.x[lo]);
                self.values[lo] * (1.0 - t) + self.values[hi] * t
            })
            .collect();
        Self::new(grid.to_vec(), values)
    }

    /// Reads `x,re` or `x,re,im` CSV with a header line.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let columns = rdr.headers()?.len();
        if !(2..=3).contains(&columns) {
            return Err(invalid(
                "profile csv",
                format!("expected 2 or 3 columns, found {columns}"),
            ));
        }
        let mut x = Vec::new();
        let mut values = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let field = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .ok_or_else(|| invalid("profile csv", format!("row {} too short", line + 1)))?
                    .parse::<f64>()
                    .map_err(|e| invalid("profile csv", format!("row {}: {e}", line + 1)))
            };
            x.push(field(0)?);
            let im = if columns == 3 { field(2)? } else { 0.0 };
            values.push(Complex64::new(field(1)?, im));
        }
        Self::new(x, values)
    }

    /// Writes three-column `x,re,im` CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["x", "re", "im"])?;
        for (x, v) in self.x.iter().zip(&self.values) {
            wtr.write_record([x.to_string(), v.re.to_string(), v.im.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// `∫ f*(x) g(x) dx` for profiles sampled on the same grid.
pub fn overlap(f: &SampledProfile, g: &SampledProfile) -> Result<Complex64> {
    if f.x != g.x {
        return Err(Error::GridMismatch {
            left: f.len(),
            right: g.len(),
        });
    }
    let prod: Vec<Complex64> = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| a.conj() * b)
        .collect();
    Ok(integrate_sampled(&f.x, &prod))
}

/// Like [`overlap`], but first resamples `g` onto the grid of `f`.
pub fn overlap_resampled(f: &SampledProfile, g: &SampledProfile) -> Result<Complex64> {
    if f.x == g.x {
        return overlap(f, g);
    }
    overlap(f, &g.resample(&f.x)?)
}

/// Complex amplitudes `c_0..=c_max` in a given basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients {
    basis: Basis,
    coefficients: Vec<Complex64>,
}

impl ModeCoefficients {
    pub fn new(basis: Basis, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != basis.max_order + 1 {
            return Err(invalid(
                "coefficients",
                format!(
                    "expected {} entries, got {}",
                    basis.max_order + 1,
                    coefficients.len()
                ),
            ));
        }
        let power: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
        if power > 1.0 + NORMALIZATION_TOLERANCE + 1e-9 {
            return Err(Error::NotNormalized {
                norm_sq: power,
                tolerance: NORMALIZATION_TOLERANCE,
            });
        }
        Ok(Self {
            basis,
            coefficients,
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn get(&self, n: usize) -> Option<Complex64> {
        self.coefficients.get(n).copied()
    }

    /// `Σ|c_n|²`.
    pub fn power(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Result of projecting a profile onto a truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub coefficients: ModeCoefficients,
    /// `∫|u|² − Σ|c_n|²`: the norm carried by modes above `max_order`.
    pub residual: f64,
}

/// Projects a sampled, normalized profile onto `basis`: `c_n = ⟨u_n, profile⟩`.
pub fn decompose(profile: &SampledProfile, basis: &Basis) -> Result<Decomposition> {
    let norm_sq = profile.norm_sq();
    check_normalized(norm_sq)?;
    let w = basis.waist;
    let modes: Vec<Vec<f64>> = profile
        .x
        .iter()
        .map(|&x| hg_amplitudes(basis.max_order, x, w))
        .collect();
    let coefficients = (0..=basis.max_order)
        .map(|n| {
            let prod: Vec<Complex64> = modes
                .iter()
                .zip(&profile.values)
                .map(|(u, v)| v * u[n])
                .collect();
            integrate_sampled(&profile.x, &prod)
        })
        .collect();
    finish(*basis, coefficients, norm_sq)
}

/// Projects an analytic profile with the default Gauss-Hermite rule.
///
/// The rule's Gaussian weight is matched to `|u_0|²`, so products
/// `u_n·f` of any displaced or scaled Gaussian `f` are integrated to round-off.
pub fn decompose_analytic<F>(f: F, basis: &Basis) -> Result<Decomposition>
where
    F: Fn(f64) -> Complex64,
{
    let rule = GaussHermite::default_rule();
    let scale = basis.waist / SQRT_2;
    let norm_sq = rule.integrate(scale, |x| Complex64::new(f(x).norm_sqr(), 0.0)).re;
    check_normalized(norm_sq)?;
    let w = basis.waist;
    let mut coefficients = vec![Complex64::new(0.0, 0.0); basis.max_order + 1];
    for (&xi, &sw) in rule.nodes().iter().zip(rule.scaled_weights()) {
        let x = scale * xi;
        let fx = f(x) * (sw * scale);
        for (c, u) in coefficients
            .iter_mut()
            .zip(hg_amplitudes(basis.max_order, x, w))
        {
            *c += fx * u;
        }
    }
    finish(*basis, coefficients, norm_sq)
}

fn check_normalized(norm_sq: f64) -> Result<()> {
    if (norm_sq - 1.0).abs() > NORMALIZATION_TOLERANCE {
        Err(Error::NotNormalized {
            norm_sq,
            tolerance: NORMALIZATION_TOLERANCE,
        })
    } else {
        Ok(())
    }
}

fn finish(basis: Basis, coefficients: Vec<Complex64>, norm_sq: f64) -> Result<Decomposition> {
    let coefficients = ModeCoefficients::new(basis, coefficients)?;
    let residual = norm_sq - coefficients.power();
    Ok(Decomposition {
        coefficients,
        residual,
    })
}

/// Beam parameter whose first-order derivative mode is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Displacement,
    Tilt,
}

/// Proportionality constant `k` in `∂u_0(p)/∂p = k·u_1`.
///
/// Displacement: `1/w`. Tilt: `i·πw/λ`.
pub fn derivative_coefficient(parameter: Parameter, basis: &Basis) -> Complex64 {
    match parameter {
        Parameter::Displacement => Complex64::new(1.0 / basis.waist, 0.0),
        Parameter::Tilt => Complex64::new(0.0, PI * basis.waist / basis.wavelength),
    }
}

/// `∂u_0(p)/∂p` at `p = 0`, sampled on the default grid.
pub fn derivative_profile(parameter: Parameter, basis: &Basis) -> SampledProfile {
    let k = derivative_coefficient(parameter, basis);
    basis
        .sample_mode(1)
        .expect("max_order >= 1 is a Basis invariant")
        .scaled(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_basis() -> Basis {
        Basis::new(1.0, 1.0, DEFAULT_MAX_ORDER).unwrap()
    }

    fn shifted_carrier(basis: &Basis, d: f64) -> SampledProfile {
        let w = basis.waist();
        SampledProfile::from_fn(basis.default_grid(), |x| {
            Complex64::new(mode_value(0, x - d, w), 0.0)
        })
        .unwrap()
    }

    // Reference values from 30-digit mpmath evaluation of the closed form,
    // with ∫u_0² dx = 1 confirmed by adaptive quadrature.
    #[test]
    fn amplitude_reference_values() {
        let b = unit_basis();
        assert_relative_eq!(hg_amplitude(0, 0.0, &b).unwrap(), 0.893_243_841_738_002_3, max_relative = 1e-14);
        assert_eq!(hg_amplitude(1, 0.0, &b).unwrap(), 0.0);
        assert_relative_eq!(hg_amplitude(0, 1.0, &b).unwrap(), 0.328_606_045_328_408_56, max_relative = 1e-14);
    }

    #[test]
    fn amplitude_rejects_bad_input() {
        let b = unit_basis();
        assert!(matches!(
            hg_amplitude(9, 0.0, &b),
            Err(Error::ModeOutOfRange { order: 9, max_order: 8 })
        ));
        assert!(hg_amplitude(0, f64::NAN, &b).is_err());
        assert!(hg_amplitude(0, f64::INFINITY, &b).is_err());
    }

    #[test]
    fn basis_validation() {
        assert!(Basis::new(0.0, 1.0, 4).is_err());
        assert!(Basis::new(1.0, -1.0, 4).is_err());
        assert!(Basis::new(1.0, 1.0, 0).is_err());
        assert!(Basis::new(f64::NAN, 1.0, 4).is_err());
    }

    #[test]
    fn first_mode_matches_closed_form() {
        let w = 2.5;
        let b = Basis::new(w, 1.0, 3).unwrap();
        for x in [-3.0, -0.7, 0.4, 2.0] {
            let u0 = (2.0 / (PI * w * w)).powf(0.25) * (-x * x / (w * w)).exp();
            assert_relative_eq!(hg_amplitude(1, x, &b).unwrap(), 2.0 * x / w * u0, max_relative = 1e-13);
        }
    }

    #[test]
    fn overlap_normalization_and_orthogonality() {
        let b = unit_basis();
        let u0 = b.sample_mode(0).unwrap();
        let u1 = b.sample_mode(1).unwrap();
        assert!((overlap(&u0, &u0).unwrap() - 1.0).norm() < 1e-10);
        assert!(overlap(&u0, &u1).unwrap().norm() < 1e-10);
    }

    #[test]
    fn split_overlap_is_sqrt_two_over_pi() {
        let b = unit_basis();
        let u1 = b.sample_mode(1).unwrap();
        let flipped = SampledProfile::from_fn(b.default_grid(), |x| {
            let sign = if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 };
            Complex64::new(sign * mode_value(0, x, 1.0), 0.0)
        })
        .unwrap();
        let v = overlap(&flipped, &u1).unwrap();
        assert!((v.re - 0.797_884_560_802_865_4).abs() < 1e-8, "{v}");
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn overlap_grid_mismatch() {
        let b = unit_basis();
        let u0 = b.sample_mode(0).unwrap();
        let coarse = SampledProfile::from_fn(
            (0..=400).map(|i| -10.0 + 0.05 * i as f64).collect(),
            |x| Complex64::new(mode_value(0, x, 1.0), 0.0),
        )
        .unwrap();
        assert!(matches!(overlap(&u0, &coarse), Err(Error::GridMismatch { .. })));
        let v = overlap_resampled(&u0, &coarse).unwrap();
        assert!((v.re - 1.0).abs() < 1e-3);
    }

    #[test]
    fn profile_validation() {
        assert!(SampledProfile::new(vec![0.0, 0.0], vec![Complex64::default(); 2]).is_err());
        assert!(SampledProfile::new(vec![0.0, 1.0], vec![Complex64::default(); 3]).is_err());
        assert!(SampledProfile::new(vec![0.0, 1.0], vec![Complex64::new(f64::NAN, 0.0); 2]).is_err());
    }

    #[test]
    fn decompose_basis_element() {
        let b = unit_basis();
        let d = decompose(&b.sample_mode(0).unwrap(), &b).unwrap();
        let c = d.coefficients.as_slice();
        assert!((c[0] - 1.0).norm() < 1e-10);
        assert!(c[1..].iter().all(|v| v.norm() < 1e-10));
        assert!(d.residual.abs() < 1e-10);
    }

    // Closed form c_n = exp(-α²/2) αⁿ/√n!, α = d/w; values cross-checked by
    // mpmath adaptive quadrature of ⟨u_n, u_0(x-d)⟩.
    #[test]
    fn decompose_displaced_gaussian() {
        let b = unit_basis();
        let d = decompose(&shifted_carrier(&b, 0.2), &b).unwrap();
        let c = d.coefficients.as_slice();
        let expected = [
            0.980_198_673_306_755_3,
            0.196_039_734_661_351_06,
            0.027_724_205_152_210_56,
            0.003_201_315_461_539_435,
        ];
        for (got, want) in c.iter().zip(expected) {
            assert!((got.re - want).abs() < 1e-10, "{got} vs {want}");
        }
        assert!(d.residual >= -1e-10 && d.residual < 1e-8);
    }

    #[test]
    fn decompose_first_order_ratio() {
        let b = unit_basis();
        let d = decompose(&shifted_carrier(&b, 1e-3), &b).unwrap();
        let c = d.coefficients.as_slice();
        let ratio = c[1].re / c[0].re;
        assert!((ratio - 1e-3).abs() / 1e-3 < 1e-6, "{ratio}");
    }

    #[test]
    fn decompose_routes_agree() {
        let b = Basis::new(3.0e-4, 1.064e-6, 6).unwrap();
        let d = 0.37 * b.waist();
        let sampled = decompose(&shifted_carrier(&b, d), &b).unwrap();
        let analytic = decompose_analytic(
            |x| Complex64::new(mode_value(0, x - d, b.waist()), 0.0),
            &b,
        )
        .unwrap();
        for (a, s) in analytic
            .coefficients
            .as_slice()
            .iter()
            .zip(sampled.coefficients.as_slice())
        {
            assert!((a - s).norm() < 1e-10);
        }
    }

    #[test]
    fn decompose_rejects_unnormalized() {
        let b = unit_basis();
        let p = b.sample_mode(0).unwrap().scaled(Complex64::new(1.01, 0.0));
        assert!(matches!(decompose(&p, &b), Err(Error::NotNormalized { .. })));
        assert!(decompose_analytic(|_| Complex64::new(0.0, 0.0), &b).is_err());
    }

    #[test]
    fn derivative_profiles() {
        let b = unit_basis();
        let u0 = b.sample_mode(0).unwrap();
        let u1 = b.sample_mode(1).unwrap();
        let disp = derivative_profile(Parameter::Displacement, &b);
        let c = overlap(&u1, &disp).unwrap();
        assert!((c - 1.0).norm() < 1e-10);
        assert!(overlap(&u0, &disp).unwrap().norm() < 1e-12);

        let exp = Basis::new(106e-6, 1.064e-6, 8).unwrap();
        let tilt = derivative_profile(Parameter::Tilt, &exp);
        let u1 = exp.sample_mode(1).unwrap();
        let c = overlap(&u1, &tilt).unwrap();
        assert!(c.re.abs() < 1e-8);
        assert_relative_eq!(c.im, 312.978_215_489_208_7, max_relative = 1e-10);
        assert!(overlap(&exp.sample_mode(0).unwrap(), &tilt).unwrap().norm() < 1e-8);
    }

    #[test]
    fn csv_round_trip_and_two_column() {
        let b = Basis::new(1.0, 1.0, 2).unwrap();
        let p = derivative_profile(Parameter::Tilt, &b);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let back = SampledProfile::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, p);

        let two = "x,re\n-1,0.5\n0,1\n1,0.5\n";
        let q = SampledProfile::read_csv(two.as_bytes()).unwrap();
        assert_eq!(q.len(), 3);
        assert_eq!(q.values()[1], Complex64::new(1.0, 0.0));
        assert!(SampledProfile::read_csv("x\n1\n2\n".as_bytes()).is_err());
        assert!(SampledProfile::read_csv("x,re\n1,abc\n2,1\n".as_bytes()).is_err());
    }
}

//! Numerical integration rules.
//!
//! Two independent routes are provided. [`GaussHermite`] integrates analytic
//! functions that carry their own Gaussian envelope; nodes are found by Newton
//! iteration on normalized Hermite functions so that neither the polynomial nor
//! the weight overflows at large order. [`integrate_sampled`] integrates values
//! already sampled on a grid (composite Simpson on uniform odd-length grids,
//! trapezoid otherwise).

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

/// Node count of the default Gauss-Hermite rule.
pub const DEFAULT_GH_NODES: usize = 128;

/// Gauss-Hermite rule for the weight `exp(-ξ²)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `weights[i] * exp(nodes[i]²)`, for integrands that are not factored.
    scaled_weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        const EPS: f64 = 3.0e-15;
        const MAX_ITER: usize = 100;
        let pim4 = PI.powf(-0.25);

        let mut nodes = vec![0.0; n];
        let mut scaled = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0_f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..MAX_ITER {
                let (p_n, p_nm1) = hermite_function_pair(n, z, pim4);
                pp = (2.0 * nf).sqrt() * p_nm1;
                let step = p_n / pp;
                z -= step;
                if step.abs() <= EPS * z.abs().max(1.0) {
                    let (_, p_nm1) = hermite_function_pair(n, z, pim4);
                    pp = (2.0 * nf).sqrt() * p_nm1;
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            let sw = 2.0 / (pp * pp);
            scaled[i] = sw;
            scaled[n - 1 - i] = sw;
        }
        // Ascending order.
        nodes.reverse();
        scaled.reverse();
        let weights = nodes
            .iter()
            .zip(&scaled)
            .map(|(x, sw)| sw * (-x * x).exp())
            .collect();
        Self {
            nodes,
            weights,
            scaled_weights: scaled,
        }
    }

    /// Shared 128-node rule.
    pub fn default_rule() -> &'static GaussHermite {
        static RULE: OnceLock<GaussHermite> = OnceLock::new();
        RULE.get_or_init(|| GaussHermite::new(DEFAULT_GH_NODES))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scaled_weights(&self) -> &[f64] {
        &self.scaled_weights
    }

    /// `∫ f(x) dx` over the real line with the substitution `x = scale·ξ`.
    ///
    /// `f` must decay at least like `exp(-x²/scale²)` for the rule to be accurate.
    pub fn integrate<F>(&self, scale: f64, f: F) -> Complex64
    where
        F: Fn(f64) -> Complex64,
    {
        let sum: Complex64 = self
            .nodes
            .iter()
            .zip(&self.scaled_weights)
            .map(|(&xi, &sw)| f(scale * xi) * sw)
            .sum();
        sum * scale
    }
}

/// Normalized Hermite functions `ψ_n(z)` and `ψ_{n-1}(z)` by upward recurrence.
fn hermite_function_pair(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4 * (-0.5 * z * z).exp();
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

/// Integration rule selected for a sampled grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampledRule {
    Simpson,
    Trapezoid,
}

/// Picks Simpson when the grid is uniform (to 1e-9 relative) with an odd point count.
pub fn rule_for_grid(x: &[f64]) -> SampledRule {
    if x.len() < 3 || x.len().is_multiple_of(2) {
        return SampledRule::Trapezoid;
    }
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    let uniform = x
        .windows(2)
        .all(|p| ((p[1] - p[0]) - h).abs() <= 1e-9 * h.abs());
    if uniform {
        SampledRule::Simpson
    } else {
        SampledRule::Trapezoid
    }
}

/// `∫ y dx` for samples `y` on grid `x` (same length, strictly increasing).
pub fn integrate_sampled(x: &[f64], y: &[Complex64]) -> Complex64 {
    debug_assert_eq!(x.len(), y.len());
    match x.len() {
        0 | 1 => Complex64::new(0.0, 0.0),
        _ => match rule_for_grid(x) {
            SampledRule::Simpson => {
                let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
                let last = y.len() - 1;
                let interior: Complex64 = y[1..last]
                    .iter()
                    .enumerate()
                    .map(|(i, v)| if i % 2 == 0 { v * 4.0 } else { v * 2.0 })
                    .sum();
                (y[0] + y[last] + interior) * (h / 3.0)
            }
            SampledRule::Trapezoid => x
                .windows(2)
                .zip(y.windows(2))
                .map(|(xs, ys)| (ys[0] + ys[1]) * (0.5 * (xs[1] - xs[0])))
                .sum(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_hermite_moments() {
        for n in [1, 2, 5, 20, 64, 128] {
            let rule = GaussHermite::new(n);
            let m0: f64 = rule.weights().iter().sum();
            assert_relative_eq!(m0, PI.sqrt(), max_relative = 1e-13);
            if n >= 2 {
                let m2: f64 = rule
                    .nodes()
                    .iter()
                    .zip(rule.weights())
                    .map(|(x, w)| w * x * x)
                    .sum();
                assert_relative_eq!(m2, PI.sqrt() / 2.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let rule = GaussHermite::default_rule();
        assert_eq!(rule.len(), DEFAULT_GH_NODES);
        assert!(rule.nodes().windows(2).all(|p| p[0] < p[1]));
        for (a, b) in rule.nodes().iter().zip(rule.nodes().iter().rev()) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn unfactored_gaussian_integral() {
        // ∫ exp(-x²/2) dx = sqrt(2π)
        let v = GaussHermite::default_rule()
            .integrate(1.0, |x| Complex64::new((-0.5 * x * x).exp(), 0.0));
        assert_relative_eq!(v.re, (2.0 * PI).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn simpson_exact_for_cubic() {
        let x: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let y: Vec<Complex64> = x.iter().map(|&t| Complex64::new(t * t * t, t)).collect();
        assert_eq!(rule_for_grid(&x), SampledRule::Simpson);
        let v = integrate_sampled(&x, &y);
        assert_relative_eq!(v.re, 0.25, max_relative = 1e-13);
        assert_relative_eq!(v.im, 0.5, max_relative = 1e-13);
    }

    #[test]
    fn trapezoid_on_irregular_grid() {
        let x = vec![0.0, 0.3, 1.0];
        let y: Vec<Complex64> = x.iter().map(|&t| Complex64::new(2.0 * t, 0.0)).collect();
        assert_eq!(rule_for_grid(&x), SampledRule::Trapezoid);
        assert_relative_eq!(integrate_sampled(&x, &y).re, 1.0, max_relative = 1e-14);
    }
}

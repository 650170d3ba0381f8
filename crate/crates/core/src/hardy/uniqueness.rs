use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::log_grid;
use crate::spaces::FactorSpace;

use super::constants::HardyPowerConstants;

/// Exponent of the anisotropic dilation `H_λ(x, y) = (λx, λ^β y)`.
pub const PROBE_BETA: f64 = 2.0;

/// Which limit the probe follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbePath {
    /// `s = tλ^{2−α}`, λ → 0 then s → 0.
    LambdaToZero,
    /// `s = t^{-b'} λ^{-α}`, λ → ∞ then s → 0.
    LambdaToInfinity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub path: ProbePath,
    pub lambda: f64,
    pub s: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessVerdict {
    pub alpha: f64,
    pub b: f64,
    pub b_prime: f64,
    /// `∫|x|^{-α} g²`.
    pub lhs: f64,
    /// Smallest `RHS / LHS` seen along each path.
    pub min_ratio_lambda_to_zero: f64,
    pub min_ratio_lambda_to_infinity: f64,
    /// Grid point with the smallest ratio below one, if any.
    pub violation: Option<Violation>,
}

/// Log-spaced probe grids, one point per half decade in λ and per tenth of
/// a decade in s.
pub fn default_probe_grids() -> (Vec<f64>, Vec<f64>) {
    (log_grid(1e-16, 1e16, 65), log_grid(1e-4, 1e4, 81))
}

/// The fixed probe function `g(x, y) = φ(x)φ(y)`, `φ(u) = exp(−1/(1−u²))`,
/// tabulated on a staggered grid over `(−1, 1)²`.
pub struct ProbeFunction {
    /// `‖g‖²`.
    norm_sq: f64,
    /// `‖∂ₓg‖²`.
    dx_energy: f64,
    /// `|x|` and `∫|∂_y g(x, y)|² dy · h_x` per x node.
    slices: Vec<(f64, f64)>,
    /// `|x|` and `∫g(x, y)² dy · h_x` per x node.
    mass: Vec<(f64, f64)>,
}

impl ProbeFunction {
    pub fn new(nodes: usize) -> Result<Self> {
        let phi = |u: f64| if u.abs() < 1.0 { (-1.0 / (1.0 - u * u)).exp() } else { 0.0 };
        let dphi = |u: f64| if u.abs() < 1.0 { phi(u) * (-2.0 * u / (1.0 - u * u).powi(2)) } else { 0.0 };
        let grid = FactorSpace::<f64>::lebesgue(-1.0, 1.0, nodes)?;
        let h = grid.spacing();
        let (mut p2, mut dp2) = (0.0, 0.0);
        for &u in grid.nodes() {
            p2 += h * phi(u).powi(2);
            dp2 += h * dphi(u).powi(2);
        }
        let slices = grid.nodes().iter().map(|&x| (x.abs(), h * phi(x).powi(2) * dp2)).collect();
        let mass = grid.nodes().iter().map(|&x| (x.abs(), h * phi(x).powi(2) * p2)).collect();
        Ok(Self { norm_sq: p2 * p2, dx_energy: dp2 * p2, slices, mass })
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn power_moment(&self, alpha: f64) -> f64 {
        self.mass.iter().map(|&(x, m)| m * x.powf(-alpha)).sum()
    }

    /// `(𝓛_λ g, g) = ‖∂ₓg‖² + λ^{2β−2} ∫ exp(−2λ^α/|x|^α) |∂_y g|²`.
    pub fn scaled_form(&self, alpha: f64, lambda: f64) -> f64 {
        let la = lambda.powf(alpha);
        let y: f64 = self.slices.iter().map(|&(x, e)| (-2.0 * la / x.powf(alpha)).exp() * e).sum();
        let y_part = if y == 0.0 { 0.0 } else { lambda.powf(2.0 * PROBE_BETA - 2.0) * y };
        self.dx_energy + y_part
    }
}

/// Traces the dilated inequality with exponent `b'` along both limit paths
/// and reports whether its right side drops below `∫|x|^{-α}g²`. Grid
/// points with `λ ≤ 1` use the first parametrization, those with `λ ≥ 1`
/// the second.
pub fn uniqueness_probe(
    alpha: f64,
    b_prime: f64,
    lambda_grid: &[f64],
    s_grid: &[f64],
    g: &ProbeFunction,
) -> Result<UniquenessVerdict> {
    if !(b_prime > 0.0) {
        return Err(invalid("b' must be positive"));
    }
    if lambda_grid.iter().chain(s_grid).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(invalid("probe grids must be positive"));
    }
    let c = HardyPowerConstants::new(alpha)?;
    let lhs = g.power_moment(alpha);
    let n = g.norm_sq();
    let mut min = [f64::INFINITY; 2];
    let mut worst: Option<(f64, Violation)> = None;
    for &lambda in lambda_grid {
        let q = g.scaled_form(alpha, lambda);
        let e1 = (2.0 - alpha) * (b_prime - c.b);
        let e2 = 2.0 - alpha - alpha / b_prime;
        for &s in s_grid {
            let r1 = s * q + c.c3 * s.powf(-b_prime) * lambda.powf(e1) * n;
            let r2 = s.powf(-1.0 / b_prime) * lambda.powf(e2) * q + c.c3 * s * n;
            let paths =
                [(ProbePath::LambdaToZero, r1, lambda <= 1.0), (ProbePath::LambdaToInfinity, r2, lambda >= 1.0)];
            for (k, (path, rhs, _)) in paths.into_iter().enumerate().filter(|(_, p)| p.2) {
                let ratio = rhs / lhs;
                if ratio.is_nan() {
                    continue;
                }
                min[k] = min[k].min(ratio);
                if ratio < 1.0 && worst.as_ref().is_none_or(|(w, _)| ratio < *w) {
                    worst = Some((ratio, Violation { path, lambda, s, rhs }));
                }
            }
        }
    }
    Ok(UniquenessVerdict {
        alpha,
        b: c.b,
        b_prime,
        lhs,
        min_ratio_lambda_to_zero: min[0],
        min_ratio_lambda_to_infinity: min[1],
        violation: worst.map(|(_, v)| v),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe(alpha: f64, shift: f64) -> UniquenessVerdict {
        let (l, s) = default_probe_grids();
        let g = ProbeFunction::new(2048).unwrap();
        let b = HardyPowerConstants::exponent(alpha);
        uniqueness_probe(alpha, b + shift, &l, &s, &g).unwrap()
    }

    #[test]
    fn exact_exponent_clears() {
        for alpha in [0.25, 0.5, 0.75] {
            let v = probe(alpha, 0.0);
            assert!(v.violation.is_none(), "{v:?}");
        }
    }

    #[test]
    fn larger_exponent_fails_as_lambda_shrinks() {
        for shift in [0.1, 0.2] {
            let v = probe(0.5, shift);
            assert_eq!(v.violation.unwrap().path, ProbePath::LambdaToZero);
        }
    }

    #[test]
    fn smaller_exponent_fails_as_lambda_grows() {
        for shift in [-0.1, -0.2] {
            let v = probe(0.5, shift);
            assert_eq!(v.violation.as_ref().unwrap().path, ProbePath::LambdaToInfinity, "{v:?}");
        }
    }

    #[test]
    fn form_tends_to_x_energy_at_both_ends() {
        let g = ProbeFunction::new(512).unwrap();
        let base = g.scaled_form(0.5, 1e-16);
        assert!((g.scaled_form(0.5, 1e16) - base).abs() < 1e-12 * base);
        assert!(g.scaled_form(0.5, 1.0) > base);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{golden_min, safeguarded_newton};
use crate::scalar::Real;

/// Constants of `∫|x|^{-α} f² ≤ t‖f'‖² + c₃ t^{-b} ‖f‖²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct HardyPowerConstants<T: Real> {
    pub alpha: T,
    pub b: T,
    pub c1: T,
    pub c2: T,
    pub c3: T,
}

impl<T: Real> HardyPowerConstants<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(invalid(format!("alpha out of range: {alpha} is not in (0, 1)")));
        }
        let b = Self::exponent(alpha);
        let one_minus = T::one() - alpha;
        let c1 = T::lit(3.0) / one_minus;
        let c2 = (T::lit(4.0) - alpha) / one_minus;
        Ok(Self { alpha, b, c1, c2, c3: c2 * c1.powf(b) })
    }

    /// `b = α / (2 − α)`.
    pub fn exponent(alpha: T) -> T {
        alpha / (T::lit(2.0) - alpha)
    }

    /// `δ` with `t = c₁ δ^{2−α}`.
    pub fn delta_for(&self, t: T) -> T {
        (t / self.c1).powf((T::lit(2.0) - self.alpha).recip())
    }
}

/// Minimizer and minimum of `u ↦ u^{-1/2} eᵘ` on `u > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogConstant {
    pub u_star: f64,
    pub value: f64,
}

/// Minimizes `u^{-1/2} eᵘ` through its logarithm `φ(u) = u − ½ ln u`:
/// golden-section bracketing followed by safeguarded Newton on `φ'`.
pub fn optimize_log_constant() -> LogConstant {
    let phi = |u: f64| u - 0.5 * u.ln();
    let rough = golden_min(phi, 1e-3, 10.0, 1e-6);
    let u = safeguarded_newton(|u| 1.0 - 0.5 / u, |u| 0.5 / (u * u), rough, 1e-3, 10.0);
    LogConstant { u_star: u, value: phi(u).exp() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_alpha_constants() {
        let c = HardyPowerConstants::new(0.5f64).unwrap();
        assert_eq!(c.b, 1.0 / 3.0);
        assert_eq!(c.b, HardyPowerConstants::exponent(c.alpha));
        assert_eq!(c.c1, 6.0);
        assert_eq!(c.c2, 7.0);
        assert!((c.c3 - 7.0 * 6f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn alpha_range() {
        assert!(HardyPowerConstants::new(1.2f64).is_err());
        assert!(HardyPowerConstants::new(1.0f64).is_err());
        assert!(HardyPowerConstants::new(0.0f64).is_err());
    }

    #[test]
    fn log_constant() {
        let r = optimize_log_constant();
        assert!((r.value - (2.0 * std::f64::consts::E).sqrt()).abs() <= 1e-10);
        assert!((r.u_star - 0.5).abs() <= 1e-8);
        let obj = |u: f64| u.powf(-0.5) * u.exp();
        assert!(obj(r.u_star) < obj(0.9 * r.u_star) && obj(r.u_star) < obj(1.1 * r.u_star));
    }
}

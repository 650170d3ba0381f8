use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Defective Gross inequality `Ent(f²) ≤ a ∫Γ(f) + b ‖f‖²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GrossPair<T: Real> {
    pub a: T,
    pub b: T,
    pub label: String,
}

impl<T: Real> GrossPair<T> {
    /// Requires `a > 0` and `b ≥ 0`.
    pub fn new(a: T, b: T, label: impl Into<String>) -> Result<Self> {
        if !(b >= T::zero()) {
            return Err(invalid(format!("b = {b} is negative; use GrossPair::allowing_negative_b to opt in")));
        }
        Self::allowing_negative_b(a, b, label)
    }

    /// Same as [`GrossPair::new`] but accepts any finite real `b`.
    pub fn allowing_negative_b(a: T, b: T, label: impl Into<String>) -> Result<Self> {
        if !(a > T::zero() && a.is_finite()) {
            return Err(invalid(format!("a must be positive, got {a}")));
        }
        if !b.is_finite() {
            return Err(invalid("b must be finite"));
        }
        Ok(Self { a, b, label: label.into() })
    }

    fn tight(a: T, label: &str) -> Self {
        Self { a, b: T::zero(), label: label.to_string() }
    }

    /// Standard Gaussian measure on ℝⁿ.
    pub fn gaussian() -> Self {
        Self::tight(T::lit(2.0), "gaussian")
    }

    /// Normalized uniform measure on the torus.
    pub fn torus() -> Self {
        Self::tight(T::lit(2.0), "torus")
    }

    /// `dx/L` on `[0, L]` without boundary conditions.
    pub fn uniform_interval(length: T) -> Result<Self> {
        positive(length, "L")?;
        Ok(Self::tight(T::lit(2.0) * length * length / (T::PI() * T::PI()), "uniform_interval"))
    }

    /// `dx/L` on `[0, L]` with periodic boundary conditions.
    pub fn periodic_interval(length: T) -> Result<Self> {
        positive(length, "L")?;
        Ok(Self::tight(length * length / (T::lit(2.0) * T::PI() * T::PI()), "periodic_interval"))
    }

    /// `Z⁻¹ sin(x/2)^{2γ}` on `(0, 2π)`, `γ > 1/2`.
    pub fn weighted_sine(gamma: T) -> Result<Self> {
        if !(gamma > T::lit(0.5)) {
            return Err(invalid("weighted sine pair requires γ > 1/2"));
        }
        Ok(Self::tight(T::lit(8.0) / (T::one() + T::lit(2.0) * gamma), "weighted_sine"))
    }

    /// `Z⁻¹ (1−x)^{2α} (1+x)^{2β}` on `(−1, 1)`, `min(α, β) > 1/2`.
    pub fn jacobi(alpha: T, beta: T) -> Result<Self> {
        let (g, d) = (alpha.min(beta), alpha.max(beta));
        if !(g > T::lit(0.5)) {
            return Err(invalid("jacobi pair requires min(α, β) > 1/2"));
        }
        Ok(Self::tight(d / (g * (T::one() + T::lit(2.0) * d)), "jacobi"))
    }

    /// Ultraspherical measure with `Γ(f) = (1 − x²)|f'|²`, `λ > −1/2`.
    pub fn ultraspherical(lambda: T) -> Result<Self> {
        if !(lambda > T::lit(-0.5)) {
            return Err(invalid("ultraspherical pair requires λ > -1/2"));
        }
        Ok(Self::tight(T::lit(2.0) / (T::lit(2.0) * lambda + T::one()), "ultraspherical"))
    }

    /// Lebesgue measure on ℝⁿ at the parameter where the flat profile vanishes.
    pub fn flat_lebesgue() -> Self {
        Self::tight((T::PI() * T::E() * T::E()).recip(), "flat_lebesgue")
    }

    /// Normalized Lebesgue measure on a domain of volume `|Ω|` in ℝⁿ.
    pub fn domain(n: usize, volume: T) -> Result<Self> {
        positive(volume, "volume")?;
        if n == 0 {
            return Err(invalid("dimension must be ≥ 1"));
        }
        let a = volume.powf(T::lit(2.0) / T::from_usize_lossy(n)) / (T::PI() * T::E() * T::E());
        Ok(Self::tight(a, "domain"))
    }
}

fn positive<T: Real>(v: T, name: &str) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive")))
    }
}

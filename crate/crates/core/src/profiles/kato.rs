use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::composite_gl;
use crate::scalar::Real;

/// `c_n = π^{n/2} / Γ(n/2 − 1)`, the normalization turning a Kato norm into
/// the ratio used by the Schrödinger profile.
pub fn kato_constant(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(invalid("Kato constant defined for n ≥ 3"));
    }
    let h = n as f64 / 2.0;
    Ok(std::f64::consts::PI.powf(h) / libm::tgamma(h - 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct KatoNorm<T: Real> {
    pub value: T,
    pub argmax_radius: T,
    /// `(|x|, ∫|V(y)|/|x−y| dy)` for every probe.
    pub per_probe: Vec<(T, T)>,
}

const ORDER: usize = 8;
const SUB: usize = 8;

/// Kato norm of a radial potential on ℝ³ supported in `|y| ≤ truncation`.
///
/// The angular integral is done in closed form, leaving
/// `4π ∫₀^R |V(r)| r² / max(r, |x|) dr` for a probe at `|x|`. The radial
/// integral uses Gauss–Legendre panels split at `breakpoints` and at `|x|`;
/// it is repeated with 2× and 4× the panels and flagged as divergent when
/// the second correction is not clearly smaller than the first.
pub fn kato_norm_radial<T: Real>(
    v: impl Fn(T) -> T,
    n: usize,
    truncation: T,
    breakpoints: &[T],
    probe_radii: &[T],
) -> Result<KatoNorm<T>> {
    if n != 3 {
        return Err(invalid("radial Kato norm implemented for n = 3 only"));
    }
    if !(truncation > T::zero()) {
        return Err(invalid("truncation radius must be positive"));
    }
    if probe_radii.is_empty() || probe_radii.iter().any(|&s| !(s >= T::zero())) {
        return Err(invalid("probe radii must be nonnegative and nonempty"));
    }
    let four_pi = T::lit(4.0) * T::PI();
    let mut per_probe = Vec::with_capacity(probe_radii.len());
    let (mut best, mut argmax) = (T::neg_infinity(), T::zero());
    for &s in probe_radii {
        let mut breaks: Vec<T> = vec![T::zero(), truncation];
        breaks.extend(breakpoints.iter().copied().filter(|&b| b > T::zero() && b < truncation));
        if s > T::zero() && s < truncation {
            breaks.push(s);
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        breaks.dedup();
        let integrand = |r: T| v(r).abs() * r * r / r.max(s);
        let i1 = composite_gl(integrand, &breaks, ORDER, SUB);
        let i2 = composite_gl(integrand, &breaks, ORDER, 2 * SUB);
        let i4 = composite_gl(integrand, &breaks, ORDER, 4 * SUB);
        let (d1, d2) = ((i2 - i1).abs(), (i4 - i2).abs());
        if !i4.is_finite() || (d2 > T::lit(0.75) * d1 && d2 > T::lit(1e-12) * (T::one() + i4.abs())) {
            return Err(Error::NotKato(format!("probe |x| = {s}: successive corrections {d1:e}, {d2:e}")));
        }
        let val = four_pi * i4;
        per_probe.push((s, val));
        if val > best {
            best = val;
            argmax = s;
        }
    }
    Ok(KatoNorm { value: best, argmax_radius: argmax, per_probe })
}

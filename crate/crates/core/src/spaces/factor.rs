use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Scalar function of one real variable.
pub type Fn1<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

pub const MIN_NODES: usize = 16;

/// A one-dimensional discretized measure space `(X, w(x) dx)` carrying a
/// carré du champ of the form `Γ(f) = g(x) |f'(x)|²`.
///
/// Nodes are cell midpoints when `staggered` (the default), so endpoint and
/// interior singularities lying on cell faces are never evaluated. The
/// unstaggered layout uses the endpoints and trapezoid weights.
#[derive(Clone)]
pub struct FactorSpace<T: Real> {
    lo: T,
    hi: T,
    node_count: usize,
    staggered: bool,
    label: String,
    measure_weight: Fn1<T>,
    gamma_weight: Fn1<T>,
    nodes: Vec<T>,
    quad_weights: Vec<T>,
    gammas: Vec<T>,
}

impl<T: Real> fmt::Debug for FactorSpace<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FactorSpace")
            .field("label", &self.label)
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("node_count", &self.node_count)
            .field("staggered", &self.staggered)
            .finish()
    }
}

impl<T: Real> FactorSpace<T> {
    /// Lebesgue measure on `[lo, hi]` with `Γ(f) = |f'|²`.
    pub fn lebesgue(lo: T, hi: T, node_count: usize) -> Result<Self> {
        let one: Fn1<T> = Arc::new(|_| T::one());
        Self::build("lebesgue", lo, hi, node_count, true, one.clone(), one)
    }

    /// Standard Gaussian density on `[-radius, radius]`.
    pub fn gaussian(radius: T, node_count: usize) -> Result<Self> {
        let norm = (T::lit(2.0) * T::PI()).sqrt().recip();
        let w: Fn1<T> = Arc::new(move |x: T| norm * (-x * x / T::lit(2.0)).exp());
        Self::lebesgue(-radius, radius, node_count)?.with_measure("gaussian", w)
    }

    /// Normalized uniform measure on the circle `[-π, π]`.
    pub fn torus(node_count: usize) -> Result<Self> {
        let inv = (T::lit(2.0) * T::PI()).recip();
        Self::lebesgue(-T::PI(), T::PI(), node_count)?.with_measure("torus", Arc::new(move |_| inv))
    }

    /// Normalized uniform measure `dx / L` on `[0, L]`.
    pub fn uniform_interval(length: T, node_count: usize) -> Result<Self> {
        if !(length > T::zero()) {
            return Err(Error::InvalidSpace("interval length must be positive".into()));
        }
        let inv = length.recip();
        Self::lebesgue(T::zero(), length, node_count)?.with_measure("uniform", Arc::new(move |_| inv))
    }

    /// Ultraspherical probability measure `A_λ (1 - x²)^{λ - 1/2} dx` on
    /// `[-1, 1]` with the degenerate gradient `Γ(f) = (1 - x²)|f'|²`.
    pub fn ultraspherical(lambda: T, node_count: usize) -> Result<Self> {
        if !(lambda > T::lit(-0.5)) {
            return Err(Error::InvalidSpace("ultraspherical requires λ > -1/2".into()));
        }
        let l = lambda.to_f64_lossy();
        let a = T::lit(libm::tgamma(l + 1.0) / (std::f64::consts::PI.sqrt() * libm::tgamma(l + 0.5)));
        let p = lambda - T::lit(0.5);
        let w: Fn1<T> = Arc::new(move |x: T| a * (T::one() - x * x).powf(p));
        let g: Fn1<T> = Arc::new(|x: T| T::one() - x * x);
        Self::lebesgue(-T::one(), T::one(), node_count)?.with_measure("ultraspherical", w)?.with_gamma(g)
    }

    /// `Z⁻¹ sin(x/2)^{2γ} dx` on `(0, 2π)`.
    pub fn weighted_sine(gamma: T, node_count: usize) -> Result<Self> {
        if !(gamma > T::zero()) {
            return Err(Error::InvalidSpace("weighted sine requires γ > 0".into()));
        }
        let g = gamma.to_f64_lossy();
        let z = 2.0 * std::f64::consts::PI.sqrt() * libm::tgamma(g + 0.5) / libm::tgamma(g + 1.0);
        let inv_z = T::lit(1.0 / z);
        let two_gamma = gamma + gamma;
        let w: Fn1<T> = Arc::new(move |x: T| inv_z * (x / T::lit(2.0)).sin().powf(two_gamma));
        Self::lebesgue(T::zero(), T::lit(2.0) * T::PI(), node_count)?.with_measure("weighted_sine", w)
    }

    /// `Z⁻¹ (1 - x)^{2α} (1 + x)^{2β} dx` on `(-1, 1)`.
    pub fn jacobi(alpha: T, beta: T, node_count: usize) -> Result<Self> {
        if !(alpha > T::zero() && beta > T::zero()) {
            return Err(Error::InvalidSpace("jacobi weight requires α, β > 0".into()));
        }
        let (a, b) = (alpha.to_f64_lossy(), beta.to_f64_lossy());
        let beta_fn = libm::tgamma(2.0 * a + 1.0) * libm::tgamma(2.0 * b + 1.0) / libm::tgamma(2.0 * a + 2.0 * b + 2.0);
        let z = 2f64.powf(2.0 * a + 2.0 * b + 1.0) * beta_fn;
        let inv_z = T::lit(1.0 / z);
        let (pa, pb) = (alpha + alpha, beta + beta);
        let w: Fn1<T> = Arc::new(move |x: T| inv_z * (T::one() - x).powf(pa) * (T::one() + x).powf(pb));
        Self::lebesgue(-T::one(), T::one(), node_count)?.with_measure("jacobi", w)
    }

    /// `dr / r` on `[r_lo, r_hi] ⊂ (0, ∞)` with `Γ(f) = r² |f'|²`.
    pub fn log_half_line(r_lo: T, r_hi: T, node_count: usize) -> Result<Self> {
        if !(r_lo > T::zero()) {
            return Err(Error::InvalidSpace("support reaches r = 0".into()));
        }
        Self::lebesgue(r_lo, r_hi, node_count)?
            .with_measure("dr/r", Arc::new(|r: T| r.recip()))?
            .with_gamma(Arc::new(|r: T| r * r))
    }

    pub fn with_measure(self, label: impl Into<String>, w: Fn1<T>) -> Result<Self> {
        Self::build(&label.into(), self.lo, self.hi, self.node_count, self.staggered, w, self.gamma_weight)
    }

    pub fn with_gamma(self, g: Fn1<T>) -> Result<Self> {
        Self::build(&self.label, self.lo, self.hi, self.node_count, self.staggered, self.measure_weight, g)
    }

    /// Switches to endpoint nodes with trapezoid weights.
    pub fn unstaggered(self) -> Result<Self> {
        Self::build(&self.label, self.lo, self.hi, self.node_count, false, self.measure_weight, self.gamma_weight)
    }

    /// Same space with twice as many cells.
    pub fn refined(&self) -> Result<Self> {
        self.with_node_count(self.node_count * 2)
    }

    pub fn with_node_count(&self, node_count: usize) -> Result<Self> {
        Self::build(
            &self.label,
            self.lo,
            self.hi,
            node_count,
            self.staggered,
            self.measure_weight.clone(),
            self.gamma_weight.clone(),
        )
    }

    /// Same node layout on `[lo·s + shift, hi·s + shift]`. Used to pull a grid
    /// back through an affine change of variables.
    pub fn affine_image(&self, scale: T, shift: T) -> Result<Self> {
        let (a, b) = (self.lo * scale + shift, self.hi * scale + shift);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        Self::build(
            &self.label,
            lo,
            hi,
            self.node_count,
            self.staggered,
            self.measure_weight.clone(),
            self.gamma_weight.clone(),
        )
    }

    fn build(
        label: &str,
        lo: T,
        hi: T,
        node_count: usize,
        staggered: bool,
        measure_weight: Fn1<T>,
        gamma_weight: Fn1<T>,
    ) -> Result<Self> {
        if node_count < MIN_NODES {
            return Err(Error::InvalidSpace(format!("node_count {node_count} < {MIN_NODES}")));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidSpace(format!("bad interval [{lo}, {hi}]")));
        }
        let h = (hi - lo) / T::from_usize_lossy(node_count);
        let (nodes, base): (Vec<T>, Vec<T>) = if staggered {
            (0..node_count).map(|i| (lo + (T::from_usize_lossy(i) + T::lit(0.5)) * h, h)).unzip()
        } else {
            (0..=node_count)
                .map(|i| {
                    let w = if i == 0 || i == node_count { h / T::lit(2.0) } else { h };
                    (lo + T::from_usize_lossy(i) * h, w)
                })
                .unzip()
        };
        let mut quad_weights = Vec::with_capacity(nodes.len());
        let mut gammas = Vec::with_capacity(nodes.len());
        for (&x, &b) in nodes.iter().zip(&base) {
            let w = measure_weight(x);
            if !w.is_finite() || w < T::zero() {
                return Err(Error::NonFinite { what: "measure weight", coords: vec![x.to_f64_lossy()] });
            }
            let g = gamma_weight(x);
            if !g.is_finite() || g < T::zero() {
                return Err(Error::NonFinite { what: "gamma weight", coords: vec![x.to_f64_lossy()] });
            }
            quad_weights.push(b * w);
            gammas.push(g);
        }
        Ok(Self {
            lo,
            hi,
            node_count,
            staggered,
            label: label.to_string(),
            measure_weight,
            gamma_weight,
            nodes,
            quad_weights,
            gammas,
        })
    }

    /// Checks that the measure has unit mass to within `tol`.
    pub fn check_probability(&self, tol: T) -> Result<T> {
        let mass = self.mass();
        if (mass - T::one()).abs() > tol {
            return Err(Error::InvalidSpace(format!(
                "{}: probability mass {mass} deviates from 1 by more than {tol}",
                self.label
            )));
        }
        Ok(mass)
    }

    pub fn mass(&self) -> T {
        self.quad_weights.iter().copied().sum()
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn spacing(&self) -> T {
        (self.hi - self.lo) / T::from_usize_lossy(self.node_count)
    }

    pub fn is_staggered(&self) -> bool {
        self.staggered
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Quadrature weights `h·w(x_i)` (trapezoid-halved at endpoints when unstaggered).
    pub fn quad_weights(&self) -> &[T] {
        &self.quad_weights
    }

    pub fn gammas(&self) -> &[T] {
        &self.gammas
    }

    pub fn measure_weight(&self, x: T) -> T {
        (self.measure_weight)(x)
    }

    pub fn gamma_weight(&self, x: T) -> T {
        (self.gamma_weight)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_coarse_grids() {
        assert!(FactorSpace::<f64>::lebesgue(0.0, 1.0, 15).is_err());
        assert!(FactorSpace::<f64>::lebesgue(1.0, 1.0, 32).is_err());
    }

    #[test]
    fn staggered_nodes_avoid_faces() {
        let s = FactorSpace::<f64>::lebesgue(-1.0, 1.0, 64).unwrap();
        assert!(s.nodes().iter().all(|x| x.abs() > 1e-3));
        assert_eq!(s.nodes().len(), 64);
        let u = s.clone().unstaggered().unwrap();
        assert_eq!(u.nodes().len(), 65);
        assert!((u.mass() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_measure_rejected_when_node_hits_singularity() {
        let w: Fn1<f64> = Arc::new(|x: f64| x.abs().ln().abs());
        let s = FactorSpace::lebesgue(-1.0, 1.0, 64).unwrap();
        assert!(s.clone().with_measure("log", w.clone()).is_ok());
        let u = s.unstaggered().unwrap();
        assert!(u.with_measure("log", w).is_err());
    }

    #[test]
    fn probability_factors_have_unit_mass() {
        FactorSpace::<f64>::gaussian(8.0, 512).unwrap().check_probability(1e-8).unwrap();
        FactorSpace::<f64>::torus(64).unwrap().check_probability(1e-12).unwrap();
        FactorSpace::<f64>::uniform_interval(3.0, 64).unwrap().check_probability(1e-12).unwrap();
        FactorSpace::<f64>::ultraspherical(1.5, 4096).unwrap().check_probability(1e-5).unwrap();
        FactorSpace::<f64>::weighted_sine(1.0, 4096).unwrap().check_probability(1e-6).unwrap();
        FactorSpace::<f64>::jacobi(0.75, 1.0, 4096).unwrap().check_probability(1e-5).unwrap();
    }

    #[test]
    fn works_in_single_precision() {
        let s = FactorSpace::<f32>::gaussian(8.0, 256).unwrap();
        assert!((s.mass() - 1.0).abs() < 1e-5);
    }
}

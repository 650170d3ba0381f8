use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::composer::{InequalityReport, SemiDirectLSI};
use crate::error::{invalid, Error, Result};
use crate::profiles::Profile;
use crate::scalar::Real;
use crate::spaces::{FactorSpace, FnN, ProductSpace, TestFunction, Weight};

/// `ℝ × ℝ^Q` in coordinates `(a, n)` with Lebesgue measure and weights
/// `Nᵢ = eᵃ`, truncated to `[−a_r, a_r] × [−n_r, n_r]^Q`.
pub fn metabelian_space<T: Real>(q: usize, a_r: T, n_r: T, nodes: usize) -> Result<ProductSpace<T>> {
    if q == 0 {
        return Err(invalid("Q must be at least 1"));
    }
    let mut factors = vec![FactorSpace::lebesgue(-a_r, a_r, nodes)?];
    for _ in 0..q {
        factors.push(FactorSpace::lebesgue(-n_r, n_r, nodes)?);
    }
    let weights = (0..q).map(|_| Weight::new("e^a", Arc::new(|p: &[T]| p[0].exp()))).collect();
    ProductSpace::new(factors, weights)
}

/// Flat one-dimensional profiles in every slot, so that the composed
/// profile is `−(Q+1)/2 · ln(πe²t) − Q·a`.
pub fn metabelian_lsi<T: Real>(space: ProductSpace<T>) -> Result<SemiDirectLSI<T>> {
    let q = space.dim() - 1;
    SemiDirectLSI::new(space, Profile::flat(1), vec![Profile::flat(1); q])
}

/// The modified inequality on the metabelian group at `t`.
pub fn metabelian_verify<T: Real>(lsi: &SemiDirectLSI<T>, f: &TestFunction<T>, t: T) -> Result<InequalityReport> {
    lsi.space().check_support(f, false)?;
    lsi.diagonal(t)?.evaluate(f)
}

/// The half-plane side `(r, n) = (eᵃ, n)` with measure `dr/r dn`,
/// `Γ₀ = r²|∂_r|²` and weights `Nᵢ = r`.
pub fn transformed_space<T: Real>(
    q: usize,
    r_lo: T,
    r_hi: T,
    n_r: T,
    r_nodes: usize,
    n_nodes: usize,
) -> Result<ProductSpace<T>> {
    if !(r_lo > T::zero()) {
        return Err(invalid("the r grid must stay away from r = 0"));
    }
    let mut factors = vec![FactorSpace::log_half_line(r_lo, r_hi, r_nodes)?];
    for _ in 0..q {
        factors.push(FactorSpace::lebesgue(-n_r, n_r, n_nodes)?);
    }
    let weights = (0..q).map(|_| Weight::new("r", Arc::new(|p: &[T]| p[0]))).collect();
    ProductSpace::new(factors, weights)
}

/// `g = f∘Φ⁻¹`, i.e. `g(r, n) = f(ln r, n)`, with `∂_r g = ∂ₐf / r`.
pub fn pull_to_half_plane<T: Real>(f: &TestFunction<T>) -> Result<TestFunction<T>> {
    let (a_lo, a_hi) = f.support()[0];
    let mut support = f.support().to_vec();
    support[0] = (a_lo.exp(), a_hi.exp());
    if !(support[0].0 > T::zero()) {
        return Err(invalid("support reaches r = 0"));
    }
    let to_a = |x: &[T]| -> Vec<T> {
        let mut y = x.to_vec();
        y[0] = x[0].ln();
        y
    };
    let base = f.clone();
    let value: FnN<T> = Arc::new(move |x: &[T]| base.value(&to_a(x)));
    let partials: Vec<FnN<T>> = (0..f.dim())
        .map(|i| {
            let base = f.clone();
            Arc::new(move |x: &[T]| {
                let d = base.partial(i, &to_a(x)).unwrap_or_else(|_| T::nan());
                if i == 0 {
                    d / x[0]
                } else {
                    d
                }
            }) as FnN<T>
        })
        .collect();
    TestFunction::new(format!("{}∘Φ⁻¹", f.label()), support, value).with_partials(partials)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermPair {
    pub term: String,
    pub metabelian: f64,
    pub transformed: f64,
    pub rel_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushforwardReport {
    pub metabelian: InequalityReport,
    pub transformed: InequalityReport,
    pub pairs: Vec<TermPair>,
    pub max_rel_diff: f64,
}

/// Grid sizes for [`pushforward_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushforwardGrids {
    pub a_nodes: usize,
    pub r_nodes: usize,
    pub n_nodes: usize,
    /// Padding added around the support on both sides.
    pub pad: f64,
}

impl Default for PushforwardGrids {
    fn default() -> Self {
        Self { a_nodes: 400, r_nodes: 1600, n_nodes: 200, pad: 0.05 }
    }
}

/// The metabelian inequality for `f` against the half-plane inequality
/// for `f∘Φ⁻¹` with potential `−Q ln r`, term by term. Each side is
/// integrated on its own uniform grid covering the support.
pub fn pushforward_check(f: &TestFunction<f64>, t: f64, grids: PushforwardGrids) -> Result<PushforwardReport> {
    let q = f.dim().checked_sub(1).filter(|&q| q >= 1).ok_or(Error::DimensionMismatch { expected: 2, got: f.dim() })?;
    let (a_lo, a_hi) = f.support()[0];
    if !a_lo.is_finite() {
        return Err(invalid("support reaches r = 0"));
    }
    let pad = grids.pad;
    let n_r = f.support()[1..].iter().map(|&(a, b)| a.abs().max(b.abs())).fold(0.0, f64::max) + pad;

    let mut a_factors = vec![FactorSpace::lebesgue(a_lo - pad, a_hi + pad, grids.a_nodes)?];
    let mut r_factors = vec![FactorSpace::log_half_line((a_lo - pad).exp(), (a_hi + pad).exp(), grids.r_nodes)?];
    for _ in 0..q {
        a_factors.push(FactorSpace::lebesgue(-n_r, n_r, grids.n_nodes)?);
        r_factors.push(FactorSpace::lebesgue(-n_r, n_r, grids.n_nodes)?);
    }
    let a_weights = (0..q).map(|_| Weight::new("e^a", Arc::new(|p: &[f64]| p[0].exp()))).collect();
    let r_weights = (0..q).map(|_| Weight::new("r", Arc::new(|p: &[f64]| p[0]))).collect();
    let a_space = ProductSpace::new(a_factors, a_weights)?;
    let r_space = ProductSpace::new(r_factors, r_weights)?;

    let g = pull_to_half_plane(f)?;
    let left = metabelian_verify(&metabelian_lsi(a_space)?, f, t)?;
    let right = metabelian_lsi(r_space)?.diagonal(t)?.evaluate(&g)?;

    let mut pairs = vec![
        pair("norm_sq", left.norm_sq, right.norm_sq),
        pair("entropy", left.entropy_lhs, right.entropy_lhs),
        pair("dirichlet", left.dirichlet, right.dirichlet),
        pair("potential", left.potential, right.potential),
        pair("constant_term", left.constant_term, right.constant_term),
    ];
    for (k, (a, b)) in left.dirichlet_per_slot.iter().zip(&right.dirichlet_per_slot).enumerate() {
        pairs.push(pair(&format!("dirichlet_slot_{k}"), *a, *b));
    }
    // Per-slot energies that vanish on both sides are compared against the total.
    let scale = left.scale();
    let max_rel_diff = pairs
        .iter()
        .map(|p| if p.metabelian.abs().max(p.transformed.abs()) < 1e-12 * scale { 0.0 } else { p.rel_diff })
        .fold(0.0, f64::max);
    Ok(PushforwardReport { metabelian: left, transformed: right, pairs, max_rel_diff })
}

fn pair(term: &str, a: f64, b: f64) -> TermPair {
    let denom = a.abs().max(b.abs());
    TermPair {
        term: term.into(),
        metabelian: a,
        transformed: b,
        rel_diff: if denom == 0.0 { 0.0 } else { (a - b).abs() / denom },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{make, CorpusSpec};

    fn plane() -> ProductSpace<f64> {
        metabelian_space(1, 3.0, 3.0, 192).unwrap()
    }

    #[test]
    fn even_gaussian_potential_is_constant() {
        let space = plane();
        let f = make(&CorpusSpec::Gaussian { center: vec![0.0, 0.0], scale: 0.05 }, &space).unwrap();
        let lsi = metabelian_lsi(space).unwrap();
        let r = metabelian_verify(&lsi, &f, 0.7).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.potential - r.constant_term).abs() < 1e-10 * r.norm_sq, "{r:?}");
        let expected = -0.5 * (std::f64::consts::PI * std::f64::consts::E.powi(2) * 0.7).ln() * r.norm_sq;
        assert!((r.constant_term - expected).abs() < 1e-10 * expected.abs());
    }

    #[test]
    fn translation_shifts_potential() {
        let space = plane();
        let base = CorpusSpec::Bump { center: vec![0.0, 0.0], radius: vec![1.0, 1.0], smoothness: 1.0 };
        let k = 1.2;
        let moved = CorpusSpec::Translated { base: Box::new(base.clone()), shift: vec![k, 0.0] };
        let lsi = metabelian_lsi(space.clone()).unwrap();
        let r0 = metabelian_verify(&lsi, &make(&base, &space).unwrap(), 0.5).unwrap();
        let r1 = metabelian_verify(&lsi, &make(&moved, &space).unwrap(), 0.5).unwrap();
        assert!(r0.pass && r1.pass);
        assert!((r1.potential - (r0.potential - k * r0.norm_sq)).abs() < 1e-7 * r0.norm_sq, "{r0:?} {r1:?}");
    }

    #[test]
    fn pushforward_terms_agree() {
        let f = make(&CorpusSpec::Bump { center: vec![0.2, -0.1], radius: vec![1.2, 0.9], smoothness: 1.0 }, &plane())
            .unwrap();
        let r = pushforward_check(&f, 0.6, PushforwardGrids::default()).unwrap();
        assert!(r.max_rel_diff < 1e-6, "{:#?}", r.pairs);
        assert!(r.metabelian.pass && r.transformed.pass);
    }

    #[test]
    fn n_independent_slice_energy_vanishes() {
        let f = TestFunction::new(
            "a only",
            vec![(-1.0, 1.0), (-1.0, 1.0)],
            Arc::new(|p: &[f64]| (-1.0 / (1.0 - p[0] * p[0])).exp()),
        )
        .with_partials(vec![
            Arc::new(|p: &[f64]| {
                let s = 1.0 - p[0] * p[0];
                (-1.0 / s).exp() * (-2.0 * p[0] / (s * s))
            }),
            Arc::new(|_: &[f64]| 0.0),
        ])
        .unwrap();
        let r = pushforward_check(&f, 1.0, PushforwardGrids { a_nodes: 200, r_nodes: 800, n_nodes: 32, pad: 0.05 })
            .unwrap();
        assert_eq!(r.metabelian.dirichlet_per_slot[1], 0.0);
        assert_eq!(r.transformed.dirichlet_per_slot[1], 0.0);
    }

    #[test]
    fn support_at_zero_is_rejected() {
        let f = TestFunction::new("x", vec![(f64::NEG_INFINITY, 1.0), (-1.0, 1.0)], Arc::new(|_: &[f64]| 1.0));
        assert!(pushforward_check(&f, 1.0, PushforwardGrids::default()).is_err());
    }
}

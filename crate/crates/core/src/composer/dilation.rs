use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::profiles::Profile;
use crate::scalar::Real;
use crate::spaces::{FnN, TestFunction};

use super::lsi::{SemiDirectLSI, Slot0};

/// Relative agreement required between the two normalized slacks.
pub const DILATION_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilationReport {
    pub lambda: f64,
    /// Normalized slack of `f∘H_λ` at `t`, on the grid pulled back by `H_λ`.
    pub dilated: f64,
    /// Normalized slack of `f` at `t·λ^{2d}` on the original grid.
    pub rescaled: f64,
    /// Normalized slack of `f∘H_λ` at `t` on the original grid, when its
    /// support fits there.
    pub dilated_same_grid: Option<f64>,
    pub max_homogeneity_defect: f64,
    pub agree: bool,
}

/// `f∘H_λ` with `H_λ x = (λ^{a₀} x₀, …, λ^{a_n} x_n)` and chain-rule partials.
pub fn dilate<T: Real>(f: &TestFunction<T>, exponents: &[T], lambda: T) -> Result<TestFunction<T>> {
    if exponents.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: exponents.len() });
    }
    let scales: Arc<Vec<T>> = Arc::new(exponents.iter().map(|&a| lambda.powf(a)).collect());
    let support = f.support().iter().zip(scales.iter()).map(|(&(lo, hi), &s)| (lo / s, hi / s)).collect();
    let map = {
        let scales = scales.clone();
        move |x: &[T]| -> Vec<T> { x.iter().zip(scales.iter()).map(|(&v, &s)| v * s).collect() }
    };
    let base = f.clone();
    let map_v = map.clone();
    let eval: FnN<T> = Arc::new(move |x: &[T]| base.value(&map_v(x)));
    let partials: Vec<FnN<T>> = (0..f.dim())
        .map(|i| {
            let base = f.clone();
            let map = map.clone();
            let s = scales[i];
            Arc::new(move |x: &[T]| s * base.partial(i, &map(x)).unwrap_or_else(|_| T::nan())) as FnN<T>
        })
        .collect();
    TestFunction::new(format!("{}∘H(λ={lambda})", f.label()), support, eval).with_partials(partials)
}

/// Compares the inequality for `f∘H_λ` at `t` with the one for `f` at
/// `t·λ^{2d}`. Requires `λ^{2aᵢ} Nᵢ²(x) = λ^{2d} Nᵢ²(H_λ x)`, `a₀ = d`,
/// Lebesgue factors and one-dimensional flat profiles.
pub fn dilation_check<T: Real>(
    lsi: &SemiDirectLSI<T>,
    exponents: &[T],
    d: T,
    f: &TestFunction<T>,
    lambda: T,
    t: &[T],
) -> Result<DilationReport> {
    let space = lsi.space();
    let dim = space.dim();
    if exponents.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: exponents.len() });
    }
    if !(lambda > T::zero()) {
        return Err(invalid("λ must be positive"));
    }
    if (exponents[0] - d).abs() > T::lit(1e-12) * d.abs().max(T::one()) {
        return Err(invalid("the base exponent a₀ must equal d"));
    }
    let flat1 = |p: &Profile<T>| matches!(p, Profile::FlatEuclidean { n: 1 });
    match lsi.slot0() {
        Slot0::Profile(p) if flat1(p) => {}
        _ => return Err(invalid("dilation check requires a flat one-dimensional slot-0 profile")),
    }
    if !lsi.factor_profiles().iter().all(flat1) {
        return Err(invalid("dilation check requires flat one-dimensional factor profiles"));
    }
    for fs in space.factors() {
        let h = fs.spacing();
        if fs.quad_weights().iter().any(|&w| (w - h).abs() > T::lit(1e-12) * h) {
            return Err(invalid("dilation check requires Lebesgue factors"));
        }
    }

    // Homogeneity of the weights on the prefix grids.
    let scales: Vec<T> = exponents.iter().map(|&a| lambda.powf(a)).collect();
    let mut max_defect = 0.0f64;
    let mut x = vec![T::zero(); dim];
    let mut hx = vec![T::zero(); dim];
    for idx in 0..space.len() {
        space.coords(idx, &mut x);
        for (k, v) in hx.iter_mut().enumerate() {
            *v = x[k] * scales[k];
        }
        for (i, w) in space.weights().iter().enumerate() {
            let slot = i + 1;
            let n_x = w.eval(&x[..slot]);
            let n_hx = w.eval(&hx[..slot]);
            let lhs = lambda.powf(T::lit(2.0) * exponents[slot]) * n_x * n_x;
            let rhs = lambda.powf(T::lit(2.0) * d) * n_hx * n_hx;
            let denom = lhs.abs().max(rhs.abs()).max(T::min_positive_value());
            max_defect = max_defect.max(((lhs - rhs).abs() / denom).to_f64_lossy());
        }
    }
    if max_defect > 1e-10 {
        return Err(Error::WeightsNotHomogeneous { max_defect });
    }

    let g = dilate(f, exponents, lambda)?;
    let pulled: Vec<_> = space
        .factors()
        .iter()
        .zip(&scales)
        .map(|(fs, &s)| fs.affine_image(s.recip(), T::zero()))
        .collect::<Result<_>>()?;
    let pulled_space = space.with_factors(pulled)?;
    let (m0, rest) = match lsi.slot0() {
        Slot0::Profile(p) => (p.clone(), lsi.factor_profiles().to_vec()),
        Slot0::Gross(_) => unreachable!("checked above"),
    };
    let pulled_lsi = SemiDirectLSI::new(pulled_space, m0, rest)?.with_rel_tol(lsi.rel_tol());

    let dilated = pulled_lsi.multiparam(t)?.evaluate(&g)?.normalized_slack;
    let factor = lambda.powf(T::lit(2.0) * d);
    let t_scaled: Vec<T> = t.iter().map(|&v| v * factor).collect();
    let rescaled = lsi.multiparam(&t_scaled)?.evaluate(f)?.normalized_slack;
    let dilated_same_grid = match space.check_support(&g, false) {
        Ok(()) => Some(lsi.multiparam(t)?.evaluate(&g)?.normalized_slack),
        Err(_) => None,
    };
    let agree = (dilated - rescaled).abs() <= DILATION_TOL * rescaled.abs().max(1.0);
    Ok(DilationReport {
        lambda: lambda.to_f64_lossy(),
        dilated,
        rescaled,
        dilated_same_grid,
        max_homogeneity_defect: max_defect,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{FactorSpace, ProductSpace, Weight};

    fn grushin(alpha: f64, n: usize) -> SemiDirectLSI<f64> {
        let space = ProductSpace::new(
            vec![FactorSpace::lebesgue(-6.0, 6.0, n).unwrap(), FactorSpace::lebesgue(-6.0, 6.0, n).unwrap()],
            vec![Weight::new("|x|^α", Arc::new(move |p: &[f64]| p[0].abs().powf(alpha))).singular_on(0, 0.0)],
        )
        .unwrap();
        SemiDirectLSI::new(space, Profile::flat(1), vec![Profile::flat(1)]).unwrap()
    }

    fn gaussian() -> TestFunction<f64> {
        let g = |p: &[f64]| (-(p[0] * p[0] + 0.5 * p[1] * p[1])).exp();
        TestFunction::new("g", vec![(-6.0, 6.0); 2], Arc::new(g))
            .with_partials(vec![Arc::new(move |p: &[f64]| -2.0 * p[0] * g(p)), Arc::new(move |p: &[f64]| -p[1] * g(p))])
            .unwrap()
    }

    #[test]
    fn grushin_dilation_agrees() {
        let alpha = 0.5;
        let lsi = grushin(alpha, 96);
        for lambda in [0.5, 1.0, 2.0] {
            let r = dilation_check(&lsi, &[1.0, 1.0 + alpha], 1.0, &gaussian(), lambda, &[0.3, 0.7]).unwrap();
            assert!(r.agree, "{r:?}");
            assert!(r.max_homogeneity_defect < 1e-12);
        }
        let r = dilation_check(&lsi, &[1.0, 1.0 + alpha], 1.0, &gaussian(), 1.0, &[0.3, 0.7]).unwrap();
        assert_eq!(r.dilated, r.rescaled);
    }

    #[test]
    fn rejects_wrong_exponents() {
        let lsi = grushin(1.0, 32);
        let r = dilation_check(&lsi, &[1.0, 1.5], 1.0, &gaussian(), 2.0, &[1.0, 1.0]);
        assert!(matches!(r, Err(Error::WeightsNotHomogeneous { .. })));
    }

    #[test]
    fn dilated_norm_scales_with_jacobian() {
        let lsi = grushin(0.5, 128);
        let f = gaussian();
        let g = dilate(&f, &[1.0, 1.5], 2.0).unwrap();
        let nf = crate::spaces::norm_sq(lsi.space(), &f).unwrap();
        let ng = crate::spaces::norm_sq(lsi.space(), &g).unwrap();
        assert!((ng - nf * 2f64.powf(-2.5)).abs() < 1e-9 * nf);
    }
}

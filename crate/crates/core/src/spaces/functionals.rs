use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::function::TestFunction;
use super::product::{ProductSpace, Sampled};

/// Quadrature value with a one-refinement error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Estimate<T> {
    pub value: T,
    pub refined: T,
    /// `|refined − value|`, an upper proxy for the error of `value`.
    pub error_estimate: T,
    /// Richardson extrapolation `(4·refined − value)/3`.
    pub extrapolated: T,
}

impl<T: Real> Estimate<T> {
    fn from_pair(value: T, refined: T) -> Self {
        Self {
            value,
            refined,
            error_estimate: (refined - value).abs(),
            extrapolated: (T::lit(4.0) * refined - value) / T::lit(3.0),
        }
    }
}

/// Dirichlet energy with the contribution of each slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DirichletEnergy<T> {
    pub total: T,
    pub per_slot: Vec<T>,
}

/// `Σ values·W` over the grid.
pub fn integrate<T: Real>(space: &ProductSpace<T>, values: &[T]) -> Result<T> {
    if values.len() != space.len() {
        return Err(Error::DimensionMismatch { expected: space.len(), got: values.len() });
    }
    let mut acc = T::zero();
    for (idx, (&v, &w)) in values.iter().zip(space.node_weights()).enumerate() {
        if !v.is_finite() {
            let mut x = vec![T::zero(); space.dim()];
            space.coords(idx, &mut x);
            return Err(Error::NonFinite { what: "integrand", coords: crate::scalar::coords_f64(&x) });
        }
        acc += v * w;
    }
    Ok(acc)
}

/// Integral of a function of the coordinates together with the result on
/// the refined grid.
pub fn integrate_fn<T: Real>(space: &ProductSpace<T>, f: impl Fn(&[T]) -> T) -> Result<Estimate<T>> {
    let coarse = integrate(space, &space.sample("integrand", &f)?)?;
    let fine_space = space.refined()?;
    let fine = integrate(&fine_space, &fine_space.sample("integrand", &f)?)?;
    Ok(Estimate::from_pair(coarse, fine))
}

pub fn norm_sq_sampled<T: Real>(space: &ProductSpace<T>, s: &Sampled<T>) -> T {
    s.values.iter().zip(space.node_weights()).map(|(&v, &w)| v * v * w).sum()
}

pub fn entropy_sampled<T: Real>(space: &ProductSpace<T>, s: &Sampled<T>) -> Result<T> {
    let n = norm_sq_sampled(space, s);
    if !(n > T::zero()) {
        return Err(Error::NullFunction);
    }
    let ln_n = n.ln();
    Ok(s.values
        .iter()
        .zip(space.node_weights())
        .map(|(&v, &w)| {
            let f2 = v * v;
            if f2 == T::zero() {
                T::zero()
            } else {
                w * f2 * (f2.ln() - ln_n)
            }
        })
        .sum())
}

/// Unscaled slot energies `∫ N_k² g_k |∂_k f|² dμ`.
pub fn slot_energies_sampled<T: Real>(space: &ProductSpace<T>, s: &Sampled<T>) -> Vec<T> {
    (0..space.dim())
        .map(|k| {
            let g = space.factor(k).gammas();
            s.partials[k]
                .iter()
                .zip(space.node_weights())
                .enumerate()
                .map(|(idx, (&d, &w))| w * space.weight_sq_at(k, idx) * g[space.axis_index(idx, k)] * d * d)
                .sum()
        })
        .collect()
}

pub fn dirichlet_sampled<T: Real>(
    space: &ProductSpace<T>,
    s: &Sampled<T>,
    slot_scales: &[T],
) -> Result<DirichletEnergy<T>> {
    check_scales(space, slot_scales)?;
    let per_slot: Vec<T> = slot_energies_sampled(space, s).into_iter().zip(slot_scales).map(|(e, &t)| e * t).collect();
    Ok(DirichletEnergy { total: per_slot.iter().copied().sum(), per_slot })
}

fn check_scales<T: Real>(space: &ProductSpace<T>, slot_scales: &[T]) -> Result<()> {
    if slot_scales.len() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: slot_scales.len() });
    }
    if slot_scales.iter().any(|&t| !(t > T::zero())) {
        return Err(Error::InvalidParameter("slot scales must be positive".into()));
    }
    Ok(())
}

pub fn potential_sampled<T: Real>(space: &ProductSpace<T>, s: &Sampled<T>, v: impl Fn(&[T]) -> T) -> Result<T> {
    let vs = space.sample("potential", v)?;
    Ok(vs.iter().zip(&s.values).zip(space.node_weights()).map(|((&p, &f), &w)| p * f * f * w).sum())
}

/// `‖f‖²` under the space's measure.
pub fn norm_sq<T: Real>(space: &ProductSpace<T>, f: &TestFunction<T>) -> Result<T> {
    integrate(
        space,
        &space.sample("function value", |x| {
            let v = f.value(x);
            v * v
        })?,
    )
}

/// `∫ f² ln(f²/‖f‖²) dμ`.
pub fn entropy<T: Real>(space: &ProductSpace<T>, f: &TestFunction<T>) -> Result<T> {
    let values = space.sample("function value", |x| f.value(x))?;
    entropy_sampled(space, &Sampled { values, partials: Vec::new() })
}

/// `∫ Σ_k t_k N_k² g_k |∂_k f|² dμ` with the per-slot breakdown.
pub fn dirichlet_energy<T: Real>(
    space: &ProductSpace<T>,
    f: &TestFunction<T>,
    slot_scales: &[T],
) -> Result<DirichletEnergy<T>> {
    check_scales(space, slot_scales)?;
    dirichlet_sampled(space, &space.sample_function(f)?, slot_scales)
}

/// `∫ V f² dμ` and its value on the refined grid.
pub fn potential_integral<T: Real>(
    space: &ProductSpace<T>,
    f: &TestFunction<T>,
    v: impl Fn(&[T]) -> T,
) -> Result<Estimate<T>> {
    let one = |sp: &ProductSpace<T>| -> Result<T> {
        let vals = sp.sample("function value", |x| f.value(x))?;
        potential_sampled(sp, &Sampled { values: vals, partials: Vec::new() }, &v)
    };
    let coarse = one(space)?;
    let fine = one(&space.refined()?)?;
    Ok(Estimate::from_pair(coarse, fine))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::spaces::{FactorSpace, FnN, Weight};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn line(lo: f64, hi: f64, n: usize) -> ProductSpace<f64> {
        ProductSpace::tensor(vec![FactorSpace::lebesgue(lo, hi, n).unwrap()]).unwrap()
    }

    fn constant(dim: usize, c: f64, support: Vec<(f64, f64)>) -> TestFunction<f64> {
        let zero: FnN<f64> = Arc::new(|_| 0.0);
        TestFunction::new("const", support, Arc::new(move |_| c)).with_partials(vec![zero; dim]).unwrap()
    }

    #[test]
    fn integrate_constant_exact() {
        let s = line(0.0, 1.0, 16);
        assert_eq!(integrate(&s, &[1.0; 16]).unwrap(), 1.0);
    }

    #[test]
    fn integrate_gaussian_moments() {
        let s = ProductSpace::tensor(vec![FactorSpace::gaussian(8.0, 512).unwrap()]).unwrap();
        let mass = integrate_fn(&s, |_| 1.0).unwrap().value;
        // Tail mass outside [-8, 8] is about 1.2e-15.
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-8);
        let m2 = integrate_fn(&s, |x| x[0] * x[0]).unwrap().value;
        assert_abs_diff_eq!(m2, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn rejects_non_finite_values() {
        let s = line(0.0, 1.0, 16);
        let mut v = vec![1.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(integrate(&s, &v), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn midpoint_order_two() {
        let exact = std::f64::consts::E - 1.0;
        let e1 = (integrate_fn(&line(0.0, 1.0, 32), |x| x[0].exp()).unwrap().value - exact).abs();
        let e2 = (integrate_fn(&line(0.0, 1.0, 64), |x| x[0].exp()).unwrap().value - exact).abs();
        assert!(e1 / e2 >= 3.9, "ratio {}", e1 / e2);
    }

    #[test]
    fn gaussian_entropy_closed_form() {
        let s = line(-12.0, 12.0, 2048);
        let f = TestFunction::new(
            "sqrt p_1",
            vec![(-12.0, 12.0)],
            Arc::new(|x: &[f64]| ((2.0 * std::f64::consts::PI).powf(-0.5) * (-x[0] * x[0] / 2.0).exp()).sqrt()),
        );
        let e = entropy(&s, &f).unwrap();
        let oracle = -0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5;
        assert_abs_diff_eq!(e, oracle, epsilon = 1e-6);
    }

    #[test]
    fn entropy_of_constant_on_probability_space_is_zero() {
        let s = ProductSpace::tensor(vec![FactorSpace::torus(64).unwrap()]).unwrap();
        let f = constant(1, 3.0, vec![(-4.0, 4.0)]);
        assert_abs_diff_eq!(entropy(&s, &f).unwrap(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn null_function_rejected() {
        let s = line(0.0, 1.0, 16);
        let f = constant(1, 0.0, vec![(0.0, 1.0)]);
        assert!(matches!(entropy(&s, &f), Err(Error::NullFunction)));
    }

    #[test]
    fn zero_nodes_contribute_nothing() {
        let s = line(-2.0, 2.0, 64);
        let f = TestFunction::new("step", vec![(0.0, 2.0)], Arc::new(|_| 1.0));
        // f² = 1 on half the line and ‖f‖² = 2.
        assert_abs_diff_eq!(entropy(&s, &f).unwrap(), -2.0 * 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn torus_sine_energy() {
        let s = ProductSpace::tensor(vec![FactorSpace::torus(256).unwrap()]).unwrap();
        let f = TestFunction::new("sin", vec![(-4.0, 4.0)], Arc::new(|x: &[f64]| x[0].sin()))
            .with_partials(vec![Arc::new(|x: &[f64]| x[0].cos())])
            .unwrap();
        let d = dirichlet_energy(&s, &f, &[1.0]).unwrap();
        assert_abs_diff_eq!(d.total, 0.5, epsilon = 1e-6);
    }

    fn grushin_space(n: usize) -> ProductSpace<f64> {
        ProductSpace::new(
            vec![FactorSpace::lebesgue(-6.0, 6.0, n).unwrap(), FactorSpace::lebesgue(-6.0, 6.0, n).unwrap()],
            vec![Weight::new("|x|", Arc::new(|p: &[f64]| p[0].abs())).singular_on(0, 0.0)],
        )
        .unwrap()
    }

    fn gaussian2() -> TestFunction<f64> {
        let g = |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1])).exp();
        TestFunction::new("g", vec![(-6.0, 6.0); 2], Arc::new(g))
            .with_partials(vec![
                Arc::new(move |x: &[f64]| -2.0 * x[0] * g(x)),
                Arc::new(move |x: &[f64]| -2.0 * x[1] * g(x)),
            ])
            .unwrap()
    }

    #[test]
    fn grushin_energy_matches_dense_oracle() {
        let f = gaussian2();
        let d = dirichlet_energy(&grushin_space(128), &f, &[1.0, 1.0]).unwrap();
        // Brute-force oracle on a much denser grid of plain sums.
        let n = 2000;
        let h = 12.0 / n as f64;
        let mut oracle = 0.0;
        for i in 0..n {
            let x = -6.0 + (i as f64 + 0.5) * h;
            for j in 0..n {
                let y = -6.0 + (j as f64 + 0.5) * h;
                let g = (-(x * x + y * y)).exp();
                oracle += (4.0 * x * x * g * g + x * x * 4.0 * y * y * g * g) * h * h;
            }
        }
        assert_abs_diff_eq!(d.total, oracle, epsilon = 1e-5);
        // Closed form: π/2 + π/8.
        assert_abs_diff_eq!(oracle, std::f64::consts::PI * 5.0 / 8.0, epsilon = 1e-9);
        let _ = d.per_slot[1];
    }

    #[test]
    fn log_potential() {
        let s = line(-1.0, 1.0, 4096);
        let f = constant(1, 1.0, vec![(-1.0, 1.0)]);
        let p = potential_integral(&s, &f, |x| -x[0].abs().ln()).unwrap();
        assert_abs_diff_eq!(p.value, 2.0, epsilon = 1e-3);
        assert!(p.error_estimate < 1e-3);
    }

    #[test]
    fn inverse_sqrt_potential_refined_oracle() {
        let bump = |x: f64| if x.abs() < 0.9 { (-1.0 / (0.81 - x * x)).exp() } else { 0.0 };
        let f = TestFunction::new("bump", vec![(-0.9, 0.9)], Arc::new(move |x: &[f64]| bump(x[0])));
        let v = |x: &[f64]| x[0].abs().powf(-0.5);
        // Midpoint error near |x|^{-1/2} decays only like h^{1/2}.
        let coarse = potential_integral(&line(-1.0, 1.0, 1 << 22), &f, v).unwrap();
        // Oracle: singularity-aware tanh–sinh on each half.
        let g = |x: f64| x.powf(-0.5) * bump(x).powi(2);
        let oracle = 2.0 * crate::numerics::tanh_sinh(g, 0.0, 0.9, 8);
        assert_abs_diff_eq!(coarse.value, oracle, epsilon = 1e-4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn entropy_scaling_and_sign(c in 0.1f64..10.0, mu in -1.0f64..1.0, sig in 0.3f64..1.5) {
            let s = line(-8.0, 8.0, 256);
            let mk = |k: f64| TestFunction::new(
                "g",
                vec![(-8.0, 8.0)],
                Arc::new(move |x: &[f64]| k * (-(x[0] - mu).powi(2) / (2.0 * sig * sig)).exp()),
            );
            let e1 = entropy(&s, &mk(1.0)).unwrap();
            let ec = entropy(&s, &mk(c)).unwrap();
            let en = entropy(&s, &mk(-1.0)).unwrap();
            prop_assert!((ec - c * c * e1).abs() <= 1e-10 * (1.0 + ec.abs()));
            prop_assert!((en - e1).abs() <= 1e-12 * (1.0 + e1.abs()));
        }

        #[test]
        fn entropy_invariant_under_factor_relabeling(a in 0.3f64..1.5, b in 0.3f64..1.5) {
            let fx = FactorSpace::lebesgue(-6.0, 6.0, 64).unwrap();
            let fy = FactorSpace::lebesgue(-5.0, 5.0, 48).unwrap();
            let s1 = ProductSpace::tensor(vec![fx.clone(), fy.clone()]).unwrap();
            let s2 = ProductSpace::tensor(vec![fy, fx]).unwrap();
            let f = move |x: f64, y: f64| (-(x * x) / a - y.powi(4) / b).exp() * (1.0 + 0.3 * (x * y).sin());
            let f1 = TestFunction::new("f", vec![(-6.0, 6.0), (-5.0, 5.0)], Arc::new(move |p: &[f64]| f(p[0], p[1])));
            let f2 = TestFunction::new("f", vec![(-5.0, 5.0), (-6.0, 6.0)], Arc::new(move |p: &[f64]| f(p[1], p[0])));
            let (e1, e2) = (entropy(&s1, &f1).unwrap(), entropy(&s2, &f2).unwrap());
            prop_assert!((e1 - e2).abs() <= 1e-12 * (1.0 + e1.abs()));
        }

        #[test]
        fn dirichlet_nonnegative(k in 0.1f64..4.0, phase in 0.0f64..6.3) {
            let s = grushin_space(32);
            let f = TestFunction::new(
                "trig",
                vec![(-6.0, 6.0); 2],
                Arc::new(move |p: &[f64]| (k * p[0] + phase).sin() * (p[1] * k).cos() * (-(p[0] * p[0] + p[1] * p[1]) / 4.0).exp()),
            )
            .with_fd_step(1e-3)
            .unwrap();
            let d = dirichlet_energy(&s, &f, &[0.7, 1.3]).unwrap();
            prop_assert!(d.total >= 0.0 && d.per_slot.iter().all(|&e| e >= 0.0));
        }
    }

    #[test]
    fn constant_has_zero_energy() {
        let s = grushin_space(32);
        let f = constant(2, 2.0, vec![(-7.0, 7.0); 2]);
        let d = dirichlet_energy(&s, &f, &[1.0, 1.0]).unwrap();
        assert_eq!(d.total, 0.0);
        let fd = TestFunction::new("c", vec![(-7.0, 7.0); 2], Arc::new(|_| 2.0)).with_fd_step(0.1).unwrap();
        assert_eq!(dirichlet_energy(&s, &fd, &[1.0, 1.0]).unwrap().total, 0.0);
    }
}

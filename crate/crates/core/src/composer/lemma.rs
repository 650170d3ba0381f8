use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::profiles::Profile;
use crate::scalar::{xlogx, Real};
use crate::spaces::{ProductSpace, TestFunction};

use super::report::{InequalityReport, Terms, DEFAULT_REL_TOL};

/// Absolute tolerance of the marginal-root gradient check.
pub const LEMMA_TOL: f64 = 1e-8;

/// Outcome of comparing `∫Γ₀(h) dμ₀` with `∫∫Γ₀(f) dμ₀ dμ₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub label: String,
    pub lhs: f64,
    /// Right side computed with the same difference operator as `lhs`.
    pub rhs: f64,
    /// Right side from the analytic partials, when the function has them.
    pub rhs_analytic: Option<f64>,
    pub pass: bool,
    pub tol: f64,
}

/// Difference operator along the base axis: central at interior nodes,
/// one-sided at the two ends.
fn d0<T: Real>(v: &[T], i: usize, h: T) -> T {
    let n = v.len();
    if i == 0 {
        (v[1] - v[0]) / h
    } else if i + 1 == n {
        (v[n - 1] - v[n - 2]) / h
    } else {
        (v[i + 1] - v[i - 1]) / (h + h)
    }
}

fn require_two_factors<T: Real>(space: &ProductSpace<T>) -> Result<()> {
    if space.dim() != 2 {
        return Err(invalid("a two-factor space is required"));
    }
    Ok(())
}

/// Nodal values `f(x₀ᵢ, x₁ⱼ)` laid out as rows over `x₀`, and the marginal
/// root `h(x₀ᵢ) = (Σⱼ w₁ⱼ f²)^{1/2}`.
fn rows_and_root<T: Real>(space: &ProductSpace<T>, f: &TestFunction<T>) -> Result<(Vec<Vec<T>>, Vec<T>)> {
    let values = space.sample("function value", |x| f.value(x))?;
    let (n0, n1) = (space.shape()[0], space.shape()[1]);
    let w1 = space.factor(1).quad_weights();
    let rows: Vec<Vec<T>> = (0..n0).map(|i| values[i * n1..(i + 1) * n1].to_vec()).collect();
    let h = rows.iter().map(|r| r.iter().zip(w1).map(|(&v, &w)| w * v * v).sum::<T>().sqrt()).collect();
    Ok((rows, h))
}

/// Gradient bound for the marginal root `h(x₀) = ‖f(x₀, ·)‖_{L²(μ₁)}`.
pub fn lemma21_check<T: Real>(space: &ProductSpace<T>, f: &TestFunction<T>) -> Result<LemmaReport> {
    require_two_factors(space)?;
    space.check_support(f, false)?;
    let (rows, h) = rows_and_root(space, f)?;
    let (n0, n1) = (space.shape()[0], space.shape()[1]);
    let f0 = space.factor(0);
    let (w0, g0, w1) = (f0.quad_weights(), f0.gammas(), space.factor(1).quad_weights());
    let dx = f0.spacing();

    let mut lhs = T::zero();
    for i in 0..n0 {
        // h = 0: derivative forced to zero.
        let dh = if h[i] == T::zero() { T::zero() } else { d0(&h, i, dx) };
        lhs += w0[i] * g0[i] * dh * dh;
    }

    let mut rhs = T::zero();
    let mut column = vec![T::zero(); n0];
    for j in 0..n1 {
        for (c, r) in column.iter_mut().zip(&rows) {
            *c = r[j];
        }
        for i in 0..n0 {
            let d = d0(&column, i, dx);
            rhs += w0[i] * w1[j] * g0[i] * d * d;
        }
    }

    let rhs_analytic = if f.has_analytic_partials() {
        let d = space.sample("partial derivative", |x| f.partial(0, x).unwrap_or_else(|_| T::nan()))?;
        let mut acc = T::zero();
        for (idx, (&v, &w)) in d.iter().zip(space.node_weights()).enumerate() {
            acc += w * g0[space.axis_index(idx, 0)] * v * v;
        }
        Some(acc.to_f64_lossy())
    } else {
        None
    };

    let (lhs, rhs) = (lhs.to_f64_lossy(), rhs.to_f64_lossy());
    Ok(LemmaReport {
        label: f.label().to_string(),
        lhs,
        rhs,
        rhs_analytic,
        pass: lhs <= rhs + LEMMA_TOL,
        tol: LEMMA_TOL,
    })
}

/// The slice-wise inequality before the base-coordinate step:
/// `∫∫ f² ln f² ≤ t₁ ∫∫ N₁² Γ₁(f) + ∫∫ M₁(t₁N₁²) f² + ∫ h² ln h²`.
///
/// In the report `potential` is the `M₁` term and `constant_term` the
/// marginal entropy `∫ h² ln h² dμ₀`.
pub fn intermediate_step_check<T: Real>(
    space: &ProductSpace<T>,
    f: &TestFunction<T>,
    m1: &Profile<T>,
    t1: T,
) -> Result<InequalityReport> {
    require_two_factors(space)?;
    if !(t1 > T::zero()) {
        return Err(invalid("t1 must be positive"));
    }
    space.check_support(f, false)?;
    let sampled = space.sample_function(f)?;
    let nw = space.node_weights();
    let floor = t1 * space.min_spacing().powi(2) * T::lit(1e-6);

    let mut lhs = T::zero();
    let mut energy = T::zero();
    let mut potential = T::zero();
    let mut norm = T::zero();
    let n2 = space.weight_sq_table(1);
    let rates = n2.iter().map(|&w| m1.eval((t1 * w).max(floor))).collect::<Result<Vec<T>>>()?;
    let g1 = space.factor(1).gammas();
    for (idx, (&v, &w)) in sampled.values.iter().zip(nw).enumerate() {
        let f2 = v * v;
        let k = space.prefix_index(1, idx);
        lhs += w * xlogx(f2);
        norm += w * f2;
        potential += w * rates[k] * f2;
        let d = sampled.partials[1][idx];
        energy += w * n2[k] * g1[space.axis_index(idx, 1)] * d * d;
    }
    let (_, h) = rows_and_root(space, f)?;
    let marginal: T = h.iter().zip(space.factor(0).quad_weights()).map(|(&hv, &w)| w * xlogx(hv * hv)).sum();

    InequalityReport::assemble(
        Terms {
            kind: "intermediate_step".into(),
            label: f.label().to_string(),
            params: vec![t1.to_f64_lossy()],
            norm_sq: norm.to_f64_lossy(),
            lhs: lhs.to_f64_lossy(),
            dirichlet_per_slot: vec![0.0, (t1 * energy).to_f64_lossy()],
            potential: potential.to_f64_lossy(),
            constant_term: marginal.to_f64_lossy(),
            warnings: Vec::new(),
        },
        DEFAULT_REL_TOL,
    )
}

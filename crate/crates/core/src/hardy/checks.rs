use serde::{Deserialize, Serialize};

use crate::composer::{DilationReport, InequalityReport, Terms, DEFAULT_REL_TOL, DILATION_TOL};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::spaces::{FactorSpace, ProductSpace, TestFunction};

use super::constants::HardyPowerConstants;

/// Which Hardy inequality a check refers to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum HardyKind {
    Log,
    Power { alpha: f64 },
}

/// Grid data of a 1-D or 2-D function needed by the Hardy inequalities.
/// The singular axis is coordinate 0; in 2-D the remaining axis is only
/// integrated over.
#[derive(Clone, Debug)]
pub struct HardySample<T: Real> {
    label: String,
    /// `w·f²` per node.
    mass: Vec<T>,
    /// `|x₀|` per node.
    abs_x: Vec<T>,
    norm_sq: T,
    dx_energy: T,
}

impl<T: Real> HardySample<T> {
    pub fn new(space: &ProductSpace<T>, f: &TestFunction<T>) -> Result<Self> {
        if !(1..=2).contains(&space.dim()) {
            return Err(invalid("Hardy checks take one- or two-dimensional functions"));
        }
        let fx = space.factor(0);
        if !fx.is_staggered() {
            return Err(invalid("the singular axis needs a staggered grid"));
        }
        if fx.nodes().iter().any(|&x| x == T::zero()) {
            return Err(invalid("a grid node sits on x = 0"));
        }
        space.check_support(f, true)?;
        let values = space.sample("function value", |x| f.value(x))?;
        let dx = space.sample("partial derivative", |x| f.partial(0, x).unwrap_or_else(|_| T::nan()))?;
        let nw = space.node_weights();
        let mut mass = Vec::with_capacity(values.len());
        let mut abs_x = Vec::with_capacity(values.len());
        let (mut norm_sq, mut dx_energy) = (T::zero(), T::zero());
        for (idx, ((&v, &d), &w)) in values.iter().zip(&dx).zip(nw).enumerate() {
            let m = w * v * v;
            mass.push(m);
            abs_x.push(fx.nodes()[space.axis_index(idx, 0)].abs());
            norm_sq += m;
            dx_energy += w * d * d;
        }
        if norm_sq == T::zero() {
            return Err(Error::NullFunction);
        }
        Ok(Self { label: f.label().to_string(), mass, abs_x, norm_sq, dx_energy })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn norm_sq(&self) -> T {
        self.norm_sq
    }

    /// `‖∂ₓf‖²`.
    pub fn dx_energy(&self) -> T {
        self.dx_energy
    }

    /// `∫(−ln|x|) f²`.
    pub fn log_moment(&self) -> T {
        self.mass.iter().zip(&self.abs_x).map(|(&m, &x)| -m * x.ln()).sum()
    }

    /// `∫|x|^{-α} f²`.
    pub fn power_moment(&self, alpha: T) -> T {
        self.mass.iter().zip(&self.abs_x).map(|(&m, &x)| m * x.powf(-alpha)).sum()
    }

    /// `∫(−ln|x|)f² ≤ t‖∂ₓf‖² + ½ ln(2e/t) ‖f‖²`.
    pub fn log_report(&self, t: T) -> Result<InequalityReport> {
        positive(t, "t")?;
        let constant = T::lit(0.5) * (T::lit(2.0) * T::E() / t).ln() * self.norm_sq;
        self.assemble("hardy_log", vec![t.to_f64_lossy()], self.log_moment(), t * self.dx_energy, constant)
    }

    /// `∫|x|^{-α}f² ≤ t‖∂ₓf‖² + c₃ t^{-b} ‖f‖²`.
    pub fn power_report(&self, c: &HardyPowerConstants<T>, t: T) -> Result<InequalityReport> {
        positive(t, "t")?;
        let constant = c.c3 * t.powf(-c.b) * self.norm_sq;
        let params = vec![c.alpha.to_f64_lossy(), t.to_f64_lossy()];
        self.assemble("hardy_power", params, self.power_moment(c.alpha), t * self.dx_energy, constant)
    }

    /// `∫|x|^{-α}f² ≤ c₁ δ^{2−α} ‖∂ₓf‖² + c₂ δ^{-α} ‖f‖²`.
    pub fn delta_report(&self, c: &HardyPowerConstants<T>, delta: T) -> Result<InequalityReport> {
        positive(delta, "δ")?;
        let energy = c.c1 * delta.powf(T::lit(2.0) - c.alpha) * self.dx_energy;
        let constant = c.c2 * delta.powf(-c.alpha) * self.norm_sq;
        let params = vec![c.alpha.to_f64_lossy(), delta.to_f64_lossy()];
        self.assemble("hardy_power_delta", params, self.power_moment(c.alpha), energy, constant)
    }

    fn assemble(&self, kind: &str, params: Vec<f64>, lhs: T, energy: T, constant: T) -> Result<InequalityReport> {
        InequalityReport::assemble(
            Terms {
                kind: kind.into(),
                label: self.label.clone(),
                params,
                norm_sq: self.norm_sq.to_f64_lossy(),
                lhs: lhs.to_f64_lossy(),
                dirichlet_per_slot: vec![energy.to_f64_lossy()],
                potential: 0.0,
                constant_term: constant.to_f64_lossy(),
                warnings: Vec::new(),
            },
            DEFAULT_REL_TOL,
        )
    }
}

fn positive<T: Real>(v: T, name: &str) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

pub fn hardy_log_check<T: Real>(space: &ProductSpace<T>, f: &TestFunction<T>, t: T) -> Result<InequalityReport> {
    HardySample::new(space, f)?.log_report(t)
}

pub fn hardy_power_check<T: Real>(
    space: &ProductSpace<T>,
    f: &TestFunction<T>,
    alpha: T,
    t: T,
) -> Result<InequalityReport> {
    let c = HardyPowerConstants::new(alpha)?;
    HardySample::new(space, f)?.power_report(&c, t)
}

/// Squared boundary-value bound `|f(δ)|² ≤ 2δ‖f'‖² + (2/δ)‖f‖²` with norms
/// over `(0, δ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryValueReport {
    pub delta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn boundary_value_check<T: Real>(f: &TestFunction<T>, delta: T, nodes: usize) -> Result<BoundaryValueReport> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: f.dim() });
    }
    positive(delta, "δ")?;
    let grid = FactorSpace::lebesgue(T::zero(), delta, nodes)?;
    let (mut norm, mut energy) = (T::zero(), T::zero());
    for (&x, &w) in grid.nodes().iter().zip(grid.quad_weights()) {
        let v = f.value(&[x]);
        let d = f.partial(0, &[x])?;
        norm += w * v * v;
        energy += w * d * d;
    }
    let fd = f.value(&[delta]);
    let lhs = (fd * fd).to_f64_lossy();
    let rhs = (T::lit(2.0) * delta * energy + T::lit(2.0) / delta * norm).to_f64_lossy();
    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(Error::NonFinite { what: "boundary value bound", coords: vec![delta.to_f64_lossy()] });
    }
    Ok(BoundaryValueReport { delta: delta.to_f64_lossy(), lhs, rhs, pass: lhs <= rhs * (1.0 + DEFAULT_REL_TOL) })
}

/// `∫₀¹(−ln x)f² ≤ |ln δ|‖f‖²_{(0,1)} + ‖f‖²_{(0,δ)} + (2δ/e)‖f‖_{(0,δ)}‖f'‖_{(0,δ)}`.
///
/// The `(0, δ)` norms use their own midpoint grid with `nodes` cells so
/// that no cell straddles `δ`.
pub fn prop61_check<T: Real>(f: &TestFunction<T>, delta: T, nodes: usize) -> Result<InequalityReport> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: f.dim() });
    }
    if !(delta > T::zero() && delta <= T::one()) {
        return Err(invalid(format!("δ must lie in (0, 1], got {delta}")));
    }
    let moments = |hi: T| -> Result<(T, T, T)> {
        let grid = FactorSpace::lebesgue(T::zero(), hi, nodes)?;
        let (mut log_m, mut norm, mut energy) = (T::zero(), T::zero(), T::zero());
        for (&x, &w) in grid.nodes().iter().zip(grid.quad_weights()) {
            let v = f.value(&[x]);
            let d = f.partial(0, &[x])?;
            log_m -= w * x.ln() * v * v;
            norm += w * v * v;
            energy += w * d * d;
        }
        Ok((log_m, norm, energy))
    };
    let (lhs, norm_1, _) = moments(T::one())?;
    let (_, norm_d, energy_d) = moments(delta)?;
    let cross = T::lit(2.0) * delta / T::E() * (norm_d * energy_d).sqrt();
    let constant = delta.ln().abs() * norm_1 + norm_d;
    InequalityReport::assemble(
        Terms {
            kind: "prop61".into(),
            label: f.label().to_string(),
            params: vec![delta.to_f64_lossy()],
            norm_sq: norm_1.to_f64_lossy(),
            lhs: lhs.to_f64_lossy(),
            dirichlet_per_slot: vec![cross.to_f64_lossy()],
            potential: 0.0,
            constant_term: constant.to_f64_lossy(),
            warnings: Vec::new(),
        },
        DEFAULT_REL_TOL,
    )
}

/// Dilation stability: the check for `f(μx)` at `t` against the check for
/// `f` at the rescaled parameter. For the log inequality the normalized
/// slacks agree at `t·μ²`; for the power inequality the slack of `f(μx)`
/// times `μ^{-α}` agrees with the slack of `f` at `t·μ^{2−α}`.
///
/// The dilated function is evaluated on the grid pulled back by `x ↦ μx`,
/// so both sides see the same nodal values.
pub fn hardy_dilation_check<T: Real>(
    space: &ProductSpace<T>,
    f: &TestFunction<T>,
    kind: HardyKind,
    mu: T,
    t: T,
) -> Result<DilationReport> {
    positive(mu, "μ")?;
    positive(t, "t")?;
    let mut exponents = vec![T::zero(); space.dim()];
    exponents[0] = T::one();
    let g = crate::composer::dilate(f, &exponents, mu)?;
    let mut factors = space.factors().to_vec();
    factors[0] = factors[0].affine_image(mu.recip(), T::zero())?;
    let pulled = space.with_factors(factors)?;

    let base = HardySample::new(space, f)?;
    let dilated = HardySample::new(&pulled, &g)?;
    let same_grid = HardySample::new(space, &g).ok();
    let (lhs, rhs, same) = match kind {
        HardyKind::Log => (
            dilated.log_report(t)?.normalized_slack,
            base.log_report(t * mu * mu)?.normalized_slack,
            same_grid.map(|s| s.log_report(t).map(|r| r.normalized_slack)).transpose()?,
        ),
        HardyKind::Power { alpha } => {
            let c = HardyPowerConstants::new(T::lit(alpha))?;
            let back = mu.powf(-c.alpha).to_f64_lossy();
            (
                dilated.power_report(&c, t)?.normalized_slack * back,
                base.power_report(&c, t * mu.powf(T::lit(2.0) - c.alpha))?.normalized_slack,
                same_grid.map(|s| s.power_report(&c, t).map(|r| r.normalized_slack * back)).transpose()?,
            )
        }
    };
    Ok(DilationReport {
        lambda: mu.to_f64_lossy(),
        dilated: lhs,
        rescaled: rhs,
        dilated_same_grid: same,
        max_homogeneity_defect: 0.0,
        agree: (lhs - rhs).abs() <= DILATION_TOL * rhs.abs().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::numerics::log_grid;

    fn bump(c: f64, r: f64) -> TestFunction<f64> {
        let v = move |x: f64| {
            let s = (x - c) / r;
            if s.abs() < 1.0 {
                (-1.0 / (1.0 - s * s)).exp()
            } else {
                0.0
            }
        };
        let d = move |x: f64| {
            let s = (x - c) / r;
            if s.abs() < 1.0 {
                v(x) * (-2.0 * s / (1.0 - s * s).powi(2)) / r
            } else {
                0.0
            }
        };
        TestFunction::new(format!("bump({c},{r})"), vec![(c - r, c + r)], Arc::new(move |p: &[f64]| v(p[0])))
            .with_partials(vec![Arc::new(move |p: &[f64]| d(p[0]))])
            .unwrap()
    }

    fn line(n: usize) -> ProductSpace<f64> {
        ProductSpace::tensor(vec![FactorSpace::lebesgue(-4.0, 4.0, n).unwrap()]).unwrap()
    }

    #[test]
    fn log_sweep_passes() {
        let s = HardySample::new(&line(4096), &bump(0.0, 1.0)).unwrap();
        for t in log_grid(1e-3, 1e3, 25) {
            let r = s.log_report(t).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn away_from_origin_lhs_nonpositive() {
        let s = HardySample::new(&line(512), &bump(2.5, 1.0)).unwrap();
        assert!(s.log_moment() <= 0.0);
        assert!(s.log_report(2.0 / std::f64::consts::E).unwrap().pass);
        let c = HardyPowerConstants::new(0.5).unwrap();
        assert!(s.power_moment(0.5) <= s.norm_sq());
        assert!(s.power_report(&c, 1.0).unwrap().pass);
    }

    #[test]
    fn boundary_touch_is_error() {
        let r = hardy_log_check(&line(64), &bump(3.0, 1.0), 1.0);
        assert!(matches!(r, Err(Error::SupportTouchesBoundary { .. })));
    }

    #[test]
    fn node_at_origin_is_error() {
        let space = ProductSpace::tensor(vec![FactorSpace::lebesgue(-4.0, 4.0, 65).unwrap()]).unwrap();
        assert!(hardy_log_check(&space, &bump(0.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn power_alpha_range() {
        assert!(hardy_power_check(&line(64), &bump(0.0, 1.0), 1.2, 1.0).is_err());
    }

    #[test]
    fn power_and_delta_forms_pass() {
        let s = HardySample::new(&line(4096), &bump(0.1, 0.8)).unwrap();
        for alpha in [0.25, 0.5, 0.75] {
            let c = HardyPowerConstants::new(alpha).unwrap();
            for t in log_grid(1e-3, 1e3, 13) {
                assert!(s.power_report(&c, t).unwrap().pass);
                let d = s.delta_report(&c, c.delta_for(t)).unwrap();
                let p = s.power_report(&c, t).unwrap();
                assert!((d.rhs - p.rhs).abs() <= 1e-10 * p.rhs);
            }
        }
    }

    #[test]
    fn boundary_value_bound() {
        for delta in [0.05, 0.3, 1.0] {
            let r = boundary_value_check(&bump(0.2, 0.9), delta, 2048).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn prop61_unit_function() {
        let one = TestFunction::new("1", vec![(0.0, 1.0)], Arc::new(|_: &[f64]| 1.0))
            .with_partials(vec![Arc::new(|_: &[f64]| 0.0)])
            .unwrap();
        let r = prop61_check(&one, 1.0, 1 << 16).unwrap();
        // ∫₀¹ −ln x = 1 and the right side is exactly ‖1‖² = 1.
        assert!((r.entropy_lhs - 1.0).abs() < 1e-4);
        assert!((r.rhs - 1.0).abs() < 1e-12);
        assert!(r.pass);
        for delta in [0.1, 0.5] {
            assert!(prop61_check(&one, delta, 4096).unwrap().pass);
        }
    }

    #[test]
    fn prop61_support_away_from_zero() {
        let f = bump(0.6, 0.3);
        let r = prop61_check(&f, 0.2, 4096).unwrap();
        assert!(r.dirichlet.abs() < 1e-300 && r.pass);
    }

    #[test]
    fn dilation_agrees() {
        let space = line(2048);
        for kind in [HardyKind::Log, HardyKind::Power { alpha: 0.5 }] {
            for mu in [0.5, 1.7, 3.0] {
                let r = hardy_dilation_check(&space, &bump(0.3, 1.0), kind, mu, 0.4).unwrap();
                assert!(r.agree, "{kind:?} {r:?}");
            }
        }
    }

    #[test]
    fn two_dimensional_is_slice_sum() {
        let f1 = bump(0.0, 1.0);
        let g = {
            let f1 = f1.clone();
            let h = |y: f64| (-(y * y)).exp() * (1.0 - y * y / 16.0).max(0.0);
            TestFunction::new(
                "2d",
                vec![(-1.0, 1.0), (-2.0, 2.0)],
                Arc::new(move |p: &[f64]| f1.value(&p[..1]) * h(p[1])),
            )
            .with_fd_step(1e-5)
            .unwrap()
        };
        let space = ProductSpace::tensor(vec![
            FactorSpace::lebesgue(-4.0, 4.0, 512).unwrap(),
            FactorSpace::lebesgue(-3.0, 3.0, 64).unwrap(),
        ])
        .unwrap();
        let s2 = HardySample::new(&space, &g).unwrap();
        let s1 = HardySample::new(&line(512), &f1).unwrap();
        let ratio = s2.norm_sq() / s1.norm_sq();
        assert!((s2.log_moment() - ratio * s1.log_moment()).abs() < 1e-9 * s2.norm_sq());
        assert!(s2.log_report(0.3).unwrap().pass);
    }
}

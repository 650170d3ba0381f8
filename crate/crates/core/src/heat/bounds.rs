use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::tanh_sinh;
use crate::profiles::Profile;
use crate::scalar::Real;

use super::problem::SparseOperator;
use super::solver::diag_kernel;

/// A positive curve over a time grid, with an optional predicted curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub label: String,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub predicted: Option<Vec<f64>>,
    pub predicted_form: String,
}

impl BoundCurve {
    pub fn new(
        label: impl Into<String>,
        t: Vec<f64>,
        values: Vec<f64>,
        predicted_form: impl Into<String>,
    ) -> Result<Self> {
        if t.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: t.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::NonFinite { what: "bound curve value", coords: vec![t[i]] });
        }
        Ok(Self { label: label.into(), t, values, predicted: None, predicted_form: predicted_form.into() })
    }

    pub fn with_predicted(mut self, predicted: Vec<f64>) -> Result<Self> {
        if predicted.len() != self.t.len() {
            return Err(Error::DimensionMismatch { expected: self.t.len(), got: predicted.len() });
        }
        self.predicted = Some(predicted);
        Ok(self)
    }

    /// Columns `t,value,predicted`; the last is empty without a prediction.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value,predicted\n");
        for (i, (t, v)) in self.t.iter().zip(&self.values).enumerate() {
            let p = self.predicted.as_ref().map(|p| format!("{:e}", p[i])).unwrap_or_default();
            let _ = writeln!(out, "{t:e},{v:e},{p}");
        }
        out
    }

    /// Smallest `c` with `value ≤ c · predicted` on the grid.
    pub fn fitted_constant(&self) -> Option<f64> {
        let p = self.predicted.as_ref()?;
        Some(self.values.iter().zip(p).map(|(v, q)| v / q).fold(0.0, f64::max))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Least-squares slope of `ln value` against `ln t` over `t ∈ [lo, hi]`.
pub fn fit_decay(curve: &BoundCurve, window: (f64, f64)) -> Result<DecayFit> {
    let rel = 1e-12;
    let pts: Vec<(f64, f64)> = curve
        .t
        .iter()
        .zip(&curve.values)
        .filter(|(&t, _)| t >= window.0 * (1.0 - rel) && t <= window.1 * (1.0 + rel))
        .map(|(&t, &v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(DecayFit { exponent: slope, stderr, intercept, points: pts.len() })
}

/// Supremum over `points` of `h_t(p, p)` for each `t`.
pub fn sup_diag_curve<T: Real>(
    op: &SparseOperator<T>,
    times: &[T],
    points: &[(usize, usize)],
    label: impl Into<String>,
) -> Result<BoundCurve> {
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        values.push(diag_kernel(op, t, points)?.sup());
    }
    BoundCurve::new(label, times.iter().map(|t| t.to_f64_lossy()).collect(), values, "")
}

/// The function `g` of a Hardy-type inequality `−∫N h² ≤ t(Ah, h) + g(t)‖h‖²`.
#[derive(Clone)]
pub enum HardyG {
    Zero,
    Constant(f64),
    /// `c t^{-b}`.
    Power {
        c: f64,
        b: f64,
    },
    /// `(m/2) ln(2em/t)`: the logarithmic inequality applied to `m ln|x|`;
    /// `m = 1` is the plain inequality.
    Log {
        m: f64,
    },
    Custom {
        label: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl std::fmt::Debug for HardyG {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Power { c, b } => write!(f, "Power {{ c: {c}, b: {b} }}"),
            Self::Log { m } => write!(f, "Log {{ m: {m} }}"),
            Self::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

impl HardyG {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::Power { c, b } => c * t.powf(-b),
            Self::Log { m } => 0.5 * m * (2.0 * std::f64::consts::E * m / t).ln(),
            Self::Custom { f, .. } => f(t),
        }
    }

    /// `M(t) = (2t)^{-1} ∫₀ᵗ g`.
    pub fn mean(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(invalid("t must be positive"));
        }
        let v = match self {
            Self::Zero => 0.0,
            Self::Constant(c) => 0.5 * c,
            Self::Power { c, b } => {
                if *b >= 1.0 {
                    return Err(Error::NonIntegrable(format!("g = c t^-{b} is not integrable at 0")));
                }
                c * t.powf(-b) / (2.0 * (1.0 - b))
            }
            Self::Log { m } => 0.25 * m * ((2.0 * std::f64::consts::E * m / t).ln() + 1.0),
            Self::Custom { f, .. } => {
                let integral = tanh_sinh(|e: f64| f(e), 0.0, t, 8);
                if !integral.is_finite() {
                    return Err(Error::NonIntegrable("g is not integrable at 0".into()));
                }
                integral / (2.0 * t)
            }
        };
        Ok(v)
    }
}

/// `t ↦ c₁ t^{-n/4} e^{M(t)}` with `c₁ = √c₀ e^{n/4}` for the modified
/// inequality `Ent ≤ t(Ah,h) + ln(c₀ t^{-n/2})‖h‖² − ∫N h²`.
pub fn theorem51_bound(n_eff: f64, c0: f64, g: &HardyG, t_grid: &[f64]) -> Result<BoundCurve> {
    if !(n_eff > 0.0 && c0 > 0.0) {
        return Err(invalid("n and c₀ must be positive"));
    }
    let c1 = c0.sqrt() * (n_eff / 4.0).exp();
    let values =
        t_grid.iter().map(|&t| Ok(c1 * t.powf(-n_eff / 4.0) * g.mean(t)?.exp())).collect::<Result<Vec<_>>>()?;
    BoundCurve::new(format!("c1 t^(-{n_eff}/4) exp(M(t)), g = {g:?}"), t_grid.to_vec(), values, "c1 t^(-n/4) exp(M(t))")
}

/// Profile of the combined inequality `∫h² ln(|h|/‖h‖) ≤ t(Ah,h) + β(t)‖h‖²`
/// obtained by adding the modified inequality and `m` times the Hardy
/// inequality, each at parameter `t`, and halving:
/// `β(t) = ½[M_mod(t) + m·g(t/m)]`.
pub fn combine_super_lsi(m_mod: &Profile<f64>, hardy_g: &HardyG, m: f64) -> Result<Profile<f64>> {
    if !(m > 0.0) {
        return Err(invalid("multiplier must be positive"));
    }
    let base = m_mod.clone();
    let g = hardy_g.clone();
    let label = format!("combine({}, {g:?}, m={m})", m_mod.name());
    Ok(Profile::closure(label, Arc::new(move |t: f64| 0.5 * (base.eval(t).unwrap_or(f64::NAN) + m * g.eval(t / m)))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_exact_power() {
        let t: Vec<f64> = (0..8).map(|k| 0.05 * 2f64.powf(k as f64 / 2.0)).collect();
        let v = t.iter().map(|s| 3.0 * s.powf(-1.5)).collect();
        let c = BoundCurve::new("p", t, v, "t^-1.5").unwrap();
        let fit = fit_decay(&c, (0.0, 10.0)).unwrap();
        assert!((fit.exponent + 1.5).abs() < 1e-12);
        assert!(matches!(fit_decay(&c, (0.05, 0.1)), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn power_mean_matches_quadrature() {
        let (c, b) = (1.7, 0.4);
        let closed = HardyG::Power { c, b };
        let custom = HardyG::Custom { label: "p".into(), f: Arc::new(move |e: f64| c * e.powf(-b)) };
        for t in [0.01, 0.3, 2.0, 50.0] {
            let a = closed.mean(t).unwrap();
            let q = custom.mean(t).unwrap();
            assert!((a - q).abs() <= 1e-8 * a.abs(), "{t}: {a} vs {q}");
        }
        assert!(matches!(HardyG::Power { c, b: 1.0 }.mean(1.0), Err(Error::NonIntegrable(_))));
    }

    #[test]
    fn log_mean_matches_quadrature() {
        let m = 1.0;
        let custom = HardyG::Custom { label: "l".into(), f: Arc::new(move |e: f64| HardyG::Log { m }.eval(e)) };
        for t in [0.05, 1.0] {
            let a = HardyG::Log { m }.mean(t).unwrap();
            assert!((a - custom.mean(t).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_g_is_pure_power() {
        let t = vec![0.1, 1.0, 10.0];
        let c = theorem51_bound(2.0, 1.0, &HardyG::Zero, &t).unwrap();
        let e = 0.5f64.exp();
        for (s, v) in t.iter().zip(&c.values) {
            assert!((v - e * s.powf(-0.5)).abs() < 1e-12 * v);
        }
    }

    #[test]
    fn combined_slope() {
        let flat = Profile::flat(2);
        for (m, slope) in [(1.0, -0.75), (2.0, -1.0)] {
            let p = combine_super_lsi(&flat, &HardyG::Log { m: 1.0 }, m).unwrap();
            let (a, b) = (0.01, 100.0);
            let s = (p.eval(b).unwrap() - p.eval(a).unwrap()) / (b.ln() - a.ln());
            assert!((s - slope).abs() < 1e-12, "m={m}: {s}");
        }
        let p = combine_super_lsi(&flat, &HardyG::Constant(0.8), 2.0).unwrap();
        assert!((p.eval(0.3).unwrap() - 0.5 * (flat.eval(0.3).unwrap() + 1.6)).abs() < 1e-14);
    }

    #[test]
    fn csv_columns() {
        let c = BoundCurve::new("x", vec![1.0, 2.0], vec![1.0, 0.5], "t^-1").unwrap();
        let c = c.with_predicted(vec![1.0, 0.5]).unwrap();
        let csv = c.to_csv();
        assert!(csv.starts_with("t,value,predicted\n"));
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(c.fitted_constant(), Some(1.0));
    }
}

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// A user-supplied rate function that cannot be serialized.
#[derive(Clone)]
pub struct ClosureProfile<T: Real> {
    pub label: String,
    pub f: Arc<dyn Fn(T) -> T + Send + Sync>,
    /// Points where the closure may jump; monotonicity is checked piecewise.
    pub breaks: Vec<T>,
}

impl<T: Real> fmt::Debug for ClosureProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClosureProfile({})", self.label)
    }
}

impl<T: Real> PartialEq for ClosureProfile<T> {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.f, &other.f)
    }
}

/// Super log-Sobolev rate function `t ↦ M(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
#[serde(bound = "T: Real")]
pub enum Profile<T: Real> {
    /// `-(n/2) ln(π e² t)` on `ℝⁿ` with Lebesgue measure.
    FlatEuclidean { n: usize },
    /// `ln(vol · (π e² t)^{-n/2})` for the Dirichlet Laplacian on a domain.
    DomainDirichlet { n: usize, volume: T },
    /// `2 ln c0 − (n/2) ln(t/2)`.
    LiePolynomial { n: usize, c0: T },
    /// Two-branch formula with the break at `t = 1`.
    DamekRicci { n: usize, q: T, c: T },
    /// `ln((π t)^{-n/2} / (1 − kato_ratio))`.
    SchrodingerKato { n: usize, kato_ratio: T },
    /// `c2 2^{γ'} t^{-γ'} − ln t + ln(2 c1)`, established for `0 < t < 1`.
    VeryDegenerate { c1: T, c2: T, gamma_prime: T },
    /// Piecewise linear in `ln t` through the tabulated points.
    Table { t: Vec<T>, m: Vec<T> },
    #[serde(skip)]
    Closure(ClosureProfile<T>),
}

impl<T: Real> Profile<T> {
    pub fn flat(n: usize) -> Self {
        Profile::FlatEuclidean { n }
    }

    pub fn schrodinger_kato(n: usize, kato_ratio: T) -> Result<Self> {
        let p = Profile::SchrodingerKato { n, kato_ratio };
        p.validate()?;
        Ok(p)
    }

    pub fn damek_ricci(n: usize, q: T, c: T) -> Result<Self> {
        let p = Profile::DamekRicci { n, q, c };
        p.validate()?;
        Ok(p)
    }

    pub fn very_degenerate(c1: T, c2: T, gamma_prime: T) -> Result<Self> {
        let p = Profile::VeryDegenerate { c1, c2, gamma_prime };
        p.validate()?;
        Ok(p)
    }

    pub fn table(t: Vec<T>, m: Vec<T>) -> Result<Self> {
        let p = Profile::Table { t, m };
        p.validate()?;
        Ok(p)
    }

    pub fn closure(label: impl Into<String>, f: Arc<dyn Fn(T) -> T + Send + Sync>) -> Self {
        Profile::Closure(ClosureProfile { label: label.into(), f, breaks: Vec::new() })
    }

    /// Parameter checks shared by constructors and deserialization.
    pub fn validate(&self) -> Result<()> {
        let pos = |v: T, name: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            Profile::FlatEuclidean { n } if *n == 0 => Err(invalid("dimension must be ≥ 1")),
            Profile::DomainDirichlet { n, volume } => {
                if *n == 0 {
                    return Err(invalid("dimension must be ≥ 1"));
                }
                pos(*volume, "volume")
            }
            Profile::LiePolynomial { c0, .. } => pos(*c0, "c0"),
            Profile::DamekRicci { q, c, .. } => {
                pos(*c, "C")?;
                if !(*q >= T::zero()) {
                    return Err(invalid("Q must be nonnegative"));
                }
                Ok(())
            }
            Profile::SchrodingerKato { kato_ratio, .. } => {
                if *kato_ratio >= T::zero() && *kato_ratio < T::one() {
                    Ok(())
                } else {
                    Err(invalid(format!("kato_ratio must lie in [0, 1), got {kato_ratio}")))
                }
            }
            Profile::VeryDegenerate { c1, c2, gamma_prime } => {
                pos(*c1, "c1")?;
                pos(*c2, "c2")?;
                pos(*gamma_prime, "gamma_prime")
            }
            Profile::Table { t, m } => {
                if t.len() != m.len() || t.len() < 2 {
                    return Err(invalid("table needs at least two (t, M) pairs of equal length"));
                }
                if t[0] <= T::zero() || t.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("table t values must be positive and strictly increasing"));
                }
                if m.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("table M values must be finite"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `M(t)`.
    pub fn eval(&self, t: T) -> Result<T> {
        if !(t > T::zero()) || !t.is_finite() {
            return Err(invalid(format!("profile argument must be positive, got {t}")));
        }
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        let pie2 = T::PI() * T::E() * T::E();
        let nf = |n: usize| T::from_usize_lossy(n);
        Ok(match self {
            Profile::FlatEuclidean { n } => -half * nf(*n) * (pie2 * t).ln(),
            Profile::DomainDirichlet { n, volume } => volume.ln() - half * nf(*n) * (pie2 * t).ln(),
            Profile::LiePolynomial { n, c0 } => two * c0.ln() - half * nf(*n) * (t / two).ln(),
            Profile::DamekRicci { n, q, c } => {
                let tail = *q * *q * t / T::lit(8.0);
                if t <= T::one() {
                    (*c * two.powf(half * nf(*n))).ln() - half * nf(*n) * t.ln() - tail
                } else {
                    (*c * two.powf(T::lit(1.5))).ln() - T::lit(1.5) * t.ln() - tail
                }
            }
            Profile::SchrodingerKato { n, kato_ratio } => {
                -half * nf(*n) * (T::PI() * t).ln() - (T::one() - *kato_ratio).ln()
            }
            Profile::VeryDegenerate { c1, c2, gamma_prime } => {
                *c2 * two.powf(*gamma_prime) * t.powf(-*gamma_prime) - t.ln() + (two * *c1).ln()
            }
            Profile::Table { t: ts, m } => {
                let (first, last) = (ts[0], ts[ts.len() - 1]);
                if t < first || t > last {
                    return Err(invalid(format!("t = {t} outside table range [{first}, {last}]")));
                }
                let k = ts.partition_point(|&x| x <= t).clamp(1, ts.len() - 1);
                let (a, b) = (ts[k - 1].ln(), ts[k].ln());
                let w = (t.ln() - a) / (b - a);
                m[k - 1] + w * (m[k] - m[k - 1])
            }
            Profile::Closure(c) => (c.f)(t),
        })
    }

    /// Points where `M` may be discontinuous.
    pub fn breaks(&self) -> Vec<T> {
        match self {
            Profile::DamekRicci { .. } => vec![T::one()],
            Profile::Closure(c) => c.breaks.clone(),
            _ => Vec::new(),
        }
    }

    /// Interval on which the source estimate was established, if limited.
    pub fn validity(&self) -> Option<(T, T)> {
        match self {
            Profile::VeryDegenerate { .. } => Some((T::zero(), T::one())),
            Profile::Table { t, .. } => Some((t[0], t[t.len() - 1])),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::FlatEuclidean { .. } => "flat_euclidean",
            Profile::DomainDirichlet { .. } => "domain_dirichlet",
            Profile::LiePolynomial { .. } => "lie_polynomial",
            Profile::DamekRicci { .. } => "damek_ricci",
            Profile::SchrodingerKato { .. } => "schrodinger_kato",
            Profile::VeryDegenerate { .. } => "very_degenerate",
            Profile::Table { .. } => "table",
            Profile::Closure(_) => "closure",
        }
    }

    pub fn to_json(&self) -> Result<String> {
        if let Profile::Closure(c) = self {
            return Err(Error::NotSerializable(format!("closure profile '{}'", c.label)));
        }
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }
}

/// Jump of `M` across a declared break.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Junction {
    pub t: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub nonincreasing: bool,
    /// `(t_i, M(t_i), t_{i+1}, M(t_{i+1}))` at the first increase.
    pub first_violation: Option<(f64, f64, f64, f64)>,
    pub junctions: Vec<Junction>,
}

impl MonotonicityReport {
    pub fn into_result(self) -> Result<Self> {
        match self.first_violation {
            Some((t, m, t_next, m_next)) => Err(Error::ProfileNotMonotone { t, m, t_next, m_next }),
            None => Ok(self),
        }
    }
}

/// Checks `M(t_{i+1}) ≤ M(t_i) + tol` for consecutive grid points in the
/// same continuity piece. Pairs straddling a break are reported as
/// junctions instead.
pub fn check_nonincreasing<T: Real>(p: &Profile<T>, t_grid: &[T]) -> Result<MonotonicityReport> {
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("t grid must be strictly ascending"));
    }
    let breaks = p.breaks();
    let piece = |t: T| breaks.iter().filter(|&&b| t > b).count();
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        values.push(p.eval(t)?);
    }
    let mut report = MonotonicityReport { nonincreasing: true, first_violation: None, junctions: Vec::new() };
    for i in 0..t_grid.len().saturating_sub(1) {
        let (t0, t1) = (t_grid[i], t_grid[i + 1]);
        let (m0, m1) = (values[i], values[i + 1]);
        if piece(t0) != piece(t1) {
            continue;
        }
        let tol = T::lit(1e-12) * (T::one() + m0.abs());
        if m1 > m0 + tol && report.first_violation.is_none() {
            report.nonincreasing = false;
            report.first_violation = Some((t0.to_f64_lossy(), m0.to_f64_lossy(), t1.to_f64_lossy(), m1.to_f64_lossy()));
        }
    }
    for &b in &breaks {
        if t_grid.first().is_some_and(|&t| t <= b) && t_grid.last().is_some_and(|&t| t > b) {
            let eps = b * T::lit(1e-12);
            report.junctions.push(Junction {
                t: b.to_f64_lossy(),
                left: p.eval(b)?.to_f64_lossy(),
                right: p.eval(b + eps)?.to_f64_lossy(),
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::log_grid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn flat_vanishes_at_canonical_time() {
        let p = Profile::<f64>::flat(2);
        assert_abs_diff_eq!(p.eval(1.0 / (PI * E * E)).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn catalog_values() {
        let s = Profile::schrodinger_kato(3, 0.0).unwrap();
        assert_abs_diff_eq!(s.eval(1.0 / PI).unwrap(), 0.0, epsilon = 1e-14);
        let v = Profile::very_degenerate(1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(v.eval(1.0).unwrap(), 2.0 + 2f64.ln(), epsilon = 1e-14);
        let d = Profile::DomainDirichlet { n: 2, volume: 3.0 };
        assert_abs_diff_eq!(d.eval(0.7).unwrap(), (3.0 * (PI * E * E * 0.7).powf(-1.0)).ln(), epsilon = 1e-14);
        let l = Profile::LiePolynomial { n: 4, c0: 1.5 };
        assert_abs_diff_eq!(l.eval(0.2).unwrap(), 2.0 * 1.5f64.ln() - 2.0 * 0.1f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn invalid_arguments() {
        assert!(Profile::<f64>::flat(1).eval(0.0).is_err());
        assert!(Profile::<f64>::flat(1).eval(-1.0).is_err());
        assert!(Profile::schrodinger_kato(3, 1.0f64).is_err());
        assert!(Profile::schrodinger_kato(3, -0.1f64).is_err());
        assert!(Profile::<f64>::from_json(r#"{"kind":"schrodinger_kato","params":{"n":3,"kato_ratio":1.5}}"#).is_err());
    }

    #[test]
    fn monotonicity_examples() {
        let grid = log_grid(1e-3, 1e3, 61);
        assert!(check_nonincreasing(&Profile::flat(1), &grid).unwrap().nonincreasing);
        let inc = Profile::closure("t", Arc::new(|t: f64| t));
        let r = check_nonincreasing(&inc, &grid).unwrap();
        assert!(!r.nonincreasing);
        assert_eq!(r.first_violation.unwrap().0, grid[0]);
        assert!(r.into_result().is_err());

        let dr = Profile::damek_ricci(4, 2.0, 1.0).unwrap();
        let r = check_nonincreasing(&dr, &grid).unwrap();
        assert!(r.nonincreasing);
        assert_eq!(r.junctions.len(), 1);
        let j = r.junctions[0];
        // n = 4: the branches differ by (n/2 − 3/2) ln 2 at t = 1.
        assert_abs_diff_eq!(j.left - j.right, 0.5 * 2f64.ln(), epsilon = 1e-9);
        let dr3 = Profile::damek_ricci(3, 2.0, 1.0).unwrap();
        let j3 = check_nonincreasing(&dr3, &grid).unwrap().junctions[0];
        assert_abs_diff_eq!(j3.left, j3.right, epsilon = 1e-9);
    }

    #[test]
    fn catalog_is_nonincreasing() {
        let grid = log_grid(1e-4, 1e4, 161);
        let catalog: Vec<Profile<f64>> = vec![
            Profile::flat(3),
            Profile::DomainDirichlet { n: 2, volume: 5.0 },
            Profile::LiePolynomial { n: 3, c0: 2.0 },
            Profile::damek_ricci(3, 2.0, 1.5).unwrap(),
            Profile::damek_ricci(7, 5.0, 0.5).unwrap(),
            Profile::schrodinger_kato(3, 0.4).unwrap(),
            Profile::very_degenerate(1.0, 0.5, 1.0 / 3.0).unwrap(),
        ];
        for p in &catalog {
            let r = check_nonincreasing(p, &grid).unwrap();
            assert!(r.nonincreasing, "{p:?}: {r:?}");
        }
    }

    #[test]
    fn closure_profile_not_serializable() {
        let p = Profile::closure("c", Arc::new(|t: f64| -t.ln()));
        assert!(matches!(p.to_json(), Err(Error::NotSerializable(_))));
    }

    #[test]
    fn table_interpolates_in_log_t() {
        let p = Profile::table(vec![1.0, 100.0], vec![0.0, -2.0]).unwrap();
        assert_abs_diff_eq!(p.eval(10.0).unwrap(), -1.0, epsilon = 1e-14);
        assert!(p.eval(1000.0).is_err());
    }

    fn arb_profile() -> impl Strategy<Value = Profile<f64>> {
        let pos = 1e-3f64..1e3;
        prop_oneof![
            (1usize..6).prop_map(Profile::flat),
            ((1usize..6), pos.clone()).prop_map(|(n, volume)| Profile::DomainDirichlet { n, volume }),
            ((1usize..6), pos.clone()).prop_map(|(n, c0)| Profile::LiePolynomial { n, c0 }),
            ((1usize..9), 0.0f64..10.0, pos.clone()).prop_map(|(n, q, c)| Profile::DamekRicci { n, q, c }),
            ((3usize..6), 0.0f64..0.999).prop_map(|(n, kato_ratio)| Profile::SchrodingerKato { n, kato_ratio }),
            (pos.clone(), pos.clone(), 0.01f64..3.0).prop_map(|(c1, c2, gamma_prime)| Profile::VeryDegenerate {
                c1,
                c2,
                gamma_prime
            }),
        ]
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(p in arb_profile()) {
            let s = p.to_json().unwrap();
            let back = Profile::from_json(&s).unwrap();
            prop_assert_eq!(&back, &p);
            prop_assert_eq!(back.to_json().unwrap(), s);
        }

        #[test]
        fn flat_tensor_identity(n in 1usize..12, t in 1e-6f64..1e6) {
            let mn = Profile::<f64>::flat(n).eval(t).unwrap();
            let m1 = Profile::<f64>::flat(1).eval(t).unwrap();
            prop_assert!((mn - n as f64 * m1).abs() <= 1e-12 * (1.0 + mn.abs()));
        }
    }
}

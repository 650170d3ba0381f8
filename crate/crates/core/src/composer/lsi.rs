use crate::error::{invalid, Error, Result};
use crate::numerics::log_grid;
use crate::profiles::{check_nonincreasing, GrossPair, Profile};
use crate::scalar::Real;
use crate::spaces::{entropy_sampled, norm_sq_sampled, slot_energies_sampled, ProductSpace, Sampled, TestFunction};

use super::report::{InequalityReport, Terms, DEFAULT_REL_TOL};

/// What controls the entropy in the base coordinate.
#[derive(Clone, Debug, PartialEq)]
pub enum Slot0<T: Real> {
    Profile(Profile<T>),
    Gross(GrossPair<T>),
}

/// The composed inequality
/// `Ent(f²) ≤ ∫ Γ^{(t)}(f) + ∫ [M₀(t₀) + Σ M_i(t_i N_i²)] f²`
/// (or its defective form with a Gross pair in slot 0).
#[derive(Clone, Debug)]
pub struct SemiDirectLSI<T: Real> {
    space: ProductSpace<T>,
    slot0: Slot0<T>,
    factor_profiles: Vec<Profile<T>>,
    s_floor: Option<T>,
    rel_tol: f64,
}

/// Sampled test function with every `t`-independent quantity precomputed.
#[derive(Clone, Debug)]
pub struct Prepared<T: Real> {
    pub label: String,
    pub sampled: Sampled<T>,
    pub norm_sq: T,
    pub entropy: T,
    /// `∫ N_k² g_k |∂_k f|² dμ` without the slot scale.
    pub slot_energies: Vec<T>,
}

impl<T: Real> SemiDirectLSI<T> {
    /// Profile in slot 0.
    pub fn new(space: ProductSpace<T>, m0: Profile<T>, factor_profiles: Vec<Profile<T>>) -> Result<Self> {
        check_profile(&m0)?;
        Self::build(space, Slot0::Profile(m0), factor_profiles)
    }

    /// Gross pair in slot 0.
    pub fn defective(space: ProductSpace<T>, pair: GrossPair<T>, factor_profiles: Vec<Profile<T>>) -> Result<Self> {
        Self::build(space, Slot0::Gross(pair), factor_profiles)
    }

    fn build(space: ProductSpace<T>, slot0: Slot0<T>, factor_profiles: Vec<Profile<T>>) -> Result<Self> {
        if factor_profiles.len() + 1 != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim() - 1, got: factor_profiles.len() });
        }
        for p in &factor_profiles {
            check_profile(p)?;
        }
        Ok(Self { space, slot0, factor_profiles, s_floor: None, rel_tol: DEFAULT_REL_TOL })
    }

    /// Fixed clamp for the arguments `t_i N_i²`; overrides the default
    /// `t_i · h² · 10⁻⁶` with `h` the smallest grid spacing.
    pub fn with_s_floor(mut self, s: T) -> Result<Self> {
        if !(s > T::zero()) {
            return Err(invalid("s_floor must be positive"));
        }
        self.s_floor = Some(s);
        Ok(self)
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn space(&self) -> &ProductSpace<T> {
        &self.space
    }

    pub fn slot0(&self) -> &Slot0<T> {
        &self.slot0
    }

    pub fn factor_profiles(&self) -> &[Profile<T>] {
        &self.factor_profiles
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn prepare(&self, f: &TestFunction<T>) -> Result<Prepared<T>> {
        self.space.check_support(f, false)?;
        let sampled = self.space.sample_function(f)?;
        self.prepare_sampled(f.label(), sampled)
    }

    pub fn prepare_sampled(&self, label: &str, sampled: Sampled<T>) -> Result<Prepared<T>> {
        let norm_sq = norm_sq_sampled(&self.space, &sampled);
        let entropy = entropy_sampled(&self.space, &sampled)?;
        let slot_energies = slot_energies_sampled(&self.space, &sampled);
        Ok(Prepared { label: label.to_string(), sampled, norm_sq, entropy, slot_energies })
    }

    /// Multiparameter form; `t = (t₀, …, t_n)`. Requires a profile in slot 0.
    pub fn multiparam(&self, t: &[T]) -> Result<Evaluator<'_, T>> {
        if !matches!(self.slot0, Slot0::Profile(_)) {
            return Err(invalid("multiparameter form needs a profile in slot 0; use `defective_form`"));
        }
        self.evaluator("multiparam", t.to_vec())
    }

    /// Form with the Gross pair in slot 0; `t = (t₁, …, t_n)`.
    pub fn defective_form(&self, t: &[T]) -> Result<Evaluator<'_, T>> {
        let a = match &self.slot0 {
            Slot0::Gross(p) => p.a,
            Slot0::Profile(_) => return Err(invalid("defective form needs a Gross pair in slot 0")),
        };
        let mut full = Vec::with_capacity(t.len() + 1);
        full.push(a);
        full.extend_from_slice(t);
        self.evaluator("defective", full)
    }

    /// All parameters equal to `s`.
    pub fn diagonal(&self, s: T) -> Result<Evaluator<'_, T>> {
        let t = vec![s; self.space.dim()];
        let mut e = self.multiparam(&t)?;
        e.kind = "diagonal";
        Ok(e)
    }

    fn evaluator(&self, kind: &'static str, t: Vec<T>) -> Result<Evaluator<'_, T>> {
        if t.len() != self.space.dim() {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: t.len() });
        }
        if t.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(invalid("all parameters t_i must be positive"));
        }
        let (constant_rate, b_const) = match &self.slot0 {
            Slot0::Profile(p) => (Some(p.eval(t[0])?), None),
            Slot0::Gross(g) => (None, Some(g.b)),
        };
        let h = self.space.min_spacing();
        let mut tables = Vec::with_capacity(self.factor_profiles.len());
        let mut floors = Vec::with_capacity(self.factor_profiles.len());
        for (i, p) in self.factor_profiles.iter().enumerate() {
            let slot = i + 1;
            let floor = self.s_floor.unwrap_or(t[slot] * h * h * T::lit(1e-6));
            let n2 = self.space.weight_sq_table(slot);
            let mut table = Vec::with_capacity(n2.len());
            let mut clamped = Vec::with_capacity(n2.len());
            for &w in n2 {
                let s = t[slot] * w;
                clamped.push(s < floor);
                table.push(p.eval(s.max(floor))?);
            }
            tables.push((table, clamped));
            floors.push(floor);
        }
        Ok(Evaluator { lsi: self, kind, t, constant_rate, b_const, tables, floors })
    }
}

fn check_profile<T: Real>(p: &Profile<T>) -> Result<()> {
    let grid: Vec<T> = match p.validity() {
        Some((lo, hi)) if lo > T::zero() => {
            log_grid(lo.to_f64_lossy(), hi.to_f64_lossy(), 41).into_iter().map(T::lit).collect()
        }
        Some((_, hi)) => log_grid(1e-4, hi.to_f64_lossy(), 41).into_iter().map(T::lit).collect(),
        None => log_grid(1e-4, 1e4, 81).into_iter().map(T::lit).collect(),
    };
    check_nonincreasing(p, &grid)?.into_result().map(|_| ())
}

/// The inequality at a fixed parameter vector.
pub struct Evaluator<'a, T: Real> {
    lsi: &'a SemiDirectLSI<T>,
    kind: &'static str,
    t: Vec<T>,
    constant_rate: Option<T>,
    b_const: Option<T>,
    /// Per factor slot: `M_i(max(t_i N_i², floor))` on the prefix grid and
    /// whether the clamp was active there.
    tables: Vec<(Vec<T>, Vec<bool>)>,
    floors: Vec<T>,
}

impl<'a, T: Real> Evaluator<'a, T> {
    pub fn params(&self) -> &[T] {
        &self.t
    }

    /// Pointwise `Σ_i M_i(t_i N_i²)` at flat node `idx` (slot 0 excluded).
    pub fn potential_at(&self, idx: usize) -> T {
        let space = &self.lsi.space;
        self.tables.iter().enumerate().map(|(i, (tab, _))| tab[space.prefix_index(i + 1, idx)]).sum()
    }

    pub fn evaluate(&self, f: &TestFunction<T>) -> Result<InequalityReport> {
        self.evaluate_prepared(&self.lsi.prepare(f)?)
    }

    pub fn evaluate_prepared(&self, p: &Prepared<T>) -> Result<InequalityReport> {
        let space = &self.lsi.space;
        let mut potential = T::zero();
        let mut clamped_mass = T::zero();
        for (idx, (&v, &w)) in p.sampled.values.iter().zip(space.node_weights()).enumerate() {
            let f2w = v * v * w;
            if f2w == T::zero() {
                continue;
            }
            for (i, (tab, clamp)) in self.tables.iter().enumerate() {
                let k = space.prefix_index(i + 1, idx);
                potential += tab[k] * f2w;
                if clamp[k] {
                    clamped_mass += f2w;
                }
            }
        }
        let mut warnings = Vec::new();
        if clamped_mass > T::zero() {
            warnings.push(format!(
                "s_floor {:?} active on nodes carrying f² mass {:e}; singularity may be under-resolved",
                self.floors.iter().map(|v| v.to_f64_lossy()).collect::<Vec<_>>(),
                clamped_mass.to_f64_lossy()
            ));
        }
        let constant = match (self.constant_rate, self.b_const) {
            (Some(m0), _) => m0 * p.norm_sq,
            (None, Some(b)) => b * p.norm_sq,
            _ => unreachable!("slot 0 is either a profile or a Gross pair"),
        };
        let per_slot = p.slot_energies.iter().zip(&self.t).map(|(&e, &t)| (e * t).to_f64_lossy()).collect();
        InequalityReport::assemble(
            Terms {
                kind: self.kind.to_string(),
                label: p.label.clone(),
                params: self.t.iter().map(|v| v.to_f64_lossy()).collect(),
                norm_sq: p.norm_sq.to_f64_lossy(),
                lhs: p.entropy.to_f64_lossy(),
                dirichlet_per_slot: per_slot,
                potential: potential.to_f64_lossy(),
                constant_term: constant.to_f64_lossy(),
                warnings,
            },
            self.lsi.rel_tol,
        )
    }
}

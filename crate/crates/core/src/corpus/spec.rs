use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::composer::dilate;
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::spaces::{FnN, ProductSpace, TestFunction};

/// Descriptor of a deterministic test function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorpusSpec {
    /// `f = √p` with `p` the Gaussian density of covariance `scale·I`
    /// centred at `center`, so `‖f‖² = 1` on the whole space.
    Gaussian { center: Vec<f64>, scale: f64 },
    /// `exp(−smoothness/(1 − ρ²))`, `ρ² = Σ((xᵢ − cᵢ)/rᵢ)²`, on the ellipsoid `ρ < 1`.
    Bump { center: Vec<f64>, radius: Vec<f64>, smoothness: f64 },
    /// Product of functions of consecutive coordinate blocks.
    Tensor { factors: Vec<CorpusSpec> },
    /// `x ↦ base(x − shift)`.
    Translated { base: Box<CorpusSpec>, shift: Vec<f64> },
    /// `x ↦ base(λ^{a₀}x₀, …, λ^{a_n}x_n)`.
    Dilated { base: Box<CorpusSpec>, exponents: Vec<f64>, lambda: f64 },
    /// A seeded trigonometric polynomial times a unit bump on the ellipsoid.
    TrigField { seed: u64, modes: usize, center: Vec<f64>, radius: Vec<f64> },
}

/// Gaussian tails are cut where `√p` has dropped by this factor.
const GAUSSIAN_TAIL: f64 = 1e-12;

impl CorpusSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian { center, .. } | Self::Bump { center, .. } | Self::TrigField { center, .. } => center.len(),
            Self::Tensor { factors } => factors.iter().map(Self::dim).sum(),
            Self::Translated { base, .. } | Self::Dilated { base, .. } => base.dim(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Gaussian { center, scale } => format!("gaussian({center:?},{scale})"),
            Self::Bump { center, radius, smoothness } => format!("bump({center:?},{radius:?},{smoothness})"),
            Self::Tensor { factors } => {
                let parts: Vec<String> = factors.iter().map(Self::label).collect();
                format!("tensor[{}]", parts.join("x"))
            }
            Self::Translated { base, shift } => format!("{}+{shift:?}", base.label()),
            Self::Dilated { base, exponents, lambda } => format!("{}∘H({exponents:?},{lambda})", base.label()),
            Self::TrigField { seed, modes, .. } => format!("trig(seed={seed},modes={modes})"),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Builds the function and checks that its support lies in the space's
/// truncation box.
pub fn make<T: Real>(spec: &CorpusSpec, space: &ProductSpace<T>) -> Result<TestFunction<T>> {
    if spec.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: spec.dim() });
    }
    let bounds: Vec<(f64, f64)> = space.bounds().iter().map(|&(a, b)| (a.to_f64_lossy(), b.to_f64_lossy())).collect();
    let f = build::<T>(spec, &bounds)?;
    space.check_support(&f, false)?;
    Ok(f)
}

fn lits<T: Real>(v: &[f64]) -> Arc<Vec<T>> {
    Arc::new(v.iter().map(|&x| T::lit(x)).collect())
}

fn build<T: Real>(spec: &CorpusSpec, bounds: &[(f64, f64)]) -> Result<TestFunction<T>> {
    let label = spec.label();
    match spec {
        CorpusSpec::Gaussian { center, scale } => gaussian(label, center, *scale, bounds),
        CorpusSpec::Bump { center, radius, smoothness } => bump(label, center, radius, *smoothness),
        CorpusSpec::Tensor { factors } => {
            let mut parts = Vec::with_capacity(factors.len());
            let mut offset = 0;
            for f in factors {
                let d = f.dim();
                if offset + d > bounds.len() {
                    return Err(Error::DimensionMismatch { expected: bounds.len(), got: offset + d });
                }
                parts.push((offset, build::<T>(f, &bounds[offset..offset + d])?));
                offset += d;
            }
            Ok(tensor(label, parts))
        }
        CorpusSpec::Translated { base, shift } => {
            if shift.len() != base.dim() {
                return Err(Error::DimensionMismatch { expected: base.dim(), got: shift.len() });
            }
            let pre: Vec<(f64, f64)> = bounds.iter().zip(shift).map(|(&(a, b), &s)| (a - s, b - s)).collect();
            Ok(translate(label, build::<T>(base, &pre)?, shift))
        }
        CorpusSpec::Dilated { base, exponents, lambda } => {
            if !(*lambda > 0.0) {
                return Err(invalid("dilation parameter must be positive"));
            }
            if exponents.len() != base.dim() {
                return Err(Error::DimensionMismatch { expected: base.dim(), got: exponents.len() });
            }
            let pre: Vec<(f64, f64)> = bounds
                .iter()
                .zip(exponents)
                .map(|(&(a, b), &e)| {
                    let s = lambda.powf(e);
                    (a * s, b * s)
                })
                .collect();
            let base = build::<T>(base, &pre)?;
            let ex: Vec<T> = exponents.iter().map(|&e| T::lit(e)).collect();
            Ok(dilate(&base, &ex, T::lit(*lambda))?.relabel(label))
        }
        CorpusSpec::TrigField { seed, modes, center, radius } => trig_field(label, *seed, *modes, center, radius),
    }
}

fn gaussian<T: Real>(label: String, center: &[f64], scale: f64, bounds: &[(f64, f64)]) -> Result<TestFunction<T>> {
    if !(scale > 0.0) {
        return Err(invalid("Gaussian scale must be positive"));
    }
    if center.len() != bounds.len() {
        return Err(Error::DimensionMismatch { expected: bounds.len(), got: center.len() });
    }
    // √p ∝ exp(−|x−c|²/(4·scale)); the cut radius keeps the tail below GAUSSIAN_TAIL.
    let cut = (4.0 * scale * (1.0 / GAUSSIAN_TAIL).ln()).sqrt();
    for (&c, &(a, b)) in center.iter().zip(bounds) {
        if c - cut < a || c + cut > b {
            return Err(Error::SupportOutsideBox {
                support: center.iter().map(|&c| (c - cut, c + cut)).collect(),
                domain: bounds.to_vec(),
            });
        }
    }
    let n = center.len();
    let c = lits::<T>(center);
    let s = T::lit(scale);
    let norm = (T::lit(2.0) * T::PI() * s).powf(-T::lit(n as f64) / T::lit(4.0));
    let value = {
        let c = c.clone();
        move |x: &[T]| {
            let r2: T = x.iter().zip(c.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum();
            norm * (-r2 / (T::lit(4.0) * s)).exp()
        }
    };
    let partials: Vec<FnN<T>> = (0..n)
        .map(|i| {
            let c = c.clone();
            let v = value.clone();
            Arc::new(move |x: &[T]| -(x[i] - c[i]) / (T::lit(2.0) * s) * v(x)) as FnN<T>
        })
        .collect();
    let support = center.iter().map(|&c| (T::lit(c - cut), T::lit(c + cut))).collect();
    TestFunction::new(label, support, Arc::new(value)).with_partials(partials)
}

/// `ρ² = Σ((xᵢ − cᵢ)/rᵢ)²`.
fn bump_parts<T: Real>(x: &[T], c: &[T], r: &[T]) -> T {
    x.iter().zip(c).zip(r).map(|((&x, &c), &r)| ((x - c) / r).powi(2)).sum()
}

fn bump<T: Real>(label: String, center: &[f64], radius: &[f64], smoothness: f64) -> Result<TestFunction<T>> {
    if center.len() != radius.len() {
        return Err(Error::DimensionMismatch { expected: center.len(), got: radius.len() });
    }
    if radius.iter().any(|&r| !(r > 0.0)) || !(smoothness > 0.0) {
        return Err(invalid("bump radii and smoothness must be positive"));
    }
    let n = center.len();
    let (c, r) = (lits::<T>(center), lits::<T>(radius));
    let k = T::lit(smoothness);
    let value = {
        let (c, r) = (c.clone(), r.clone());
        move |x: &[T]| {
            let q = T::one() - bump_parts(x, &c, &r);
            if q > T::zero() {
                (-k / q).exp()
            } else {
                T::zero()
            }
        }
    };
    let partials: Vec<FnN<T>> = (0..n)
        .map(|i| {
            let (c, r) = (c.clone(), r.clone());
            Arc::new(move |x: &[T]| {
                let q = T::one() - bump_parts(x, &c, &r);
                if q > T::zero() {
                    let v = (-k / q).exp();
                    -k * T::lit(2.0) * (x[i] - c[i]) / (r[i] * r[i]) / (q * q) * v
                } else {
                    T::zero()
                }
            }) as FnN<T>
        })
        .collect();
    let support = center.iter().zip(radius).map(|(&c, &r)| (T::lit(c - r), T::lit(c + r))).collect();
    TestFunction::new(label, support, Arc::new(value)).with_partials(partials)
}

fn tensor<T: Real>(label: String, parts: Vec<(usize, TestFunction<T>)>) -> TestFunction<T> {
    let parts = Arc::new(parts);
    let dim: usize = parts.iter().map(|(_, f)| f.dim()).sum();
    let support = parts.iter().flat_map(|(_, f)| f.support().to_vec()).collect();
    let value = {
        let parts = parts.clone();
        move |x: &[T]| parts.iter().map(|(o, f)| f.value(&x[*o..*o + f.dim()])).fold(T::one(), |a, b| a * b)
    };
    let partials: Vec<FnN<T>> = (0..dim)
        .map(|i| {
            let parts = parts.clone();
            Arc::new(move |x: &[T]| {
                parts.iter().fold(T::one(), |acc, (o, f)| {
                    let xs = &x[*o..*o + f.dim()];
                    let v = if (*o..*o + f.dim()).contains(&i) {
                        f.partial(i - o, xs).unwrap_or_else(|_| T::nan())
                    } else {
                        f.value(xs)
                    };
                    acc * v
                })
            }) as FnN<T>
        })
        .collect();
    TestFunction::new(label, support, Arc::new(value)).with_partials(partials).expect("partials match the dimension")
}

fn translate<T: Real>(label: String, base: TestFunction<T>, shift: &[f64]) -> TestFunction<T> {
    let s = lits::<T>(shift);
    let support = base.support().iter().zip(s.iter()).map(|(&(a, b), &d)| (a + d, b + d)).collect();
    let shifted = {
        let s = s.clone();
        move |x: &[T]| -> Vec<T> { x.iter().zip(s.iter()).map(|(&v, &d)| v - d).collect() }
    };
    let value = {
        let (b, sh) = (base.clone(), shifted.clone());
        move |x: &[T]| b.value(&sh(x))
    };
    let partials: Vec<FnN<T>> = (0..base.dim())
        .map(|i| {
            let (b, sh) = (base.clone(), shifted.clone());
            Arc::new(move |x: &[T]| b.partial(i, &sh(x)).unwrap_or_else(|_| T::nan())) as FnN<T>
        })
        .collect();
    TestFunction::new(label, support, Arc::new(value)).with_partials(partials).expect("partials match the dimension")
}

/// Wave vector, phase and amplitude of one trigonometric term.
type Mode = (Vec<f64>, f64, f64);

fn trig_modes(seed: u64, modes: usize, dim: usize) -> Vec<Mode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..modes)
        .map(|_| {
            let k: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let amp = rng.gen_range(-1.0..1.0) / modes as f64;
            (k, phase, amp)
        })
        .collect()
}

fn trig_field<T: Real>(
    label: String,
    seed: u64,
    modes: usize,
    center: &[f64],
    radius: &[f64],
) -> Result<TestFunction<T>> {
    if modes == 0 {
        return Err(invalid("a trigonometric field needs at least one mode"));
    }
    let env = bump::<T>(String::new(), center, radius, 1.0)?;
    let dim = center.len();
    let table: Arc<Vec<(Vec<T>, T, T)>> = Arc::new(
        trig_modes(seed, modes, dim)
            .into_iter()
            .map(|(k, p, a)| (k.into_iter().map(T::lit).collect(), T::lit(p), T::lit(a)))
            .collect(),
    );
    let c = lits::<T>(center);
    // P(x) = 1 + Σ a cos(k·(x − c) + φ), scaled to stay of order one.
    let arg = |k: &[T], x: &[T], c: &[T], p: T| k.iter().zip(x).zip(c).map(|((&k, &x), &c)| k * (x - c)).sum::<T>() + p;
    let poly = {
        let (t, c) = (table.clone(), c.clone());
        move |x: &[T]| T::one() + t.iter().map(|(k, p, a)| *a * arg(k, x, &c, *p).cos()).sum::<T>()
    };
    let value = {
        let (e, p) = (env.clone(), poly.clone());
        move |x: &[T]| {
            let ev = e.value(x);
            if ev == T::zero() {
                T::zero()
            } else {
                ev * p(x)
            }
        }
    };
    let partials: Vec<FnN<T>> = (0..dim)
        .map(|i| {
            let (e, p, t, c) = (env.clone(), poly.clone(), table.clone(), c.clone());
            Arc::new(move |x: &[T]| {
                let ev = e.value(x);
                if ev == T::zero() {
                    return T::zero();
                }
                let dp: T = t.iter().map(|(k, ph, a)| -*a * k[i] * arg(k, x, &c, *ph).sin()).sum();
                e.partial(i, x).unwrap_or_else(|_| T::nan()) * p(x) + ev * dp
            }) as FnN<T>
        })
        .collect();
    TestFunction::new(label, env.support().to_vec(), Arc::new(value)).with_partials(partials)
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// Twenty functions spread over the families, sized to sit inside
/// `[−R, R]^dim`.
pub fn standard_corpus(dim: usize, r: f64) -> Vec<CorpusSpec> {
    let zero = vec![0.0; dim];
    let unit = |k: usize, v: f64| -> Vec<f64> {
        let mut e = vec![0.0; dim];
        e[k % dim] = v;
        e
    };
    let ones = vec![1.0; dim];
    let cut2 = 4.0 * (1.0 / GAUSSIAN_TAIL).ln();
    // Largest Gaussian scale whose tail cut fits in 0.9R around a centre at distance d.
    let gscale = |d: f64| ((0.9 * r - d).powi(2) / cut2).min(1.0);
    let b = |c: Vec<f64>, rad: Vec<f64>, s: f64| CorpusSpec::Bump { center: c, radius: rad, smoothness: s };
    let mut out = vec![
        CorpusSpec::Gaussian { center: zero.clone(), scale: gscale(0.0) },
        CorpusSpec::Gaussian { center: zero.clone(), scale: 0.25 * gscale(0.0) },
        CorpusSpec::Gaussian { center: unit(0, 0.1 * r), scale: gscale(0.1 * r) },
        b(zero.clone(), scaled(&ones, 0.5 * r), 1.0),
        b(zero.clone(), scaled(&ones, 0.25 * r), 1.0),
        b(unit(0, 0.3 * r), scaled(&ones, 0.4 * r), 1.0),
        b(unit(1, -0.2 * r), (0..dim).map(|k| r * if k == 0 { 0.6 } else { 0.3 }).collect(), 0.5),
        b(zero.clone(), scaled(&ones, 0.7 * r), 3.0),
    ];
    if dim >= 2 {
        let parts = |c0: f64| {
            (0..dim)
                .map(|k| CorpusSpec::Bump {
                    center: vec![if k == 0 { c0 } else { 0.0 }],
                    radius: vec![0.5 * r],
                    smoothness: 1.0,
                })
                .collect()
        };
        out.push(CorpusSpec::Tensor { factors: parts(0.0) });
        out.push(CorpusSpec::Tensor { factors: parts(-0.2 * r) });
    } else {
        out.push(b(unit(0, -0.4 * r), vec![0.35 * r], 2.0));
        out.push(b(zero.clone(), vec![0.8 * r], 0.3));
    }
    out.push(CorpusSpec::Translated {
        base: Box::new(b(zero.clone(), scaled(&ones, 0.4 * r), 1.0)),
        shift: unit(0, 0.35 * r),
    });
    out.push(CorpusSpec::Translated {
        base: Box::new(b(zero.clone(), scaled(&ones, 0.3 * r), 1.0)),
        shift: (0..dim).map(|_| -0.2 * r).collect(),
    });
    let ex: Vec<f64> = (0..dim).map(|k| 1.0 + 0.5 * k as f64).collect();
    out.push(CorpusSpec::Dilated {
        base: Box::new(b(zero.clone(), scaled(&ones, 0.4 * r), 1.0)),
        exponents: ex.clone(),
        lambda: 1.5,
    });
    out.push(CorpusSpec::Dilated {
        base: Box::new(b(zero.clone(), scaled(&ones, 0.25 * r), 1.0)),
        exponents: ex,
        lambda: 0.8,
    });
    for seed in 0..6 {
        let c = unit(seed as usize, 0.05 * r * (seed as f64 - 2.5));
        out.push(CorpusSpec::TrigField { seed, modes: 3 + seed as usize, center: c, radius: scaled(&ones, 0.6 * r) });
    }
    out
}

/// Seeded two-factor functions for gradient and slice checks.
pub fn seeded_fields(base_seed: u64, count: usize, dim: usize, r: f64) -> Vec<CorpusSpec> {
    (base_seed..base_seed + count as u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ seed);
            let center: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.2..0.2) * r).collect();
            let radius: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.4..0.7) * r).collect();
            CorpusSpec::TrigField { seed, modes: 2 + (seed % 5) as usize, center, radius }
        })
        .collect()
}

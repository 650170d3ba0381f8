use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

use super::problem::SparseOperator;

/// Cholesky factor `L` of a symmetric positive-definite band matrix,
/// stored row by row over the columns `i − b ..= i`.
#[derive(Clone, Debug)]
pub struct BandedCholesky<T> {
    n: usize,
    b: usize,
    l: Vec<T>,
}

impl<T: Real> BandedCholesky<T> {
    /// Factors `I + c·A`.
    pub fn shifted(op: &SparseOperator<T>, c: T) -> Result<Self> {
        let n = op.len();
        let b = op.problem.bandwidth();
        let w = b + 1;
        let mut l = vec![T::zero(); n * w];
        for i in 0..n {
            for (j, v) in op.row(i) {
                if j <= i {
                    if i - j > b {
                        return Err(invalid("operator exceeds the declared bandwidth"));
                    }
                    l[i * w + (j + b - i)] = c * v;
                }
            }
            l[i * w + b] += T::one();
        }
        for i in 0..n {
            let first = i.saturating_sub(b);
            for j in first..=i {
                let lo = first.max(j.saturating_sub(b));
                let ri = &l[i * w + (lo + b - i)..i * w + (j + b - i)];
                let rj = &l[j * w + (lo + b - j)..j * w + b];
                let s = l[i * w + (j + b - i)] - dot(ri, rj);
                if j == i {
                    if !(s > T::zero()) {
                        return Err(Error::SolverBreakdown { row: i });
                    }
                    l[i * w + b] = s.sqrt();
                } else {
                    l[i * w + (j + b - i)] = s / l[j * w + b];
                }
            }
        }
        Ok(Self { n, b, l })
    }

    /// Solves in place for `k` right-hand sides stored one after another,
    /// `x[r·n + node]`.
    pub fn solve_many(&self, x: &mut [T], k: usize) {
        debug_assert_eq!(x.len(), self.n * k);
        for chunk in x.chunks_exact_mut(self.n) {
            self.solve(chunk);
        }
    }

    pub fn solve(&self, x: &mut [T]) {
        let (n, b, w) = (self.n, self.b, self.b + 1);
        for i in 0..n {
            let first = i.saturating_sub(b);
            let row = &self.l[i * w + (first + b - i)..i * w + b];
            let dot = dot(row, &x[first..i]);
            x[i] = (x[i] - dot) / self.l[i * w + b];
        }
        for i in (0..n).rev() {
            let xi = x[i] / self.l[i * w + b];
            x[i] = xi;
            let first = i.saturating_sub(b);
            let row = &self.l[i * w + (first + b - i)..i * w + b];
            for (v, &a) in x[first..i].iter_mut().zip(row) {
                *v -= a * xi;
            }
        }
    }
}

/// Four independent accumulators, so the reduction vectorizes.
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: T = ca.remainder().iter().zip(cb.remainder()).map(|(&x, &y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Crank–Nicolson stepper for `u' = −𝓛u` with a fixed step.
pub struct CrankNicolson<'a, T: Real> {
    op: &'a SparseOperator<T>,
    dt: T,
    factor: BandedCholesky<T>,
}

impl<'a, T: Real> CrankNicolson<'a, T> {
    pub fn new(op: &'a SparseOperator<T>, dt: T) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(invalid("time step must be positive"));
        }
        let factor = BandedCholesky::shifted(op, dt * T::lit(0.5))?;
        Ok(Self { op, dt, factor })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// One step for `k` states stored one after another.
    pub fn step_many(&self, u: &mut [T], k: usize, scratch: &mut Vec<T>) {
        let half = self.dt * T::lit(0.5);
        let n = self.op.len();
        scratch.resize(n, T::zero());
        for state in u.chunks_exact_mut(n).take(k) {
            self.op.matvec(state, scratch);
            for (v, &a) in state.iter_mut().zip(scratch.iter()) {
                *v -= half * a;
            }
            self.factor.solve(state);
        }
    }
}

/// Flush-to-zero and denormals-are-zero on the current thread while alive.
/// States spread from a point source decay geometrically across the grid,
/// and subnormal arithmetic in the far field otherwise dominates the cost.
struct FlushDenormals {
    #[cfg(target_arch = "x86_64")]
    saved: u32,
}

impl FlushDenormals {
    #[allow(deprecated)]
    fn new() -> Self {
        #[cfg(target_arch = "x86_64")]
        {
            use std::arch::x86_64::{_mm_getcsr, _mm_setcsr};
            // SAFETY: SSE is part of the x86_64 baseline; only the FTZ and DAZ bits change.
            let saved = unsafe { _mm_getcsr() };
            unsafe { _mm_setcsr(saved | 0x8040) };
            Self { saved }
        }
        #[cfg(not(target_arch = "x86_64"))]
        Self {}
    }
}

impl Drop for FlushDenormals {
    #[allow(deprecated)]
    fn drop(&mut self) {
        #[cfg(target_arch = "x86_64")]
        // SAFETY: restores the register read in `new`.
        unsafe {
            std::arch::x86_64::_mm_setcsr(self.saved)
        };
    }
}

fn check_finite<T: Real>(u: &[T], t: f64) -> Result<()> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what: "semigroup state", coords: vec![t] })
    }
}

/// `e^{−t𝓛}v` by `steps` Crank–Nicolson steps.
pub fn semigroup_apply<T: Real>(op: &SparseOperator<T>, v: &[T], t: T, steps: usize) -> Result<Vec<T>> {
    let mut out = semigroup_apply_many(op, &[v.to_vec()], t, steps)?;
    Ok(out.pop().expect("one state"))
}

pub fn semigroup_apply_many<T: Real>(op: &SparseOperator<T>, vs: &[Vec<T>], t: T, steps: usize) -> Result<Vec<Vec<T>>> {
    if !(t > T::zero()) {
        return Err(invalid("t must be positive"));
    }
    if steps < 16 {
        return Err(invalid("at least 16 time steps are required"));
    }
    let n = op.len();
    if vs.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: vs.iter().map(Vec::len).find(|&l| l != n).unwrap_or(0),
        });
    }
    let k = vs.len();
    let _ftz = FlushDenormals::new();
    let cn = CrankNicolson::new(op, t / T::from_usize_lossy(steps))?;
    let mut u = vs.concat();
    let mut scratch = Vec::with_capacity(u.len());
    for _ in 0..steps {
        cn.step_many(&mut u, k, &mut scratch);
    }
    check_finite(&u, t.to_f64_lossy())?;
    Ok(split(&u, n))
}

fn split<T: Real>(u: &[T], n: usize) -> Vec<Vec<T>> {
    u.chunks_exact(n).map(<[T]>::to_vec).collect()
}

/// Initial number of Crank–Nicolson steps in [`diag_kernel`].
pub const BASE_STEPS: usize = 64;
/// Relative change below which step doubling stops.
pub const STEP_TOL: f64 = 5e-3;
const MAX_DOUBLINGS: usize = 4;

/// Diagonal heat-kernel values at grid nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagKernel {
    pub t: f64,
    pub points: Vec<(usize, usize)>,
    /// `(e^{−t𝓛}δ_p)(p)`.
    pub values: Vec<f64>,
    /// `‖e^{−t𝓛/2}δ_p‖² · cell area`, equal to `h_t(p,p)` by symmetry.
    pub via_norm: Vec<f64>,
    pub steps: usize,
    pub converged: bool,
}

impl DiagKernel {
    /// Largest relative gap between the two routes.
    pub fn symmetry_gap(&self) -> f64 {
        self.values.iter().zip(&self.via_norm).map(|(a, b)| (a - b).abs() / a.abs().max(b.abs())).fold(0.0, f64::max)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn diag_once<T: Real>(
    op: &SparseOperator<T>,
    t: T,
    points: &[(usize, usize)],
    steps: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = &op.problem;
    let n = op.len();
    let k = points.len();
    let deltas: Vec<Vec<T>> = points.iter().map(|&(i, j)| p.delta(i, j)).collect();
    let _ftz = FlushDenormals::new();
    let cn = CrankNicolson::new(op, t / T::from_usize_lossy(steps))?;
    let mut u = deltas.concat();
    let mut scratch = Vec::with_capacity(u.len());
    for _ in 0..steps / 2 {
        cn.step_many(&mut u, k, &mut scratch);
    }
    check_finite(&u, t.to_f64_lossy() / 2.0)?;
    let area = p.cell_area();
    let mut via_norm = vec![T::zero(); k];
    for (q, state) in u.chunks_exact(n).enumerate() {
        via_norm[q] = state.iter().map(|&v| v * v).sum();
    }
    for _ in steps / 2..steps {
        cn.step_many(&mut u, k, &mut scratch);
    }
    check_finite(&u, t.to_f64_lossy())?;
    let values = points.iter().enumerate().map(|(q, &(i, j))| u[q * n + p.index(i, j)].to_f64_lossy()).collect();
    Ok((values, via_norm.into_iter().map(|v| (v * area).to_f64_lossy()).collect()))
}

/// `h_t(p, p) ≈ (e^{−t𝓛}δ_p)(p)` with `δ_p = 1/(cell area)` at `p`. Step
/// counts start at [`BASE_STEPS`] and double until every value moves by
/// less than [`STEP_TOL`].
pub fn diag_kernel<T: Real>(op: &SparseOperator<T>, t: T, points: &[(usize, usize)]) -> Result<DiagKernel> {
    if points.is_empty() {
        return Err(invalid("no probe points"));
    }
    let p = &op.problem;
    if points.iter().any(|&(i, j)| i >= p.nx || j >= p.ny) {
        return Err(invalid("probe point outside the grid"));
    }
    let mut steps = BASE_STEPS;
    let (mut values, mut via_norm) = diag_once(op, t, points, steps)?;
    let mut converged = false;
    for _ in 0..MAX_DOUBLINGS {
        let (v2, n2) = diag_once(op, t, points, 2 * steps)?;
        steps *= 2;
        let change = values.iter().zip(&v2).map(|(a, b)| (a - b).abs() / b.abs()).fold(0.0, f64::max);
        values = v2;
        via_norm = n2;
        if change < STEP_TOL {
            converged = true;
            break;
        }
    }
    Ok(DiagKernel { t: t.to_f64_lossy(), points: points.to_vec(), values, via_norm, steps, converged })
}

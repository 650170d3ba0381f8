use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// The coefficient `ρ²(x)` in `𝓛 = −∂ₓ² − ρ²(x)∂_y²`.
#[derive(Clone)]
pub enum Coefficient<T: Real> {
    /// `(x²)^m`.
    Power {
        m: T,
    },
    /// `exp(−2/|x|^α)`.
    VeryDegenerate {
        alpha: T,
    },
    Custom {
        label: String,
        f: Arc<dyn Fn(T) -> T + Send + Sync>,
    },
}

impl<T: Real> Coefficient<T> {
    pub fn eval(&self, x: T) -> T {
        match self {
            Self::Power { m } => {
                if *m == T::zero() {
                    T::one()
                } else {
                    (x * x).powf(*m)
                }
            }
            Self::VeryDegenerate { alpha } => {
                if x == T::zero() {
                    T::zero()
                } else {
                    (-T::lit(2.0) / x.abs().powf(*alpha)).exp()
                }
            }
            Self::Custom { f, .. } => f(x),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Power { m } => format!("(x^2)^{m}"),
            Self::VeryDegenerate { alpha } => format!("exp(-2/|x|^{alpha})"),
            Self::Custom { label, .. } => label.clone(),
        }
    }
}

impl<T: Real> fmt::Debug for Coefficient<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// `𝓛 = −∂ₓ² − ρ²(x)∂_y²` on the box `[−R_x, R_x] × [−R_y, R_y]` with
/// homogeneous Dirichlet conditions, discretized on a staggered grid.
#[derive(Clone, Debug)]
pub struct HeatProblem<T: Real> {
    pub rx: T,
    pub ry: T,
    pub nx: usize,
    pub ny: usize,
    pub coefficient: Coefficient<T>,
}

impl<T: Real> HeatProblem<T> {
    pub fn new(r: T, nx: usize, ny: usize, coefficient: Coefficient<T>) -> Result<Self> {
        Self::with_radii(r, r, nx, ny, coefficient)
    }

    pub fn with_radii(rx: T, ry: T, nx: usize, ny: usize, coefficient: Coefficient<T>) -> Result<Self> {
        if !(rx > T::zero() && ry > T::zero() && rx.is_finite() && ry.is_finite()) {
            return Err(invalid("box radii must be positive"));
        }
        if nx < 3 || ny < 3 {
            return Err(invalid("at least three nodes per axis are needed"));
        }
        let p = Self { rx, ry, nx, ny, coefficient };
        for i in 0..nx {
            let x = p.x(i);
            let r = p.coefficient.eval(x);
            if !(r.is_finite() && r >= T::zero()) {
                return Err(Error::NonFinite { what: "coefficient", coords: vec![x.to_f64_lossy()] });
            }
        }
        Ok(p)
    }

    pub fn hx(&self) -> T {
        (self.rx + self.rx) / T::from_usize_lossy(self.nx)
    }

    pub fn hy(&self) -> T {
        (self.ry + self.ry) / T::from_usize_lossy(self.ny)
    }

    pub fn cell_area(&self) -> T {
        self.hx() * self.hy()
    }

    pub fn x(&self, i: usize) -> T {
        -self.rx + (T::from_usize_lossy(i) + T::lit(0.5)) * self.hx()
    }

    pub fn y(&self, j: usize) -> T {
        -self.ry + (T::from_usize_lossy(j) + T::lit(0.5)) * self.hy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index of node `(i, j)`; the shorter axis runs fastest so the
    /// matrix bandwidth is `min(n_x, n_y)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        if self.nx <= self.ny {
            j * self.nx + i
        } else {
            i * self.ny + j
        }
    }

    pub fn node(&self, idx: usize) -> (usize, usize) {
        if self.nx <= self.ny {
            (idx % self.nx, idx / self.nx)
        } else {
            (idx / self.ny, idx % self.ny)
        }
    }

    pub fn bandwidth(&self) -> usize {
        self.nx.min(self.ny)
    }

    /// Node nearest to the centre line `x = 0` shifted by `offset` cells,
    /// at the middle row in `y`.
    pub fn probe_node(&self, x_offset: usize) -> Result<(usize, usize)> {
        let i = self.nx / 2 + x_offset;
        if i >= self.nx {
            return Err(invalid(format!("probe offset {x_offset} leaves the grid")));
        }
        Ok((i, self.ny / 2))
    }

    /// Samples `f(x, y)` in the operator's node ordering.
    pub fn sample(&self, f: impl Fn(T, T) -> T) -> Vec<T> {
        (0..self.len())
            .map(|idx| {
                let (i, j) = self.node(idx);
                f(self.x(i), self.y(j))
            })
            .collect()
    }

    /// Discrete delta `1/(cell area)` at node `(i, j)`.
    pub fn delta(&self, i: usize, j: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.len()];
        v[self.index(i, j)] = self.cell_area().recip();
        v
    }
}

/// Symmetric sparse matrix in compressed-row form.
#[derive(Clone, Debug)]
pub struct SparseOperator<T: Real> {
    pub problem: HeatProblem<T>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

/// Five-point second differences; `ρ²(xᵢ)` multiplies the y stencil. A
/// Dirichlet face at half a cell from the outer nodes is imposed through
/// the odd ghost value `u_ghost = −u`.
pub fn assemble<T: Real>(problem: &HeatProblem<T>) -> SparseOperator<T> {
    let (nx, ny) = (problem.nx, problem.ny);
    let ax = problem.hx().powi(2).recip();
    let ay = problem.hy().powi(2).recip();
    let n = problem.len();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(5 * n);
    let mut vals = Vec::with_capacity(5 * n);
    row_ptr.push(0);
    for idx in 0..n {
        let (i, j) = problem.node(idx);
        let wy = problem.coefficient.eval(problem.x(i)) * ay;
        let mut entries: Vec<(usize, T)> = Vec::with_capacity(5);
        let mut diag = T::zero();
        for (ok, di, dj, w) in
            [(i > 0, -1isize, 0isize, ax), (i + 1 < nx, 1, 0, ax), (j > 0, 0, -1, wy), (j + 1 < ny, 0, 1, wy)]
        {
            if ok {
                let k = problem.index((i as isize + di) as usize, (j as isize + dj) as usize);
                entries.push((k, -w));
                diag += w;
            } else {
                diag += w + w;
            }
        }
        entries.push((idx, diag));
        entries.sort_by_key(|e| e.0);
        for (k, v) in entries {
            if v != T::zero() || k == idx {
                cols.push(k);
                vals.push(v);
            }
        }
        row_ptr.push(cols.len());
    }
    SparseOperator { problem: problem.clone(), row_ptr, cols, vals }
}

impl<T: Real> SparseOperator<T> {
    pub fn len(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.row(r).find(|&(k, _)| k == c).map_or(T::zero(), |(_, v)| v)
    }

    pub fn matvec(&self, v: &[T], out: &mut [T]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row(r).map(|(c, a)| a * v[c]).sum();
        }
    }

    /// Largest `|A_rc − A_cr|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.vals.iter().map(|v| v.abs()).fold(T::zero(), T::max);
        let mut worst = T::zero();
        for r in 0..self.len() {
            for (c, a) in self.row(r) {
                worst = worst.max((a - self.get(c, r)).abs());
            }
        }
        (worst / scale).to_f64_lossy()
    }

    /// `Σ vᵢ (Av)ᵢ · cell area`, the discrete `(𝓛v, v)`.
    pub fn quadratic_form(&self, v: &[T]) -> T {
        let mut av = vec![T::zero(); v.len()];
        self.matvec(v, &mut av);
        v.iter().zip(&av).map(|(&a, &b)| a * b).sum::<T>() * self.problem.cell_area()
    }

    pub fn row_sum(&self, r: usize) -> T {
        self.row(r).map(|(_, v)| v).sum()
    }
}

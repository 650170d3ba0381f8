use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{coords_f64, Real};

use super::factor::FactorSpace;
use super::function::{FnN, TestFunction};

/// Weight `N_i(x_0, …, x_{i-1})`. The closure receives exactly the prefix
/// of coordinates it may depend on.
#[derive(Clone)]
pub struct Weight<T: Real> {
    label: String,
    f: FnN<T>,
    /// Hyperplanes `x_coord = value` where the weight vanishes or blows up.
    zero_set: Vec<(usize, T)>,
}

impl<T: Real> Weight<T> {
    pub fn new(label: impl Into<String>, f: FnN<T>) -> Self {
        Self { label: label.into(), f, zero_set: Vec::new() }
    }

    pub fn unit() -> Self {
        Self::new("1", Arc::new(|_| T::one()))
    }

    pub fn singular_on(mut self, coord: usize, value: T) -> Self {
        self.zero_set.push((coord, value));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, prefix: &[T]) -> T {
        (self.f)(prefix)
    }

    pub fn zero_set(&self) -> &[(usize, T)] {
        &self.zero_set
    }
}

/// Tensor grid over `X_0 × … × X_n` with the semi-direct weights.
///
/// Flat node indices are row-major: the last coordinate varies fastest.
#[derive(Clone)]
pub struct ProductSpace<T: Real> {
    factors: Vec<FactorSpace<T>>,
    weights: Vec<Weight<T>>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    node_weights: Vec<T>,
    /// `N_i²` tabulated on the prefix grid of slot `i`, for `i = 1..=n`.
    weight_sq: Vec<Vec<T>>,
}

impl<T: Real> fmt::Debug for ProductSpace<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProductSpace")
            .field("factors", &self.factors)
            .field("weights", &self.weights.iter().map(|w| w.label.clone()).collect::<Vec<_>>())
            .finish()
    }
}

impl<T: Real> ProductSpace<T> {
    /// Pure tensor product: every `N_i ≡ 1`.
    pub fn tensor(factors: Vec<FactorSpace<T>>) -> Result<Self> {
        let n = factors.len().saturating_sub(1);
        Self::new(factors, vec![Weight::unit(); n])
    }

    pub fn new(factors: Vec<FactorSpace<T>>, weights: Vec<Weight<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidSpace("at least one factor required".into()));
        }
        if weights.len() + 1 != factors.len() {
            return Err(Error::DimensionMismatch { expected: factors.len() - 1, got: weights.len() });
        }
        for (i, w) in weights.iter().enumerate() {
            let slot = i + 1;
            for &(coord, value) in &w.zero_set {
                if coord >= slot {
                    return Err(Error::InvalidSpace(format!(
                        "weight N_{slot} declares a singular locus on coordinate {coord} it cannot depend on"
                    )));
                }
                let fs = &factors[coord];
                let guard = fs.spacing() * T::lit(1e-9);
                if fs.nodes().iter().any(|&x| (x - value).abs() <= guard) {
                    return Err(Error::InvalidSpace(format!(
                        "grid of factor {coord} hits the singular locus x = {value} of N_{slot}; use a staggered grid"
                    )));
                }
            }
        }
        let shape: Vec<usize> = factors.iter().map(|f| f.nodes().len()).collect();
        let mut strides = vec![1usize; shape.len()];
        for k in (0..shape.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * shape[k + 1];
        }
        let total = strides[0] * shape[0];

        let mut node_weights = vec![T::one(); total];
        for (k, f) in factors.iter().enumerate() {
            let q = f.quad_weights();
            for (idx, w) in node_weights.iter_mut().enumerate() {
                *w *= q[(idx / strides[k]) % shape[k]];
            }
        }

        let mut weight_sq = Vec::with_capacity(weights.len());
        for (i, w) in weights.iter().enumerate() {
            let slot = i + 1;
            let prefix_len: usize = shape[..slot].iter().product();
            let mut table = Vec::with_capacity(prefix_len);
            let mut x = vec![T::zero(); slot];
            for p in 0..prefix_len {
                let mut rem = p;
                for k in (0..slot).rev() {
                    x[k] = factors[k].nodes()[rem % shape[k]];
                    rem /= shape[k];
                }
                let v = w.eval(&x);
                if !v.is_finite() {
                    return Err(Error::NonFinite { what: "weight N", coords: coords_f64(&x) });
                }
                table.push(v * v);
            }
            weight_sq.push(table);
        }

        Ok(Self { factors, weights, shape, strides, node_weights, weight_sq })
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn len(&self) -> usize {
        self.node_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_weights.is_empty()
    }

    pub fn factors(&self) -> &[FactorSpace<T>] {
        &self.factors
    }

    pub fn factor(&self, k: usize) -> &FactorSpace<T> {
        &self.factors[k]
    }

    pub fn weights(&self) -> &[Weight<T>] {
        &self.weights
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn bounds(&self) -> Vec<(T, T)> {
        self.factors.iter().map(|f| (f.lo(), f.hi())).collect()
    }

    /// Quadrature weight (cell volume times density) of every node.
    pub fn node_weights(&self) -> &[T] {
        &self.node_weights
    }

    /// Index of coordinate `k` inside flat node `idx`.
    #[inline]
    pub fn axis_index(&self, idx: usize, k: usize) -> usize {
        (idx / self.strides[k]) % self.shape[k]
    }

    /// `N_slot²` at flat node `idx` (`1` for slot 0).
    #[inline]
    pub fn weight_sq_at(&self, slot: usize, idx: usize) -> T {
        if slot == 0 {
            T::one()
        } else {
            self.weight_sq[slot - 1][idx / self.strides[slot - 1]]
        }
    }

    /// `N_slot²` on the prefix grid of the slot (`slot ≥ 1`).
    pub fn weight_sq_table(&self, slot: usize) -> &[T] {
        &self.weight_sq[slot - 1]
    }

    /// Index into [`ProductSpace::weight_sq_table`] for flat node `idx`.
    #[inline]
    pub fn prefix_index(&self, slot: usize, idx: usize) -> usize {
        idx / self.strides[slot - 1]
    }

    /// Smallest grid spacing over all factors.
    pub fn min_spacing(&self) -> T {
        self.factors.iter().map(|f| f.spacing()).fold(T::infinity(), T::min)
    }

    pub fn coords(&self, idx: usize, out: &mut [T]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.factors[k].nodes()[self.axis_index(idx, k)];
        }
    }

    /// Calls `f(idx, coords)` for every node in flat order.
    pub fn visit(&self, mut f: impl FnMut(usize, &[T])) {
        let d = self.dim();
        let mut ix = vec![0usize; d];
        let mut x: Vec<T> = self.factors.iter().map(|f| f.nodes()[0]).collect();
        for idx in 0..self.len() {
            f(idx, &x);
            for k in (0..d).rev() {
                ix[k] += 1;
                if ix[k] < self.shape[k] {
                    x[k] = self.factors[k].nodes()[ix[k]];
                    break;
                }
                ix[k] = 0;
                x[k] = self.factors[k].nodes()[0];
            }
        }
    }

    /// Tabulates `f` on the grid, rejecting non-finite values.
    pub fn sample(&self, what: &'static str, f: impl Fn(&[T]) -> T) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(self.len());
        let mut bad: Option<Vec<f64>> = None;
        self.visit(|_, x| {
            let v = f(x);
            if !v.is_finite() && bad.is_none() {
                bad = Some(coords_f64(x));
            }
            out.push(v);
        });
        match bad {
            Some(coords) => Err(Error::NonFinite { what, coords }),
            None => Ok(out),
        }
    }

    /// Values and first partials of `f` at every node.
    pub fn sample_function(&self, f: &TestFunction<T>) -> Result<Sampled<T>> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: f.dim() });
        }
        let values = self.sample("function value", |x| f.value(x))?;
        let mut partials = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            if !f.has_analytic_partials() && f.fd_step().is_none() {
                return Err(Error::MissingPartial { coord: k });
            }
            partials.push(self.sample("partial derivative", |x| f.partial(k, x).unwrap_or_else(|_| T::nan()))?);
        }
        Ok(Sampled { values, partials })
    }

    /// Doubles the node count along every axis.
    pub fn refined(&self) -> Result<Self> {
        let factors = self.factors.iter().map(|f| f.refined()).collect::<Result<Vec<_>>>()?;
        Self::new(factors, self.weights.clone())
    }

    /// Same weights on new factor grids.
    pub fn with_factors(&self, factors: Vec<FactorSpace<T>>) -> Result<Self> {
        Self::new(factors, self.weights.clone())
    }

    /// Checks that `f`'s support lies in this box, and optionally that it
    /// stays strictly inside it.
    pub fn check_support(&self, f: &TestFunction<T>, strict: bool) -> Result<()> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: f.dim() });
        }
        let outside = f.support().iter().zip(self.factors.iter()).any(|(&(lo, hi), fs)| lo < fs.lo() || hi > fs.hi());
        if outside {
            return Err(Error::SupportOutsideBox {
                support: f.support().iter().map(|&(a, b)| (a.to_f64_lossy(), b.to_f64_lossy())).collect(),
                domain: self.bounds().iter().map(|&(a, b)| (a.to_f64_lossy(), b.to_f64_lossy())).collect(),
            });
        }
        if strict {
            for (k, (&(lo, hi), fs)) in f.support().iter().zip(self.factors.iter()).enumerate() {
                if lo <= fs.lo() || hi >= fs.hi() {
                    return Err(Error::SupportTouchesBoundary { coord: k });
                }
            }
        }
        Ok(())
    }
}

/// Nodal values and partial derivatives of a test function.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampled<T> {
    pub values: Vec<T>,
    pub partials: Vec<Vec<T>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_prefix_and_singular_locus() {
        let x = FactorSpace::<f64>::lebesgue(-1.0, 1.0, 32).unwrap();
        let y = FactorSpace::<f64>::lebesgue(0.0, 1.0, 16).unwrap();
        let n1 = Weight::new(
            "|x|",
            Arc::new(|p: &[f64]| {
                assert_eq!(p.len(), 1);
                p[0].abs()
            }),
        )
        .singular_on(0, 0.0);
        let s = ProductSpace::new(vec![x.clone(), y.clone()], vec![n1.clone()]).unwrap();
        assert_eq!(s.len(), 32 * 16);
        let mut c = [0.0; 2];
        s.coords(16 * 5 + 3, &mut c);
        assert_eq!(c[0], x.nodes()[5]);
        assert_eq!(c[1], y.nodes()[3]);
        assert!((s.weight_sq_at(1, 16 * 5 + 3) - c[0] * c[0]).abs() < 1e-15);

        let xu = x.unstaggered().unwrap();
        assert!(ProductSpace::new(vec![xu, y], vec![n1]).is_err());
    }

    #[test]
    fn visit_matches_coords() {
        let s = ProductSpace::tensor(vec![
            FactorSpace::<f64>::lebesgue(0.0, 1.0, 16).unwrap(),
            FactorSpace::<f64>::lebesgue(0.0, 2.0, 17).unwrap(),
            FactorSpace::<f64>::lebesgue(0.0, 3.0, 18).unwrap(),
        ])
        .unwrap();
        let mut buf = [0.0; 3];
        s.visit(|idx, x| {
            s.coords(idx, &mut buf);
            assert_eq!(&buf, x);
        });
    }
}

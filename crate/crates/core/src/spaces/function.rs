use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Scalar function of a coordinate slice.
pub type FnN<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
/// In-place coordinate map `(x, out) ↦ out = φ(x)`.
pub type MapN<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;

/// A function on a product space, supported in a closed box.
#[derive(Clone)]
pub struct TestFunction<T: Real> {
    label: String,
    support: Vec<(T, T)>,
    eval: FnN<T>,
    partials: Option<Vec<FnN<T>>>,
    fd_step: Option<T>,
}

impl<T: Real> fmt::Debug for TestFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("support", &self.support)
            .field("analytic_partials", &self.partials.is_some())
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl<T: Real> TestFunction<T> {
    pub fn new(label: impl Into<String>, support: Vec<(T, T)>, eval: FnN<T>) -> Self {
        Self { label: label.into(), support, eval, partials: None, fd_step: None }
    }

    pub fn with_partials(mut self, partials: Vec<FnN<T>>) -> Result<Self> {
        if partials.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: partials.len() });
        }
        self.partials = Some(partials);
        Ok(self)
    }

    pub fn with_fd_step(mut self, h: T) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidParameter("fd_step must be positive".into()));
        }
        self.fd_step = Some(h);
        Ok(self)
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.support.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> &[(T, T)] {
        &self.support
    }

    pub fn fd_step(&self) -> Option<T> {
        self.fd_step
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.partials.is_some()
    }

    pub fn in_support(&self, x: &[T]) -> bool {
        x.iter().zip(&self.support).all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    /// Value at `x`, zero outside the support box.
    pub fn value(&self, x: &[T]) -> T {
        if self.in_support(x) {
            (self.eval)(x)
        } else {
            T::zero()
        }
    }

    /// `∂_i f(x)`: analytic when available, central difference with
    /// `fd_step` otherwise.
    pub fn partial(&self, i: usize, x: &[T]) -> Result<T> {
        match &self.partials {
            Some(p) => Ok(if self.in_support(x) { p[i](x) } else { T::zero() }),
            None => {
                let h = self.fd_step.ok_or(Error::MissingPartial { coord: i })?;
                Ok(self.central_difference(i, x, h))
            }
        }
    }

    pub fn central_difference(&self, i: usize, x: &[T], h: T) -> T {
        let mut y = x.to_vec();
        y[i] = x[i] + h;
        let up = self.value(&y);
        y[i] = x[i] - h;
        let down = self.value(&y);
        (up - down) / (h + h)
    }

    /// `x ↦ f(x)` followed by a change of variables `x ↦ φ(x)` on the
    /// argument; `support` is the new support box.
    pub fn compose(&self, label: impl Into<String>, support: Vec<(T, T)>, map: MapN<T>) -> Self {
        let base = self.clone();
        let eval: FnN<T> = Arc::new(move |x: &[T]| {
            let mut y = vec![T::zero(); x.len()];
            map(x, &mut y);
            base.value(&y)
        });
        Self { label: label.into(), support, eval, partials: None, fd_step: self.fd_step }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump() -> TestFunction<f64> {
        let eval: FnN<f64> = Arc::new(|x: &[f64]| (-1.0 / (1.0 - x[0] * x[0])).exp());
        let d: FnN<f64> = Arc::new(|x: &[f64]| {
            let s = 1.0 - x[0] * x[0];
            (-1.0 / s).exp() * (-2.0 * x[0] / (s * s))
        });
        TestFunction::new("bump", vec![(-1.0, 1.0)], eval).with_partials(vec![d]).unwrap()
    }

    #[test]
    fn vanishes_outside_support() {
        let f = bump();
        assert_eq!(f.value(&[1.5]), 0.0);
        assert_eq!(f.partial(0, &[-2.0]).unwrap(), 0.0);
    }

    #[test]
    fn finite_difference_is_second_order() {
        let f = bump();
        let x = [0.3];
        let exact = f.partial(0, &x).unwrap();
        let e1 = (f.central_difference(0, &x, 1e-2) - exact).abs();
        let e2 = (f.central_difference(0, &x, 5e-3) - exact).abs();
        assert!(e1 / e2 > 3.8 && e1 / e2 < 4.2, "ratio {}", e1 / e2);
    }

    #[test]
    fn missing_partial_is_an_error() {
        let f = TestFunction::<f64>::new("c", vec![(0.0, 1.0)], Arc::new(|_| 1.0));
        assert!(matches!(f.partial(0, &[0.5]), Err(Error::MissingPartial { coord: 0 })));
    }
}

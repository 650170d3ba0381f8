//! One-dimensional quadrature and minimization helpers.

use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        xs[i] = -x;
        xs[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

/// Composite Gauss–Legendre rule over the panels delimited by `breaks`
/// (sorted ascending), `order` points per panel and `sub` equal sub-panels
/// inside each.
pub fn composite_gl<T: Real>(f: impl Fn(T) -> T, breaks: &[T], order: usize, sub: usize) -> T {
    let (xs, ws) = gauss_legendre(order);
    let (xs, ws): (Vec<T>, Vec<T>) = (xs.into_iter().map(T::lit).collect(), ws.into_iter().map(T::lit).collect());
    let half = T::lit(0.5);
    let mut total = T::zero();
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !(b > a) {
            continue;
        }
        let h = (b - a) / T::from_usize_lossy(sub);
        for s in 0..sub {
            let lo = a + h * T::from_usize_lossy(s);
            let mid = lo + half * h;
            let mut acc = T::zero();
            for (&x, &w) in xs.iter().zip(&ws) {
                acc += w * f(mid + half * h * x);
            }
            total += acc * half * h;
        }
    }
    total
}

/// Tanh–sinh quadrature of `f` over `[a, b]`; tolerant of integrable
/// endpoint singularities. `f` is never evaluated at the endpoints.
pub fn tanh_sinh<T: Real>(f: impl Fn(T) -> T, a: T, b: T, levels: usize) -> T {
    let r = (b - a) * T::lit(0.5);
    let pi2 = T::FRAC_PI_2();
    let h = T::lit(2f64.powi(-(levels as i32)));
    let kmax = (T::lit(4.0) / h).to_usize().unwrap_or(0);
    let mut total = T::zero();
    let mut push = |t: T| -> bool {
        let s = pi2 * t.sinh();
        let ch = s.cosh();
        let w = pi2 * t.cosh() / (ch * ch);
        // Distance to the nearer endpoint, computed without cancellation.
        let gap = r * T::lit(2.0) / ((T::lit(2.0) * s.abs()).exp() + T::one());
        if !(gap > T::zero()) || w * r < T::min_positive_value() {
            return false;
        }
        let v = if t >= T::zero() { f(b - gap) } else { f(a + gap) };
        total += w * v;
        true
    };
    push(T::zero());
    for k in 1..=kmax {
        let t = h * T::from_usize_lossy(k);
        let p = push(t);
        let m = push(-t);
        if !p && !m {
            break;
        }
    }
    total * h * r
}

/// Golden-section search on `[lo, hi]` to relative width `tol`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (hi - lo) > tol * (x1.abs() + x2.abs()).max(1e-300) {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Newton iteration on `df`, kept inside `[lo, hi]` by bisection fallback.
pub fn safeguarded_newton(
    df: impl Fn(f64) -> f64,
    d2f: impl Fn(f64) -> f64,
    mut x: f64,
    mut lo: f64,
    mut hi: f64,
) -> f64 {
    for _ in 0..200 {
        let g = df(x);
        if g == 0.0 {
            return x;
        }
        if g > 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
        let step = g / d2f(x);
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-16 * x.abs().max(1.0) {
            return next;
        }
        x = next;
    }
    x
}

/// Log-spaced grid from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == points {
                hi
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 12] {
            let (xs, ws) = gauss_legendre(n);
            assert_relative_eq!(ws.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let deg = 2 * n - 1;
            let num: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert_relative_eq!(num, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn composite_gl_splits_at_breaks() {
        let v = composite_gl(|x: f64| x.abs(), &[-1.0, 0.0, 2.0], 4, 1);
        assert_relative_eq!(v, 2.5, epsilon = 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        let v = tanh_sinh(|x: f64| x.powf(-0.5), 0.0, 1.0, 6);
        assert_relative_eq!(v, 2.0, epsilon = 1e-9);
        let w = tanh_sinh(|x: f64| -x.ln(), 0.0, 1.0, 6);
        assert_relative_eq!(w, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn minimizers() {
        let u = golden_min(|u| (u - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((u - 0.3).abs() < 1e-8);
        let r = safeguarded_newton(|x| 2.0 * (x - 0.3), |_| 2.0, 0.9, 0.0, 1.0);
        assert!((r - 0.3).abs() < 1e-14);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 1e3, 7);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[6], 1e3);
        assert_relative_eq!(g[3], 1.0, epsilon = 1e-12);
    }
}

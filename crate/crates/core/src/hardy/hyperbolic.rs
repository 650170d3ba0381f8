use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spaces::{slot_energies_sampled, FactorSpace, FnN, ProductSpace, TestFunction, Weight};

/// `R_k` for `k = 0..=k_max` and the successive differences `R_{k+1} − R_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicSequence {
    pub q: usize,
    pub t: f64,
    pub ratios: Vec<f64>,
    pub differences: Vec<f64>,
}

fn phi(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

fn dphi(u: f64) -> f64 {
    if u.abs() < 1.0 {
        phi(u) * (-2.0 * u / (1.0 - u * u).powi(2))
    } else {
        0.0
    }
}

/// `g_k(a, n) = g(a + k, n)` with `g = φ(a) Π φ(nᵢ)` supported in `(−1, 1)^{Q+1}`.
fn translated_bump(q: usize, k: f64) -> Result<TestFunction<f64>> {
    let dim = q + 1;
    let shifted = move |p: &[f64], i: usize| if i == 0 { p[0] + k } else { p[i] };
    let value = move |p: &[f64]| (0..dim).map(|i| phi(shifted(p, i))).product::<f64>();
    let partials: Vec<FnN<f64>> = (0..dim)
        .map(|j| {
            Arc::new(move |p: &[f64]| {
                (0..dim).map(|i| if i == j { dphi(shifted(p, i)) } else { phi(shifted(p, i)) }).product()
            }) as FnN<f64>
        })
        .collect();
    let mut support = vec![(-1.0, 1.0); dim];
    support[0] = (-1.0 - k, 1.0 - k);
    TestFunction::new(format!("bump(k={k})"), support, Arc::new(value)).with_partials(partials)
}

/// Lower bound of the would-be Hardy inequality for the potential `−a` on
/// the metabelian group, evaluated on translates of a bump:
/// `R_k = [−∫a g_k² − t∫(|∂ₐg_k|² + e^{2a}|∇ₙg_k|²)] / ‖g‖²`.
///
/// Each translate is integrated on its own grid, translated with it, so
/// the weight `e^{2a}` is only evaluated over the support.
pub fn hyperbolic_no_hardy_probe(q: usize, t: f64, k_max: usize, nodes: usize) -> Result<HyperbolicSequence> {
    if q == 0 {
        return Err(invalid("Q must be at least 1"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t must be positive"));
    }
    let pad = 1.05;
    let mut ratios = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let shift = k as f64;
        let mut factors = vec![FactorSpace::lebesgue(-pad - shift, pad - shift, nodes)?];
        for _ in 0..q {
            factors.push(FactorSpace::lebesgue(-pad, pad, nodes)?);
        }
        let weights = (0..q).map(|_| Weight::new("e^a", Arc::new(|p: &[f64]| p[0].exp()))).collect();
        let space = ProductSpace::new(factors, weights)?;
        let f = translated_bump(q, shift)?;
        let sampled = space.sample_function(&f)?;
        let mut first = 0.0;
        let mut norm = 0.0;
        let mut x = vec![0.0; q + 1];
        for (idx, (&v, &w)) in sampled.values.iter().zip(space.node_weights()).enumerate() {
            space.coords(idx, &mut x);
            first += w * x[0] * v * v;
            norm += w * v * v;
        }
        let energy: f64 = slot_energies_sampled(&space, &sampled).iter().sum();
        ratios.push((-first - t * energy) / norm);
    }
    let differences = ratios.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(HyperbolicSequence { q, t, ratios, differences })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differences_tend_to_one() {
        let s = hyperbolic_no_hardy_probe(1, 0.25, 20, 256).unwrap();
        assert!(s.ratios[0].is_finite());
        for k in 5..20 {
            assert!((s.differences[k] - 1.0).abs() <= 1e-3, "k={k}: {}", s.differences[k]);
        }
    }

    #[test]
    fn doubling_t_shifts_uniformly() {
        let a = hyperbolic_no_hardy_probe(1, 0.25, 12, 128).unwrap();
        let b = hyperbolic_no_hardy_probe(1, 0.5, 12, 128).unwrap();
        let shift: Vec<f64> = a.ratios.iter().zip(&b.ratios).map(|(x, y)| x - y).collect();
        assert!(shift.iter().all(|&d| d > 0.0));
        assert!((shift[12] - shift[8]).abs() < 1e-6 * shift[12]);
    }

    #[test]
    fn higher_rank() {
        let s = hyperbolic_no_hardy_probe(2, 0.25, 8, 48).unwrap();
        assert!((s.differences[7] - 1.0).abs() <= 1e-3);
    }
}

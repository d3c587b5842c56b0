//! Gauss–Legendre rules and compensated summation.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

/// Nodes and weights on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn compute(n: usize) -> GaussLegendre {
        assert!(n >= 2, "a Gauss-Legendre rule needs at least two nodes");
        let rule = gauss_quad::GaussLegendre::new(n).expect("degree >= 2");
        let mut pairs: Vec<(f64, f64)> = rule.into_node_weight_pairs();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        GaussLegendre { nodes, weights }
    }

    /// Cached rule; computing the large ones repeatedly would dominate small integrals.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
        map.entry(n).or_insert_with(|| Arc::new(GaussLegendre::compute(n))).clone()
    }
}

/// Neumaier-compensated complex accumulator. Summation order is the caller's order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, &mut self.re_c, z.re);
        neumaier(&mut self.im, &mut self.im_c, z.im);
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(Complex64::new(other.re, other.im));
        self.add(Complex64::new(other.re_c, other.im_c));
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn weights_sum_to_two() {
        for n in [2, 5, 24, 64, 333, 1024] {
            let g = GaussLegendre::compute(n);
            let s: f64 = g.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let g = GaussLegendre::compute(6);
        // ∫ x^10 dx over [−1, 1] = 2/11, degree 10 ≤ 2·6 − 1
        let s: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let g = GaussLegendre::compute(21);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        for i in 0..21 {
            assert!((g.nodes[i] + g.nodes[20 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_integral() {
        let g = GaussLegendre::cached(64);
        let s: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * 8.0 * (-0.5 * (8.0 * x).powi(2)).exp()).sum();
        assert!((s - (2.0 * PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn compensation_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(Complex64::new(1e16, 0.0));
        for _ in 0..1000 {
            s.add(Complex64::new(1.0, 0.0));
        }
        s.add(Complex64::new(-1e16, 0.0));
        assert_eq!(s.value().re, 1000.0);
    }
}

//! Gauss-Legendre quadrature with fixed, reported orders.
//!
//! Nodes are the roots of the Legendre polynomial, found by Newton iteration
//! on the three-term recurrence; machine-precision accurate for the orders
//! used here (<= a few hundred).

use alloc::vec::Vec;

use crate::fp;
use crate::sum::Neumaier;

/// Nodes and weights on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `n >= 1` points; integrates polynomials of degree `2n - 1`
    /// exactly.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be positive");
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            // Tricomi-style initial guess, then Newton on P_n.
            let mut x = fp::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_deriv(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if fp::abs(step) < 1e-15 {
                    let (p2, d2) = legendre_with_deriv(n, x);
                    dp = d2;
                    x -= p2 / d2;
                    break;
                }
            }
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        nodes.reverse();
        weights.reverse();
        Self { nodes, weights }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Neumaier::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.value()
    }

    /// Integral over `[a, b]` split into `panels` equal panels.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let mut acc = Neumaier::new();
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + h * p as f64;
            acc.add(self.integrate(lo, lo + h, &mut f));
        }
        acc.value()
    }
}

/// `(P_n(x), P_n'(x))` by the stable upward recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_interval() {
        for n in [1, 2, 5, 16, 96, 200] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "order {n}: weight sum {s}");
        }
    }

    #[test]
    fn exact_on_polynomials() {
        let gl = GaussLegendre::new(6);
        // degree 11 is exact for order 6
        let v = gl.integrate(0.0, 1.0, |x| 12.0 * fp::powf(x, 11.0));
        assert!((v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_transcendental() {
        let gl = GaussLegendre::new(32);
        let v = gl.integrate(0.0, 1.0, |x| fp::exp(x));
        assert!((v - (core::f64::consts::E - 1.0)).abs() < 1e-14);
        let w = gl.integrate_panels(0.0, 10.0, 10, |x| fp::exp(-x));
        assert!((w - (1.0 - fp::exp(-10.0))).abs() < 1e-13);
    }

    #[test]
    fn nodes_symmetric() {
        let gl = GaussLegendre::new(17);
        for i in 0..17 {
            assert!((gl.nodes[i] + gl.nodes[16 - i]).abs() < 1e-14);
        }
    }
}

//! Gauss–Hermite quadrature for expectations over a Gaussian.

use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::PI;

pub const MAX_NODES: usize = 180;

/// Nodes and weights integrating `∫ exp(-x²) f(x) dx` over the real line.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Rule with `n` nodes, `2 <= n <= 180`. Roots of the orthonormal Hermite
    /// polynomial are refined by Newton's method from asymptotic guesses; the
    /// recurrence underflows beyond 180 nodes.
    pub fn new(n: usize) -> Self {
        assert!(
            (2..=MAX_NODES).contains(&n),
            "Gauss-Hermite rule supports 2..={MAX_NODES} nodes"
        );
        const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => libm::sqrt(2.0 * nf + 1.0) - 1.855_75 * libm::pow(2.0 * nf + 1.0, -0.166_67),
                1 => z - 1.14 * libm::pow(nf, 0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut derivative = 0.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (PIM4, 0.0);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * libm::sqrt(2.0 / (jf + 1.0)) * p2 - libm::sqrt(jf / (jf + 1.0)) * p3;
                }
                derivative = libm::sqrt(2.0 * nf) * p2;
                let step = p1 / derivative;
                z -= step;
                if libm::fabs(step) <= 1e-15 * libm::fmax(1.0, libm::fabs(z)) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            let w = 2.0 / (derivative * derivative);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ exp(-x²) f(x) dx`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `E[f(Z)]` for `Z ~ N(0, 1)`.
    pub fn expect_standard_normal(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let s = core::f64::consts::SQRT_2;
        self.integrate(|x| f(s * x)) / libm::sqrt(PI)
    }

    /// Standard-normal abscissas `sqrt(2) x_i` paired with weights `w_i / sqrt(pi)`.
    pub fn standard_normal_pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let s = core::f64::consts::SQRT_2;
        let norm = 1.0 / libm::sqrt(PI);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (s * x, w * norm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_are_exact() {
        for n in [2, 5, 20, 64, 160, 180] {
            let gh = GaussHermite::new(n);
            let m0 = gh.expect_standard_normal(|_| 1.0);
            let m2 = gh.expect_standard_normal(|z| z * z);
            let m4 = gh.expect_standard_normal(|z| z * z * z * z);
            assert!((m0 - 1.0).abs() < 1e-12, "n={n} m0={m0}");
            assert!((m2 - 1.0).abs() < 1e-11, "n={n} m2={m2}");
            if n >= 3 {
                assert!((m4 - 3.0).abs() < 1e-10, "n={n} m4={m4}");
            }
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let gh = GaussHermite::new(161);
        assert!(gh.nodes().windows(2).all(|w| w[0] > w[1]));
        assert!(gh.nodes()[80].abs() < 1e-14);
        for i in 0..161 {
            assert!((gh.nodes()[i] + gh.nodes()[160 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_integral() {
        // ∫ exp(-x²) cos(x) dx = sqrt(pi) exp(-1/4)
        let gh = GaussHermite::new(40);
        let v = gh.integrate(libm::cos);
        assert!((v - libm::sqrt(PI) * libm::exp(-0.25)).abs() < 1e-13);
    }
}

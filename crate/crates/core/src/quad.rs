//! Quadrature utilities: deterministic pairwise summation, Gauss-Legendre
//! nodes, and the product angular grid on the unit sphere used throughout
//! the geometry module.

use alloc::vec::Vec;
use core::f64::consts::PI;

/// Pairwise (cascade) summation with a fixed association order.
///
/// All grid reductions in this crate go through this function, so repeated
/// runs produce bit-identical results regardless of how the terms were
/// generated.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Dot product with pairwise accumulation.
pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    fn rec(a: &[f64], b: &[f64]) -> f64 {
        if a.len() <= 32 {
            let mut s = 0.0;
            for i in 0..a.len() {
                s += a[i] * b[i];
            }
            return s;
        }
        let mid = a.len() / 2;
        rec(&a[..mid], &b[..mid]) + rec(&a[mid..], &b[mid..])
    }
    rec(a, b)
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-like initial guess.
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if libm::fabs(dx) < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes.push(-x);
            weights.push(w);
        }
        // Mirror to the positive half.
        for i in (0..m).rev() {
            if n % 2 == 1 && i == m - 1 {
                // middle root of an odd rule sits at x = 0; do not duplicate
                continue;
            }
            let x = -nodes[i];
            let w = weights[i];
            nodes.push(x);
            weights.push(w);
        }
        nodes
            .iter()
            .zip(weights.iter())
            .for_each(|(x, w)| debug_assert!(x.is_finite() && w.is_finite()));
        GaussLegendre { nodes, weights }
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature grid on the unit sphere: product of Gauss-Legendre in
/// `cos(theta)` and a uniform rule in `phi`. Weights sum to `4 pi`.
pub struct AngularGrid {
    pub dirs: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl AngularGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let gl = GaussLegendre::new(n_theta);
        let mut dirs = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let wphi = 2.0 * PI / n_phi as f64;
        for (ct, wt) in gl.nodes.iter().zip(gl.weights.iter()) {
            let st = libm::sqrt((1.0 - ct * ct).max(0.0));
            for j in 0..n_phi {
                let phi = wphi * (j as f64 + 0.5);
                dirs.push([st * libm::cos(phi), st * libm::sin(phi), *ct]);
                weights.push(wt * wphi);
            }
        }
        AngularGrid { dirs, weights }
    }

    /// Grid used by the geometry module: 24 x 48 directions
    /// (144 nodes per octant), exact for smooth boundary graphs with
    /// harmonics well beyond `l = 8`.
    pub fn default_grid() -> Self {
        Self::new(24, 48)
    }

    /// Integrate a function of the direction over the sphere.
    pub fn integrate<F: FnMut([f64; 3]) -> f64>(&self, mut f: F) -> f64 {
        let terms: Vec<f64> = self
            .dirs
            .iter()
            .zip(self.weights.iter())
            .map(|(d, w)| w * f(*d))
            .collect();
        pairwise_sum(&terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let gl = GaussLegendre::new(8);
        // exact for degree <= 15
        let s: f64 = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .map(|(x, w)| w * x.powi(14))
            .sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-13, "got {s}");
        let total: f64 = gl.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-13);
    }

    #[test]
    fn angular_grid_weights_sum_to_sphere_area() {
        let g = AngularGrid::default_grid();
        let s = pairwise_sum(&g.weights);
        assert!((s - 4.0 * PI).abs() < 1e-10);
        // second moment of z over the sphere: 4 pi / 3
        let m2 = g.integrate(|d| d[2] * d[2]);
        assert!((m2 - 4.0 * PI / 3.0).abs() < 1e-10);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_inputs() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }
}

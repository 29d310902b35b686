//! Large-charge analysis: energies of union-of-balls competitors, the ball
//! lower bound `q/4`, the optimal number of balls `N ~ q^{3/4}`, the
//! resulting `q^{1/2}` upper bound, and the induced diameter lower bound.
//!
//! Everything is driven by the single constant `D_w = D(w_B^2, w_B^2)`, the
//! Coulomb self-energy of the first Dirichlet eigenfunction of the unit
//! ball, computed once on a fine radial grid.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::coulomb::bilinear_d;
use crate::fields::ScalarField;
use crate::geometry::RadialGrid;
use crate::{Error, Result};

/// Integer-optimal competitor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Competitor {
    pub n_star: u64,
    pub energy: f64,
}

/// Cached constants for the large-q estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotics {
    d_w: f64,
}

impl Asymptotics {
    /// Compute `D_w` on a 4096-node radial grid from the analytic
    /// eigenfunction `w_B(r) = sin(pi r) / (r sqrt(2 pi))`.
    pub fn new() -> Result<Self> {
        let g = RadialGrid::new(1.0, 4096)?;
        let w = ScalarField::from_radial_fn(
            g,
            |r| {
                if r == 0.0 {
                    PI / libm::sqrt(2.0 * PI)
                } else {
                    libm::sin(PI * r) / (r * libm::sqrt(2.0 * PI))
                }
            },
            |r| r < 1.0,
        )?;
        let density = ScalarField::new(
            *w.grid(),
            w.values().iter().map(|v| v * v).collect(),
            w.mask().to_vec(),
        )?;
        let d_w = bilinear_d(&density, &density)?;
        Ok(Asymptotics { d_w })
    }

    /// `D(w_B^2, w_B^2)` of the unit ball.
    pub fn d_w(&self) -> f64 {
        self.d_w
    }

    /// Energy of `N` unit-volume-total disjoint balls in the
    /// infinite-separation limit:
    /// `U(N, q) = pi^2 N^{2/3} + (q/2) D_w N^{-2/3}`.
    pub fn competitor_upper_bound(&self, n_balls: u64, q: f64) -> Result<f64> {
        if n_balls < 1 {
            return Err(Error::Usage("competitor needs at least one ball".to_string()));
        }
        if !(q >= 0.0) {
            return Err(Error::Usage("q must be nonnegative".to_string()));
        }
        let n = n_balls as f64;
        let n23 = libm::cbrt(n * n);
        Ok(PI * PI * n23 + 0.5 * q * self.d_w / n23)
    }

    /// Real-valued minimizer of `U(., q)`: `(q D_w / (2 pi^2))^{3/4}`.
    pub fn real_argmin(&self, q: f64) -> f64 {
        libm::pow(q * self.d_w / (2.0 * PI * PI), 0.75)
    }

    /// Minimize `U(N, q)` over integers (the real argmin's floor or ceiling,
    /// by convexity).
    pub fn optimal_competitor(&self, q: f64) -> Result<Competitor> {
        if !(q > 0.0) {
            return Err(Error::Usage("optimal competitor needs q > 0".to_string()));
        }
        let n_real = self.real_argmin(q);
        let lo = libm::floor(n_real).max(1.0) as u64;
        let candidates = [lo, lo + 1];
        let mut best = Competitor {
            n_star: lo,
            energy: f64::INFINITY,
        };
        for &n in &candidates {
            let e = self.competitor_upper_bound(n, q)?;
            if e < best.energy {
                best = Competitor { n_star: n, energy: e };
            }
        }
        Ok(best)
    }

    /// Finite-separation correction to `U(N, q)` when the ball centers are a
    /// distance `separation` apart: each ball carries mass `1/N`, so the
    /// cross terms add about `q (N - 1) / (2 N separation)`.
    pub fn cross_term_correction(&self, n_balls: u64, q: f64, separation: f64) -> Result<f64> {
        if n_balls < 1 || !(separation > 0.0) {
            return Err(Error::Usage(
                "cross term needs n >= 1 and a positive separation".to_string(),
            ));
        }
        let n = n_balls as f64;
        Ok(q * (n - 1.0) / (2.0 * n * separation))
    }

    /// `E_q(B_1) >= q/4`, valid for `q >= 1`.
    pub fn ball_lower_bound(&self, q: f64) -> Result<f64> {
        if !(q >= 1.0) {
            return Err(Error::Usage("the ball lower bound is stated for q >= 1".to_string()));
        }
        Ok(0.25 * q)
    }

    /// `diam(Omega) >= q / (2 E)` for any admissible domain with energy `E`.
    pub fn diameter_lower_bound(&self, q: f64, e: f64) -> Result<f64> {
        if !(e > 0.0) {
            return Err(Error::Usage("diameter bound needs a positive energy".to_string()));
        }
        Ok(q / (2.0 * e))
    }

    /// First charge at which the integer-optimal competitor drops below the
    /// ball lower bound `q/4`. The continuous relaxation gives
    /// `q = 32 pi^2 D_w`; the integer value is found by bisection around it.
    pub fn crossing_q(&self) -> f64 {
        let gap = |q: f64| -> f64 {
            0.25 * q - self.optimal_competitor(q).map(|c| c.energy).unwrap_or(f64::INFINITY)
        };
        let (mut lo, mut hi) = (1.0f64, 32.0 * PI * PI * self.d_w * 4.0);
        debug_assert!(gap(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Usage("slope needs two or more matched samples".to_string()));
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|&x| libm::log(x)).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| libm::log(y)).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..lx.len() {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    if den == 0.0 {
        return Err(Error::Usage("slope needs distinct abscissae".to_string()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d_w_matches_frozen_value() {
        let a = Asymptotics::new().unwrap();
        let expect = 1.7860731786389954;
        assert!(
            ((a.d_w() - expect) / expect).abs() < 1e-4,
            "D_w = {}",
            a.d_w()
        );
    }

    #[test]
    fn competitor_examples() {
        let a = Asymptotics::new().unwrap();
        assert!((a.competitor_upper_bound(1, 0.0).unwrap() - PI * PI).abs() < 1e-12);
        assert!((a.competitor_upper_bound(8, 0.0).unwrap() - 4.0 * PI * PI).abs() < 1e-10);
        assert!(a.competitor_upper_bound(0, 1.0).is_err());
    }

    #[test]
    fn real_argmin_minimizes_the_bound() {
        let a = Asymptotics::new().unwrap();
        for q in [10.0, 100.0, 5000.0] {
            let n = a.real_argmin(q);
            let u = |nn: f64| PI * PI * nn.powf(2.0 / 3.0) + 0.5 * q * a.d_w() * nn.powf(-2.0 / 3.0);
            assert!(u(n) <= u(n * 1.01) && u(n) <= u(n * 0.99), "q = {q}");
        }
    }

    #[test]
    fn optimal_competitor_limits_and_slope() {
        let a = Asymptotics::new().unwrap();
        let c = a.optimal_competitor(1e-6).unwrap();
        assert_eq!(c.n_star, 1);
        assert!((c.energy - PI * PI).abs() < 1e-3);

        let qs: Vec<f64> = (0..=20).map(|i| 100.0 * 10f64.powf(i as f64 / 10.0)).collect();
        let es: Vec<f64> = qs
            .iter()
            .map(|&q| a.optimal_competitor(q).unwrap().energy)
            .collect();
        let slope = loglog_slope(&qs, &es).unwrap();
        assert!((slope - 0.5).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn crossing_point_matches_continuous_relaxation() {
        let a = Asymptotics::new().unwrap();
        let qc = a.crossing_q();
        let expect = 32.0 * PI * PI * a.d_w();
        assert!(
            ((qc - expect) / expect).abs() < 0.05,
            "crossing {qc} vs {expect}"
        );
        // the gap persists beyond the crossing
        for q in [qc * 1.1, qc * 10.0] {
            let u = a.optimal_competitor(q).unwrap().energy;
            assert!(u < a.ball_lower_bound(q).unwrap());
        }
    }

    #[test]
    fn lower_bounds() {
        let a = Asymptotics::new().unwrap();
        assert_eq!(a.ball_lower_bound(100.0).unwrap(), 25.0);
        assert_eq!(a.ball_lower_bound(4.0).unwrap(), 1.0);
        assert!(a.ball_lower_bound(0.5).is_err());
        assert_eq!(a.diameter_lower_bound(100.0, 25.0).unwrap(), 2.0);
        assert_eq!(a.diameter_lower_bound(0.0, 25.0).unwrap(), 0.0);
        assert!(a.diameter_lower_bound(1.0, 0.0).is_err());
    }

    #[test]
    fn cross_term_correction_scales() {
        let a = Asymptotics::new().unwrap();
        let c1 = a.cross_term_correction(8, 10.0, 20.0).unwrap();
        let c2 = a.cross_term_correction(8, 10.0, 40.0).unwrap();
        assert!((c1 - 2.0 * c2).abs() < 1e-14);
        assert_eq!(a.cross_term_correction(1, 10.0, 5.0).unwrap(), 0.0);
    }
}

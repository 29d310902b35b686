//! Penalized and free-boundary variants of the constrained energy: the
//! L^2 penalty `E_{q,M}`, the volume penalty `f_eta`, their combination
//! `E_{q,M,eta}` over domains, and the free-boundary functional evaluated on
//! a state alone with the domain taken as `{u > 0}`.

use alloc::string::ToString;

use crate::coulomb::bilinear_d;
use crate::fields::ScalarField;
use crate::geometry::{Domain, UNIT_BALL_VOLUME};
use crate::hartree::{energy, SolverConfig};
use crate::{Error, Result};

/// Relative cutoff defining the discrete support `{u > 0}`.
pub const SUPPORT_THRESHOLD_REL: f64 = 1e-8;

/// Penalty strengths: `m` multiplies the mass defect, `eta` shapes the
/// piecewise-linear volume penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    pub m: f64,
    pub eta: f64,
}

impl PenaltyParams {
    pub fn new(m: f64, eta: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Usage("penalty M must be positive".to_string()));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Usage("eta must lie in (0, 1)".to_string()));
        }
        Ok(PenaltyParams { m, eta })
    }
}

/// Default `M`: ten times `E_{0.1}(B_1)`, rounded up to an integer and fixed
/// once per run.
pub fn default_m(cfg: &SolverConfig) -> Result<f64> {
    let b1 = Domain::ball([0.0; 3], 1.0)?;
    let e = energy(&b1, 0.1, cfg)?;
    Ok(libm::ceil(10.0 * e))
}

/// Piecewise-linear volume penalty: shallow slope `eta` below `|B_1|`,
/// steep slope `1/eta` above it.
pub fn f_eta(s: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Usage("eta must lie in (0, 1)".to_string()));
    }
    if !(s >= 0.0) {
        return Err(Error::Usage("volume argument must be nonnegative".to_string()));
    }
    Ok(if s <= UNIT_BALL_VOLUME {
        eta * (s - UNIT_BALL_VOLUME)
    } else {
        (s - UNIT_BALL_VOLUME) / eta
    })
}

/// `E_{q,M}(u) = E_q(u) + M |int u^2 - 1|`.
pub fn e_qm(u: &ScalarField, q: f64, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::Usage("penalty M must be positive".to_string()));
    }
    let e = crate::hartree::energy_of_state(u, q)?;
    Ok(e + m * (u.l2_norm_sq() - 1.0).abs())
}

/// `E_{q,M,eta}(Omega) = E_q(Omega) + f_eta(|Omega|)`: the penalized
/// minimizer over states is normalized, so the `M` term vanishes at the
/// minimum and only the volume penalty remains.
pub fn e_qm_eta(d: &Domain, q: f64, params: &PenaltyParams, cfg: &SolverConfig) -> Result<f64> {
    let e = energy(d, q, cfg)?;
    Ok(e + f_eta(d.volume(), params.eta)?)
}

/// Free-boundary energy of a state with the domain read off as
/// `{u > threshold}`: Dirichlet and Coulomb terms of the restricted state,
/// plus both penalties.
pub fn free_boundary_energy(u: &ScalarField, q: f64, params: &PenaltyParams) -> Result<f64> {
    let umax = u.values().iter().fold(0.0f64, |a, &b| a.max(b));
    let threshold = SUPPORT_THRESHOLD_REL * umax;
    let restricted = u.restricted_to_support(threshold);
    let density = {
        let vals: alloc::vec::Vec<f64> = restricted.values().iter().map(|v| v * v).collect();
        ScalarField::new(*restricted.grid(), vals, restricted.mask().to_vec())?
    };
    let coulomb = if umax > 0.0 {
        bilinear_d(&density, &density)?
    } else {
        0.0
    };
    let support = u.support_volume(threshold);
    Ok(restricted.dirichlet_energy()
        + 0.5 * q * coulomb
        + params.m * (restricted.l2_norm_sq() - 1.0).abs()
        + f_eta(support, params.eta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::geometry::RadialGrid;
    use core::f64::consts::PI;

    #[test]
    fn f_eta_examples() {
        assert_eq!(f_eta(UNIT_BALL_VOLUME, 0.3).unwrap(), 0.0);
        assert!((f_eta(UNIT_BALL_VOLUME + 1.0, 0.5).unwrap() - 2.0).abs() < 1e-14);
        assert!((f_eta(UNIT_BALL_VOLUME - 1.0, 0.5).unwrap() + 0.5).abs() < 1e-14);
        assert!(f_eta(1.0, 1.5).is_err());
        assert!(f_eta(-1.0, 0.5).is_err());
    }

    #[test]
    fn f_eta_two_sided_bound() {
        let eta = 0.37;
        let samples = [0.0, 0.5, 1.0, UNIT_BALL_VOLUME, 5.0, 9.0, 20.0];
        for &s1 in &samples {
            for &s2 in &samples {
                if s2 > s1 {
                    continue;
                }
                let df = f_eta(s1, eta).unwrap() - f_eta(s2, eta).unwrap();
                assert!(eta * (s1 - s2) <= df + 1e-12);
                assert!(df <= (s1 - s2) / eta + 1e-12);
            }
        }
    }

    fn normalized_test_state() -> ScalarField {
        let g = RadialGrid::new(1.0, 513).unwrap();
        ScalarField::from_radial_fn(g, |r| 1.0 - r * r, |r| r < 1.0)
            .unwrap()
            .normalize()
            .unwrap()
    }

    #[test]
    fn e_qm_of_normalized_state_is_plain_energy() {
        let u = normalized_test_state();
        let e = crate::hartree::energy_of_state(&u, 0.3).unwrap();
        for m in [1.0, 10.0, 1e4] {
            let p = e_qm(&u, 0.3, m).unwrap();
            assert!((p - e).abs() < 1e-9 * e, "M={m}: {p} vs {e}");
        }
    }

    #[test]
    fn e_qm_quadratic_scaling() {
        let u = normalized_test_state();
        let dir = u.dirichlet_energy();
        let mut scaled = u.clone();
        let vals: alloc::vec::Vec<f64> = scaled.values().iter().map(|v| 1.1 * v).collect();
        scaled = ScalarField::new(*u.grid(), vals, u.mask().to_vec()).unwrap();
        let m = 50.0;
        let got = e_qm(&scaled, 0.0, m).unwrap();
        let expect = 1.21 * dir + 0.21 * m;
        assert!((got - expect).abs() < 1e-8 * expect, "{got} vs {expect}");
    }

    #[test]
    fn zero_state_pays_both_penalties() {
        let g = RadialGrid::new(1.0, 257).unwrap();
        let zero = ScalarField::zeros(Grid::Radial(g));
        let params = PenaltyParams::new(7.0, 0.25).unwrap();
        let got = free_boundary_energy(&zero, 1.0, &params).unwrap();
        let expect = 7.0 - 0.25 * UNIT_BALL_VOLUME;
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn e_qm_eta_ball_examples() {
        let cfg = SolverConfig {
            radial_n: 1025,
            ..SolverConfig::default()
        };
        let params = PenaltyParams::new(100.0, 0.5).unwrap();
        let b1 = Domain::ball([0.0; 3], 1.0).unwrap();
        let got = e_qm_eta(&b1, 0.0, &params, &cfg).unwrap();
        assert!((got - PI * PI).abs() < 1e-3);

        let b2 = Domain::ball([0.0; 3], 2.0).unwrap();
        let got = e_qm_eta(&b2, 0.0, &params, &cfg).unwrap();
        let expect = PI * PI / 4.0 + 2.0 * (b2.volume() - UNIT_BALL_VOLUME);
        assert!((got - expect).abs() < 1e-3 * expect, "{got} vs {expect}");
    }

    #[test]
    fn free_boundary_energy_of_ground_state_is_plain_energy() {
        let cfg = SolverConfig {
            radial_n: 1025,
            ..SolverConfig::default()
        };
        let b1 = Domain::ball([0.0; 3], 1.0).unwrap();
        let gs = crate::hartree::solve_ground_state(&b1, 0.2, &cfg).unwrap();
        let params = PenaltyParams::new(100.0, 0.5).unwrap();
        let got = free_boundary_energy(&gs.u, 0.2, &params).unwrap();
        let e = gs.energy(0.2);
        // support volume differs from |B_1| at quadrature resolution only
        assert!((got - e).abs() < 0.05, "{got} vs {e}");
    }

    #[test]
    fn invalid_penalty_params() {
        assert!(PenaltyParams::new(0.0, 0.5).is_err());
        assert!(PenaltyParams::new(1.0, 0.0).is_err());
        assert!(PenaltyParams::new(1.0, 1.0).is_err());
    }
}

//! Mapping between physical SI parameters of a superconducting island and
//! the dimensionless charge `q`, plus back-conversion of energies.
//!
//! With `L = (3V / 4 pi)^{1/3}` the island's effective radius, the
//! dimensionless coupling is `q = 2 e^2 (N - 1) m* L / (pi hbar^2 eps0 eps)`
//! and dimensionless energies convert to Joules through the prefactor
//! `N hbar^2 / (2 m* L^2)`.

use alloc::string::ToString;
use core::f64::consts::PI;

use crate::{Error, Result};

// CODATA 2018 values.
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054571817e-34;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.8541878128e-12;
/// Electron mass, kg.
pub const ELECTRON_MASS: f64 = 9.1093837015e-31;

/// SI description of the island. Inputs are plain SI numbers; no unit
/// parsing is performed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Effective Cooper-pair mass, kg.
    pub m_star_kg: f64,
    /// Number of Cooper pairs.
    pub n_pairs: u64,
    /// Relative dielectric constant of the surrounding medium.
    pub epsilon_r: f64,
    /// Island volume, m^3.
    pub volume_m3: f64,
}

impl PhysicalParams {
    pub fn new(m_star_kg: f64, n_pairs: u64, epsilon_r: f64, volume_m3: f64) -> Result<Self> {
        if !(m_star_kg > 0.0) || !(epsilon_r > 0.0) || !(volume_m3 > 0.0) {
            return Err(Error::Usage(
                "mass, dielectric constant and volume must be positive".to_string(),
            ));
        }
        if n_pairs < 1 {
            return Err(Error::Usage("need at least one Cooper pair".to_string()));
        }
        Ok(PhysicalParams {
            m_star_kg,
            n_pairs,
            epsilon_r,
            volume_m3,
        })
    }

    /// `L = (3V / 4 pi)^{1/3}`, the radius of the volume-equivalent ball.
    pub fn length_scale(&self) -> f64 {
        libm::cbrt(3.0 * self.volume_m3 / (4.0 * PI))
    }

    /// Dimensionless charge `q = 2 e^2 (N - 1) m* L / (pi hbar^2 eps0 eps)`.
    pub fn charge_parameter(&self) -> f64 {
        let l = self.length_scale();
        2.0 * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * (self.n_pairs - 1) as f64 * self.m_star_kg
            * l
            / (PI * HBAR * HBAR * VACUUM_PERMITTIVITY * self.epsilon_r)
    }

    /// Joules per unit of dimensionless energy: `N hbar^2 / (2 m* L^2)`.
    pub fn energy_prefactor(&self) -> f64 {
        let l = self.length_scale();
        self.n_pairs as f64 * HBAR * HBAR / (2.0 * self.m_star_kg * l * l)
    }

    /// Convert a dimensionless energy to Joules.
    pub fn energy_to_si(&self, e_dimensionless: f64) -> f64 {
        self.energy_prefactor() * e_dimensionless
    }
}

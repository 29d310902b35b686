//! Constrained Hartree ground states on bounded domains of `R^3`.
//!
//! The central object is the energy
//!
//! ```text
//! E_q(u, Omega) = int |grad u|^2 dx + (q/2) D(u^2, u^2),    ||u||_{L^2} = 1,
//! ```
//!
//! where `D` is the Coulomb bilinear form with kernel `1/|x - y|` and `q >= 0`
//! is the dimensionless charge. The crate provides
//!
//! * [`geometry`] — admissible domains (balls, disjoint ball unions,
//!   star-shaped nearly-spherical sets, grid masks), volumes, rescalings and
//!   the Fraenkel asymmetry;
//! * [`fields`] — discretized scalar fields on radial and Cartesian grids
//!   with quadrature, Dirichlet energy and mass-preserving dilations;
//! * [`coulomb`] — the Newtonian potential `u^2 * 1/|x|` and the bilinear
//!   form `D`;
//! * [`hartree`] — the self-consistent-field solver for the constrained
//!   minimum `E_q(Omega)` and the nonlinear eigenvalue `lambda_q`;
//! * [`functionals`] — the penalized energies `E_{q,M}`, `E_{q,M,eta}` and
//!   the free-boundary functional of `u` alone;
//! * [`shapeopt`] — volume-constrained descent over spherical-harmonic
//!   boundary coefficients, Faber-Krahn deficit and boundary-gradient
//!   diagnostics;
//! * [`asymptotics`] — large-`q` competitor bounds (unions of small balls),
//!   the `q/4` ball lower bound and the diameter bound;
//! * [`nondim`] — the map between SI island parameters and `q`.
//!
//! The crate is `no_std` (with `alloc`); all floating-point reductions use a
//! fixed pairwise summation order so results are bit-reproducible.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod asymptotics;
pub mod coulomb;
mod error;
pub mod fields;
pub mod functionals;
pub mod geometry;
pub mod hartree;
mod linalg;
pub mod nondim;
pub mod quad;
pub mod shapeopt;
pub mod sphharm;

pub use error::{Error, Result};

//! Discretized scalar functions on radial or Cartesian grids, with
//! quadrature, Dirichlet energy and mass-preserving dilations.
//!
//! A [`ScalarField`] models an element of `H^1_0(Omega)`: values are stored
//! per grid node together with a support mask, and are identically zero
//! outside the mask (the homogeneous Dirichlet condition).

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::geometry::{CartesianGrid, Domain, RadialGrid};
use crate::quad::pairwise_sum;
use crate::{Error, Result};

/// The grid a field lives on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    Radial(RadialGrid),
    Cartesian(CartesianGrid),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Radial(g) => g.n(),
            Grid::Cartesian(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        match self {
            Grid::Radial(g) => g.spacing(),
            Grid::Cartesian(g) => g.spacing(),
        }
    }

    /// Quadrature weights: trapezoidal with the `4 pi r^2` density on radial
    /// grids, midpoint-cell on Cartesian grids.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        match self {
            Grid::Radial(g) => {
                let h = g.spacing();
                (0..g.n())
                    .map(|j| {
                        let r = g.r(j);
                        let end = j == 0 || j == g.n() - 1;
                        4.0 * PI * r * r * h * if end { 0.5 } else { 1.0 }
                    })
                    .collect()
            }
            Grid::Cartesian(g) => {
                let h = g.spacing();
                vec![h * h * h; g.len()]
            }
        }
    }
}

/// Energy components of a state `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `int |grad u|^2 dx`
    pub dirichlet: f64,
    /// `D(u^2, u^2)`
    pub coulomb: f64,
    /// `int u^2 dx`
    pub l2norm_sq: f64,
}

impl EnergyBreakdown {
    /// `E_q(u) = dirichlet + (q/2) coulomb`.
    pub fn total(&self, q: f64) -> f64 {
        self.dirichlet + 0.5 * q * self.coulomb
    }
}

/// A discretized function with a support mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl ScalarField {
    /// Build a field; values outside the mask are forced to zero.
    pub fn new(grid: Grid, mut values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || mask.len() != grid.len() {
            return Err(Error::Usage("field/mask length does not match grid".to_string()));
        }
        for (v, &m) in values.iter_mut().zip(mask.iter()) {
            if !v.is_finite() {
                return Err(Error::Usage("field values must be finite".to_string()));
            }
            if !m {
                *v = 0.0;
            }
        }
        Ok(ScalarField { grid, values, mask })
    }

    /// Zero field supported everywhere.
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            values: vec![0.0; grid.len()],
            mask: vec![true; grid.len()],
            grid,
        }
    }

    /// Radial field from a profile `u(r)`, supported where `mask(r)`.
    pub fn from_radial_fn(
        grid: RadialGrid,
        mut f: impl FnMut(f64) -> f64,
        mut support: impl FnMut(f64) -> bool,
    ) -> Result<Self> {
        let values: Vec<f64> = (0..grid.n()).map(|j| f(grid.r(j))).collect();
        let mask: Vec<bool> = (0..grid.n())
            .map(|j| j != grid.n() - 1 && support(grid.r(j)))
            .collect();
        ScalarField::new(Grid::Radial(grid), values, mask)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// `int u^2 dx` by grid quadrature.
    pub fn l2_norm_sq(&self) -> f64 {
        let w = self.grid.quadrature_weights();
        let terms: Vec<f64> = self
            .values
            .iter()
            .zip(w.iter())
            .map(|(v, w)| w * v * v)
            .collect();
        pairwise_sum(&terms)
    }

    /// `int u v dx` for two fields on the same grid.
    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Usage("fields live on different grids".to_string()));
        }
        let w = self.grid.quadrature_weights();
        let terms: Vec<f64> = (0..self.values.len())
            .map(|i| w[i] * self.values[i] * other.values[i])
            .collect();
        Ok(pairwise_sum(&terms))
    }

    /// `int |grad u|^2 dx`.
    ///
    /// Radial grids use the substitution `w = r u`, for which
    /// `int |grad u|^2 = 4 pi int (w')^2 dr`; Cartesian grids sum centered
    /// face differences, one-sided at the support boundary so the Dirichlet
    /// condition is enforced exactly at masked-out nodes.
    pub fn dirichlet_energy(&self) -> f64 {
        match &self.grid {
            Grid::Radial(g) => {
                let h = g.spacing();
                let terms: Vec<f64> = (0..g.n() - 1)
                    .map(|j| {
                        let w0 = g.r(j) * self.values[j];
                        let w1 = g.r(j + 1) * self.values[j + 1];
                        let d = (w1 - w0) / h;
                        4.0 * PI * d * d * h
                    })
                    .collect();
                pairwise_sum(&terms)
            }
            Grid::Cartesian(g) => {
                let h = g.spacing();
                let n = g.n();
                let mut terms = Vec::new();
                // faces along each axis, counted once; value outside the
                // mask or the box is zero
                let val = |i: isize, j: isize, k: isize| -> f64 {
                    if i < 0 || j < 0 || k < 0 || i >= n as isize || j >= n as isize || k >= n as isize
                    {
                        return 0.0;
                    }
                    let id = g.index(i as usize, j as usize, k as usize);
                    if self.mask[id] {
                        self.values[id]
                    } else {
                        0.0
                    }
                };
                for i in 0..n as isize {
                    for j in 0..n as isize {
                        for k in 0..n as isize {
                            let u = val(i, j, k);
                            for (di, dj, dk) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
                                let v = val(i + di, j + dj, k + dk);
                                let d = (v - u) / h;
                                terms.push(d * d * h * h * h);
                            }
                            // one-sided faces toward the low box boundary
                            if i == 0 || j == 0 || k == 0 {
                                for (di, dj, dk) in [(-1, 0, 0), (0, -1, 0), (0, 0, -1)] {
                                    if i + di < 0 || j + dj < 0 || k + dk < 0 {
                                        let d = u / h;
                                        terms.push(d * d * h * h * h);
                                    }
                                }
                            }
                        }
                    }
                }
                pairwise_sum(&terms)
            }
        }
    }

    /// Rescale so that `int u^2 = 1`.
    pub fn normalize(&self) -> Result<ScalarField> {
        let m = self.l2_norm_sq();
        if !(m > 0.0) {
            return Err(Error::Usage("cannot normalize a zero field".to_string()));
        }
        let s = 1.0 / libm::sqrt(m);
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= s;
        }
        Ok(out)
    }

    /// Mass-preserving dilation `u_rho(y) = rho^{-3/2} u(y / rho)` sampled on
    /// the same grid (cubic interpolation along rays on radial grids,
    /// trilinear on Cartesian grids). The interpolant is renormalized so the
    /// L^2 mass is preserved exactly.
    pub fn dilate(&self, rho: f64) -> Result<ScalarField> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Usage("dilation factor must be positive".to_string()));
        }
        if rho == 1.0 {
            return Ok(self.clone());
        }
        let amp = libm::pow(rho, -1.5);
        let mass = self.l2_norm_sq();
        let mut out = match &self.grid {
            Grid::Radial(g) => {
                let mut values = Vec::with_capacity(g.n());
                let mut mask = Vec::with_capacity(g.n());
                for j in 0..g.n() {
                    let s = g.r(j) / rho;
                    if s > g.r_max() {
                        values.push(0.0);
                        mask.push(false);
                        continue;
                    }
                    values.push(amp * self.cubic_radial(s, g));
                    let nearest = libm::round(s / g.spacing()) as usize;
                    mask.push(j != g.n() - 1 && self.mask[nearest.min(g.n() - 1)]);
                }
                ScalarField::new(self.grid, values, mask)?
            }
            Grid::Cartesian(g) => {
                let n = g.n();
                let mut values = Vec::with_capacity(g.len());
                let mut mask = Vec::with_capacity(g.len());
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let x = g.node(i, j, k);
                            let y = [x[0] / rho, x[1] / rho, x[2] / rho];
                            values.push(amp * self.trilinear(y, g));
                            mask.push(match g.cell_of(y) {
                                Some((a, b, c)) => self.mask[g.index(a, b, c)],
                                None => false,
                            });
                        }
                    }
                }
                ScalarField::new(self.grid, values, mask)?
            }
        };
        let new_mass = out.l2_norm_sq();
        if mass > 0.0 && new_mass > 0.0 {
            let s = libm::sqrt(mass / new_mass);
            for v in out.values.iter_mut() {
                *v *= s;
            }
        }
        Ok(out)
    }

    /// Catmull-Rom interpolation of the radial profile at `s in [0, r_max]`,
    /// with even reflection through the origin and zero extension outside.
    fn cubic_radial(&self, s: f64, g: &RadialGrid) -> f64 {
        let h = g.spacing();
        let t = s / h;
        let j = (t as usize).min(g.n() - 2);
        let t = t - j as f64;
        let at = |idx: isize| -> f64 {
            let idx = if idx < 0 { -idx } else { idx } as usize; // even reflection
            if idx >= self.values.len() {
                0.0
            } else {
                self.values[idx]
            }
        };
        let (p0, p1, p2, p3) = (at(j as isize - 1), at(j as isize), at(j as isize + 1), at(j as isize + 2));
        0.5 * (2.0 * p1
            + (-p0 + p2) * t
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
            + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t * t)
    }

    fn trilinear(&self, y: [f64; 3], g: &CartesianGrid) -> f64 {
        let h = g.spacing();
        let n = g.n() as isize;
        let mut base = [0isize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let t = (y[a] + g.half_extent()) / h - 0.5;
            let f = libm::floor(t);
            base[a] = f as isize;
            frac[a] = t - f;
        }
        let at = |i: isize, j: isize, k: isize| -> f64 {
            if i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n {
                0.0
            } else {
                self.values[g.index(i as usize, j as usize, k as usize)]
            }
        };
        let mut acc = 0.0;
        for (di, wi) in [(0, 1.0 - frac[0]), (1, frac[0])] {
            for (dj, wj) in [(0, 1.0 - frac[1]), (1, frac[1])] {
                for (dk, wk) in [(0, 1.0 - frac[2]), (1, frac[2])] {
                    acc += wi * wj * wk * at(base[0] + di, base[1] + dj, base[2] + dk);
                }
            }
        }
        acc
    }

    /// Interpolated value at a point: cubic along the radius for radial
    /// fields, trilinear for Cartesian fields; zero outside the grid.
    pub fn sample(&self, x: [f64; 3]) -> f64 {
        match &self.grid {
            Grid::Radial(g) => {
                let r = libm::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                if r > g.r_max() {
                    0.0
                } else {
                    self.cubic_radial(r, g)
                }
            }
            Grid::Cartesian(g) => self.trilinear(x, g),
        }
    }

    /// Support volume `|{u > threshold}|` by node counting.
    pub fn support_volume(&self, threshold: f64) -> f64 {
        let w = self.grid.quadrature_weights();
        let terms: Vec<f64> = self
            .values
            .iter()
            .zip(w.iter())
            .map(|(v, w)| if *v > threshold { *w } else { 0.0 })
            .collect();
        pairwise_sum(&terms)
    }

    /// Restrict the support mask to `{u > threshold}`.
    pub fn restricted_to_support(&self, threshold: f64) -> ScalarField {
        let mask: Vec<bool> = self
            .values
            .iter()
            .zip(self.mask.iter())
            .map(|(v, &m)| m && *v > threshold)
            .collect();
        let mut values = self.values.clone();
        for (v, &m) in values.iter_mut().zip(mask.iter()) {
            if !m {
                *v = 0.0;
            }
        }
        ScalarField {
            grid: self.grid,
            values,
            mask,
        }
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>, mask: Vec<bool>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert_eq!(mask.len(), grid.len());
        ScalarField { grid, values, mask }
    }

    #[cfg(test)]
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Quadrature-smoothed indicator field of a domain.
///
/// Radial grids require a ball centered at the origin; the indicator value
/// ramps linearly across one cell at the boundary so the trapezoid rule
/// integrates the jump to second order. Cartesian cells use a 2x2x2
/// subsample average.
pub fn indicator_field(domain: &Domain, grid: Grid) -> Result<ScalarField> {
    match grid {
        Grid::Radial(g) => {
            let radius = match domain {
                Domain::Ball(b) if b.center == [0.0; 3] => b.radius,
                _ => {
                    return Err(Error::Usage(
                        "radial indicator fields require an origin-centered ball".to_string(),
                    ))
                }
            };
            let h = g.spacing();
            ScalarField::from_radial_fn(
                g,
                |r| ((radius - r) / h + 0.5).clamp(0.0, 1.0),
                |r| (radius - r) / h + 0.5 > 0.0,
            )
        }
        Grid::Cartesian(g) => {
            let n = g.n();
            let h = g.spacing();
            let mut values = Vec::with_capacity(g.len());
            let mut mask = Vec::with_capacity(g.len());
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let c = g.node(i, j, k);
                        let mut hits = 0u32;
                        for si in [-0.25, 0.25] {
                            for sj in [-0.25, 0.25] {
                                for sk in [-0.25, 0.25] {
                                    if domain.contains([c[0] + si * h, c[1] + sj * h, c[2] + sk * h])
                                    {
                                        hits += 1;
                                    }
                                }
                            }
                        }
                        values.push(hits as f64 / 8.0);
                        mask.push(hits > 0);
                    }
                }
            }
            ScalarField::new(grid, values, mask)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UNIT_BALL_VOLUME;

    fn unit_ball_ground_state(n: usize) -> ScalarField {
        let g = RadialGrid::new(1.0, n).unwrap();
        ScalarField::from_radial_fn(
            g,
            |r| {
                if r == 0.0 {
                    PI / (2.0 * PI).sqrt()
                } else {
                    (PI * r).sin() / (r * (2.0 * PI).sqrt())
                }
            },
            |r| r < 1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = RadialGrid::new(1.0, 128).unwrap();
        let f = ScalarField::zeros(Grid::Radial(g));
        assert_eq!(f.l2_norm_sq(), 0.0);
        assert_eq!(f.dirichlet_energy(), 0.0);
        assert!(f.normalize().is_err());
    }

    #[test]
    fn analytic_ground_state_is_normalized() {
        let u = unit_ball_ground_state(2048);
        assert!((u.l2_norm_sq() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn analytic_ground_state_dirichlet_energy_is_pi_squared() {
        let u = unit_ball_ground_state(2048);
        let e = u.dirichlet_energy();
        assert!((e - PI * PI).abs() < 1e-4 * PI * PI, "E = {e}");
    }

    #[test]
    fn constant_one_on_ball_mask_integrates_to_volume() {
        let domain = Domain::ball([0.0; 3], 1.0).unwrap();
        let g = CartesianGrid::new(1.5, 48).unwrap();
        let ind = indicator_field(&domain, Grid::Cartesian(g)).unwrap();
        let v = ind.l2_norm_sq(); // indicator^2 ~ indicator up to the ramp
        assert!((v - UNIT_BALL_VOLUME).abs() < 0.05 * UNIT_BALL_VOLUME);
    }

    #[test]
    fn normalize_and_scaling() {
        let u = unit_ball_ground_state(1024);
        let mut two_u = u.clone();
        for v in two_u.values_mut() {
            *v *= 2.0;
        }
        let back = two_u.normalize().unwrap();
        let diff: f64 = back
            .values()
            .iter()
            .zip(u.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-9);
    }

    #[test]
    fn dilate_identity_and_scaling_laws() {
        let g = RadialGrid::new(4.0, 4096).unwrap();
        let u = ScalarField::from_radial_fn(
            g,
            |r| {
                if r == 0.0 {
                    PI / (2.0 * PI).sqrt()
                } else if r < 1.0 {
                    (PI * r).sin() / (r * (2.0 * PI).sqrt())
                } else {
                    0.0
                }
            },
            |r| r < 1.0,
        )
        .unwrap();
        let id = u.dilate(1.0).unwrap();
        assert_eq!(id.values(), u.values());

        for rho in [0.5, 2.0] {
            let d = u.dilate(rho).unwrap();
            assert!((d.l2_norm_sq() - u.l2_norm_sq()).abs() < 1e-10);
            let expect = u.dirichlet_energy() / (rho * rho);
            let got = d.dirichlet_energy();
            assert!(
                (got - expect).abs() < 5e-3 * expect,
                "rho {rho}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn dilate_composes_up_to_interpolation_error() {
        let g = RadialGrid::new(4.0, 2048).unwrap();
        let u = ScalarField::from_radial_fn(
            g,
            |r| (-(r * r)).exp(),
            |r| r < 3.9,
        )
        .unwrap();
        let a = u.dilate(1.3).unwrap().dilate(1.2).unwrap();
        let b = u.dilate(1.3 * 1.2).unwrap();
        let h = g.spacing();
        let diff: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 10.0 * h, "diff {diff}, h {h}");
    }
}

//! Admissible domains `Omega` in `R^3`: balls, disjoint unions of balls,
//! star-shaped nearly-spherical sets given by a spherical-harmonic boundary
//! graph, and raw grid masks. Provides volumes, unit-volume rescalings, the
//! Fraenkel asymmetry and diameters.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::quad::{pairwise_sum, AngularGrid};
use crate::sphharm::real_sph_harm;
use crate::{Error, Result};

/// Volume of the unit ball `|B_1| = 4 pi / 3`.
pub const UNIT_BALL_VOLUME: f64 = 4.0 * PI / 3.0;

/// Domains below this volume are rejected as degenerate.
const VOLUME_TOL: f64 = 1e-300;

/// Uniform Cartesian grid of cell centers on the cube `[-R, R]^3`,
/// `n` cells per axis, spacing `h = 2R/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianGrid {
    half_extent: f64,
    n: usize,
}

impl CartesianGrid {
    pub fn new(half_extent: f64, n: usize) -> Result<Self> {
        if !(half_extent > 0.0) || !half_extent.is_finite() {
            return Err(Error::InvalidDomain("half_extent must be positive".to_string()));
        }
        if n < 8 {
            return Err(Error::InvalidDomain("Cartesian grid needs n >= 8".to_string()));
        }
        Ok(CartesianGrid { half_extent, n })
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let h = self.spacing();
        [
            -self.half_extent + (i as f64 + 0.5) * h,
            -self.half_extent + (j as f64 + 0.5) * h,
            -self.half_extent + (k as f64 + 0.5) * h,
        ]
    }

    /// Cell index containing `x`, if inside the box.
    pub fn cell_of(&self, x: [f64; 3]) -> Option<(usize, usize, usize)> {
        let h = self.spacing();
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let t = (x[a] + self.half_extent) / h;
            if t < 0.0 || t >= self.n as f64 {
                return None;
            }
            idx[a] = t as usize;
        }
        Some((idx[0], idx[1], idx[2]))
    }

    fn scaled(&self, rho: f64) -> CartesianGrid {
        CartesianGrid {
            half_extent: self.half_extent * rho,
            n: self.n,
        }
    }
}

/// Uniform radial grid on `[0, r_max]` with `n` nodes `r_j = j h`,
/// `h = r_max / (n - 1)`. The last node is the Dirichlet boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    n: usize,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidDomain("r_max must be positive".to_string()));
        }
        if n < 64 {
            return Err(Error::InvalidDomain("radial grid needs n >= 64".to_string()));
        }
        Ok(RadialGrid { r_max, n })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / (self.n - 1) as f64
    }

    #[inline]
    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }
}

/// A ball with given center and positive radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: [f64; 3],
    pub radius: f64,
}

impl Ball {
    pub fn new(center: [f64; 3], radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDomain("ball needs finite center and radius > 0".to_string()));
        }
        Ok(Ball { center, radius })
    }

    pub fn volume(&self) -> f64 {
        UNIT_BALL_VOLUME * self.radius * self.radius * self.radius
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        dist(x, self.center) <= self.radius
    }
}

/// Star-shaped set whose boundary is the graph
/// `{ base_radius (1 + phi(omega)) omega : omega in S^2 }` with
/// `phi = sum c_{l,m} Y_{l,m}` expanded in real spherical harmonics.
#[derive(Debug, Clone, PartialEq)]
pub struct NearlySpherical {
    base_radius: f64,
    coeffs: Vec<(u32, i32, f64)>,
}

impl NearlySpherical {
    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }

    /// Sparse coefficients `(l, m, c_{l,m})`.
    pub fn coeffs(&self) -> &[(u32, i32, f64)] {
        &self.coeffs
    }

    /// The boundary graph perturbation `phi` at a direction.
    pub fn perturbation(&self, dir: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for &(l, m, c) in &self.coeffs {
            if c != 0.0 {
                s += c * real_sph_harm(l, m, dir);
            }
        }
        s
    }

    /// Boundary radius `base_radius (1 + phi)` along a direction.
    pub fn radius_at(&self, dir: [f64; 3]) -> f64 {
        self.base_radius * (1.0 + self.perturbation(dir))
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        let r = libm::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        if r == 0.0 {
            return true;
        }
        r <= self.radius_at(x)
    }
}

/// Indicator of a set of grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMask {
    grid: CartesianGrid,
    indicator: Vec<bool>,
}

impl GridMask {
    pub fn grid(&self) -> &CartesianGrid {
        &self.grid
    }

    pub fn indicator(&self) -> &[bool] {
        &self.indicator
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        match self.grid.cell_of(x) {
            Some((i, j, k)) => self.indicator[self.grid.index(i, j, k)],
            None => false,
        }
    }
}

/// An admissible domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Ball(Ball),
    BallUnion(Vec<Ball>),
    NearlySpherical(NearlySpherical),
    GridMask(GridMask),
}

impl Domain {
    pub fn ball(center: [f64; 3], radius: f64) -> Result<Domain> {
        Ok(Domain::Ball(Ball::new(center, radius)?))
    }

    /// Union of pairwise disjoint balls (positive gaps required).
    pub fn ball_union(balls: Vec<Ball>) -> Result<Domain> {
        if balls.is_empty() {
            return Err(Error::InvalidDomain("ball union must be nonempty".to_string()));
        }
        for i in 0..balls.len() {
            for j in (i + 1)..balls.len() {
                let gap = dist(balls[i].center, balls[j].center)
                    - balls[i].radius
                    - balls[j].radius;
                if gap <= 0.0 {
                    return Err(Error::InvalidDomain(
                        "balls in a union must have positive pairwise gaps".to_string(),
                    ));
                }
            }
        }
        Ok(Domain::BallUnion(balls))
    }

    /// Nearly-spherical star-shaped set. Requires `max |phi| <= 0.5` over the
    /// sample directions of the default angular grid.
    pub fn nearly_spherical(base_radius: f64, coeffs: &[(u32, i32, f64)]) -> Result<Domain> {
        if !(base_radius > 0.0) || !base_radius.is_finite() {
            return Err(Error::InvalidDomain("base_radius must be positive".to_string()));
        }
        for &(l, m, c) in coeffs {
            if m.unsigned_abs() > l {
                return Err(Error::InvalidDomain("spherical-harmonic index |m| > l".to_string()));
            }
            if !c.is_finite() {
                return Err(Error::InvalidDomain("non-finite coefficient".to_string()));
            }
        }
        let ns = NearlySpherical {
            base_radius,
            coeffs: coeffs.to_vec(),
        };
        let grid = AngularGrid::default_grid();
        for d in &grid.dirs {
            if libm::fabs(ns.perturbation(*d)) > 0.5 {
                return Err(Error::InvalidDomain(
                    "|phi| exceeds 0.5; set is not safely star-shaped".to_string(),
                ));
            }
        }
        Ok(Domain::NearlySpherical(ns))
    }

    pub fn grid_mask(grid: CartesianGrid, indicator: Vec<bool>) -> Result<Domain> {
        if indicator.len() != grid.len() {
            return Err(Error::InvalidDomain("indicator length does not match grid".to_string()));
        }
        if !indicator.iter().any(|&b| b) {
            return Err(Error::InvalidDomain("grid mask is empty".to_string()));
        }
        Ok(Domain::GridMask(GridMask { grid, indicator }))
    }

    /// Measure of the domain. For nearly-spherical sets this is the angular
    /// quadrature of `(1/3) int R(omega)^3 dsigma`.
    pub fn volume(&self) -> f64 {
        match self {
            Domain::Ball(b) => b.volume(),
            Domain::BallUnion(balls) => {
                let terms: Vec<f64> = balls.iter().map(|b| b.volume()).collect();
                pairwise_sum(&terms)
            }
            Domain::NearlySpherical(ns) => {
                let grid = AngularGrid::default_grid();
                grid.integrate(|d| {
                    let r = ns.radius_at(d);
                    r * r * r / 3.0
                })
            }
            Domain::GridMask(m) => {
                let h = m.grid.spacing();
                let count = m.indicator.iter().filter(|&&b| b).count();
                count as f64 * h * h * h
            }
        }
    }

    /// Rescale the domain about the origin so that its volume equals `|B_1|`.
    /// Returns the rescaled domain and the linear factor `rho = (|B_1|/|d|)^{1/3}`.
    pub fn rescale_to_unit_volume(&self) -> Result<(Domain, f64)> {
        let v = self.volume();
        if !(v > VOLUME_TOL) {
            return Err(Error::InvalidDomain("degenerate domain: volume below tolerance".to_string()));
        }
        let rho = libm::cbrt(UNIT_BALL_VOLUME / v);
        let scaled = match self {
            Domain::Ball(b) => Domain::Ball(Ball {
                center: scale3(b.center, rho),
                radius: b.radius * rho,
            }),
            Domain::BallUnion(balls) => Domain::BallUnion(
                balls
                    .iter()
                    .map(|b| Ball {
                        center: scale3(b.center, rho),
                        radius: b.radius * rho,
                    })
                    .collect(),
            ),
            Domain::NearlySpherical(ns) => Domain::NearlySpherical(NearlySpherical {
                base_radius: ns.base_radius * rho,
                coeffs: ns.coeffs.clone(),
            }),
            Domain::GridMask(m) => Domain::GridMask(GridMask {
                grid: m.grid.scaled(rho),
                indicator: m.indicator.clone(),
            }),
        };
        Ok((scaled, rho))
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        match self {
            Domain::Ball(b) => b.contains(x),
            Domain::BallUnion(balls) => balls.iter().any(|b| b.contains(x)),
            Domain::NearlySpherical(ns) => ns.contains(x),
            Domain::GridMask(m) => m.contains(x),
        }
    }

    /// Largest distance from the origin to a point of the domain.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Domain::Ball(b) => norm3(b.center) + b.radius,
            Domain::BallUnion(balls) => balls
                .iter()
                .map(|b| norm3(b.center) + b.radius)
                .fold(0.0, f64::max),
            Domain::NearlySpherical(ns) => {
                let grid = AngularGrid::default_grid();
                grid.dirs
                    .iter()
                    .map(|d| ns.radius_at(*d))
                    .fold(0.0, f64::max)
            }
            Domain::GridMask(m) => {
                let mut r: f64 = 0.0;
                let n = m.grid.n();
                let half_h = 0.5 * m.grid.spacing() * libm::sqrt(3.0);
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            if m.indicator[m.grid.index(i, j, k)] {
                                r = r.max(norm3(m.grid.node(i, j, k)) + half_h);
                            }
                        }
                    }
                }
                r
            }
        }
    }

    /// Volume centroid.
    pub fn centroid(&self) -> [f64; 3] {
        match self {
            Domain::Ball(b) => b.center,
            Domain::BallUnion(balls) => {
                let v: f64 = pairwise_sum(&balls.iter().map(|b| b.volume()).collect::<Vec<_>>());
                let mut c = [0.0; 3];
                for b in balls {
                    let w = b.volume() / v;
                    for a in 0..3 {
                        c[a] += w * b.center[a];
                    }
                }
                c
            }
            Domain::NearlySpherical(ns) => {
                let grid = AngularGrid::default_grid();
                let v = self.volume();
                let mut c = [0.0; 3];
                for a in 0..3 {
                    c[a] = grid.integrate(|d| {
                        let r = ns.radius_at(d);
                        d[a] * r * r * r * r / 4.0
                    }) / v;
                }
                c
            }
            Domain::GridMask(m) => {
                let mut c = [0.0; 3];
                let mut count = 0usize;
                let n = m.grid.n();
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            if m.indicator[m.grid.index(i, j, k)] {
                                let x = m.grid.node(i, j, k);
                                for a in 0..3 {
                                    c[a] += x[a];
                                }
                                count += 1;
                            }
                        }
                    }
                }
                for a in c.iter_mut() {
                    *a /= count as f64;
                }
                c
            }
        }
    }

    /// Fraenkel asymmetry `A(Omega) = inf_x |Omega ^ (B + x)| / |Omega|`
    /// with `B` the ball of volume `|Omega|`. The infimum over translations
    /// is approximated by Nelder-Mead searches from the centroid and six
    /// axis-shifted starts.
    pub fn fraenkel_asymmetry(&self) -> f64 {
        self.fraenkel_asymmetry_with_center().0
    }

    /// As [`Self::fraenkel_asymmetry`], also returning one (not necessarily
    /// unique) center attaining the approximate infimum.
    pub fn fraenkel_asymmetry_with_center(&self) -> (f64, [f64; 3]) {
        let vol = self.volume();
        let rho = libm::cbrt(vol / UNIT_BALL_VOLUME);
        let c0 = self.centroid();
        let shift = 0.75 * self.diameter();
        let mut starts = Vec::with_capacity(7);
        starts.push(c0);
        for a in 0..3 {
            for s in [-1.0, 1.0] {
                let mut p = c0;
                p[a] += s * shift;
                starts.push(p);
            }
        }
        // For disjoint unions the centroid can sit in empty space between
        // the components; the component centers are the natural candidates.
        if let Domain::BallUnion(balls) = self {
            starts.extend(balls.iter().map(|b| b.center));
        }
        let f = |x: &[f64; 3]| self.sym_diff_with_ball(*x, rho);
        let mut best = (f64::INFINITY, c0);
        for s in &starts {
            let (x, v) = nelder_mead(&f, *s, 0.25 * rho.max(1e-6), vol * 1e-6, 300);
            if v < best.0 {
                best = (v, x);
            }
        }
        let a = (best.0 / vol).clamp(0.0, 2.0 - f64::EPSILON);
        (a, best.1)
    }

    /// `|Omega ^ (B_rho + x)|` where `^` is the symmetric difference.
    fn sym_diff_with_ball(&self, center: [f64; 3], rho: f64) -> f64 {
        let vb = UNIT_BALL_VOLUME * rho * rho * rho;
        let inter = match self {
            Domain::Ball(b) => lens_volume(b.radius, rho, dist(b.center, center)),
            Domain::BallUnion(balls) => {
                let terms: Vec<f64> = balls
                    .iter()
                    .map(|b| lens_volume(b.radius, rho, dist(b.center, center)))
                    .collect();
                pairwise_sum(&terms)
            }
            Domain::NearlySpherical(ns) => {
                let grid = AngularGrid::default_grid();
                grid.integrate(|d| {
                    let r_omega = ns.radius_at(d);
                    // ray {t d : t >= 0} meets the ball on [t-, t+]
                    let b = d[0] * center[0] + d[1] * center[1] + d[2] * center[2];
                    let disc = b * b - (norm3_sq(center) - rho * rho);
                    if disc <= 0.0 {
                        return 0.0;
                    }
                    let s = libm::sqrt(disc);
                    let lo = (b - s).max(0.0);
                    let hi = (b + s).min(r_omega);
                    if hi <= lo {
                        0.0
                    } else {
                        (hi * hi * hi - lo * lo * lo) / 3.0
                    }
                })
            }
            Domain::GridMask(m) => {
                let h = m.grid.spacing();
                let n = m.grid.n();
                let mut count = 0usize;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            if m.indicator[m.grid.index(i, j, k)]
                                && dist(m.grid.node(i, j, k), center) <= rho
                            {
                                count += 1;
                            }
                        }
                    }
                }
                count as f64 * h * h * h
            }
        };
        self.volume() + vb - 2.0 * inter
    }

    /// Diameter: exact for balls and ball unions, supremum of pairwise
    /// boundary-sample distances otherwise.
    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Ball(b) => 2.0 * b.radius,
            Domain::BallUnion(balls) => {
                let mut d: f64 = 0.0;
                for i in 0..balls.len() {
                    for j in i..balls.len() {
                        let cc = dist(balls[i].center, balls[j].center);
                        d = d.max(cc + balls[i].radius + balls[j].radius);
                    }
                }
                d
            }
            Domain::NearlySpherical(ns) => {
                let grid = AngularGrid::default_grid();
                let pts: Vec<[f64; 3]> = grid
                    .dirs
                    .iter()
                    .map(|d| scale3(*d, ns.radius_at(*d)))
                    .collect();
                max_pairwise_distance(&pts)
            }
            Domain::GridMask(m) => {
                let n = m.grid.n();
                let mut pts = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            if m.indicator[m.grid.index(i, j, k)]
                                && is_mask_boundary(m, i, j, k)
                            {
                                pts.push(m.grid.node(i, j, k));
                            }
                        }
                    }
                }
                max_pairwise_distance(&pts)
            }
        }
    }

    /// Whether the domain is connected. Exact for balls, unions and
    /// nearly-spherical sets; a 6-neighbor flood fill for grid masks.
    pub fn is_connected(&self) -> bool {
        match self {
            Domain::Ball(_) | Domain::NearlySpherical(_) => true,
            Domain::BallUnion(balls) => balls.len() == 1,
            Domain::GridMask(m) => mask_is_connected(m),
        }
    }
}

fn is_mask_boundary(m: &GridMask, i: usize, j: usize, k: usize) -> bool {
    let n = m.grid.n();
    let neigh = |di: isize, dj: isize, dk: isize| -> bool {
        let (i, j, k) = (i as isize + di, j as isize + dj, k as isize + dk);
        if i < 0 || j < 0 || k < 0 || i >= n as isize || j >= n as isize || k >= n as isize {
            return false;
        }
        m.indicator[m.grid.index(i as usize, j as usize, k as usize)]
    };
    !(neigh(1, 0, 0)
        && neigh(-1, 0, 0)
        && neigh(0, 1, 0)
        && neigh(0, -1, 0)
        && neigh(0, 0, 1)
        && neigh(0, 0, -1))
}

fn mask_is_connected(m: &GridMask) -> bool {
    let n = m.grid.n();
    let total = m.indicator.iter().filter(|&&b| b).count();
    if total == 0 {
        return false;
    }
    let start = m.indicator.iter().position(|&b| b).unwrap();
    let mut seen = alloc::vec![false; m.indicator.len()];
    let mut stack = alloc::vec![start];
    seen[start] = true;
    let mut reached = 0usize;
    while let Some(idx) = stack.pop() {
        reached += 1;
        let k = idx % n;
        let j = (idx / n) % n;
        let i = idx / (n * n);
        let mut push = |i: isize, j: isize, k: isize| {
            if i < 0 || j < 0 || k < 0 || i >= n as isize || j >= n as isize || k >= n as isize {
                return;
            }
            let id = m.grid.index(i as usize, j as usize, k as usize);
            if m.indicator[id] && !seen[id] {
                seen[id] = true;
                stack.push(id);
            }
        };
        let (i, j, k) = (i as isize, j as isize, k as isize);
        push(i + 1, j, k);
        push(i - 1, j, k);
        push(i, j + 1, k);
        push(i, j - 1, k);
        push(i, j, k + 1);
        push(i, j, k - 1);
    }
    reached == total
}

fn max_pairwise_distance(pts: &[[f64; 3]]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for p in &pts[i + 1..] {
            let d2 = norm3_sq([pts[i][0] - p[0], pts[i][1] - p[1], pts[i][2] - p[2]]);
            if d2 > best {
                best = d2;
            }
        }
    }
    libm::sqrt(best)
}

/// Volume of the intersection of two balls with radii `r1`, `r2` and
/// center distance `d`.
pub fn lens_volume(r1: f64, r2: f64, d: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    let rmin = r1.min(r2);
    if d <= libm::fabs(r1 - r2) {
        return UNIT_BALL_VOLUME * rmin * rmin * rmin;
    }
    let a = r1 + r2 - d;
    PI * a * a * (d * d + 2.0 * d * (r1 + r2) - 3.0 * (r1 - r2) * (r1 - r2)) / (12.0 * d)
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    libm::sqrt(norm3_sq([a[0] - b[0], a[1] - b[1], a[2] - b[2]]))
}

fn norm3(a: [f64; 3]) -> f64 {
    libm::sqrt(norm3_sq(a))
}

fn norm3_sq(a: [f64; 3]) -> f64 {
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
}

fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Derivative-free Nelder-Mead minimization over `R^3`.
///
/// `scale` sets the initial simplex size; iteration stops when the simplex
/// value spread falls below `ftol` or after `max_iter` reflections.
fn nelder_mead<F: Fn(&[f64; 3]) -> f64>(
    f: &F,
    start: [f64; 3],
    scale: f64,
    ftol: f64,
    max_iter: usize,
) -> ([f64; 3], f64) {
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((start, f(&start)));
    for a in 0..3 {
        let mut p = start;
        p[a] += scale;
        simplex.push((p, f(&p)));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        if simplex[3].1 - simplex[0].1 <= ftol {
            break;
        }
        let mut centroid = [0.0; 3];
        for s in &simplex[..3] {
            for a in 0..3 {
                centroid[a] += s.0[a] / 3.0;
            }
        }
        let worst = simplex[3];
        let refl = lerp(centroid, worst.0, -1.0);
        let fr = f(&refl);
        if fr < simplex[0].1 {
            let exp = lerp(centroid, worst.0, -2.0);
            let fe = f(&exp);
            simplex[3] = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (refl, fr);
        } else {
            let con = lerp(centroid, worst.0, 0.5);
            let fc = f(&con);
            if fc < worst.1 {
                simplex[3] = (con, fc);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    s.0 = lerp(best, s.0, 0.5);
                    s.1 = f(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    simplex[0]
}

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volume() {
        let d = Domain::ball([0.0; 3], 1.0).unwrap();
        assert!((d.volume() - UNIT_BALL_VOLUME).abs() < 1e-14);
    }

    #[test]
    fn eight_half_balls_have_unit_ball_volume() {
        // N r^3 = 1 normalization: 8 balls of radius 1/2
        let mut balls = Vec::new();
        for i in 0..8 {
            let c = [3.0 * i as f64, 0.0, 0.0];
            balls.push(Ball::new(c, 0.5).unwrap());
        }
        let d = Domain::ball_union(balls).unwrap();
        assert!((d.volume() - UNIT_BALL_VOLUME).abs() < 1e-12);
    }

    #[test]
    fn nearly_spherical_constant_phi_volume() {
        // phi == 0.1 via the l=0 harmonic: c00 = 0.1 / Y00 = 0.1 * sqrt(4 pi)
        let c00 = 0.1 * (4.0 * PI).sqrt();
        let d = Domain::nearly_spherical(1.0, &[(0, 0, c00)]).unwrap();
        let expect = UNIT_BALL_VOLUME * 1.1f64.powi(3);
        assert!((d.volume() - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn rescale_examples() {
        let d = Domain::ball([0.0; 3], 2.0).unwrap();
        let (s, rho) = d.rescale_to_unit_volume().unwrap();
        assert!((rho - 0.5).abs() < 1e-14);
        match s {
            Domain::Ball(b) => assert!((b.radius - 1.0).abs() < 1e-14),
            _ => panic!(),
        }
        let d = Domain::ball([0.0; 3], 1.0).unwrap();
        let (_, rho) = d.rescale_to_unit_volume().unwrap();
        assert!((rho - 1.0).abs() < 1e-14);

        let c00 = 0.1 * (4.0 * PI).sqrt();
        let d = Domain::nearly_spherical(1.0, &[(0, 0, c00)]).unwrap();
        let (s, rho) = d.rescale_to_unit_volume().unwrap();
        assert!((rho - 1.0 / 1.1).abs() < 1e-10);
        assert!((s.volume() - UNIT_BALL_VOLUME).abs() < 1e-12 * UNIT_BALL_VOLUME);
    }

    #[test]
    fn rescale_is_idempotent() {
        let c00 = 0.07 * (4.0 * PI).sqrt();
        let d = Domain::nearly_spherical(1.3, &[(0, 0, c00), (2, 0, 0.1)]).unwrap();
        let (once, _) = d.rescale_to_unit_volume().unwrap();
        let (twice, rho2) = once.rescale_to_unit_volume().unwrap();
        assert!((rho2 - 1.0).abs() < 1e-12);
        assert!((twice.volume() - once.volume()).abs() < 1e-12);
    }

    #[test]
    fn fraenkel_of_balls_is_zero() {
        let d = Domain::ball([0.0; 3], 1.0).unwrap();
        assert!(d.fraenkel_asymmetry() < 1e-9);
        let d = Domain::ball([4.0, -2.0, 7.5], 1.0).unwrap();
        assert!(d.fraenkel_asymmetry() < 1e-9);
    }

    #[test]
    fn fraenkel_of_distant_half_balls_is_one() {
        // two disjoint half-volume balls at distance 10: the best ball covers
        // one component entirely, |Omega ^ B| = |B_1|
        let r = 0.5f64.powf(1.0 / 3.0);
        let balls = vec![
            Ball::new([0.0; 3], r).unwrap(),
            Ball::new([10.0, 0.0, 0.0], r).unwrap(),
        ];
        let d = Domain::ball_union(balls).unwrap();
        let a = d.fraenkel_asymmetry();
        assert!((a - 1.0).abs() < 1e-3, "asymmetry {a}");
    }

    #[test]
    fn diameters() {
        let d = Domain::ball([0.0; 3], 1.0).unwrap();
        assert!((d.diameter() - 2.0).abs() < 1e-14);
        let balls = vec![
            Ball::new([0.0; 3], 1.0).unwrap(),
            Ball::new([10.0, 0.0, 0.0], 1.0).unwrap(),
        ];
        let d = Domain::ball_union(balls).unwrap();
        assert!((d.diameter() - 12.0).abs() < 1e-14);
        let d = Domain::nearly_spherical(1.0, &[]).unwrap();
        assert!((d.diameter() - 2.0).abs() < 2e-3);
    }

    #[test]
    fn invalid_domains_are_rejected() {
        assert!(Domain::ball([0.0; 3], 0.0).is_err());
        assert!(Domain::ball_union(vec![
            Ball::new([0.0; 3], 1.0).unwrap(),
            Ball::new([1.5, 0.0, 0.0], 1.0).unwrap(),
        ])
        .is_err());
        // phi = 0.6 constant violates the star-shape bound
        let c00 = 0.6 * (4.0 * PI).sqrt();
        assert!(Domain::nearly_spherical(1.0, &[(0, 0, c00)]).is_err());
        assert!(Domain::nearly_spherical(1.0, &[(1, 2, 0.1)]).is_err());
    }

    #[test]
    fn lens_volume_limits() {
        assert_eq!(lens_volume(1.0, 1.0, 3.0), 0.0);
        assert!((lens_volume(1.0, 2.0, 0.5) - UNIT_BALL_VOLUME).abs() < 1e-14);
        // half-overlap sanity: symmetric lens at d = r is 5/16 of a ball
        let v = lens_volume(1.0, 1.0, 1.0);
        assert!((v - 5.0 / 16.0 * 2.0 * UNIT_BALL_VOLUME / 2.0).abs() < 1e-12);
    }

    #[test]
    fn mask_connectivity() {
        let grid = CartesianGrid::new(1.0, 8).unwrap();
        let mut ind = vec![false; grid.len()];
        ind[grid.index(0, 0, 0)] = true;
        ind[grid.index(0, 0, 1)] = true;
        let d = Domain::grid_mask(grid, ind.clone()).unwrap();
        assert!(d.is_connected());
        ind[grid.index(7, 7, 7)] = true;
        let d = Domain::grid_mask(grid, ind).unwrap();
        assert!(!d.is_connected());
    }
}

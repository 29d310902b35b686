//! Ground states of the constrained Hartree energy
//! `E_q(u) = int |grad u|^2 + (q/2) D(u^2, u^2)` with `||u||_{L^2} = 1`,
//! solved by damped self-consistent field (SCF) iteration on the
//! Euler-Lagrange eigenproblem `-Delta u + q v_u u = lambda_q u`.
//!
//! Origin- or center-aligned balls use the radial reduction `w = r u`; all
//! other domains use a cut-cell finite-difference operator on a Cartesian
//! grid, with boundary fractions found by bisection so the discrete energy
//! varies smoothly with the domain shape.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::coulomb::potential;
use crate::fields::{EnergyBreakdown, Grid, ScalarField};
use crate::geometry::{CartesianGrid, Domain, RadialGrid};
use crate::linalg::{lobpcg_lowest, lowest_eig_tridiag};
use crate::quad::{pairwise_dot, pairwise_sum};
use crate::{Error, Result};

/// SCF solver parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// L^2 norm of the state update below which the iteration may stop.
    pub tol_state: f64,
    /// Relative energy stagnation tolerance.
    pub tol_lambda: f64,
    /// Euler-Lagrange residual target (L^2 norm).
    pub tol_residual: f64,
    /// Mixing parameter theta in (0, 1]; halved on energy increase.
    pub damping: f64,
    /// Maximum SCF iterations per continuation stage.
    pub max_iter: usize,
    /// Step size of the projected gradient-flow fallback.
    pub fallback_step: f64,
    /// Nodes of the radial grid used for balls.
    pub radial_n: usize,
    /// Cells per axis of the Cartesian grid used for general domains.
    pub cartesian_n: usize,
    /// Relative tolerance of the inner linear eigensolve.
    pub eig_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_state: 1e-8,
            tol_lambda: 1e-9,
            tol_residual: 1e-6,
            damping: 0.5,
            max_iter: 500,
            fallback_step: 1e-3,
            radial_n: 2049,
            cartesian_n: 64,
            eig_tol: 1e-10,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        let positive = self.tol_state > 0.0
            && self.tol_lambda > 0.0
            && self.tol_residual > 0.0
            && self.damping > 0.0
            && self.fallback_step > 0.0
            && self.eig_tol > 0.0
            && self.max_iter > 0;
        if !positive || self.damping > 1.0 {
            return Err(Error::Usage(
                "solver tolerances must be positive and damping in (0, 1]".to_string(),
            ));
        }
        if self.radial_n < 64 || self.cartesian_n < 8 {
            return Err(Error::Usage("solver grids are too coarse".to_string()));
        }
        Ok(())
    }
}

/// A converged constrained minimizer.
#[derive(Debug, Clone)]
pub struct GroundState {
    /// Nonnegative state with unit L^2 norm.
    pub u: ScalarField,
    /// Nonlinear eigenvalue `lambda_q = dirichlet + q coulomb`.
    pub lambda_q: f64,
    pub breakdown: EnergyBreakdown,
    pub iterations: usize,
    /// Final Euler-Lagrange residual in the L^2 norm.
    pub residual: f64,
    /// True when the domain is connected, in which case the minimizer is
    /// unique.
    pub unique: bool,
}

impl GroundState {
    /// `E_q(u)`.
    pub fn energy(&self, q: f64) -> f64 {
        self.breakdown.total(q)
    }
}

/// Outcome of the superharmonicity diagnostic: the minimum over the support
/// of `c(x) = lambda_q - q v_u(x)`, which must be nonnegative for `u` to be
/// superharmonic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperharmonicityReport {
    pub min_c: f64,
    pub holds: bool,
}

/// Minimize `E_q(., d)` over unit-norm states.
pub fn solve_ground_state(d: &Domain, q: f64, cfg: &SolverConfig) -> Result<GroundState> {
    solve_ground_state_warm(d, q, cfg, None)
}

/// As [`solve_ground_state`], warm-started from a previous state on a
/// compatible grid when one is supplied.
pub fn solve_ground_state_warm(
    d: &Domain,
    q: f64,
    cfg: &SolverConfig,
    warm: Option<&ScalarField>,
) -> Result<GroundState> {
    cfg.validate()?;
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::Usage("charge q must be a finite nonnegative number".to_string()));
    }
    if !(d.volume() > 0.0) {
        return Err(Error::InvalidDomain("domain has zero volume".to_string()));
    }
    match d {
        // a lone ball reduces to the radial problem about its own center
        Domain::Ball(b) => {
            let g = RadialGrid::new(b.radius, cfg.radial_n)?;
            let warm_w = warm.and_then(|f| match f.grid() {
                Grid::Radial(fg) if fg == &g => Some(w_from_field(&g, f)),
                _ => None,
            });
            radial_scf(&g, q, cfg, warm_w, d.is_connected())
        }
        Domain::GridMask(m) => solve_on_grid(d, *m.grid(), q, cfg, warm),
        _ => {
            let grid = cartesian_grid_for(d, cfg.cartesian_n)?;
            solve_on_grid(d, grid, q, cfg, warm)
        }
    }
}

/// `E_q(d)` from a full ground-state solve.
pub fn energy(d: &Domain, q: f64, cfg: &SolverConfig) -> Result<f64> {
    Ok(solve_ground_state(d, q, cfg)?.energy(q))
}

/// A Cartesian box that encloses the domain with a small margin.
pub fn cartesian_grid_for(d: &Domain, n: usize) -> Result<CartesianGrid> {
    if let Domain::GridMask(m) = d {
        return Ok(*m.grid());
    }
    let r = d.bounding_radius();
    CartesianGrid::new(r * (1.0 + 8.0 / n as f64), n)
}

/// Solve on an explicitly chosen Cartesian grid (the grid is kept fixed
/// during shape descent so that energies of nearby shapes are comparable).
pub fn solve_on_grid(
    d: &Domain,
    grid: CartesianGrid,
    q: f64,
    cfg: &SolverConfig,
    warm: Option<&ScalarField>,
) -> Result<GroundState> {
    cfg.validate()?;
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::Usage("charge q must be a finite nonnegative number".to_string()));
    }
    let op = CutCellOp::build(d, grid)?;
    let warm_x = warm.and_then(|f| match f.grid() {
        Grid::Cartesian(fg) if fg == &grid => Some(op.from_field(f)),
        _ => None,
    });
    cartesian_scf(&op, q, cfg, warm_x, d.is_connected())
}

/// `E_q` of interpolated states `sigma_t = ((1-t) u^2 + t v^2)^{1/2}`,
/// sampled at the given `t` values.
pub fn hidden_convexity_profile(
    u: &ScalarField,
    v: &ScalarField,
    q: f64,
    ts: &[f64],
) -> Result<Vec<f64>> {
    if u.grid() != v.grid() {
        return Err(Error::Usage("profile endpoints live on different grids".to_string()));
    }
    for f in [u, v] {
        if (f.l2_norm_sq() - 1.0).abs() > 1e-6 {
            return Err(Error::Usage("profile endpoints must have unit L^2 norm".to_string()));
        }
        if f.values().iter().any(|&x| x < 0.0) {
            return Err(Error::Usage("profile endpoints must be nonnegative".to_string()));
        }
    }
    let mask: Vec<bool> = u
        .mask()
        .iter()
        .zip(v.mask().iter())
        .map(|(&a, &b)| a || b)
        .collect();
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Usage("profile samples must lie in [0, 1]".to_string()));
        }
        let vals: Vec<f64> = u
            .values()
            .iter()
            .zip(v.values())
            .map(|(&a, &b)| libm::sqrt(((1.0 - t) * a * a + t * b * b).max(0.0)))
            .collect();
        let sigma = ScalarField::new(*u.grid(), vals, mask.clone())?;
        out.push(energy_of_state(&sigma, q)?);
    }
    Ok(out)
}

/// `E_q(u)` of an arbitrary state by direct quadrature.
pub fn energy_of_state(u: &ScalarField, q: f64) -> Result<f64> {
    let density = squared(u);
    let coul = density.inner(&potential(&density)?)?;
    Ok(u.dirichlet_energy() + 0.5 * q * coul)
}

/// Minimum of `c(x) = lambda_q - q v_u(x)` over the support of `u`.
pub fn superharmonicity_check(gs: &GroundState, q: f64) -> Result<SuperharmonicityReport> {
    let density = squared(&gs.u);
    let v = potential(&density)?;
    let mut min_c = f64::INFINITY;
    for (i, &m) in gs.u.mask().iter().enumerate() {
        if m {
            min_c = min_c.min(gs.lambda_q - q * v.values()[i]);
        }
    }
    Ok(SuperharmonicityReport {
        min_c,
        holds: min_c >= -1e-8,
    })
}

fn squared(u: &ScalarField) -> ScalarField {
    let vals: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    ScalarField::from_parts(*u.grid(), vals, u.mask().to_vec())
}

/// Continuation ladder in q: large couplings are reached through a sequence
/// of warm-started solves.
fn q_ladder(q: f64) -> Vec<f64> {
    if q <= 2.0 {
        return vec![q];
    }
    let mut qs = vec![2.0];
    let mut cur = 2.0;
    while cur * 4.0 < q {
        cur *= 4.0;
        qs.push(cur);
    }
    qs.push(q);
    qs
}

// ---------------------------------------------------------------------------
// radial path
// ---------------------------------------------------------------------------

fn w_from_field(g: &RadialGrid, f: &ScalarField) -> Vec<f64> {
    (0..g.n()).map(|j| g.r(j) * f.values()[j]).collect()
}

/// Field `u = w / r` from the substituted unknown, with the origin value
/// filled in by parabolic extrapolation (`u'(0) = 0`).
fn field_from_w(g: &RadialGrid, w: &[f64]) -> ScalarField {
    let n = g.n();
    let mut vals = vec![0.0; n];
    for j in 1..n - 1 {
        vals[j] = w[j] / g.r(j);
    }
    vals[0] = (4.0 * vals[1] - vals[2]) / 3.0;
    let mask: Vec<bool> = (0..n).map(|j| j != n - 1).collect();
    ScalarField::from_parts(Grid::Radial(*g), vals, mask)
}

/// Scale a full-length `w` so the corresponding `u` has unit L^2 mass:
/// `4 pi h sum w_j^2 = 1` (endpoints vanish).
fn normalize_w(g: &RadialGrid, w: &mut [f64]) -> Result<()> {
    let s = 4.0 * PI * g.spacing() * pairwise_dot(w, w);
    if !(s > 0.0) {
        return Err(Error::Numerical {
            message: "SCF state collapsed to zero".to_string(),
            residual: f64::INFINITY,
        });
    }
    let inv = 1.0 / libm::sqrt(s);
    for v in w.iter_mut() {
        *v *= inv;
    }
    Ok(())
}

struct RadialEval {
    u: ScalarField,
    v: ScalarField,
    dirichlet: f64,
    coulomb: f64,
}

impl RadialEval {
    fn energy(&self, q: f64) -> f64 {
        self.dirichlet + 0.5 * q * self.coulomb
    }

    fn lambda(&self, q: f64) -> f64 {
        self.dirichlet + q * self.coulomb
    }
}

fn eval_radial(g: &RadialGrid, w: &[f64]) -> Result<RadialEval> {
    let u = field_from_w(g, w);
    let density = squared(&u);
    let v = potential(&density)?;
    let coulomb = density.inner(&v)?;
    Ok(RadialEval {
        dirichlet: u.dirichlet_energy(),
        coulomb,
        u,
        v,
    })
}

/// Euler-Lagrange residual `|| (K + q v) w - lambda w ||_{L^2}` on the
/// interior nodes.
fn radial_residual(g: &RadialGrid, w: &[f64], v: &[f64], q: f64, lambda: f64) -> f64 {
    let n = g.n();
    let h = g.spacing();
    let inv_h2 = 1.0 / (h * h);
    let terms: Vec<f64> = (1..n - 1)
        .map(|j| {
            let kin = (2.0 * w[j] - w[j - 1] - w[j + 1]) * inv_h2;
            let r = kin + q * v[j] * w[j] - lambda * w[j];
            r * r
        })
        .collect();
    libm::sqrt(4.0 * PI * h * pairwise_sum(&terms))
}

fn radial_scf(
    g: &RadialGrid,
    q_target: f64,
    cfg: &SolverConfig,
    warm: Option<Vec<f64>>,
    connected: bool,
) -> Result<GroundState> {
    let n = g.n();
    let h = g.spacing();
    let m = n - 2;
    let off = vec![-1.0 / (h * h); m - 1];

    // initial state: warm start or the q = 0 eigenfunction
    let mut w = match warm {
        Some(mut w0) if w0.len() == n && w0.iter().any(|&x| x != 0.0) => {
            w0[0] = 0.0;
            w0[n - 1] = 0.0;
            normalize_w(g, &mut w0)?;
            w0
        }
        _ => {
            let diag = vec![2.0 / (h * h); m];
            let (_, x, _) = lowest_eig_tridiag(&diag, &off, None, cfg.eig_tol, 10_000)?;
            let mut w0 = vec![0.0; n];
            w0[1..n - 1].copy_from_slice(&x);
            normalize_w(g, &mut w0)?;
            w0
        }
    };

    let mut total_iters = 0usize;
    let ladder = q_ladder(q_target);
    let mut last: Option<(RadialEval, f64)> = None;
    for (stage, &q) in ladder.iter().enumerate() {
        let final_stage = stage == ladder.len() - 1;
        let tol_res = if final_stage {
            cfg.tol_residual
        } else {
            (cfg.tol_residual * 1e2).min(1e-4)
        };
        let mut cur = eval_radial(g, &w)?;
        let mut e_prev = f64::INFINITY;
        let mut converged = false;
        for _ in 0..cfg.max_iter {
            total_iters += 1;
            let lambda = cur.lambda(q);
            let res = radial_residual(g, &w, cur.v.values(), q, lambda);
            let e = cur.energy(q);
            if res <= tol_res && (e_prev - e).abs() <= cfg.tol_lambda * e.abs().max(1.0) {
                converged = true;
                break;
            }
            // linear eigenproblem with the current potential, warm-started
            let diag: Vec<f64> = (1..n - 1)
                .map(|j| 2.0 / (h * h) + q * cur.v.values()[j])
                .collect();
            let (_, x, _) = lowest_eig_tridiag(&diag, &off, Some(&w[1..n - 1]), cfg.eig_tol, 10_000)?;
            let mut w_lin = vec![0.0; n];
            w_lin[1..n - 1].copy_from_slice(&x);
            normalize_w(g, &mut w_lin)?;

            // damped mixing with energy safeguard
            let mut theta = cfg.damping;
            let accepted;
            loop {
                let mut w_mix: Vec<f64> = w
                    .iter()
                    .zip(w_lin.iter())
                    .map(|(&a, &b)| (1.0 - theta) * a + theta * b)
                    .collect();
                normalize_w(g, &mut w_mix)?;
                let trial = eval_radial(g, &w_mix)?;
                if trial.energy(q) <= e + 1e-13 * e.abs().max(1.0) || theta < 1.0 / 64.0 {
                    accepted = (w_mix, trial);
                    break;
                }
                theta *= 0.5;
            }
            let (w_mix, trial) = accepted;
            if trial.energy(q) > e + 1e-12 * e.abs().max(1.0) {
                // projected gradient flow fallback
                let inv_h2 = 1.0 / (h * h);
                let mut w_new = w.clone();
                for j in 1..n - 1 {
                    let kin = (2.0 * w[j] - w[j - 1] - w[j + 1]) * inv_h2;
                    let grad = kin + q * cur.v.values()[j] * w[j] - lambda * w[j];
                    w_new[j] -= cfg.fallback_step * grad;
                }
                normalize_w(g, &mut w_new)?;
                w = w_new;
                cur = eval_radial(g, &w)?;
            } else {
                w = w_mix;
                cur = trial;
            }
            e_prev = e;
        }
        if !converged && q == 0.0 {
            converged = true; // the linear problem is solved in one pass
        }
        if !converged {
            let lambda = cur.lambda(q);
            let res = radial_residual(g, &w, cur.v.values(), q, lambda);
            if res > tol_res {
                return Err(Error::Numerical {
                    message: "SCF iteration did not converge".to_string(),
                    residual: res,
                });
            }
        }
        last = Some((cur, q));
    }
    let (cur, q) = last.unwrap();
    let lambda = cur.lambda(q);
    let residual = radial_residual(g, &w, cur.v.values(), q, lambda);
    let u = cur.u.normalize()?;
    Ok(GroundState {
        breakdown: EnergyBreakdown {
            dirichlet: cur.dirichlet,
            coulomb: cur.coulomb,
            l2norm_sq: u.l2_norm_sq(),
        },
        u,
        lambda_q: lambda,
        iterations: total_iters,
        residual,
        unique: connected,
    })
}

// ---------------------------------------------------------------------------
// Cartesian cut-cell path
// ---------------------------------------------------------------------------

const NO_NEIGHBOR: usize = usize::MAX;
/// Boundary fractions are clamped away from zero to keep the operator
/// well-conditioned when the boundary grazes a node.
const MIN_FRACTION: f64 = 1e-2;

/// Symmetric cut-cell discretization of `-Delta` with homogeneous Dirichlet
/// data on the domain boundary: for a face cut at fraction `theta` of the
/// grid spacing, the ghost value `u (1 - 1/theta)` obtained by linear
/// extrapolation through the boundary zero contributes `1/theta` to the
/// diagonal. The matrix stays symmetric positive definite and the energy
/// depends smoothly on the boundary position.
struct CutCellOp {
    grid: CartesianGrid,
    /// Grid indices of the unknowns (nodes inside the domain).
    active: Vec<usize>,
    /// Active index of each of the 6 neighbors, or NO_NEIGHBOR.
    neighbors: Vec<[usize; 6]>,
    kin_diag: Vec<f64>,
}

impl CutCellOp {
    fn build(d: &Domain, grid: CartesianGrid) -> Result<Self> {
        let n = grid.n();
        let h = grid.spacing();
        let mut active = Vec::new();
        let mut pos = vec![NO_NEIGHBOR; grid.len()];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let id = grid.index(i, j, k);
                    if d.contains(grid.node(i, j, k)) {
                        pos[id] = active.len();
                        active.push(id);
                    }
                }
            }
        }
        if active.is_empty() {
            return Err(Error::InvalidDomain(
                "domain contains no grid nodes; refine the grid".to_string(),
            ));
        }
        let inv_h2 = 1.0 / (h * h);
        let mut neighbors = Vec::with_capacity(active.len());
        let mut kin_diag = Vec::with_capacity(active.len());
        let nn = n as isize;
        for &id in &active {
            let k = id % n;
            let j = (id / n) % n;
            let i = id / (n * n);
            let x = grid.node(i, j, k);
            let mut nb = [NO_NEIGHBOR; 6];
            let mut diag = 0.0;
            let steps: [[isize; 3]; 6] = [
                [1, 0, 0],
                [-1, 0, 0],
                [0, 1, 0],
                [0, -1, 0],
                [0, 0, 1],
                [0, 0, -1],
            ];
            for (s, step) in steps.iter().enumerate() {
                let (ni, njj, nk) = (i as isize + step[0], j as isize + step[1], k as isize + step[2]);
                let inside_box = ni >= 0 && njj >= 0 && nk >= 0 && ni < nn && njj < nn && nk < nn;
                let nid = if inside_box {
                    let id = grid.index(ni as usize, njj as usize, nk as usize);
                    pos[id]
                } else {
                    NO_NEIGHBOR
                };
                if nid != NO_NEIGHBOR {
                    nb[s] = nid;
                    diag += inv_h2;
                } else {
                    let target = [
                        x[0] + step[0] as f64 * h,
                        x[1] + step[1] as f64 * h,
                        x[2] + step[2] as f64 * h,
                    ];
                    let theta = boundary_fraction(d, x, target);
                    diag += inv_h2 / theta;
                }
            }
            neighbors.push(nb);
            kin_diag.push(diag);
        }
        Ok(CutCellOp {
            grid,
            active,
            neighbors,
            kin_diag,
        })
    }

    fn len(&self) -> usize {
        self.active.len()
    }

    fn apply_kin(&self, x: &[f64], out: &mut [f64]) {
        let inv_h2 = 1.0 / (self.grid.spacing() * self.grid.spacing());
        for (i, nb) in self.neighbors.iter().enumerate() {
            let mut acc = self.kin_diag[i] * x[i];
            for &nid in nb {
                if nid != NO_NEIGHBOR {
                    acc -= inv_h2 * x[nid];
                }
            }
            out[i] = acc;
        }
    }

    /// `h^3 x^T K x`: the discrete Dirichlet energy of the cut-cell form.
    fn dirichlet(&self, x: &[f64]) -> f64 {
        let mut kx = vec![0.0; x.len()];
        self.apply_kin(x, &mut kx);
        let h = self.grid.spacing();
        h * h * h * pairwise_dot(x, &kx)
    }

    fn to_field(&self, x: &[f64]) -> ScalarField {
        let mut vals = vec![0.0; self.grid.len()];
        let mut mask = vec![false; self.grid.len()];
        for (i, &id) in self.active.iter().enumerate() {
            vals[id] = x[i];
            mask[id] = true;
        }
        ScalarField::from_parts(Grid::Cartesian(self.grid), vals, mask)
    }

    fn from_field(&self, f: &ScalarField) -> Vec<f64> {
        self.active.iter().map(|&id| f.values()[id]).collect()
    }
}

/// Fraction `theta in (0, 1]` of the segment from `a` (inside) to `b`
/// (outside) at which the domain boundary is crossed, by bisection.
fn boundary_fraction(d: &Domain, a: [f64; 3], b: [f64; 3]) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let p = [
            a[0] + mid * (b[0] - a[0]),
            a[1] + mid * (b[1] - a[1]),
            a[2] + mid * (b[2] - a[2]),
        ];
        if d.contains(p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).clamp(MIN_FRACTION, 1.0)
}

struct CartesianEval {
    u: ScalarField,
    v: ScalarField,
    v_active: Vec<f64>,
    dirichlet: f64,
    coulomb: f64,
}

impl CartesianEval {
    fn energy(&self, q: f64) -> f64 {
        self.dirichlet + 0.5 * q * self.coulomb
    }

    fn lambda(&self, q: f64) -> f64 {
        self.dirichlet + q * self.coulomb
    }
}

fn normalize_active(op: &CutCellOp, x: &mut [f64]) -> Result<()> {
    let h = op.grid.spacing();
    let s = h * h * h * pairwise_dot(x, x);
    if !(s > 0.0) {
        return Err(Error::Numerical {
            message: "SCF state collapsed to zero".to_string(),
            residual: f64::INFINITY,
        });
    }
    let inv = 1.0 / libm::sqrt(s);
    for v in x.iter_mut() {
        *v *= inv;
    }
    Ok(())
}

fn eval_cartesian(
    op: &CutCellOp,
    x: &[f64],
    v_guess: Option<&ScalarField>,
) -> Result<CartesianEval> {
    let u = op.to_field(x);
    let density = squared(&u);
    let v = crate::coulomb::potential_with_guess(&density, v_guess)?;
    let coulomb = density.inner(&v)?;
    Ok(CartesianEval {
        dirichlet: op.dirichlet(x),
        coulomb,
        v_active: op.from_field(&v),
        v,
        u,
    })
}

fn cartesian_residual(op: &CutCellOp, x: &[f64], v: &[f64], q: f64, lambda: f64) -> f64 {
    let mut kx = vec![0.0; x.len()];
    op.apply_kin(x, &mut kx);
    let terms: Vec<f64> = (0..x.len())
        .map(|i| {
            let r = kx[i] + q * v[i] * x[i] - lambda * x[i];
            r * r
        })
        .collect();
    let h = op.grid.spacing();
    libm::sqrt(h * h * h * pairwise_sum(&terms))
}

fn eigensolve_cartesian(
    op: &CutCellOp,
    v: &[f64],
    q: f64,
    start: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let apply = |x: &[f64], out: &mut [f64]| {
        op.apply_kin(x, out);
        for i in 0..x.len() {
            out[i] += q * v[i] * x[i];
        }
    };
    let diag: Vec<f64> = op
        .kin_diag
        .iter()
        .zip(v.iter())
        .map(|(d, vi)| d + q * vi)
        .collect();
    let (_, x, _, _) = lobpcg_lowest(apply, &diag, Some(start), tol, 20_000)?;
    Ok(x)
}

fn cartesian_scf(
    op: &CutCellOp,
    q_target: f64,
    cfg: &SolverConfig,
    warm: Option<Vec<f64>>,
    connected: bool,
) -> Result<GroundState> {
    let m = op.len();
    let eig_tol = cfg.eig_tol.max(0.02 * cfg.tol_residual);
    let mut x = match warm {
        Some(mut x0) if x0.len() == m && x0.iter().any(|&v| v != 0.0) => {
            normalize_active(op, &mut x0)?;
            x0
        }
        _ => {
            let start = vec![1.0; m];
            let mut x0 = eigensolve_cartesian(op, &vec![0.0; m], 0.0, &start, eig_tol)?;
            normalize_active(op, &mut x0)?;
            x0
        }
    };

    let mut total_iters = 0usize;
    let ladder = q_ladder(q_target);
    let mut last: Option<(CartesianEval, f64)> = None;
    for (stage, &q) in ladder.iter().enumerate() {
        let final_stage = stage == ladder.len() - 1;
        let tol_res = if final_stage {
            cfg.tol_residual
        } else {
            (cfg.tol_residual * 1e2).min(1e-4)
        };
        let mut cur = eval_cartesian(op, &x, last.as_ref().map(|(e, _): &(CartesianEval, f64)| &e.v))?;
        let mut e_prev = f64::INFINITY;
        let mut converged = false;
        for _ in 0..cfg.max_iter {
            total_iters += 1;
            let lambda = cur.lambda(q);
            let res = cartesian_residual(op, &x, &cur.v_active, q, lambda);
            let e = cur.energy(q);
            if res <= tol_res && (e_prev - e).abs() <= cfg.tol_lambda * e.abs().max(1.0) {
                converged = true;
                break;
            }
            let mut x_lin = eigensolve_cartesian(op, &cur.v_active, q, &x, eig_tol)?;
            normalize_active(op, &mut x_lin)?;
            let mut theta = cfg.damping;
            let accepted;
            loop {
                let mut x_mix: Vec<f64> = x
                    .iter()
                    .zip(x_lin.iter())
                    .map(|(&a, &b)| (1.0 - theta) * a + theta * b)
                    .collect();
                normalize_active(op, &mut x_mix)?;
                let trial = eval_cartesian(op, &x_mix, Some(&cur.v))?;
                if trial.energy(q) <= e + 1e-13 * e.abs().max(1.0) || theta < 1.0 / 64.0 {
                    accepted = (x_mix, trial);
                    break;
                }
                theta *= 0.5;
            }
            let (x_mix, trial) = accepted;
            if trial.energy(q) > e + 1e-12 * e.abs().max(1.0) {
                // projected gradient flow fallback
                let mut kx = vec![0.0; m];
                op.apply_kin(&x, &mut kx);
                let mut x_new = x.clone();
                for i in 0..m {
                    let grad = kx[i] + q * cur.v_active[i] * x[i] - lambda * x[i];
                    x_new[i] -= cfg.fallback_step * grad;
                }
                normalize_active(op, &mut x_new)?;
                x = x_new;
                cur = eval_cartesian(op, &x, Some(&cur.v))?;
            } else {
                x = x_mix;
                cur = trial;
            }
            e_prev = e;
        }
        if !converged && q == 0.0 {
            converged = true;
        }
        if !converged {
            let lambda = cur.lambda(q);
            let res = cartesian_residual(op, &x, &cur.v_active, q, lambda);
            if res > tol_res {
                return Err(Error::Numerical {
                    message: "SCF iteration did not converge".to_string(),
                    residual: res,
                });
            }
        }
        last = Some((cur, q));
    }
    let (cur, q) = last.unwrap();
    let lambda = cur.lambda(q);
    let residual = cartesian_residual(op, &x, &cur.v_active, q, lambda);
    let u = cur.u.normalize()?;
    Ok(GroundState {
        breakdown: EnergyBreakdown {
            dirichlet: cur.dirichlet,
            coulomb: cur.coulomb,
            l2norm_sq: u.l2_norm_sq(),
        },
        u,
        lambda_q: lambda,
        iterations: total_iters,
        residual,
        unique: connected,
    })
}

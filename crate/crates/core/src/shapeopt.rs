//! Volume-constrained shape descent over nearly-spherical domains, the
//! quantitative Faber-Krahn deficit, and the boundary-gradient constancy
//! diagnostic for the free-boundary optimality condition.
//!
//! The descent works in the spherical-harmonic coefficient space of the
//! boundary graph. Gradients are central finite differences; every trial
//! shape is rescaled to unit volume before its energy is solved, and the
//! Cartesian grid is kept fixed across the whole descent so energies of
//! nearby shapes are comparable.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::fields::ScalarField;
use crate::geometry::{CartesianGrid, Domain, NearlySpherical, UNIT_BALL_VOLUME};
use crate::hartree::{solve_ground_state, solve_on_grid, GroundState, SolverConfig};
use crate::quad::AngularGrid;
use crate::{Error, Result};

/// Shape-descent parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentOptions {
    /// Highest spherical-harmonic degree kept; modes with `l <= 1` are
    /// projected out (volume is fixed by rescaling, translations are
    /// energy-neutral).
    pub l_max: u32,
    /// Central finite-difference step in coefficient space.
    pub fd_step: f64,
    /// Terminate when the finite-difference gradient norm falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Initial line-search displacement in coefficient space.
    pub initial_step: f64,
    /// Cells per axis of the fixed Cartesian grid.
    pub grid_n: usize,
    pub solver: SolverConfig,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            l_max: 4,
            fd_step: 1e-3,
            grad_tol: 1e-4,
            max_iter: 40,
            initial_step: 0.05,
            grid_n: 64,
            solver: SolverConfig::default(),
        }
    }
}

impl DescentOptions {
    fn validate(&self) -> Result<()> {
        if self.l_max < 2 {
            return Err(Error::Usage("descent needs l_max >= 2".to_string()));
        }
        if !(self.fd_step > 0.0 && self.grad_tol > 0.0 && self.initial_step > 0.0)
            || self.max_iter == 0
        {
            return Err(Error::Usage("descent steps and tolerances must be positive".to_string()));
        }
        Ok(())
    }

    /// Looser solver settings for finite-difference probes: the energy is a
    /// variational quantity, so a modest Euler-Lagrange residual already
    /// gives quadratically small energy errors.
    fn probe_solver(&self) -> SolverConfig {
        SolverConfig {
            tol_residual: self.solver.tol_residual.max(1e-5),
            tol_state: self.solver.tol_state.max(1e-7),
            // energy stagnation below the eigensolve noise floor is
            // unreachable and only burns iterations
            tol_lambda: self.solver.tol_lambda.max(1e-7),
            // at the small charges where descent is run the Coulomb
            // coupling is weak; undamped mixing converges in a few steps
            // and the energy-increase safeguard still halves theta if
            // needed
            damping: 1.0,
            ..self.solver
        }
    }
}

/// One accepted descent iterate.
#[derive(Debug, Clone)]
pub struct DescentRecord {
    pub coeffs: Vec<(u32, i32, f64)>,
    pub energy: f64,
    pub volume: f64,
    pub asymmetry: f64,
    pub step: f64,
}

/// Accepted iterates plus the final gradient norm.
#[derive(Debug, Clone)]
pub struct DescentTrace {
    pub records: Vec<DescentRecord>,
    pub grad_norm: f64,
    /// True when the gradient norm reached the tolerance (as opposed to
    /// running out of iterations or line-search progress).
    pub converged: bool,
}

/// Faber-Krahn diagnostic of a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkReport {
    /// `|Omega|^{2/3} lambda_0(Omega) - |B_1|^{2/3} lambda_0(B_1)`.
    pub deficit: f64,
    pub asymmetry: f64,
}

/// Boundary `|grad u|` summary along rays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientStats {
    pub mean: f64,
    pub rel_stddev: f64,
}

fn modes(l_max: u32) -> Vec<(u32, i32)> {
    let mut out = Vec::new();
    for l in 2..=l_max {
        for m in -(l as i32)..=(l as i32) {
            out.push((l, m));
        }
    }
    out
}

fn coeff_list(modes: &[(u32, i32)], c: &[f64]) -> Vec<(u32, i32, f64)> {
    modes
        .iter()
        .zip(c.iter())
        .map(|(&(l, m), &v)| (l, m, v))
        .collect()
}

/// Unit-volume domain for a coefficient vector.
fn domain_of(modes: &[(u32, i32)], c: &[f64]) -> Result<Domain> {
    let d = Domain::nearly_spherical(1.0, &coeff_list(modes, c))?;
    Ok(d.rescale_to_unit_volume()?.0)
}

/// Finite-difference descent on the spherical-harmonic coefficients of a
/// nearly-spherical boundary graph, at fixed unit volume.
pub fn shape_descent(
    start: &NearlySpherical,
    q: f64,
    opts: &DescentOptions,
) -> Result<(NearlySpherical, DescentTrace)> {
    opts.validate()?;
    let modes = modes(opts.l_max);
    let mut c: Vec<f64> = modes
        .iter()
        .map(|&(l, m)| {
            start
                .coeffs()
                .iter()
                .find(|&&(sl, sm, _)| sl == l && sm == m)
                .map(|&(_, _, v)| v)
                .unwrap_or(0.0)
        })
        .collect();

    // one fixed grid for the whole descent
    let d0 = domain_of(&modes, &c)?;
    let half = d0.bounding_radius().max(1.0) * (1.0 + 12.0 / opts.grid_n as f64) * 1.15;
    let grid = CartesianGrid::new(half, opts.grid_n)?;
    let probe_cfg = opts.probe_solver();

    let mut warm: Option<ScalarField> = None;
    let eval = |c: &[f64], warm: &mut Option<ScalarField>| -> Result<(f64, Domain)> {
        let d = domain_of(&modes, c)?;
        let gs = solve_on_grid(&d, grid, q, &probe_cfg, warm.as_ref())?;
        let e = gs.energy(q);
        *warm = Some(gs.u);
        Ok((e, d))
    };

    let (mut e_cur, d_cur) = eval(&c, &mut warm)?;
    let mut records = Vec::new();
    records.push(DescentRecord {
        coeffs: coeff_list(&modes, &c),
        energy: e_cur,
        volume: d_cur.volume(),
        asymmetry: d_cur.fraenkel_asymmetry(),
        step: 0.0,
    });

    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    let mut step = opts.initial_step;
    for _ in 0..opts.max_iter {
        // central differences; the warm state carries over between probes
        let mut g = Vec::with_capacity(modes.len());
        for i in 0..modes.len() {
            let mut cp = c.clone();
            cp[i] += opts.fd_step;
            let (ep, _) = eval(&cp, &mut warm)?;
            cp[i] = c[i] - opts.fd_step;
            let (em, _) = eval(&cp, &mut warm)?;
            g.push((ep - em) / (2.0 * opts.fd_step));
        }
        grad_norm = libm::sqrt(g.iter().map(|x| x * x).sum::<f64>());
        if grad_norm <= opts.grad_tol {
            converged = true;
            break;
        }
        let dir: Vec<f64> = g.iter().map(|x| -x / grad_norm).collect();
        let mut accepted = false;
        let mut s = step;
        for _ in 0..10 {
            let trial: Vec<f64> = c.iter().zip(dir.iter()).map(|(&a, &d)| a + s * d).collect();
            match eval(&trial, &mut warm) {
                Ok((e_trial, d_trial)) if e_trial < e_cur - 1e-12 => {
                    c = trial;
                    e_cur = e_trial;
                    records.push(DescentRecord {
                        coeffs: coeff_list(&modes, &c),
                        energy: e_cur,
                        volume: d_trial.volume(),
                        asymmetry: d_trial.fraenkel_asymmetry(),
                        step: s,
                    });
                    accepted = true;
                    break;
                }
                _ => s *= 0.5,
            }
        }
        if !accepted {
            // no descent direction at line-search resolution: stationary
            converged = grad_norm <= 10.0 * opts.grad_tol;
            break;
        }
        step = (s * 1.5).min(opts.initial_step);
    }

    let final_domain = domain_of(&modes, &c)?;
    let ns = match final_domain {
        Domain::NearlySpherical(ns) => ns,
        _ => unreachable!(),
    };
    Ok((
        ns,
        DescentTrace {
            records,
            grad_norm,
            converged,
        },
    ))
}

/// Scale-invariant Faber-Krahn deficit with the ball reference solved by the
/// same discretization, so systematic eigenvalue bias largely cancels.
pub fn fk_deficit(d: &Domain, cfg: &SolverConfig) -> Result<FkReport> {
    let (du, _) = d.rescale_to_unit_volume()?;
    let asymmetry = du.fraenkel_asymmetry();
    let b1 = Domain::ball([0.0; 3], 1.0)?;
    let scale = libm::pow(UNIT_BALL_VOLUME, 2.0 / 3.0);
    let deficit = match &du {
        Domain::Ball(_) => {
            let lam = solve_ground_state(&du, 0.0, cfg)?.lambda_q;
            let lam_b = solve_ground_state(&b1, 0.0, cfg)?.lambda_q;
            scale * (lam - lam_b)
        }
        _ => {
            let n = cfg.cartesian_n;
            let half = du.bounding_radius().max(1.0) * (1.0 + 8.0 / n as f64);
            let grid = CartesianGrid::new(half, n)?;
            let lam = solve_on_grid(&du, grid, 0.0, cfg, None)?.lambda_q;
            let lam_b = solve_on_grid(&b1, grid, 0.0, cfg, None)?.lambda_q;
            scale * (lam - lam_b)
        }
    };
    Ok(FkReport { deficit, asymmetry })
}

/// Sample `|grad u|` just inside the boundary along rays from the origin,
/// as a discrete proxy for the boundary gradient density: with `u = 0` on
/// the boundary, `(4 u(R - delta) - u(R - 2 delta)) / (2 delta)` is a
/// second-order one-sided derivative.
pub fn boundary_gradient_statistics(gs: &GroundState, d: &Domain) -> Result<GradientStats> {
    let radius_at: &dyn Fn([f64; 3]) -> Option<f64> = match d {
        Domain::NearlySpherical(ns) => &move |dir| Some(ns.radius_at(dir)),
        Domain::Ball(b) if b.center == [0.0; 3] => &move |_| Some(b.radius),
        _ => {
            return Err(Error::Usage(
                "boundary statistics need a star-shaped domain about the origin".to_string(),
            ))
        }
    };
    let delta = gs.u.grid().spacing();
    let angular = AngularGrid::new(12, 24);
    let mut samples = Vec::new();
    for dir in &angular.dirs {
        let r = match radius_at(*dir) {
            Some(r) => r,
            None => continue,
        };
        if r <= 2.5 * delta {
            continue;
        }
        let u1 = gs.u.sample([dir[0] * (r - delta), dir[1] * (r - delta), dir[2] * (r - delta)]);
        let u2 = gs.u.sample([
            dir[0] * (r - 2.0 * delta),
            dir[1] * (r - 2.0 * delta),
            dir[2] * (r - 2.0 * delta),
        ]);
        let mu = (4.0 * u1 - u2) / (2.0 * delta);
        if mu.is_finite() {
            samples.push(mu);
        }
    }
    if samples.len() < 16 {
        return Err(Error::Diagnostics(
            "too few boundary samples for gradient statistics".to_string(),
        ));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    if mean <= 0.0 {
        return Err(Error::Diagnostics(
            "boundary gradient samples have nonpositive mean".to_string(),
        ));
    }
    Ok(GradientStats {
        mean,
        rel_stddev: libm::sqrt(var) / mean,
    })
}

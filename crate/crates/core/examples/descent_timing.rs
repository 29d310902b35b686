//! Timing harness for the shape-descent inner loop: one cold 64^3 solve
//! followed by warm finite-difference-style probe solves.

use std::time::Instant;

use chargeshape_core::geometry::{CartesianGrid, Domain};
use chargeshape_core::hartree::{solve_on_grid, SolverConfig};

fn domain(c20: f64, c21: f64) -> Domain {
    Domain::nearly_spherical(1.0, &[(2, 0, c20), (2, 1, c21)])
        .unwrap()
        .rescale_to_unit_volume()
        .unwrap()
        .0
}

fn main() {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(64);
    let q = 0.05;
    let cfg = SolverConfig {
        tol_residual: 1e-5,
        tol_state: 1e-7,
        tol_lambda: 1e-7,
        damping: 1.0,
        cartesian_n: n,
        ..SolverConfig::default()
    };
    let d0 = domain(0.1, 0.0);
    let half = d0.bounding_radius().max(1.0) * (1.0 + 12.0 / n as f64) * 1.15;
    let grid = CartesianGrid::new(half, n).unwrap();

    let t0 = Instant::now();
    let gs0 = solve_on_grid(&d0, grid, q, &cfg, None).unwrap();
    println!(
        "cold solve: {:.2} s, {} scf iters, E = {:.6}",
        t0.elapsed().as_secs_f64(),
        gs0.iterations,
        gs0.energy(q)
    );

    let mut warm = gs0.u.clone();
    for (c20, c21) in [(0.101, 0.0), (0.099, 0.0), (0.1, 0.001), (0.1, -0.001)] {
        let d = domain(c20, c21);
        let t = Instant::now();
        let gs = solve_on_grid(&d, grid, q, &cfg, Some(&warm)).unwrap();
        println!(
            "warm probe ({c20},{c21}): {:.2} s, {} scf iters, E = {:.6}",
            t.elapsed().as_secs_f64(),
            gs.iterations,
            gs.energy(q)
        );
        warm = gs.u;
    }
}

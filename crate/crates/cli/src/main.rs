//! `chargeshape` — CLI for constrained Hartree ground states, shape
//! optimization and large-charge asymptotics.
//!
//! Commands: `solve`, `sweep`, `optimize`, `asymptotics`, `nondim`.
//! Exit codes: 0 success, 1 usage or IO error, 2 numerical failure.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use chargeshape_core::asymptotics::Asymptotics;
use chargeshape_core::geometry::{Ball, Domain, NearlySpherical};
use chargeshape_core::hartree::{solve_ground_state, GroundState, SolverConfig};
use chargeshape_core::nondim::PhysicalParams;
use chargeshape_core::shapeopt::{shape_descent, DescentOptions};
use chargeshape_core::Error as CoreError;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(
    name = "chargeshape",
    version,
    about = "Constrained Hartree ground states E_q(Omega) on parametrized 3D domains",
    long_about = "Computes the constrained Hartree ground-state energy \
E_q(Omega) = int |grad u|^2 + (q/2) D(u^2,u^2) with ||u||_2 = 1, runs \
volume-constrained shape descent over nearly-spherical domains, and \
evaluates large-q competitor bounds and the SI <-> dimensionless map."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Grid and tolerance overrides shared by every command.
#[derive(Args, Clone, Copy)]
struct GridArgs {
    /// Grid resolution: radial nodes for balls, cells per axis otherwise
    /// (defaults: 2049 radial, 64 Cartesian)
    #[arg(long)]
    grid_n: Option<usize>,
    /// Euler-Lagrange residual tolerance (default 1e-6)
    #[arg(long)]
    tol: Option<f64>,
}

impl GridArgs {
    fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(n) = self.grid_n {
            // the radial solver needs at least 64 nodes; small overrides are
            // meant for the Cartesian path
            cfg.radial_n = n.max(64);
            cfg.cartesian_n = n;
        }
        if let Some(t) = self.tol {
            cfg.tol_residual = t;
        }
        cfg
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one ground state and print a result JSON to stdout
    Solve {
        /// Shape file (JSON): {"type":"ball"|"ball_union"|"nearly_spherical",...}
        shape_file: PathBuf,
        /// Dimensionless charge q >= 0
        #[arg(long)]
        q: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Solve a list of charges on one shape; CSV (q,E,lambda,dirichlet,coulomb,status) on stdout
    Sweep {
        shape_file: PathBuf,
        /// Comma-separated list of charges, rows emitted in this order
        #[arg(long, value_delimiter = ',', required = true)]
        q_list: Vec<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Volume-constrained shape descent from a nearly-spherical start
    Optimize {
        /// Start shape file; must have "type":"nearly_spherical"
        shape_file: PathBuf,
        #[arg(long)]
        q: f64,
        /// Highest spherical-harmonic degree of the descent basis
        #[arg(long, default_value_t = 4)]
        l_max: u32,
        /// Maximum descent iterations
        #[arg(long, default_value_t = 40)]
        max_iter: usize,
        /// Initial line-search step in coefficient space
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Output file for the final shape (JSON)
        #[arg(long, default_value = "optimized_shape.json")]
        out: PathBuf,
        /// Output file for the descent trace (CSV: iteration,E,volume,asymmetry,step)
        #[arg(long, default_value = "descent_trace.csv")]
        trace: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Large-q competitor table; CSV (q,N_star,U,q_over_4,crossing) on stdout
    Asymptotics {
        /// Lower end of the log-spaced q range
        #[arg(long, default_value_t = 1.0)]
        q_min: f64,
        /// Upper end of the log-spaced q range
        #[arg(long, default_value_t = 1e4)]
        q_max: f64,
        /// Number of log-spaced samples
        #[arg(long, default_value_t = 25)]
        points: usize,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Map SI island parameters to the dimensionless charge q
    Nondim {
        /// Params file (JSON): {"m_star_kg":..,"n_pairs":..,"epsilon_r":..,"volume_m3":..}
        params_file: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
}

// ------------------------------------------------------------- shape files

/// On-disk shape description. `ball` is a convenience variant; the two
/// formats fixed by the interface contract are `nearly_spherical` and
/// `ball_union`.
#[derive(Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum ShapeFile {
    #[serde(rename = "ball")]
    Ball {
        #[serde(default)]
        center: [f64; 3],
        radius: f64,
    },
    #[serde(rename = "ball_union")]
    BallUnion { balls: Vec<[f64; 4]> },
    #[serde(rename = "nearly_spherical")]
    NearlySpherical {
        base_radius: f64,
        coeffs: Vec<(u32, i32, f64)>,
    },
}

impl ShapeFile {
    fn kind(&self) -> &'static str {
        match self {
            ShapeFile::Ball { .. } => "ball",
            ShapeFile::BallUnion { .. } => "ball_union",
            ShapeFile::NearlySpherical { .. } => "nearly_spherical",
        }
    }

    fn to_domain(&self) -> Result<Domain, CoreError> {
        match self {
            ShapeFile::Ball { center, radius } => Domain::ball(*center, *radius),
            ShapeFile::BallUnion { balls } => {
                let mut parts = Vec::with_capacity(balls.len());
                for b in balls {
                    parts.push(Ball::new([b[0], b[1], b[2]], b[3])?);
                }
                Domain::ball_union(parts)
            }
            ShapeFile::NearlySpherical { base_radius, coeffs } => {
                Domain::nearly_spherical(*base_radius, coeffs)
            }
        }
    }
}

fn read_shape(path: &Path) -> Result<ShapeFile, CliFailure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliFailure::usage(format!("cannot read shape file {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text).map_err(|e| {
        CliFailure::usage(format!("malformed shape file {}: {e}", path.display()))
    })
}

fn write_nearly_spherical(path: &Path, ns: &NearlySpherical) -> Result<(), CliFailure> {
    let coeffs: Vec<serde_json::Value> = ns
        .coeffs()
        .iter()
        .map(|&(l, m, v)| json!([l, m, v]))
        .collect();
    let doc = json!({
        "type": "nearly_spherical",
        "base_radius": ns.base_radius(),
        "coeffs": coeffs,
    });
    std::fs::write(path, format!("{:#}\n", doc))
        .map_err(|e| CliFailure::usage(format!("cannot write {}: {e}", path.display())))
}

// ------------------------------------------------------------------ errors

struct CliFailure {
    code: u8,
    message: String,
}

impl CliFailure {
    fn usage(message: String) -> Self {
        CliFailure { code: EXIT_USAGE, message }
    }
}

impl From<CoreError> for CliFailure {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::Usage(_) | CoreError::InvalidDomain(_) => EXIT_USAGE,
            CoreError::Numerical { .. } | CoreError::Diagnostics(_) => EXIT_NUMERICAL,
        };
        CliFailure { code, message: e.to_string() }
    }
}

// ---------------------------------------------------------------- commands

fn result_json(domain_kind: &str, q: f64, gs: &GroundState) -> serde_json::Value {
    json!({
        "q": q,
        "domain": domain_kind,
        "E": gs.energy(q),
        "lambda": gs.lambda_q,
        "dirichlet": gs.breakdown.dirichlet,
        "coulomb": gs.breakdown.coulomb,
        "iters": gs.iterations,
        "residual": gs.residual,
    })
}

fn cmd_solve(shape_file: &Path, q: f64, grid: GridArgs) -> Result<(), CliFailure> {
    let shape = read_shape(shape_file)?;
    let domain = shape.to_domain()?;
    let cfg = grid.solver_config();
    let gs = solve_ground_state(&domain, q, &cfg)?;
    println!("{:#}", result_json(shape.kind(), q, &gs));
    Ok(())
}

fn cmd_sweep(shape_file: &Path, q_list: &[f64], grid: GridArgs) -> Result<(), CliFailure> {
    if q_list.is_empty() {
        return Err(CliFailure::usage("sweep needs a nonempty q list".into()));
    }
    let shape = read_shape(shape_file)?;
    let domain = shape.to_domain()?;
    let cfg = grid.solver_config();
    // independent solves run concurrently; rows keep the input order
    let results: Vec<Result<GroundState, CoreError>> = std::thread::scope(|s| {
        let handles: Vec<_> = q_list
            .iter()
            .map(|&q| {
                let domain = &domain;
                let cfg = &cfg;
                s.spawn(move || solve_ground_state(domain, q, cfg))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut worst: u8 = 0;
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(out, "q,E,lambda,dirichlet,coulomb,status").unwrap();
    for (q, res) in q_list.iter().zip(&results) {
        match res {
            Ok(gs) => writeln!(
                out,
                "{q},{},{},{},{},ok",
                gs.energy(*q),
                gs.lambda_q,
                gs.breakdown.dirichlet,
                gs.breakdown.coulomb
            )
            .unwrap(),
            Err(e) => {
                let f = CliFailure::from(e.clone());
                worst = worst.max(f.code);
                writeln!(out, "{q},,,,,{}", f.message.replace(',', ";")).unwrap();
            }
        }
    }
    if worst != 0 {
        return Err(CliFailure {
            code: worst,
            message: "one or more sweep solves failed (see status column)".into(),
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_optimize(
    shape_file: &Path,
    q: f64,
    l_max: u32,
    max_iter: usize,
    step: f64,
    out: &Path,
    trace_path: &Path,
    grid: GridArgs,
) -> Result<(), CliFailure> {
    let shape = read_shape(shape_file)?;
    let start = match shape.to_domain()? {
        Domain::NearlySpherical(ns) => ns,
        _ => {
            return Err(CliFailure::usage(
                "optimize needs a shape file with \"type\":\"nearly_spherical\"".into(),
            ))
        }
    };
    let mut opts = DescentOptions {
        l_max,
        max_iter,
        initial_step: step,
        ..DescentOptions::default()
    };
    opts.solver = grid.solver_config();
    if let Some(n) = grid.grid_n {
        opts.grid_n = n;
    }
    let (final_shape, trace) = shape_descent(&start, q, &opts)?;
    write_nearly_spherical(out, &final_shape)?;
    let mut csv = String::from("iteration,E,volume,asymmetry,step\n");
    for (i, rec) in trace.records.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{},{},{}\n",
            rec.energy, rec.volume, rec.asymmetry, rec.step
        ));
    }
    std::fs::write(trace_path, csv)
        .map_err(|e| CliFailure::usage(format!("cannot write {}: {e}", trace_path.display())))?;
    eprintln!(
        "descent finished: {} accepted iterates, gradient norm {:.3e}, converged = {}",
        trace.records.len(),
        trace.grad_norm,
        trace.converged
    );
    Ok(())
}

fn cmd_asymptotics(q_min: f64, q_max: f64, points: usize) -> Result<(), CliFailure> {
    if !(q_min > 0.0 && q_max > q_min) || points < 2 {
        return Err(CliFailure::usage(
            "asymptotics needs 0 < q_min < q_max and at least 2 points".into(),
        ));
    }
    let a = Asymptotics::new()?;
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(out, "q,N_star,U,q_over_4,crossing").unwrap();
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let q = q_min * (q_max / q_min).powf(t);
        let c = a.optimal_competitor(q)?;
        let quarter = 0.25 * q;
        let crossing = if c.energy < quarter { 1 } else { 0 };
        writeln!(out, "{q},{},{},{quarter},{crossing}", c.n_star, c.energy).unwrap();
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NondimFile {
    m_star_kg: f64,
    n_pairs: u64,
    epsilon_r: f64,
    volume_m3: f64,
}

fn cmd_nondim(params_file: &Path) -> Result<(), CliFailure> {
    let text = std::fs::read_to_string(params_file).map_err(|e| {
        CliFailure::usage(format!("cannot read params file {}: {e}", params_file.display()))
    })?;
    let raw: NondimFile = serde_json::from_str(&text).map_err(|e| {
        CliFailure::usage(format!("malformed params file {}: {e}", params_file.display()))
    })?;
    let p = PhysicalParams::new(raw.m_star_kg, raw.n_pairs, raw.epsilon_r, raw.volume_m3)?;
    println!(
        "{:#}",
        json!({
            "q": p.charge_parameter(),
            "energy_prefactor_joules": p.energy_prefactor(),
            "length_scale_m": p.length_scale(),
        })
    );
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with status 2 on bad arguments by default; the CLI contract
    // reserves 2 for numerical failures, so argument errors map to 1 here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
        Err(e) => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let res = match &cli.cmd {
        Cmd::Solve { shape_file, q, grid } => cmd_solve(shape_file, *q, *grid),
        Cmd::Sweep { shape_file, q_list, grid } => cmd_sweep(shape_file, q_list, *grid),
        Cmd::Optimize {
            shape_file,
            q,
            l_max,
            max_iter,
            step,
            out,
            trace,
            grid,
        } => cmd_optimize(shape_file, *q, *l_max, *max_iter, *step, out, trace, *grid),
        Cmd::Asymptotics { q_min, q_max, points, .. } => cmd_asymptotics(*q_min, *q_max, *points),
        Cmd::Nondim { params_file, .. } => cmd_nondim(params_file),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

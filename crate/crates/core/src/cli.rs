//! Command-line front end: ingest JSON measures and grid functions, dispatch
//! potentials, the solver, verifiers, oracles and capacity estimators, and
//! emit deterministic JSON reports or `radius,value` CSV profiles.
//!
//! Exit codes: 0 success, 2 regime/validation/parse errors, 3 non-convergence,
//! divergence, or a `+inf` verifier constant.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::capacity::{bessel_energy, capacity_scaling_check, riesz_capacity_lower, CapacitySet};
use crate::dyadic::DyadicCube;
use crate::error::{Error, Result};
use crate::input::{
    balls_from_json, capacity_sets_from_json, grid_function_from_json, measure_from_json, measure_to_json,
    params_from_str,
};
use crate::json::{self, format_real, parse_error, Real};
use crate::measures::{CellGrid, Measure};
use crate::oracles::{
    brute_wolff, hessian_radial_residual, log_mesh, plap_radial_residual, radial_hessian_solution,
    radial_plap_solution, wolff_dirac_closed_form, RadialSolution,
};
use crate::params::{Exponents, OperatorKind, Params, Recursion};
use crate::potentials::{
    dyadic_riesz, dyadic_wolff, riesz_truncated, shift_averaged_dyadic_wolff, wolff_truncated, GenerationWindow,
};
use crate::solver::{picard_solve, GridFunction, SolveOptions};
use crate::verifiers::{
    carleson_embedding_check, equivalence_a123, fefferman_phong, frostman_ratio, local_integral_estimate,
    local_integral_estimate_critical, pointwise_condition, pointwise_condition_hessian, testing_inequality_balls,
    testing_inequality_dyadic, BallQuadrature, PointwiseConfig,
};

/// Environment variable fixing the worker-pool size.
pub const THREADS_ENV: &str = "WOLFFKIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "wolffkit", version, about = "Wolff potentials, Picard solver and solvability verifiers")]
pub struct Cli {
    /// Write the output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a potential along a ray of log-spaced radii (CSV).
    Potential(PotentialArgs),
    /// Run the Picard iteration for `u = W(u^q) + eps f`.
    Solve(SolveArgs),
    /// Empirical best constant of a solvability condition.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Closed-form radial solutions, residuals and reference potentials.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Capacity lower bounds and energies.
    #[command(subcommand)]
    Capacity(CapacityCommand),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PotentialKind {
    Wolff,
    Riesz,
    DyadicWolff,
    DyadicRiesz,
    ShiftAveraged,
}

#[derive(Debug, Args)]
struct MeasureParams {
    /// Measure JSON file.
    #[arg(long)]
    measure: PathBuf,
    /// Exponents, e.g. `n=3,p=2,q=5`, `n=1,alpha=0.4,p=2,q=3` or `n=5,k=1,q=5`.
    #[arg(long, value_parser = parse_params)]
    params: Params,
}

#[derive(Debug, Args)]
struct PotentialArgs {
    #[command(flatten)]
    mp: MeasureParams,
    #[arg(long, value_enum, default_value = "wolff")]
    kind: PotentialKind,
    /// Truncation radius of the continuous potentials.
    #[arg(long, default_value = "inf")]
    r: f64,
    /// Generation window `gmin:gmax` of the dyadic potentials.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_window, default_value = "-10:10")]
    window: GenerationWindow,
    /// Origin of the ray; defaults to the anchor of the measure.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
    center: Option<Point>,
    /// Direction of the ray; defaults to the first axis.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
    direction: Option<Point>,
    #[arg(long, default_value_t = 1e-2)]
    rmin: f64,
    #[arg(long, default_value_t = 1e2)]
    rmax: f64,
    #[arg(long, default_value_t = 41)]
    count: usize,
    /// Number of lattice shifts for `shift-averaged`.
    #[arg(long, default_value_t = 16)]
    shifts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RecursionArg {
    ClosedForm,
    Certified,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Grid function JSON `{"box":...,"generation":h,"values":[...]}`.
    #[arg(long)]
    f: PathBuf,
    #[arg(long, value_parser = parse_params)]
    params: Params,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_window)]
    window: GenerationWindow,
    /// Pointwise constant; estimated from f when absent.
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value = "closed-form")]
    recursion: RecursionArg,
}

#[derive(Debug, Args)]
struct PointsArg {
    /// Evaluation point, comma separated; repeatable.
    #[arg(long = "x", allow_hyphen_values = true, value_parser = parse_point)]
    xs: Vec<Point>,
    /// JSON file holding an array of points.
    #[arg(long)]
    points: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum VerifyCommand {
    /// `W(W omega)^q <= C W omega` over sample points.
    Pointwise {
        #[command(flatten)]
        mp: MeasureParams,
        #[command(flatten)]
        pts: PointsArg,
        #[arg(long, default_value = "inf")]
        r: f64,
        /// Box `g:i,j,...` of the grid carrying `(W omega)^q` for general measures.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_cube)]
        grid_box: Option<DyadicCube>,
        #[arg(long)]
        grid_generation: Option<i32>,
        #[arg(long)]
        refinement_check: bool,
    },
    /// Dyadic testing inequality over cubes `g:i,j,...`.
    TestingDyadic {
        #[command(flatten)]
        mp: MeasureParams,
        #[arg(long = "cube", allow_hyphen_values = true, value_parser = parse_cube, required = true)]
        cubes: Vec<DyadicCube>,
        #[arg(long, default_value_t = 6)]
        depth: u32,
    },
    /// Testing inequality over balls.
    TestingBalls {
        #[command(flatten)]
        mp: MeasureParams,
        /// JSON file `[{"center":[...],"radius":r}, ...]`.
        #[arg(long)]
        balls: PathBuf,
        #[arg(long, default_value = "inf")]
        r: f64,
        #[arg(long)]
        level: Option<u32>,
    },
    /// `omega(B_t(x)) <= C t^{n - alpha p q/(q-p+1)}`.
    Frostman {
        #[command(flatten)]
        mp: MeasureParams,
        #[command(flatten)]
        pts: PointsArg,
        #[arg(long, default_value_t = 1e-3)]
        tmin: f64,
        #[arg(long, default_value_t = 1e3)]
        tmax: f64,
        #[arg(long, default_value_t = 8)]
        per_decade: usize,
    },
    /// The three dyadic forms A1, A2, A3 on a cube.
    A123 {
        #[command(flatten)]
        mp: MeasureParams,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_cube)]
        cube: DyadicCube,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_window)]
        window: GenerationWindow,
    },
    /// Fefferman-Phong bound for a cell density.
    FeffermanPhong {
        #[command(flatten)]
        mp: MeasureParams,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        balls: PathBuf,
    },
    /// Carleson embedding in the critical regime.
    Carleson {
        #[command(flatten)]
        mp: MeasureParams,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_cube)]
        cube: DyadicCube,
        /// JSON file holding an array of grid functions.
        #[arg(long)]
        functions: PathBuf,
        #[arg(long)]
        premise_bound: Option<f64>,
    },
    /// Local integral estimate of a solution profile.
    LocalIntegral {
        /// Grid function JSON.
        #[arg(long)]
        u: PathBuf,
        #[arg(long, value_parser = parse_params)]
        params: Params,
        /// Balls JSON (supercritical form).
        #[arg(long)]
        balls: Option<PathBuf>,
        /// Center of the logarithmic form (critical regime).
        #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
        center: Option<Point>,
        #[arg(long = "big-r")]
        big_r: Option<f64>,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
        radii: Option<Point>,
    },
}

#[derive(Debug, Args)]
struct MeshArg {
    /// Log mesh `rmin:rmax:count` for the residual.
    #[arg(long, value_parser = parse_mesh)]
    mesh: Option<(f64, f64, usize)>,
}

#[derive(Debug, Subcommand)]
enum OracleCommand {
    /// Radial solution `c |x|^{-p/(q-p+1)}` of `-Δ_p u = u^q`.
    Plap {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[command(flatten)]
        mesh: MeshArg,
    },
    /// Radial solution of `F_k[-u] = u^q`.
    Hessian {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        q: f64,
        #[command(flatten)]
        mesh: MeshArg,
    },
    /// `W^r_{alpha,p}` of a unit point mass at distance d.
    WolffDirac {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        d: f64,
        #[arg(long, default_value = "inf")]
        r: f64,
    },
    /// Brute-force Wolff potential on a log grid.
    BruteWolff {
        #[command(flatten)]
        mp: MeasureParams,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
        x: Point,
        #[arg(long, default_value = "inf")]
        r: f64,
        #[arg(long, default_value_t = 64)]
        per_decade: usize,
    },
}

#[derive(Debug, Subcommand)]
enum CapacityCommand {
    /// Dual lower bound for `Cap_{I_{alpha p}, q/(q-p+1)}(E)`.
    Lower {
        /// JSON array of `{"kind":"ball",...}` / `{"kind":"cube",...}`.
        #[arg(long)]
        set: PathBuf,
        /// Trial measure JSON.
        #[arg(long)]
        trial: PathBuf,
        #[arg(long, value_parser = parse_params)]
        params: Params,
        #[arg(long = "big-r")]
        big_r: f64,
    },
    /// Truncated Riesz energy.
    Energy {
        #[command(flatten)]
        mp: MeasureParams,
        #[arg(long = "big-r")]
        big_r: f64,
        #[arg(long, default_value_t = -4)]
        cell_generation: i32,
        #[arg(long, default_value_t = 0)]
        top_generation: i32,
    },
    /// Log-log slope of the capacity bound under dilation.
    Scaling {
        #[arg(long, value_parser = parse_params)]
        params: Params,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_point, default_value = "1,2,4")]
        lambdas: Point,
    },
}

/// Output of a command together with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub output: String,
}

/// Exit code of an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } | Error::Divergence { .. } => 3,
        _ => 2,
    }
}

/// Parse and run; clap errors are returned as their rendered message with
/// clap's exit code.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return Outcome {
                code: e.exit_code(),
                output: e.render().to_string(),
            }
        }
    };
    match dispatch(&cli.command) {
        Ok((value, code)) => Outcome { code, output: value },
        Err(e) => Outcome {
            code: exit_code(&e),
            output: format!("error: {e}\n"),
        },
    }
}

/// Entry point of the binary.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let args: Vec<T> = args.into_iter().collect();
    let out_path = Cli::try_parse_from(args.clone()).ok().and_then(|c| c.out);
    let outcome = run(args);
    let success = outcome.code == 0 || (outcome.code == 3 && !outcome.output.starts_with("error:"));
    if !success {
        eprint!("{}", outcome.output);
        return outcome.code;
    }
    match out_path {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, &outcome.output) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return 2;
            }
        }
        None => print!("{}", outcome.output),
    }
    outcome.code
}

fn dispatch(cmd: &Command) -> Result<(String, i32)> {
    match cmd {
        Command::Potential(a) => potential(a).map(|s| (s, 0)),
        Command::Solve(a) => solve(a),
        Command::Verify(v) => verify(v),
        Command::Oracle(o) => oracle(o).map(|v| (v, 0)),
        Command::Capacity(c) => capacity(c).map(|v| (v, 0)),
    }
}

fn potential(a: &PotentialArgs) -> Result<String> {
    let params = &a.mp.params;
    let mu = load_measure(&a.mp.measure, params.n())?;
    let n = params.n();
    let center = a.center.clone().map(|p| p.0).unwrap_or_else(|| anchor(&mu));
    let dir = a.direction.clone().map(|p| p.0).unwrap_or_else(|| unit(n, 0));
    check_dim(&center, n, "--center")?;
    check_dim(&dir, n, "--direction")?;
    let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(len > 0.0) {
        return Err(Error::invalid("--direction must be nonzero"));
    }
    let radii = log_mesh(a.rmin, a.rmax, a.count)?;
    let ex = params.exponents();
    let order = params.alpha() * params.p();
    let mut out = String::from("radius,value\n");
    for s in radii {
        let x: Vec<f64> = center.iter().zip(&dir).map(|(c, d)| c + s * d / len).collect();
        let v = match a.kind {
            PotentialKind::Wolff => wolff_truncated(&mu, &x, &ex, a.r)?.value(),
            PotentialKind::Riesz => riesz_truncated(&mu, &x, order, a.r)?.value(),
            PotentialKind::DyadicWolff => dyadic_wolff(&mu, &x, &ex, &a.window)?,
            PotentialKind::DyadicRiesz => dyadic_riesz(&mu, &x, order, &a.window)?,
            PotentialKind::ShiftAveraged => shift_averaged_dyadic_wolff(&mu, &x, &ex, &a.window, a.shifts, a.seed)?,
        };
        out.push_str(&format!("{},{}\n", csv_real(s), csv_real(v)));
    }
    Ok(out)
}

fn solve(a: &SolveArgs) -> Result<(String, i32)> {
    let f = grid_function_from_json(&read_json(&a.f)?)?;
    if f.grid.dim() != a.params.n() {
        return Err(parse_error("/box/index", "grid dimension differs from n"));
    }
    let opts = SolveOptions {
        c: a.c,
        eps_override: a.eps,
        tol: a.tol,
        max_iter: a.max_iter,
        recursion: match a.recursion {
            RecursionArg::ClosedForm => Recursion::ClosedForm,
            RecursionArg::Certified => Recursion::Certified,
        },
    };
    let (u, cert) = picard_solve(&f, &a.params, &a.window, &opts)?;
    let doc = json!({
        "command": "solve",
        "config": {
            "params": params_json(&a.params),
            "window": a.window,
            "options": opts,
            "f": f,
        },
        "solution": u,
        "certificate": cert,
    });
    Ok((json::to_string(&doc)?, 0))
}

fn verify(v: &VerifyCommand) -> Result<(String, i32)> {
    let (config, report): (Value, Value) = match v {
        VerifyCommand::Pointwise {
            mp,
            pts,
            r,
            grid_box,
            grid_generation,
            refinement_check,
        } => {
            let mu = load_measure(&mp.measure, mp.params.n())?;
            let xs = points(pts, &mu, mp.params.n())?;
            let grid = match (grid_box, grid_generation) {
                (Some(b), Some(g)) => Some(CellGrid::new(b.clone(), *g)?),
                (None, None) => None,
                _ => return Err(Error::invalid("--grid-box and --grid-generation go together")),
            };
            let cfg = PointwiseConfig {
                grid,
                refinement_check: *refinement_check,
            };
            let rep = match mp.params.kind() {
                OperatorKind::Hessian { k } => pointwise_condition_hessian(&mu, &xs, k, mp.params.q(), *r, &cfg)?,
                OperatorKind::Quasilinear => pointwise_condition(&mu, &xs, &mp.params, *r, &cfg)?,
            };
            (
                json!({"measure": measure_to_json(&mu), "params": params_json(&mp.params), "points": xs, "r": Real(*r), "pointwise": cfg}),
                to_value(&rep)?,
            )
        }
        VerifyCommand::TestingDyadic { mp, cubes, depth } => {
            let mu = load_measure(&mp.measure, mp.params.n())?;
            let rep = testing_inequality_dyadic(&mu, cubes, &mp.params, *depth)?;
            (
                json!({"measure": measure_to_json(&mu), "params": params_json(&mp.params), "cubes": cubes, "depth": depth}),
                to_value(&rep)?,
            )
        }
        VerifyCommand::TestingBalls { mp, balls, r, level } => {
            let mu = load_measure(&mp.measure, mp.params.n())?;
            let bs = balls_from_json(&read_json(balls)?)?;
            let mut quad = BallQuadrature::for_dim(mp.params.n());
            if let Some(l) = level {
                quad.level = *l;
            }
            let rep = testing_inequality_balls(&mu, &bs, &mp.params, *r, &quad)?;
            (
                json!({"measure": measure_to_json(&mu), "params": params_json(&mp.params), "balls": bs, "r": Real(*r), "quadrature": quad}),
                to_value(&rep)?,
            )
        }
        VerifyCommand::Frostman {
            mp,
            pts,
            tmin,
            tmax,
            per_decade,
        } => {
            let mu = load_measure(&mp.measure, mp.params.n())?;
            let xs = if pts.xs.is_empty() && pts.points.is_none() {
                vec![anchor(&mu)]
            } else {
                points(pts, &mu, mp.params.n())?
            };
            let rep = frostman_ratio(&mu, &xs, (*tmin, *tmax), &mp.params, *per_decade)?;
            (
                json!({"measure": measure_to_json(&mu), "params": params_json(&mp.params), "points": xs,
                       "tmin": Real(*tmin), "tmax": Real(*tmax), "per_decade": per_decade}),
                to_value(&rep)?,
            )
        }
        VerifyCommand::A123 { mp, cube, window } => {
            let mu = load_measure(&mp.measure, mp.params.n())?;
            let rep = equivalence_a123(&mu, cube, &mp.params, window)?;
            (
                json!({"measure": measure_to_json(&mu), "params": params_json(&mp.params), "cube": cube, "window": window}),
                json!({"family": "equivalence_a123", "a1": Real(rep.a1), "a2": Real(rep.a2), "a3": Real(rep.a3)}),
            )
        }
        VerifyCommand::FeffermanPhong { mp, delta, balls } => {
            let mu = load_measure(&mp.measure, mp.params.n())?;
            let Measure::Cells(f) = &mu else {
                return Err(parse_error("/type", "expected a cells measure"));
            };
            let bs = balls_from_json(&read_json(balls)?)?;
            let rep = fefferman_phong(f, *delta, &bs, &mp.params)?;
            (
                json!({"measure": measure_to_json(&mu), "params": params_json(&mp.params), "delta": Real(*delta), "balls": bs}),
                to_value(&rep)?,
            )
        }
        VerifyCommand::Carleson {
            mp,
            cube,
            functions,
            premise_bound,
        } => {
            let mu = load_measure(&mp.measure, mp.params.n())?;
            let fv = read_json(functions)?;
            let items = fv.as_array().ok_or_else(|| parse_error("", "expected an array of grid functions"))?;
            let fs = items
                .iter()
                .enumerate()
                .map(|(i, v)| grid_function_from_json(v).map_err(|e| prefix(e, &format!("/{i}"))))
                .collect::<Result<Vec<GridFunction>>>()?;
            let rep = carleson_embedding_check(&mu, cube, &fs, &mp.params, *premise_bound)?;
            (
                json!({"measure": measure_to_json(&mu), "params": params_json(&mp.params), "cube": cube,
                       "functions": fs.len(), "premise_bound": premise_bound.map(Real)}),
                to_value(&rep)?,
            )
        }
        VerifyCommand::LocalIntegral {
            u,
            params,
            balls,
            center,
            big_r,
            radii,
        } => {
            let uf = grid_function_from_json(&read_json(u)?)?;
            if params.is_critical() {
                let c = center.clone().map(|p| p.0).ok_or_else(|| Error::Config("critical regime needs --center".into()))?;
                let br = big_r.ok_or_else(|| Error::Config("critical regime needs --big-r".into()))?;
                let rs = radii.clone().map(|p| p.0).ok_or_else(|| Error::Config("critical regime needs --radii".into()))?;
                let rep = local_integral_estimate_critical(&uf, &c, br, &rs, params)?;
                (
                    json!({"params": params_json(params), "center": c, "big_r": Real(br), "radii": rs}),
                    to_value(&rep)?,
                )
            } else {
                let path = balls.as_ref().ok_or_else(|| Error::Config("supercritical regime needs --balls".into()))?;
                let bs = balls_from_json(&read_json(path)?)?;
                let rep = local_integral_estimate(&uf, &bs, params)?;
                (json!({"params": params_json(params), "balls": bs}), to_value(&rep)?)
            }
        }
    };
    let infinite = report.get("best_constant").and_then(Value::as_str) == Some("inf");
    let doc = json!({"command": "verify", "config": config, "report": report});
    Ok((json::to_string(&doc)?, if infinite { 3 } else { 0 }))
}

fn oracle(o: &OracleCommand) -> Result<String> {
    let doc = match o {
        OracleCommand::Plap { n, p, q, mesh } => {
            let params = crate::params::make_params(*n, 1.0, *p, *q)?;
            let sol = radial_plap_solution(&params)?;
            let res = match mesh.mesh {
                Some(m) => Some(residual_json(&sol, m, *q, |u, mesh| plap_radial_residual(u, &params, mesh))?),
                None => None,
            };
            json!({"command": "oracle plap", "config": {"n": n, "p": Real(*p), "q": Real(*q), "mesh": mesh_json(mesh.mesh)},
                   "solution": sol, "residual": res})
        }
        OracleCommand::Hessian { n, k, q, mesh } => {
            let sol = radial_hessian_solution(*n, *k, *q)?;
            let res = match mesh.mesh {
                Some(m) => Some(residual_json(&sol, m, *q, |u, mesh| hessian_radial_residual(u, *n, *k, *q, mesh))?),
                None => None,
            };
            json!({"command": "oracle hessian", "config": {"n": n, "k": k, "q": Real(*q), "mesh": mesh_json(mesh.mesh)},
                   "solution": sol, "residual": res})
        }
        OracleCommand::WolffDirac { n, alpha, p, d, r } => {
            let ex = Exponents::new(*n, *alpha, *p)?;
            let v = wolff_dirac_closed_form(&ex, *d, *r)?;
            json!({"command": "oracle wolff-dirac",
                   "config": {"n": n, "alpha": Real(*alpha), "p": Real(*p), "d": Real(*d), "r": Real(*r)},
                   "value": Real(v)})
        }
        OracleCommand::BruteWolff { mp, x, r, per_decade } => {
            let mu = load_measure(&mp.measure, mp.params.n())?;
            check_dim(&x.0, mp.params.n(), "--x")?;
            let est = brute_wolff(&mu, &x.0, &mp.params.exponents(), *r, *per_decade)?;
            json!({"command": "oracle brute-wolff",
                   "config": {"measure": measure_to_json(&mu), "params": params_json(&mp.params), "x": x.0,
                              "r": Real(*r), "per_decade": per_decade},
                   "estimate": {"value": Real(est.value), "nodes": est.nodes}})
        }
    };
    json::to_string(&doc)
}

fn capacity(c: &CapacityCommand) -> Result<String> {
    let doc = match c {
        CapacityCommand::Lower {
            set,
            trial,
            params,
            big_r,
        } => {
            let e: Vec<CapacitySet> = capacity_sets_from_json(&read_json(set)?)?;
            let mu = load_measure(trial, params.n())?;
            let est = riesz_capacity_lower(&e, &mu, params, *big_r)?;
            json!({"command": "capacity lower",
                   "config": {"set": e, "trial": measure_to_json(&mu), "params": params_json(params), "big_r": Real(*big_r)},
                   "estimate": est})
        }
        CapacityCommand::Energy {
            mp,
            big_r,
            cell_generation,
            top_generation,
        } => {
            let mu = load_measure(&mp.measure, mp.params.n())?;
            let v = bessel_energy(&mu, &mp.params, *big_r, *cell_generation, *top_generation)?;
            json!({"command": "capacity energy",
                   "config": {"measure": measure_to_json(&mu), "params": params_json(&mp.params), "big_r": Real(*big_r),
                              "cell_generation": cell_generation, "top_generation": top_generation},
                   "energy": Real(v)})
        }
        CapacityCommand::Scaling { params, lambdas } => {
            let rep = capacity_scaling_check(params, &lambdas.0)?;
            json!({"command": "capacity scaling",
                   "config": {"params": params_json(params), "lambdas": lambdas.0},
                   "report": to_value(&rep)?})
        }
    };
    json::to_string(&doc)
}

/// Max-norm residual of the closed-form profile and its ratio to `max u^q`.
fn residual_json(
    sol: &RadialSolution,
    (rmin, rmax, count): (f64, f64, usize),
    q: f64,
    f: impl Fn(&[f64], &[f64]) -> Result<f64>,
) -> Result<Value> {
    let mesh = log_mesh(rmin, rmax, count)?;
    let u = sol.profile(&mesh);
    let res = f(&u, &mesh)?;
    let scale = u.iter().map(|v| v.powf(q)).fold(0.0, f64::max);
    Ok(json!({"max_abs": Real(res), "max_u_q": Real(scale), "relative": Real(res / scale)}))
}

fn mesh_json(m: Option<(f64, f64, usize)>) -> Value {
    match m {
        Some((a, b, c)) => json!({"rmin": Real(a), "rmax": Real(b), "count": c}),
        None => Value::Null,
    }
}

fn params_json(p: &Params) -> Value {
    let mut v = json!({"n": p.n(), "alpha": Real(p.alpha()), "p": Real(p.p()), "q": Real(p.q())});
    if let OperatorKind::Hessian { k } = p.kind() {
        v["k"] = json!(k);
    }
    v
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::invalid(e.to_string()))
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| parse_error("", &format!("{}: {e}", path.display())))
}

fn load_measure(path: &Path, n: usize) -> Result<Measure> {
    measure_from_json(&read_json(path)?, Some(n)).map_err(|e| match e {
        Error::Parse { pointer, message } => Error::Parse {
            pointer,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn prefix(e: Error, p: &str) -> Error {
    match e {
        Error::Parse { pointer, message } => Error::Parse {
            pointer: format!("{p}{pointer}"),
            message,
        },
        other => other,
    }
}

/// Reference point of a measure: its first atom, the center of its box, or
/// its center of symmetry.
fn anchor(mu: &Measure) -> Vec<f64> {
    match mu {
        Measure::Points(m) => m.support().next().map(|a| a.x.clone()).unwrap_or_else(|| vec![0.0; mu.dim()]),
        Measure::Cells(c) => c.grid.bbox.center(),
        Measure::RadialPower(m) => m.center.clone(),
        Measure::Radial(m) => m.center().to_vec(),
    }
}

/// Sample points for the pointwise verifier: the given ones, or the anchor
/// displaced by `2^k e_1` for `k = -3..=3`.
fn points(pts: &PointsArg, mu: &Measure, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut xs: Vec<Vec<f64>> = pts.xs.iter().map(|p| p.0.clone()).collect();
    if let Some(p) = &pts.points {
        let v = read_json(p)?;
        let items = v.as_array().ok_or_else(|| parse_error("", "expected an array of points"))?;
        for (i, x) in items.iter().enumerate() {
            let coords = x.as_array().ok_or_else(|| parse_error(&format!("/{i}"), "expected an array"))?;
            let point = coords
                .iter()
                .enumerate()
                .map(|(j, c)| json::parse_real(c, &format!("/{i}/{j}")))
                .collect::<Result<Vec<f64>>>()?;
            xs.push(point);
        }
    }
    if xs.is_empty() {
        let a = anchor(mu);
        for k in -3..=3 {
            let mut x = a.clone();
            x[0] += 2f64.powi(k);
            xs.push(x);
        }
    }
    for x in &xs {
        check_dim(x, n, "point")?;
    }
    Ok(xs)
}

fn check_dim(x: &[f64], n: usize, what: &str) -> Result<()> {
    if x.len() != n {
        return Err(Error::invalid(format!("{what} has dimension {} but n = {n}", x.len())));
    }
    Ok(())
}

fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e
}

fn csv_real(v: f64) -> String {
    if v.is_finite() {
        format_real(v)
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn parse_params(s: &str) -> std::result::Result<Params, String> {
    params_from_str(s).map_err(|e| e.to_string())
}

fn parse_window(s: &str) -> std::result::Result<GenerationWindow, String> {
    let (a, b) = s.split_once(':').ok_or("expected gmin:gmax")?;
    let a: i32 = a.trim().parse().map_err(|_| format!("bad generation {a:?}"))?;
    let b: i32 = b.trim().parse().map_err(|_| format!("bad generation {b:?}"))?;
    GenerationWindow::new(a, b).map_err(|e| e.to_string())
}

/// Comma-separated list of reals.
#[derive(Debug, Clone, PartialEq)]
struct Point(Vec<f64>);

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?}")))
        .collect::<std::result::Result<Vec<f64>, String>>()
        .map(Point)
}

fn parse_cube(s: &str) -> std::result::Result<DyadicCube, String> {
    let (g, idx) = s.split_once(':').ok_or("expected g:i,j,...")?;
    let g: i32 = g.trim().parse().map_err(|_| format!("bad generation {g:?}"))?;
    let idx = idx
        .split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|_| format!("bad index {t:?}")))
        .collect::<std::result::Result<Vec<i64>, String>>()?;
    Ok(DyadicCube::new(g, idx))
}

fn parse_mesh(s: &str) -> std::result::Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected rmin:rmax:count".into());
    }
    let a = parts[0].trim().parse().map_err(|_| "bad rmin")?;
    let b = parts[1].trim().parse().map_err(|_| "bad rmax")?;
    let c = parts[2].trim().parse().map_err(|_| "bad count")?;
    Ok((a, b, c))
}

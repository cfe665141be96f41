//! Configuration, results cache and file export behind the `tipcurve` binary.

mod cache;
mod config;
pub mod csv;
pub mod svg;

pub use cache::{cache_key, write_atomic, Artifacts, ResultsCache};
pub use config::{Mode, RateGrid, RunConfig, Span, DEFAULT_C_TOL, DEFAULT_TOL};
pub use svg::{emit_svg, ChartStyle, Series};

use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::bifurcation::{
    classify_detailed, collision_diagnostics, find_tipping_points, lambda_star, lambda_star_of_c, Case,
    Direction, LambdaStarResult,
};
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::integrator::{integrate, Trajectory};
use crate::riccati::{uniform_grid, QuadraticModel, TransitionModel};
use csv::{write_table, Cell};

pub const WORKERS_ENV: &str = "TIPCURVE_WORKERS";
pub const DEFAULT_OUT_DIR: &str = "tipcurve-out";
const CACHE_DIR: &str = ".cache";
/// Samples per probe in the classify export.
const PROBE_SAMPLES: usize = 1001;

pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INCONSISTENCY: i32 = 3;
    pub const INTEGRATION: i32 = 4;
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) => exit::CONFIG,
        Error::Inconsistency(_) | Error::NotHyperbolic { .. } => exit::INCONSISTENCY,
        Error::Stiffness { .. } | Error::Numeric { .. } => exit::INTEGRATION,
        Error::Io(_) => exit::IO,
    }
}

/// Machine-readable one-line error report.
pub fn error_json(e: &Error) -> String {
    let kind = match e {
        Error::Config(_) => "config",
        Error::Domain(_) => "domain",
        Error::Inconsistency(_) => "inconsistency",
        Error::NotHyperbolic { .. } => "not-hyperbolic",
        Error::Stiffness { .. } => "stiffness",
        Error::Numeric { .. } => "numeric",
        Error::Io(_) => "io",
    };
    json!({ "error": kind, "exit_code": exit_code(e), "message": e.to_string() }).to_string()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's `mode` (they must agree when both are set).
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub no_cache: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub mode: Mode,
    pub out_dir: PathBuf,
    pub key: String,
    pub cache_hit: bool,
    pub workers: usize,
    /// Written files, sorted by name.
    pub files: Vec<PathBuf>,
}

/// Worker count: explicit value, then `TIPCURVE_WORKERS`, then the config,
/// then the available parallelism.
pub fn resolve_workers(explicit: Option<usize>, config: Option<usize>) -> Result<usize> {
    let from_env = match std::env::var(WORKERS_ENV) {
        Ok(s) if !s.trim().is_empty() => Some(
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("{WORKERS_ENV}={s:?} is not a count")))?,
        ),
        _ => None,
    };
    let n = explicit
        .or(from_env)
        .or(config)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    Ok(n)
}

/// Validates `config`, then reproduces the run from the cache or computes it
/// on a pool of the requested size, and writes the artifacts.
///
/// Nothing is written when validation fails.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    let mode = config.resolve_mode(opts.mode)?;
    config.validate(mode)?;
    let workers = resolve_workers(opts.workers, config.workers)?;
    let out_dir = opts
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let key = cache_key(&config.canonical_key_text(mode));
    let cache = ResultsCache::new(out_dir.join(CACHE_DIR));

    let cached = if opts.no_cache { None } else { cache.get(&key) };
    let cache_hit = cached.is_some();
    let artifacts = match cached {
        Some(files) => files,
        None => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Io(format!("thread pool: {e}")))?;
            let files = pool.install(|| compute(mode, config))?;
            if !opts.no_cache {
                cache.put(&key, &files)?;
            }
            files
        }
    };

    fs::create_dir_all(&out_dir)?;
    let mut files = Vec::with_capacity(artifacts.len());
    for (name, text) in &artifacts {
        let path = out_dir.join(name);
        write_atomic(&path, text.as_bytes())?;
        files.push(path);
    }
    Ok(RunReport {
        mode,
        out_dir,
        key,
        cache_hit,
        workers,
        files,
    })
}

/// Runs `mode` on the current rayon pool and renders every output file.
pub fn compute(mode: Mode, config: &RunConfig) -> Result<Artifacts> {
    match mode {
        Mode::Simulate => simulate(config),
        Mode::Classify => classify_mode(config),
        Mode::LambdaStar => lambda_star_mode(config),
        Mode::Curve => curve(config),
        Mode::Tipping => tipping(config),
        Mode::Collision => collision(config),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("results serialize");
    s.push('\n');
    s
}

fn zero_q() -> Forcing {
    Forcing::constant(0.0)
}

fn simulate(config: &RunConfig) -> Result<Artifacts> {
    let span = config.span.expect("validated");
    let base = &config.classifier.integrator;
    let (traj, equation, threshold) = match config.c {
        Some(c) => {
            let model = TransitionModel::new(config.forcing.clone(), c, config.lambda)?;
            let cfg = base.with_absorbing_bound(model.bound_m_y());
            let traj = integrate(|t, y| model.rhs(t, y), span.t0, span.x0, span.t1, &cfg)?;
            (traj, "transition", cfg.blowup_threshold)
        }
        None => {
            let q = config.q.clone().unwrap_or_else(zero_q);
            let model = QuadraticModel::new(q, config.forcing.clone(), config.lambda);
            let cfg = model.integrator_config(base);
            let traj = integrate(|t, x| model.rhs(t, x), span.t0, span.x0, span.t1, &cfg)?;
            (traj, "quadratic", cfg.blowup_threshold)
        }
    };
    let mut files = Artifacts::new();
    files.insert(
        "result.json".into(),
        to_json(&json!({
            "mode": Mode::Simulate,
            "equation": equation,
            "outcome": traj.outcome,
            "t_end": traj.end(),
            "x_end": traj.last_value(),
            "steps": traj.steps(),
        })),
    );
    files.insert("trajectory.csv".into(), traj.to_csv());
    let series = [Series::new("x", traj.samples().collect())];
    let style = ChartStyle {
        title: format!("simulate: {equation} equation"),
        x_label: "t".into(),
        y_label: "x".into(),
        y_clip: Some(threshold),
        zero_line: true,
    };
    files.insert("trajectory.svg".into(), emit_svg(&series, &style)?);
    Ok(files)
}

fn probe_series(traj: &Trajectory, grid: &[f64]) -> Vec<(f64, f64)> {
    grid.iter()
        .map(|&t| (t, traj.eval(t).unwrap_or(f64::NAN)))
        .collect()
}

fn classify_mode(config: &RunConfig) -> Result<Artifacts> {
    let c = config.c.expect("validated");
    let model = TransitionModel::new(config.forcing.clone(), c, config.lambda)?;
    let run = classify_detailed(&model, &config.classifier)?;
    let (lo, hi) = run.verdict.window;
    let grid = uniform_grid(lo, hi, PROBE_SAMPLES);
    let a = probe_series(&run.a_probe, &grid);
    let r = match &run.r_probe {
        Some(r) => probe_series(r, &grid),
        None => grid.iter().map(|&t| (t, f64::NAN)).collect(),
    };
    let mut files = Artifacts::new();
    files.insert(
        "result.json".into(),
        to_json(&json!({
            "mode": Mode::Classify,
            "c": c,
            "lambda": config.lambda,
            "case": run.verdict.case,
            "verdict": run.verdict,
        })),
    );
    let rows: Vec<Vec<Cell>> = a
        .iter()
        .zip(&r)
        .map(|(&(t, av), &(_, rv))| vec![t.into(), av.into(), rv.into()])
        .collect();
    files.insert("probes.csv".into(), write_table(&["t", "a", "r"], &rows));
    let m = model.bound_m_y();
    let style = ChartStyle {
        title: format!("c = {c}, lambda = {}: case {:?}", config.lambda, run.verdict.case),
        x_label: "t".into(),
        y_label: "y".into(),
        y_clip: Some(2.0 * m),
        zero_line: true,
    };
    files.insert(
        "probes.svg".into(),
        emit_svg(&[Series::new("a-probe", a), Series::new("r-probe", r).dashed()], &style)?,
    );
    Ok(files)
}

fn lambda_star_mode(config: &RunConfig) -> Result<Artifacts> {
    let tol = config.tol();
    let result = match config.c {
        Some(c) => lambda_star_of_c(&config.forcing, c, tol, &config.classifier)?,
        None => {
            let q = config.q.clone().unwrap_or_else(zero_q);
            lambda_star(&q, &config.forcing, tol, &config.classifier)?
        }
    };
    let mut files = Artifacts::new();
    files.insert(
        "result.json".into(),
        to_json(&json!({
            "mode": Mode::LambdaStar,
            "c": config.c,
            "tol": tol,
            "lambda_star": result,
        })),
    );
    Ok(files)
}

fn rate_grid(g: &RateGrid) -> Vec<f64> {
    if g.n == 1 {
        vec![g.lo]
    } else {
        uniform_grid(g.lo, g.hi, g.n)
    }
}

/// A sign change of λ*(c) between two consecutive rates. λ* < 0 means the
/// equation at λ = 0 has an attractor-repeller pair (Case A).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignChange {
    pub c_lo: f64,
    pub c_hi: f64,
    pub direction: Direction,
}

/// Sign changes of λ* along a curve sorted by rate. Exact zeros are skipped.
pub fn sign_changes(curve: &[(f64, f64)]) -> Vec<SignChange> {
    let signed: Vec<(f64, f64)> = curve.iter().copied().filter(|&(_, v)| v != 0.0).collect();
    signed
        .windows(2)
        .filter(|w| (w[0].1 < 0.0) != (w[1].1 < 0.0))
        .map(|w| SignChange {
            c_lo: w[0].0,
            c_hi: w[1].0,
            direction: if w[0].1 < 0.0 {
                Direction::AToC
            } else {
                Direction::CToA
            },
        })
        .collect()
}

#[derive(Serialize)]
struct CurveRow<'a> {
    c: f64,
    #[serde(flatten)]
    result: &'a LambdaStarResult,
}

fn curve(config: &RunConfig) -> Result<Artifacts> {
    let grid = rate_grid(&config.c_grid.expect("validated"));
    let tol = config.tol();
    let results = grid
        .par_iter()
        .map(|&c| lambda_star_of_c(&config.forcing, c, tol, &config.classifier))
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = grid.iter().zip(&results).map(|(&c, r)| (c, r.value)).collect();
    let changes = sign_changes(&pts);

    let rows: Vec<Vec<Cell>> = grid
        .iter()
        .zip(&results)
        .map(|(&c, r)| vec![c.into(), r.value.into(), r.iterations.into(), r.oracle_calls.into()])
        .collect();
    let points: Vec<CurveRow> = grid
        .iter()
        .zip(&results)
        .map(|(&c, result)| CurveRow { c, result })
        .collect();
    let mut files = Artifacts::new();
    files.insert(
        "curve.csv".into(),
        write_table(&["c", "lambda_star", "iterations", "oracle_calls"], &rows),
    );
    files.insert(
        "result.json".into(),
        to_json(&json!({
            "mode": Mode::Curve,
            "tol": tol,
            "sign_changes": changes,
            "points": points,
        })),
    );
    let style = ChartStyle {
        title: "tipping curve".into(),
        x_label: "c".into(),
        y_label: "lambda*(c)".into(),
        y_clip: None,
        zero_line: true,
    };
    files.insert("curve.svg".into(), emit_svg(&[Series::new("lambda*", pts)], &style)?);
    Ok(files)
}

fn tipping(config: &RunConfig) -> Result<Artifacts> {
    let g = config.c_grid.expect("validated");
    let points = find_tipping_points(&config.forcing, (g.lo, g.hi), g.n, config.c_tol(), &config.classifier)?;
    let rows: Vec<Vec<Cell>> = points
        .iter()
        .map(|p| {
            let dir = match p.direction {
                Direction::AToC => 1.0,
                Direction::CToA => -1.0,
            };
            vec![p.c.into(), dir.into(), p.bracket.0.into(), p.bracket.1.into()]
        })
        .collect();
    let mut files = Artifacts::new();
    files.insert(
        "tipping.csv".into(),
        write_table(&["c", "direction", "bracket_lo", "bracket_hi"], &rows),
    );
    files.insert(
        "result.json".into(),
        to_json(&json!({
            "mode": Mode::Tipping,
            "c_tol": config.c_tol(),
            "tipping_points": points,
        })),
    );
    Ok(files)
}

fn collision(config: &RunConfig) -> Result<Artifacts> {
    let c0 = config.c0.expect("validated");
    let rows = collision_diagnostics(
        &config.forcing,
        c0,
        config.deltas.as_deref().expect("validated"),
        &config.classifier,
    )?;
    let table: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            let case = match r.verdict.case {
                Case::A => 0.0,
                Case::B => 1.0,
                Case::C => 2.0,
            };
            vec![
                r.c.into(),
                r.delta.into(),
                case.into(),
                r.gap_min.into(),
                r.gap_sup.into(),
                r.a_escape.into(),
                r.r_escape.into(),
            ]
        })
        .collect();
    let mut files = Artifacts::new();
    files.insert(
        "collision.csv".into(),
        write_table(
            &["c", "delta", "case", "gap_min", "gap_sup", "a_escape", "r_escape"],
            &table,
        ),
    );
    files.insert(
        "result.json".into(),
        to_json(&json!({
            "mode": Mode::Collision,
            "c0": c0,
            "rows": rows,
        })),
    );
    let gaps: Vec<(f64, f64)> = rows.iter().map(|r| (r.delta, r.gap_min.unwrap_or(f64::NAN))).collect();
    if gaps.iter().any(|g| g.1.is_finite()) {
        let style = ChartStyle {
            title: format!("probe gap near c0 = {c0}"),
            x_label: "c - c0".into(),
            y_label: "min (a - r)".into(),
            y_clip: None,
            zero_line: true,
        };
        files.insert("collision.svg".into(), emit_svg(&[Series::new("min (a - r)", gaps)], &style)?);
    }
    Ok(files)
}

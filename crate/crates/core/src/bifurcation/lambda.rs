use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::{classify, classify_quadratic, ClassifierParams};
use super::Case;
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::riccati::{QuadraticModel, TransitionModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaStarResult {
    /// Midpoint of the final bracket.
    pub value: f64,
    /// `lo` carries no bounded solutions (Case C), `hi` does (Case A or B).
    pub bracket: (f64, f64),
    pub iterations: u32,
    pub oracle_calls: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Probe horizon for the λ* oracle without asymptotic structure.
///
/// Slightly below λ* the probes need a time of order `π/√(λ* - λ)` to pass
/// the saddle-node bottleneck, so a window `[-H, H]` cannot see Case C closer
/// than `(π/2H)²` to λ*. The horizon is stretched until that blind band is
/// a quarter of `tol`.
pub fn generic_horizon(horizon: f64, tol: f64) -> f64 {
    horizon.max(std::f64::consts::PI / tol.sqrt())
}

/// Saddle-node value λ*(q, p): bounded solutions of `x' = -x² + q x + p + λ`
/// exist iff `λ >= λ*`.
pub fn lambda_star(q: &Forcing, p: &Forcing, tol: f64, params: &ClassifierParams) -> Result<LambdaStarResult> {
    check_tol(tol)?;
    let horizon = generic_horizon(params.horizon, tol);
    let model = QuadraticModel::new(q.clone(), p.clone(), 0.0);
    let q_sup = q.sup_bound();
    let lo = -(q_sup * q_sup / 4.0 + p.sup_bound()) - tol;
    let hi = p.sup_bound() + tol;
    bisect(lo, hi, tol, params, |lambda| {
        classify_quadratic(&model.with_lambda(lambda), horizon, params).map(|run| run.verdict.case)
    })
}

/// λ*(c) = λ*(0, p - q_c), found by bisection on λ with the transition
/// classifier as oracle. At `c = 0` there is no transition and the general
/// oracle is used.
pub fn lambda_star_of_c(p: &Forcing, c: f64, tol: f64, params: &ClassifierParams) -> Result<LambdaStarResult> {
    check_tol(tol)?;
    if c == 0.0 {
        return lambda_star(&Forcing::constant(0.0), p, tol, params);
    }
    TransitionModel::new(p.clone(), c, 0.0)?;
    let bound = p.sup_bound() + 1.0 + tol;
    bisect(-bound, bound, tol, params, |lambda| {
        classify(&TransitionModel::new(p.clone(), c, lambda)?, params).map(|v| v.case)
    })
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("tolerance must be positive, got {tol}")))
    }
}

fn bisect<O>(mut lo: f64, mut hi: f64, tol: f64, params: &ClassifierParams, oracle: O) -> Result<LambdaStarResult>
where
    O: Fn(f64) -> Result<Case>,
{
    let mut calls = 0u32;
    let mut ask = |lambda: f64| {
        calls += 1;
        oracle(lambda)
    };
    let at_lo = ask(lo)?;
    let at_hi = ask(hi)?;
    if at_lo.has_bounded_solutions() || !at_hi.has_bounded_solutions() {
        return Err(Error::Inconsistency(format!(
            "bracket verdicts not ordered: {at_lo:?} at λ = {lo}, {at_hi:?} at λ = {hi}"
        )));
    }
    let mut iterations = 0u32;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ask(mid)?.has_bounded_solutions() {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let mut warnings = Vec::new();
    let accuracy = params.integrator.rel_tol.max(params.integrator.abs_tol);
    if tol < 10.0 * accuracy {
        warnings.push(format!(
            "tolerance {tol:e} is below 10x the integrator tolerance {accuracy:e}"
        ));
    }
    Ok(LambdaStarResult {
        value: 0.5 * (lo + hi),
        bracket: (lo, hi),
        iterations,
        oracle_calls: calls,
        warnings,
    })
}

/// One point of a λ*(c) sweep. Failures are kept inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub c: f64,
    pub result: std::result::Result<LambdaStarResult, String>,
}

impl CurvePoint {
    pub fn value(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.value)
    }
}

/// λ*(c) over `c_grid`, evaluated in parallel on the current rayon pool.
/// Output order matches input order.
pub fn lambda_star_curve(
    p: &Forcing,
    c_grid: &[f64],
    tol: f64,
    params: &ClassifierParams,
) -> Result<Vec<CurvePoint>> {
    if c_grid.is_empty() {
        return Err(Error::Domain("empty rate grid".into()));
    }
    if c_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("rate grid must be strictly ascending".into()));
    }
    Ok(c_grid
        .par_iter()
        .map(|&c| CurvePoint {
            c,
            result: lambda_star_of_c(p, c, tol, params).map_err(|e| e.to_string()),
        })
        .collect())
}

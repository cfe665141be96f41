use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::{classify, ClassifierParams};
use super::{Case, CaseVerdict};
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::integrator::integrate;
use crate::riccati::{uniform_grid, TransitionModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Attractor-repeller pair lost as the rate increases.
    #[serde(rename = "A->C")]
    AToC,
    /// Attractor-repeller pair recovered as the rate increases.
    #[serde(rename = "C->A")]
    CToA,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TippingPoint {
    pub c: f64,
    pub direction: Direction,
    pub bracket: (f64, f64),
}

fn classify_at(p: &Forcing, c: f64, params: &ClassifierParams) -> Result<Case> {
    classify(&TransitionModel::new(p.clone(), c, 0.0)?, params).map(|v| v.case)
}

/// Rates in `c_range` where the transition equation (λ = 0) switches between
/// Case A and Case C.
///
/// A coarse sweep of `coarse_n` rates is refined by bisection on `c` in every
/// cell whose ends disagree. A cell holding an even number of crossings is
/// invisible to the sweep.
pub fn find_tipping_points(
    p: &Forcing,
    c_range: (f64, f64),
    coarse_n: usize,
    c_tol: f64,
    params: &ClassifierParams,
) -> Result<Vec<TippingPoint>> {
    let (lo, hi) = c_range;
    if !(lo < hi) || lo < 0.0 {
        return Err(Error::Domain(format!("invalid rate range [{lo}, {hi}]")));
    }
    if coarse_n < 2 {
        return Err(Error::Domain("coarse_n must be at least 2".into()));
    }
    if !(c_tol > 0.0) {
        return Err(Error::Domain("c_tol must be positive".into()));
    }
    let grid = uniform_grid(lo, hi, coarse_n);
    let cases = grid
        .par_iter()
        .map(|&c| classify_at(p, c, params))
        .collect::<Result<Vec<_>>>()?;

    // B verdicts on the grid are crossing witnesses themselves; the direction
    // comes from the nearest non-B neighbours.
    let mut cells = Vec::new();
    let mut points = Vec::new();
    let mut prev: Option<(usize, Case)> = None;
    for (i, &case) in cases.iter().enumerate() {
        if case == Case::B {
            continue;
        }
        if let Some((j, before)) = prev {
            if before != case {
                let direction = if before == Case::A {
                    Direction::AToC
                } else {
                    Direction::CToA
                };
                if i == j + 1 {
                    cells.push((grid[j], grid[i], direction));
                } else {
                    for k in j + 1..i {
                        points.push((
                            k,
                            TippingPoint {
                                c: grid[k],
                                direction,
                                bracket: (grid[k], grid[k]),
                            },
                        ));
                    }
                }
            }
        }
        prev = Some((i, case));
    }

    let refined = cells
        .par_iter()
        .map(|&(a, b, direction)| refine(p, a, b, direction, c_tol, params))
        .collect::<Result<Vec<_>>>()?;
    let mut all: Vec<TippingPoint> = refined;
    all.extend(points.into_iter().map(|(_, tp)| tp));
    all.sort_by(|x, y| x.c.total_cmp(&y.c));
    Ok(all)
}

fn refine(
    p: &Forcing,
    mut a: f64,
    mut b: f64,
    direction: Direction,
    c_tol: f64,
    params: &ClassifierParams,
) -> Result<TippingPoint> {
    let left = match direction {
        Direction::AToC => Case::A,
        Direction::CToA => Case::C,
    };
    while b - a > c_tol {
        let mid = 0.5 * (a + b);
        match classify_at(p, mid, params)? {
            Case::B => {
                return Ok(TippingPoint {
                    c: mid,
                    direction,
                    bracket: (mid, mid),
                })
            }
            case if case == left => a = mid,
            _ => b = mid,
        }
    }
    Ok(TippingPoint {
        c: 0.5 * (a + b),
        direction,
        bracket: (a, b),
    })
}

/// Behaviour of the probes at one rate near a tipping point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionRow {
    pub c: f64,
    /// Signed offset from the tipping rate.
    pub delta: f64,
    pub verdict: CaseVerdict,
    /// `min (a - r)` over `[-t*, t*]` when both probes cover it.
    pub gap_min: Option<f64>,
    /// `sup |a - r|` over `[-t*, t*]` when both probes cover it.
    pub gap_sup: Option<f64>,
    /// Escape time of the a-probe (right end of the domain of `a`).
    pub a_escape: Option<f64>,
    /// Backward escape time of the r-probe (left end of the domain of `r`).
    pub r_escape: Option<f64>,
}

/// Probes at `c_0 - δ` and `c_0 + δ` for every `δ` in `deltas` (a zero offset
/// gives a single row at `c_0`). Rows are ordered by rate.
///
/// On the Case A side the gap between the probes closes as the rate
/// approaches `c_0`; on the Case C side the escape times recede.
pub fn collision_diagnostics(
    p: &Forcing,
    c_0: f64,
    deltas: &[f64],
    params: &ClassifierParams,
) -> Result<Vec<CollisionRow>> {
    let mut offsets: Vec<f64> = Vec::new();
    for &d in deltas {
        let d = d.abs();
        if d == 0.0 {
            offsets.push(0.0);
        } else {
            offsets.push(-d);
            offsets.push(d);
        }
    }
    offsets.sort_by(f64::total_cmp);
    offsets.dedup();
    offsets
        .par_iter()
        .filter(|&&d| c_0 + d >= 0.0)
        .map(|&d| collision_row(p, c_0, d, params))
        .collect()
}

fn collision_row(p: &Forcing, c_0: f64, delta: f64, params: &ClassifierParams) -> Result<CollisionRow> {
    let c = c_0 + delta;
    let model = TransitionModel::new(p.clone(), c, 0.0)?;
    let verdict = classify(&model, params)?;
    let t_star = params.effective_t_star();
    let h = params.horizon;
    let m = model.bound_m_y();
    let cfg = params.integrator.with_absorbing_bound(m);
    let rhs = |t: f64, y: f64| model.rhs(t, y);
    let a = integrate(rhs, -h, m, h, &cfg)?;
    let r = integrate(rhs, h, -m, -h, &cfg)?;
    let (mut gap_min, mut gap_sup) = (None, None);
    if a.covers(t_star) && r.covers(-t_star) {
        let diffs: Vec<f64> = uniform_grid(-t_star, t_star, params.grid_points)
            .into_iter()
            .map(|t| a.eval(t).unwrap() - r.eval(t).unwrap())
            .collect();
        gap_min = diffs.iter().copied().reduce(f64::min);
        gap_sup = diffs.iter().map(|d| d.abs()).reduce(f64::max);
    }
    Ok(CollisionRow {
        c,
        delta,
        verdict,
        gap_min,
        gap_sup,
        a_escape: a.escape_time(),
        r_escape: r.escape_time(),
    })
}

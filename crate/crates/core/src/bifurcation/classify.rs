use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Case, CaseVerdict, Probe, TailDiagnostics};
use crate::error::{Error, Result};
use crate::integrator::{integrate, integrate_until, IntegratorConfig, Trajectory};
use crate::riccati::{uniform_grid, QuadraticModel, TransitionModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierParams {
    pub t_star: f64,
    pub horizon: f64,
    pub sep_tol: f64,
    /// Minimum number of grid points for the separation test.
    pub grid_points: usize,
    pub integrator: IntegratorConfig,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            t_star: 50.0,
            horizon: 1000.0,
            sep_tol: 1e-7,
            grid_points: 2001,
            integrator: IntegratorConfig::default(),
        }
    }
}

/// Largest admissible value of the rate pulse outside `[-t*, t*]`.
const PULSE_MARGIN: f64 = 0.01;
/// Upper bound on the spacing of the separation grid.
const MAX_GRID_SPACING: f64 = 0.05;

/// Where `a - r` is sampled on the separation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GapSampling {
    /// Uniform grid with spacing at most `MAX_GRID_SPACING`.
    Uniform,
    /// `grid_points` uniform points plus every step node of both probes.
    /// Used on long windows, where the uniform rule would need millions of
    /// points.
    ProbeNodes,
}

impl ClassifierParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_star > 0.0 && self.t_star < self.horizon) {
            return Err(Error::Domain(format!(
                "need 0 < t_star < horizon, got t_star = {}, horizon = {}",
                self.t_star, self.horizon
            )));
        }
        if !(self.sep_tol > 0.0) {
            return Err(Error::Domain("sep_tol must be positive".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::Domain("grid_points must be at least 2".into()));
        }
        self.integrator.validate()
    }

    /// `max(t_star, 1/(0.01 π))`: outside this window the rate pulse stays
    /// below 0.01 for every rate.
    pub fn effective_t_star(&self) -> f64 {
        self.t_star.max(1.0 / (PULSE_MARGIN * PI))
    }
}

/// A classification together with the probe trajectories it was based on.
#[derive(Debug, Clone)]
pub struct ProbeRun {
    pub verdict: CaseVerdict,
    pub a_probe: Trajectory,
    /// Absent when the a-probe already witnessed Case C.
    pub r_probe: Option<Trajectory>,
}

/// Classifies the transition equation from its y-frame probes.
///
/// The a-probe starts at `(-horizon, m_y)` and runs to `t*`; falling below
/// `-m_y` witnesses Case C. Otherwise the r-probe runs back from
/// `(horizon, -m_y)` to `-t*` and the sign of `min (a - r)` over `[-t*, t*]`
/// decides between A, B (within `sep_tol`) and C.
pub fn classify(model: &TransitionModel, params: &ClassifierParams) -> Result<CaseVerdict> {
    classify_detailed(model, params).map(|run| run.verdict)
}

pub fn classify_detailed(model: &TransitionModel, params: &ClassifierParams) -> Result<ProbeRun> {
    params.validate()?;
    let t_star = params.effective_t_star();
    if t_star >= params.horizon {
        return Err(Error::Domain("effective t* exceeds the horizon".into()));
    }
    let m = model.bound_m_y();
    probe_classify(
        |t, y| model.rhs(t, y),
        m,
        params.horizon,
        (-t_star, t_star),
        GapSampling::Uniform,
        params,
    )
}

/// Classifies `x' = -x² + q x + p + λ` with probes on `[-horizon, horizon]`
/// and the separation test over the whole window.
pub fn classify_quadratic(
    model: &QuadraticModel,
    horizon: f64,
    params: &ClassifierParams,
) -> Result<ProbeRun> {
    params.validate()?;
    probe_classify(
        |t, x| model.rhs(t, x),
        model.bound_m(),
        horizon,
        (-horizon, horizon),
        GapSampling::ProbeNodes,
        params,
    )
}

fn probe_classify<F>(
    rhs: F,
    m: f64,
    horizon: f64,
    window: (f64, f64),
    sampling: GapSampling,
    params: &ClassifierParams,
) -> Result<ProbeRun>
where
    F: Fn(f64, f64) -> f64,
{
    let cfg = params.integrator.with_absorbing_bound(m);
    let (lo, hi) = window;

    let (a_probe, fell) = integrate_until(&rhs, -horizon, m, hi, &cfg, |_, x| x + m)?;
    if let Some(t_fall) = fell.or_else(|| a_probe.escaped().then(|| a_probe.end())) {
        let escape = run_to_escape(&rhs, &a_probe, t_fall, t_fall + horizon, &cfg)?;
        return Ok(ProbeRun {
            verdict: escape_verdict(escape, Probe::A, window, &a_probe, None),
            a_probe,
            r_probe: None,
        });
    }

    let (r_probe, rose) = integrate_until(&rhs, horizon, -m, lo, &cfg, |_, x| x - m)?;
    if let Some(t_rise) = rose.or_else(|| r_probe.escaped().then(|| r_probe.end())) {
        let escape = run_to_escape(&rhs, &r_probe, t_rise, t_rise - horizon, &cfg)?;
        return Ok(ProbeRun {
            verdict: escape_verdict(escape, Probe::R, window, &a_probe, Some(&r_probe)),
            a_probe,
            r_probe: Some(r_probe),
        });
    }

    let mut times = match sampling {
        GapSampling::Uniform => {
            let n = params
                .grid_points
                .max(((hi - lo) / MAX_GRID_SPACING).ceil() as usize + 1);
            uniform_grid(lo, hi, n)
        }
        GapSampling::ProbeNodes => uniform_grid(lo, hi, params.grid_points),
    };
    if sampling == GapSampling::ProbeNodes {
        let inside = |t: &&f64| (lo..=hi).contains(*t);
        times.extend(a_probe.times().iter().filter(inside));
        times.extend(r_probe.times().iter().filter(inside));
    }
    let gap = times
        .into_iter()
        .map(|t| a_probe.eval(t).expect("a-probe covers the window") - r_probe.eval(t).expect("r-probe covers the window"))
        .fold(f64::INFINITY, f64::min);
    let diagnostics = diagnostics(window, &a_probe, Some(&r_probe));

    let (case, escape_time, escaped_probe) = if gap > params.sep_tol {
        (Case::A, None, None)
    } else if gap >= -params.sep_tol {
        (Case::B, None, None)
    } else {
        // a < r somewhere: no bounded solution, so the a-probe must escape
        // after the window.
        let cont = integrate(&rhs, hi, a_probe.last_value(), hi + horizon, &cfg)?;
        match cont.escape_time() {
            Some(t) => (Case::C, Some(t), Some(Probe::A)),
            None => {
                return Err(Error::Inconsistency(format!(
                    "probes cross (gap {gap:e}) but the a-probe stays bounded up to t = {}",
                    hi + horizon
                )))
            }
        }
    };
    Ok(ProbeRun {
        verdict: CaseVerdict {
            case,
            gap: Some(gap),
            escape_time,
            escaped_probe,
            window,
            diagnostics,
        },
        a_probe,
        r_probe: Some(r_probe),
    })
}

/// Continues `probe` from `t_from` towards `t_limit` until it escapes.
fn run_to_escape<F>(
    rhs: &F,
    probe: &Trajectory,
    t_from: f64,
    t_limit: f64,
    cfg: &IntegratorConfig,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    if let Some(t) = probe.escape_time() {
        return Ok(t);
    }
    let x = probe.eval(t_from).unwrap_or_else(|| probe.last_value());
    let cont = integrate(rhs, t_from, x, t_limit, cfg)?;
    cont.escape_time().ok_or_else(|| {
        Error::Inconsistency(format!(
            "probe left the absorbing region at t = {t_from} but did not escape"
        ))
    })
}

fn escape_verdict(
    escape_time: f64,
    probe: Probe,
    window: (f64, f64),
    a: &Trajectory,
    r: Option<&Trajectory>,
) -> CaseVerdict {
    CaseVerdict {
        case: Case::C,
        gap: None,
        escape_time: Some(escape_time),
        escaped_probe: Some(probe),
        window,
        diagnostics: diagnostics(window, a, r),
    }
}

fn diagnostics(window: (f64, f64), a: &Trajectory, r: Option<&Trajectory>) -> TailDiagnostics {
    let (lo, hi) = window;
    TailDiagnostics {
        a_lo: a.eval(lo),
        a_hi: a.eval(hi),
        r_lo: r.and_then(|r| r.eval(lo)),
        r_hi: r.and_then(|r| r.eval(hi)),
    }
}

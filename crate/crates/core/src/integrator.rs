//! Adaptive Dormand–Prince 5(4) integration of scalar ODEs.
//!
//! Besides the usual embedded error control the integrator knows about the
//! finite-time escape of concave quadratic equations: once `|x|` exceeds
//! [`IntegratorConfig::blowup_threshold`] while still growing, the run stops
//! and the escape time is extrapolated from the Riccati tail `x ≈ 1/(t - t_e)`.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

static ACCEPTED_STEPS: AtomicU64 = AtomicU64::new(0);

/// Total accepted integrator steps in this process.
pub fn total_steps() -> u64 {
    ACCEPTED_STEPS.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial step; estimated from the right-hand side when absent.
    pub h_init: Option<f64>,
    /// Defaults to `1e-12 * span`.
    pub h_min: Option<f64>,
    /// Defaults to `span / 10`.
    pub h_max: Option<f64>,
    pub blowup_threshold: f64,
    pub max_steps: u64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-9,
            h_init: None,
            h_min: None,
            h_max: None,
            blowup_threshold: 100.0,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorConfig {
    /// Sets the escape threshold to `max(100, 10 m)` for an absorbing bound `m`.
    pub fn with_absorbing_bound(mut self, m: f64) -> Self {
        self.blowup_threshold = (10.0 * m).max(100.0);
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::Domain("blowup_threshold must be positive".into()));
        }
        for (name, v) in [
            ("h_init", self.h_init),
            ("h_min", self.h_min),
            ("h_max", self.h_max),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::Domain(format!("{name} must be positive")));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (self.h_min, self.h_max) {
            if lo > hi {
                return Err(Error::Domain("h_min must not exceed h_max".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Completed,
    /// `sign` is the sign of the state at escape (`-1` or `+1`).
    Escaped { t_escape: f64, sign: i8 },
}

/// Numerical solution with 4th-order continuous extension on every step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub direction: Direction,
    times: Vec<f64>,
    values: Vec<f64>,
    // Hairer's five coefficients of the dopri5 interpolant, one row per step.
    dense: Vec<[f64; 5]>,
    pub outcome: Outcome,
    pub event_time: Option<f64>,
    pub rhs_evals: u64,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn steps(&self) -> usize {
        self.dense.len()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one sample")
    }

    pub fn last_value(&self) -> f64 {
        *self.values.last().expect("trajectory has at least one sample")
    }

    pub fn escaped(&self) -> bool {
        matches!(self.outcome, Outcome::Escaped { .. })
    }

    pub fn escape_time(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Escaped { t_escape, .. } => Some(t_escape),
            Outcome::Completed => None,
        }
    }

    /// Whether `t` lies in the covered span.
    pub fn covers(&self, t: f64) -> bool {
        let (lo, hi) = self.span();
        t >= lo && t <= hi
    }

    /// `(min t, max t)` of the covered span.
    pub fn span(&self) -> (f64, f64) {
        let (a, b) = (self.start(), self.end());
        (a.min(b), a.max(b))
    }

    /// Dense-output value at `t`, or `None` outside the covered span.
    pub fn eval(&self, t: f64) -> Option<f64> {
        if !self.covers(t) {
            return None;
        }
        if self.dense.is_empty() {
            return Some(self.values[0]);
        }
        let sign = self.direction.sign();
        // times are monotone in the integration direction
        let idx = self.times.partition_point(|&s| (s - t) * sign <= 0.0);
        let step = idx.saturating_sub(1).min(self.dense.len() - 1);
        Some(self.eval_in_step(step, t))
    }

    fn eval_in_step(&self, step: usize, t: f64) -> f64 {
        let t0 = self.times[step];
        let h = self.times[step + 1] - t0;
        let s = (t - t0) / h;
        let s1 = 1.0 - s;
        let r = &self.dense[step];
        r[0] + s * (r[1] + s1 * (r[2] + s * (r[3] + s1 * r[4])))
    }

    /// CSV with header `t,x`, 17 significant digits, LF endings and a trailing
    /// `# escaped t=<val> sign=<+|->` comment when the solution escaped.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x\n");
        for (t, x) in self.samples() {
            let _ = writeln!(out, "{},{}", fmt17(t), fmt17(x));
        }
        if let Outcome::Escaped { t_escape, sign } = self.outcome {
            let s = if sign < 0 { '-' } else { '+' };
            let _ = writeln!(out, "# escaped t={} sign={s}", fmt17(t_escape));
        }
        out
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Integrates `x' = rhs(t, x)` from `(t0, x0)` to `t1`.
pub fn integrate<F>(rhs: F, t0: f64, x0: f64, t1: f64, cfg: &IntegratorConfig) -> Result<Trajectory>
where
    F: Fn(f64, f64) -> f64,
{
    solve(&rhs, t0, x0, t1, cfg, None::<&fn(f64, f64) -> f64>)
}

/// Like [`integrate`], but stops at the first sign change of `event(t, x)`.
/// The returned time is refined on the dense output.
pub fn integrate_until<F, G>(
    rhs: F,
    t0: f64,
    x0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    event: G,
) -> Result<(Trajectory, Option<f64>)>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> f64,
{
    let traj = solve(&rhs, t0, x0, t1, cfg, Some(&event))?;
    let at = traj.event_time;
    Ok((traj, at))
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI step-size control (Hairer–Wanner defaults for dopri5).
const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MAX: f64 = 10.0;
const FAC_MIN: f64 = 0.2;

fn solve<F, G>(
    rhs: &F,
    t0: f64,
    x0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    event: Option<&G>,
) -> Result<Trajectory>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> f64,
{
    cfg.validate()?;
    if !(t0.is_finite() && t1.is_finite() && x0.is_finite()) {
        return Err(Error::Domain("non-finite initial data".into()));
    }
    if t0 == t1 {
        return Err(Error::Domain("integration span is empty".into()));
    }
    let direction = if t1 > t0 {
        Direction::Forward
    } else {
        Direction::Backward
    };
    let dir = direction.sign();
    let span = (t1 - t0).abs();
    let h_max = cfg.h_max.unwrap_or(span / 10.0);
    let h_min = cfg.h_min.unwrap_or(1e-12 * span);

    let mut evals: u64 = 0;
    let mut f = |t: f64, x: f64| -> f64 {
        evals += 1;
        rhs(t, x)
    };

    let mut traj = Trajectory {
        direction,
        times: vec![t0],
        values: vec![x0],
        dense: Vec::new(),
        outcome: Outcome::Completed,
        event_time: None,
        rhs_evals: 0,
    };

    let mut t = t0;
    let mut x = x0;
    let mut k1 = f(t, x);
    if !k1.is_finite() {
        return Err(Error::Numeric { t, x });
    }
    let mut h = match cfg.h_init {
        Some(h) => h.min(h_max),
        None => initial_step(&mut f, t, x, k1, dir, cfg, h_max),
    }
    .max(h_min);

    let mut g_old = event.map(|g| g(t, x));
    let mut fac_old: f64 = 1e-4;
    let mut rejected_last = false;
    let mut accepted: u64 = 0;

    loop {
        if accepted >= cfg.max_steps {
            return Err(Error::Stiffness { t, h });
        }
        let remaining = (t1 - t) * dir;
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = h * dir;

        let k2 = f(t + C2 * hs, x + hs * A21 * k1);
        let k3 = f(t + C3 * hs, x + hs * (A31 * k1 + A32 * k2));
        let k4 = f(t + C4 * hs, x + hs * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(
            t + C5 * hs,
            x + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
        );
        let t_new = if last { t1 } else { t + hs };
        let k6 = f(
            t + hs,
            x + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
        );
        let x_new = x + hs * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
        let k7 = f(t_new, x_new);

        if !(x_new.is_finite() && k7.is_finite() && k2.is_finite() && k6.is_finite()) {
            h *= 0.1;
            rejected_last = true;
            if h < h_min {
                return Err(Error::Stiffness { t, h });
            }
            continue;
        }

        let err_est = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let sk = cfg.abs_tol + cfg.rel_tol * x.abs().max(x_new.abs());
        let err = (err_est / sk).abs();

        let fac11 = err.powf(0.2 - BETA * 0.75);
        if err <= 1.0 {
            let ydiff = x_new - x;
            let bspl = hs * k1 - ydiff;
            let row = [
                x,
                ydiff,
                bspl,
                ydiff - hs * k7 - bspl,
                hs * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
            ];
            traj.times.push(t_new);
            traj.values.push(x_new);
            traj.dense.push(row);
            accepted += 1;

            if let (Some(g), Some(go)) = (event, g_old) {
                let gn = g(t_new, x_new);
                if go != 0.0 && (gn == 0.0 || gn.signum() != go.signum()) {
                    let step = traj.dense.len() - 1;
                    let te = refine_event(&traj, step, g, go);
                    traj.event_time = Some(te);
                    break;
                }
                g_old = Some(gn);
            }

            if x_new.abs() > cfg.blowup_threshold && x_new.abs() > x.abs() {
                // Riccati tail: x ≈ 1/(t - t_e), forward escape to -∞,
                // backward escape to +∞.
                let riccati_like = (dir > 0.0 && x_new < 0.0) || (dir < 0.0 && x_new > 0.0);
                let t_escape = if riccati_like { t_new - 1.0 / x_new } else { t_new };
                traj.outcome = Outcome::Escaped {
                    t_escape,
                    sign: if x_new < 0.0 { -1 } else { 1 },
                };
                break;
            }

            if last {
                break;
            }

            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = (h / fac).min(h_max);
            if rejected_last {
                h_new = h_new.min(h);
            }
            fac_old = err.max(1e-4);
            rejected_last = false;
            t = t_new;
            x = x_new;
            k1 = k7;
            h = h_new;
        } else {
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            rejected_last = true;
            if h < h_min {
                return Err(Error::Stiffness { t, h });
            }
        }
    }

    ACCEPTED_STEPS.fetch_add(accepted, Ordering::Relaxed);
    traj.rhs_evals = evals;
    Ok(traj)
}

fn initial_step<F>(
    f: &mut F,
    t: f64,
    x: f64,
    k1: f64,
    dir: f64,
    cfg: &IntegratorConfig,
    h_max: f64,
) -> f64
where
    F: FnMut(f64, f64) -> f64,
{
    let sk = cfg.abs_tol + cfg.rel_tol * x.abs();
    let d0 = x.abs() / sk;
    let d1 = k1.abs() / sk;
    let mut h = if d0 < 1e-10 || d1 < 1e-10 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h = h.min(h_max);
    let k2 = f(t + dir * h, x + dir * h * k1);
    let d2 = if k2.is_finite() {
        (k2 - k1).abs() / sk / h
    } else {
        f64::INFINITY
    };
    let der = d1.max(d2);
    let h1 = if der <= 1e-15 {
        (1e-6f64).max(h * 1e-3)
    } else {
        (0.01 / der).powf(0.2)
    };
    (100.0 * h).min(h1).min(h_max)
}

fn refine_event<G>(traj: &Trajectory, step: usize, g: &G, g_start: f64) -> f64
where
    G: Fn(f64, f64) -> f64,
{
    let mut a = traj.times[step];
    let mut b = traj.times[step + 1];
    let mut ga = g_start;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let gm = g(m, traj.eval_in_step(step, m));
        if gm == 0.0 {
            return m;
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

//! Concave quadratic models `x' = -x² + q(t) x + p(t) + λ` and the transition
//! equation `y' = -(y - (2/π) atan(ct))² + p(t) + λ`.
//!
//! The extremal solutions `a` (largest solution bounded in the past) and `r`
//! (smallest solution bounded in the future) are approximated by pulling a
//! trajectory back from a distant horizon: every solution started at `+m`
//! collapses exponentially onto `a`, every solution started at `-m` and run
//! backward collapses onto `r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::integrator::{integrate, IntegratorConfig, Trajectory};

/// Default distance of the probe start from the query window.
pub const DEFAULT_HORIZON: f64 = 1000.0;
/// Default query time for the tails, `∓50`.
pub const DEFAULT_QUERY: f64 = 50.0;
/// Default number of points of a [`TailEstimate`] grid.
pub const DEFAULT_GRID_POINTS: usize = 2001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticModel {
    pub q: Forcing,
    pub p: Forcing,
    #[serde(default)]
    pub lambda: f64,
}

impl QuadraticModel {
    pub fn new(q: Forcing, p: Forcing, lambda: f64) -> Self {
        Self { q, p, lambda }
    }

    /// `x' = -x² + p(t) + λ`
    pub fn without_linear_term(p: Forcing, lambda: f64) -> Self {
        Self::new(Forcing::constant(0.0), p, lambda)
    }

    pub fn rhs(&self, t: f64, x: f64) -> f64 {
        -x * x + self.q.eval(t) * x + self.p.eval(t) + self.lambda
    }

    /// Coefficient `-2x + q(t)` of the variational equation along `x`.
    pub fn linearization(&self, t: f64, x: f64) -> f64 {
        -2.0 * x + self.q.eval(t)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    /// Absorbing bound: the positive root `m` of `m² - ‖q‖ m - (‖p‖ + λ + 1) = 0`,
    /// so that `rhs(t, ±x) <= -1` for all `x >= m`. Never below 1.
    pub fn bound_m(&self) -> f64 {
        absorbing_root(self.q.sup_bound(), self.p.sup_bound() + self.lambda)
    }

    pub fn integrator_config(&self, base: &IntegratorConfig) -> IntegratorConfig {
        base.with_absorbing_bound(self.bound_m())
    }
}

fn absorbing_root(q_sup: f64, p_upper: f64) -> f64 {
    let c = p_upper + 1.0;
    let disc = q_sup * q_sup + 4.0 * c;
    if disc < 0.0 {
        return 1.0;
    }
    (0.5 * (q_sup + disc.sqrt())).max(1.0)
}

/// The rate-`c` transition equation in its original (y) frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionModel {
    pub p: Forcing,
    pub c: f64,
    #[serde(default)]
    pub lambda: f64,
}

impl TransitionModel {
    pub fn new(p: Forcing, c: f64, lambda: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("rate c must be >= 0, got {c}")));
        }
        Ok(Self { p, c, lambda })
    }

    pub fn ramp(&self, t: f64) -> f64 {
        to_y_frame(0.0, t, self.c)
    }

    pub fn rhs(&self, t: f64, y: f64) -> f64 {
        let d = y - self.ramp(t);
        -d * d + self.p.eval(t) + self.lambda
    }

    /// The equivalent model after `x = y - (2/π) atan(ct)`:
    /// `x' = -x² + p(t) - q_c(t) + λ`.
    pub fn x_frame(&self) -> QuadraticModel {
        let p = if self.c == 0.0 {
            self.p.clone()
        } else {
            Forcing::sum(vec![
                self.p.clone(),
                Forcing::scaled(Forcing::rational_bump(self.c), -1.0),
            ])
        };
        QuadraticModel::without_linear_term(p, self.lambda)
    }

    /// Absorbing bound in the x frame. The rate pulse is nonnegative and only
    /// lowers the right-hand side, so the bound of `x' = -x² + p + λ` is valid
    /// for every `c`.
    pub fn bound_m_x(&self) -> f64 {
        absorbing_root(0.0, self.p.sup_bound() + self.lambda)
    }

    /// Absorbing bound in the y frame: `m_x + 1`, since the ramp stays in (-1, 1).
    pub fn bound_m_y(&self) -> f64 {
        self.bound_m_x() + 1.0
    }
}

/// `y = x + (2/π) atan(ct)`
pub fn to_y_frame(x: f64, t: f64, c: f64) -> f64 {
    x + std::f64::consts::FRAC_2_PI * (c * t).atan()
}

/// `x = y - (2/π) atan(ct)`
pub fn to_x_frame(y: f64, t: f64, c: f64) -> f64 {
    y - std::f64::consts::FRAC_2_PI * (c * t).atan()
}

/// Value of an extremal-solution approximation at a query time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailValue {
    Value { value: f64 },
    /// The probe escaped at `t` before reaching the query time, so the query
    /// time lies outside the domain of the extremal solution.
    EscapedBefore { t: f64 },
}

impl TailValue {
    pub fn value(self) -> Option<f64> {
        match self {
            TailValue::Value { value } => Some(value),
            TailValue::EscapedBefore { .. } => None,
        }
    }
}

/// Probe for `a`: solution through `(horizon, +m)` run forward to `t_end`.
pub fn a_probe(model: &QuadraticModel, horizon: f64, t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    if !(horizon < t_end) {
        return Err(Error::Domain(format!(
            "a-probe needs horizon < query time ({horizon} >= {t_end})"
        )));
    }
    let m = model.bound_m();
    integrate(|t, x| model.rhs(t, x), horizon, m, t_end, &model.integrator_config(cfg))
}

/// Probe for `r`: solution through `(horizon, -m)` run backward to `t_end`.
pub fn r_probe(model: &QuadraticModel, horizon: f64, t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    if !(horizon > t_end) {
        return Err(Error::Domain(format!(
            "r-probe needs horizon > query time ({horizon} <= {t_end})"
        )));
    }
    let m = model.bound_m();
    integrate(|t, x| model.rhs(t, x), horizon, -m, t_end, &model.integrator_config(cfg))
}

fn tail_value(tr: &Trajectory) -> TailValue {
    match tr.escape_time() {
        Some(_) => TailValue::EscapedBefore { t: tr.end() },
        None => TailValue::Value {
            value: tr.last_value(),
        },
    }
}

/// Approximates `a(t_query)`; `horizon` must precede `t_query`.
pub fn approx_a_tail(
    model: &QuadraticModel,
    t_query: f64,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<TailValue> {
    a_probe(model, horizon, t_query, cfg).map(|tr| tail_value(&tr))
}

/// Approximates `r(t_query)`; `horizon` must follow `t_query`.
pub fn approx_r_tail(
    model: &QuadraticModel,
    t_query: f64,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<TailValue> {
    r_probe(model, horizon, t_query, cfg).map(|tr| tail_value(&tr))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    X,
    Y,
}

/// Sampled approximations of `a` and `r` on a common grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub grid: Vec<f64>,
    /// `None` where `a` is not defined (after its escape).
    pub a: Vec<Option<f64>>,
    /// `None` where `r` is not defined (before its backward escape).
    pub r: Vec<Option<f64>>,
    pub a_escape: Option<f64>,
    pub r_escape: Option<f64>,
    pub frame: Frame,
}

impl TailEstimate {
    /// Samples two probes on `grid`. Grid points outside a probe's covered span
    /// are recorded as undefined.
    pub fn from_probes(grid: Vec<f64>, a: &Trajectory, r: &Trajectory, frame: Frame) -> Self {
        let sample = |tr: &Trajectory| grid.iter().map(|&t| tr.eval(t)).collect::<Vec<_>>();
        Self {
            a: sample(a),
            r: sample(r),
            a_escape: a.escape_time(),
            r_escape: r.escape_time(),
            grid,
            frame,
        }
    }

    /// Maps an x-frame estimate of the transition model to the y frame.
    pub fn to_y_frame(&self, c: f64) -> Self {
        let map = |v: &[Option<f64>]| {
            v.iter()
                .zip(&self.grid)
                .map(|(x, &t)| x.map(|x| to_y_frame(x, t, c)))
                .collect()
        };
        Self {
            grid: self.grid.clone(),
            a: map(&self.a),
            r: map(&self.r),
            a_escape: self.a_escape,
            r_escape: self.r_escape,
            frame: Frame::Y,
        }
    }
}

/// Uniform grid of `n` points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Extremal-solution tails of `model` sampled on `n` grid points of `window`,
/// with the probes started at `∓horizon`.
pub fn tail_estimate(
    model: &QuadraticModel,
    window: (f64, f64),
    n: usize,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<TailEstimate> {
    let (lo, hi) = window;
    let a = a_probe(model, -horizon, hi, cfg)?;
    let r = r_probe(model, horizon, lo, cfg)?;
    Ok(TailEstimate::from_probes(uniform_grid(lo, hi, n), &a, &r, Frame::X))
}

/// Same as [`tail_estimate`] but integrating the transition equation directly
/// in the y frame, with probes started at `±m_y`.
pub fn tail_estimate_y(
    model: &TransitionModel,
    window: (f64, f64),
    n: usize,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<TailEstimate> {
    let (lo, hi) = window;
    let m = model.bound_m_y();
    let cfg = cfg.with_absorbing_bound(m);
    let a = integrate(|t, y| model.rhs(t, y), -horizon, m, hi, &cfg)?;
    let r = integrate(|t, y| model.rhs(t, y), horizon, -m, lo, &cfg)?;
    Ok(TailEstimate::from_probes(uniform_grid(lo, hi, n), &a, &r, Frame::Y))
}

/// Minimum of `a - r` over the grid points where both are defined.
pub fn separation(tail: &TailEstimate) -> Result<f64> {
    tail.a
        .iter()
        .zip(&tail.r)
        .filter_map(|(a, r)| Some(a.as_ref()? - r.as_ref()?))
        .reduce(f64::min)
        .ok_or_else(|| Error::Domain("a and r share no grid point".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    /// Hurwitz at +∞: `E(s, t) <= k e^{-β(t-s)}` for `t >= s`.
    Attractive,
    /// Hurwitz at -∞: `E(s, t) <= k e^{β(t-s)}` for `t <= s`.
    Repulsive,
}

/// Dichotomy constant pair fitted on a sampled solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichotomyEstimate {
    pub k: f64,
    pub beta: f64,
    /// Root-mean-square deviation of `log E` from the fitted line.
    pub residual: f64,
    pub stability: Stability,
}

impl DichotomyEstimate {
    /// `4 k e^{-gap β}`: how far a solution started within distance 4 of the
    /// hyperbolic solution can still be from it after `gap` time units.
    pub fn horizon_defect(&self, gap: f64) -> f64 {
        4.0 * self.k * (-gap * self.beta).exp()
    }
}

/// Panel width for the cumulative Simpson integral of the linearization.
const QUADRATURE_PANEL: f64 = 0.025;
/// Points used for the pairwise fit.
const FIT_POINTS: usize = 1001;

/// Fits `(k, β)` for the variational equation `z' = (-2b(t) + q(t)) z` along
/// the solution sampled in `solution`, restricted to `window` (defaults to the
/// covered span).
///
/// `log E(s, t) = ∫_s^t (-2b + q)` is computed with composite Simpson on the
/// dense output; β is the least-squares slope over all sampled pairs and
/// `log k` the largest offset above the fitted line, so the bound holds on
/// every sampled pair.
pub fn estimate_dichotomy(
    model: &QuadraticModel,
    solution: &Trajectory,
    window: Option<(f64, f64)>,
    stability: Stability,
) -> Result<DichotomyEstimate> {
    let (lo, hi) = window.unwrap_or_else(|| solution.span());
    if !(hi > lo) || !solution.covers(lo) || !solution.covers(hi) {
        return Err(Error::Domain(format!(
            "window [{lo}, {hi}] not covered by the solution"
        )));
    }
    let coef = |t: f64| model.linearization(t, solution.eval(t).expect("covered"));

    let panels = (((hi - lo) / QUADRATURE_PANEL).ceil() as usize).max(FIT_POINTS - 1);
    // round up to a multiple of the fit resolution
    let per = panels.div_ceil(FIT_POINTS - 1);
    let panels = per * (FIT_POINTS - 1);
    let h = (hi - lo) / panels as f64;
    let mut cumulative = Vec::with_capacity(FIT_POINTS);
    cumulative.push(0.0);
    let mut acc = 0.0;
    let mut left = coef(lo);
    for i in 0..panels {
        let a = lo + h * i as f64;
        let b = if i + 1 == panels { hi } else { a + h };
        let mid = coef(0.5 * (a + b));
        let right = coef(b);
        acc += (b - a) / 6.0 * (left + 4.0 * mid + right);
        left = right;
        if (i + 1) % per == 0 {
            cumulative.push(acc);
        }
    }
    let times = uniform_grid(lo, hi, FIT_POINTS);

    // y = log E over the pair's natural direction, d = |t - s| > 0
    let orient = match stability {
        Stability::Attractive => 1.0,
        Stability::Repulsive => -1.0,
    };
    let n = times.len();
    let (mut sd, mut sy, mut sdd, mut sdy, mut count) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let d = times[j] - times[i];
            let y = orient * (cumulative[j] - cumulative[i]);
            sd += d;
            sy += y;
            sdd += d * d;
            sdy += d * y;
            count += 1.0;
        }
    }
    let slope = (count * sdy - sd * sy) / (count * sdd - sd * sd);
    let intercept = (sy - slope * sd) / count;
    let beta = -slope;
    if !(beta > 0.0) {
        return Err(Error::NotHyperbolic { beta });
    }
    let mut max_offset = f64::NEG_INFINITY;
    let mut sq = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = times[j] - times[i];
            let y = orient * (cumulative[j] - cumulative[i]);
            max_offset = max_offset.max(y + beta * d);
            let res = y - (intercept + slope * d);
            sq += res * res;
        }
    }
    Ok(DichotomyEstimate {
        k: max_offset.exp().max(1.0),
        beta,
        residual: (sq / count).sqrt(),
        stability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    #[test]
    fn bound_m_examples() {
        let m = QuadraticModel::without_linear_term(Forcing::quasi_periodic_example(), 0.0).bound_m();
        assert!((m - 3.895f64.sqrt()).abs() < 1e-12);
        assert!(-4.0 + 2.895 <= -1.0 && m <= 2.0);
        let m = QuadraticModel::without_linear_term(Forcing::constant(0.0), 0.0).bound_m();
        assert_eq!(m, 1.0);
        let m = QuadraticModel::new(Forcing::constant(2.0), Forcing::constant(1.0), 0.0).bound_m();
        assert!((m - (1.0 + 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn bound_m_is_absorbing() {
        let model = QuadraticModel::new(
            Forcing::sinusoid(1.3, 0.7, 0.2),
            Forcing::quasi_periodic_example(),
            0.4,
        );
        let m = model.bound_m();
        for i in 0..2000 {
            let t = -500.0 + i as f64 * 0.5;
            for x in [m, m + 0.5, m + 10.0] {
                assert!(model.rhs(t, x) <= -1.0 + 1e-12);
                assert!(model.rhs(t, -x) <= -1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn autonomous_tails() {
        let model = QuadraticModel::without_linear_term(Forcing::constant(1.0), 0.0);
        let a = approx_a_tail(&model, -50.0, -1000.0, &cfg()).unwrap();
        assert!((a.value().unwrap() - 1.0).abs() < 1e-9);
        let r = approx_r_tail(&model, 50.0, 1000.0, &cfg()).unwrap();
        assert!((r.value().unwrap() + 1.0).abs() < 1e-9);
        let model = QuadraticModel::without_linear_term(Forcing::constant(4.0), 0.0);
        let r = approx_r_tail(&model, 50.0, 1000.0, &cfg()).unwrap();
        assert!((r.value().unwrap() + 2.0).abs() < 1e-9);
    }

    #[test]
    fn tails_escape_without_bounded_solutions() {
        let model = QuadraticModel::without_linear_term(Forcing::constant(-1.0), 0.0);
        match approx_a_tail(&model, -50.0, -1000.0, &cfg()).unwrap() {
            TailValue::EscapedBefore { t } => assert!(t < -50.0),
            v => panic!("expected escape, got {v:?}"),
        }
        match approx_r_tail(&model, 50.0, 1000.0, &cfg()).unwrap() {
            TailValue::EscapedBefore { t } => assert!(t > 50.0),
            v => panic!("expected escape, got {v:?}"),
        }
    }

    #[test]
    fn tail_direction_checked() {
        let model = QuadraticModel::without_linear_term(Forcing::constant(1.0), 0.0);
        assert!(approx_a_tail(&model, -50.0, 10.0, &cfg()).is_err());
        assert!(approx_r_tail(&model, 50.0, 10.0, &cfg()).is_err());
    }

    #[test]
    fn quasi_periodic_attractor_is_inside_bound() {
        let p = Forcing::quasi_periodic_example().shifted(-0.03);
        let model = QuadraticModel::without_linear_term(p, 0.0);
        let a = approx_a_tail(&model, -50.0, -1000.0, &cfg()).unwrap().value().unwrap();
        assert!(a > -2.0 && a < 2.0);
    }

    #[test]
    fn frames_round_trip() {
        assert_eq!(to_y_frame(0.0, 0.0, 3.0), 0.0);
        assert!((to_y_frame(1.0, 1e12, 1.0) - 2.0).abs() < 1e-9);
        for &(x, t, c) in &[(0.3, -2.0, 0.5), (-1.7, 40.0, 2.2), (5.0, 0.1, 0.0)] {
            let y = to_y_frame(x, t, c);
            assert!((to_x_frame(y, t, c) - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0));
        }
    }

    #[test]
    fn separation_of_constant_models() {
        for (p, gap) in [(1.0, 2.0), (4.0, 4.0)] {
            let model = QuadraticModel::without_linear_term(Forcing::constant(p), 0.0);
            let tail = tail_estimate(&model, (-50.0, 50.0), 201, 1000.0, &cfg()).unwrap();
            assert!((separation(&tail).unwrap() - gap).abs() < 1e-8);
        }
    }

    #[test]
    fn separation_needs_common_points() {
        let tail = TailEstimate {
            grid: vec![0.0, 1.0],
            a: vec![Some(1.0), None],
            r: vec![None, Some(0.0)],
            a_escape: None,
            r_escape: None,
            frame: Frame::X,
        };
        assert!(separation(&tail).is_err());
    }

    #[test]
    fn constant_dichotomy() {
        for (p, root) in [(1.0, 1.0), (4.0, 2.0)] {
            let model = QuadraticModel::without_linear_term(Forcing::constant(p), 0.0);
            let a = a_probe(&model, -1000.0, 100.0, &cfg()).unwrap();
            let d = estimate_dichotomy(&model, &a, Some((-100.0, 100.0)), Stability::Attractive).unwrap();
            assert!((d.beta - 2.0 * root).abs() < 1e-6, "{d:?}");
            assert!((d.k - 1.0).abs() < 1e-6);
            let r = r_probe(&model, 1000.0, -100.0, &cfg()).unwrap();
            let d = estimate_dichotomy(&model, &r, Some((-100.0, 100.0)), Stability::Repulsive).unwrap();
            assert!((d.beta - 2.0 * root).abs() < 1e-6);
            // the repeller is not attractive
            assert!(matches!(
                estimate_dichotomy(&model, &r, Some((-100.0, 100.0)), Stability::Attractive),
                Err(Error::NotHyperbolic { .. })
            ));
        }
    }

    #[test]
    fn transition_x_frame_matches_y_rhs() {
        let model = TransitionModel::new(Forcing::quasi_periodic_example(), 0.7, -0.2).unwrap();
        let xm = model.x_frame();
        // y' = x' + q_c, evaluated on the same point in both frames
        for i in -50..50 {
            let t = i as f64 * 0.37;
            let y = 0.4 + 0.01 * i as f64;
            let x = to_x_frame(y, t, model.c);
            let lhs = model.rhs(t, y);
            let rhs = xm.rhs(t, x) + Forcing::rational_bump(model.c).eval(t);
            assert!((lhs - rhs).abs() < 1e-12);
        }
        assert!(TransitionModel::new(Forcing::constant(1.0), -0.1, 0.0).is_err());
    }
}

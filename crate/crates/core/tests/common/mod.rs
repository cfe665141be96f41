#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use tipcurve::bifurcation::ClassifierParams;
use tipcurve::forcing::Forcing;
use tipcurve::integrator::{IntegratorConfig, Trajectory};

/// `p0 + a1 sin(w1 t + phi) + a2 sin(w2 t)`
#[derive(Debug, Clone, Copy)]
pub struct TwoTone {
    pub p0: f64,
    pub a1: f64,
    pub w1: f64,
    pub phi: f64,
    pub a2: f64,
    pub w2: f64,
}

impl TwoTone {
    pub fn forcing(&self) -> Forcing {
        Forcing::sum(vec![
            Forcing::constant(self.p0),
            Forcing::sinusoid(self.a1, self.w1, self.phi),
            Forcing::sinusoid(self.a2, self.w2, 0.0),
        ])
    }

    /// Lower bound of the forcing.
    pub fn inf(&self) -> f64 {
        self.p0 - self.a1.abs() - self.a2.abs()
    }
}

pub fn two_tone(p0: std::ops::Range<f64>) -> impl Strategy<Value = TwoTone> {
    (p0, 0.0..0.6f64, 0.05..2.0f64, 0.0..6.3f64, 0.0..0.4f64, 0.05..2.5f64).prop_map(
        |(p0, a1, w1, phi, a2, w2)| TwoTone {
            p0,
            a1,
            w1,
            phi,
            a2,
            w2,
        },
    )
}

/// Classifier settings for the randomized λ* suites: the ±200 horizon leaves
/// `e^{-150}`-level traces of the probe start values on the separation window.
pub fn fast_params() -> ClassifierParams {
    ClassifierParams {
        horizon: 200.0,
        ..ClassifierParams::default()
    }
}

pub fn integrator() -> IntegratorConfig {
    IntegratorConfig::default()
}

/// Deterministic runner with little shrinking; cases are expensive.
pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        max_shrink_iters: 16,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// `∫_{s}^{t} f(l, x(l)) dl` along a trajectory, composite Simpson on panels
/// of at most `h`. Signed: negative when `t < s`.
pub fn integral_along(traj: &Trajectory, s: f64, t: f64, h: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let n = (((t - s).abs() / h).ceil() as usize).max(1) * 2;
    let dt = (t - s) / n as f64;
    let g = |l: f64| f(l, traj.eval(l).expect("trajectory covers the interval"));
    let mut acc = g(s) + g(t);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(s + i as f64 * dt);
    }
    acc * dt / 3.0
}

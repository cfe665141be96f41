//! Case classification, the saddle-node value λ*, the tipping curve λ*(c)
//! and the location of tipping rates.

mod classify;
mod lambda;
mod tipping;

pub use classify::{classify, classify_detailed, classify_quadratic, ClassifierParams, ProbeRun};
pub use lambda::{
    generic_horizon, lambda_star, lambda_star_curve, lambda_star_of_c, CurvePoint, LambdaStarResult,
};
pub use tipping::{
    collision_diagnostics, find_tipping_points, CollisionRow, Direction, TippingPoint,
};

use serde::{Deserialize, Serialize};

/// Global dynamics of a concave quadratic equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// Two hyperbolic solutions (attractor-repeller pair).
    A,
    /// Exactly one bounded solution, up to the separation tolerance.
    B,
    /// No bounded solutions.
    C,
}

impl Case {
    /// Side of λ* this verdict witnesses during bisection: B counts as the
    /// side where bounded solutions exist.
    pub fn has_bounded_solutions(self) -> bool {
        !matches!(self, Case::C)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    /// Forward probe approximating the past-bounded extremal solution.
    A,
    /// Backward probe approximating the future-bounded extremal solution.
    R,
}

/// Probe values at the ends of the separation window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostics {
    pub a_lo: Option<f64>,
    pub a_hi: Option<f64>,
    pub r_lo: Option<f64>,
    pub r_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseVerdict {
    pub case: Case,
    /// Minimum of `a - r` over the separation window, when both probes cover it.
    pub gap: Option<f64>,
    pub escape_time: Option<f64>,
    pub escaped_probe: Option<Probe>,
    pub window: (f64, f64),
    pub diagnostics: TailDiagnostics,
}

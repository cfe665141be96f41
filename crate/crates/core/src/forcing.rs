//! Time-dependent coefficient functions.
//!
//! A [`Forcing`] is a closed expression tree over a handful of bounded node
//! kinds. Keeping the tree closed (no user callbacks) lets [`Forcing::sup_bound`]
//! return a guaranteed upper bound on `sup_t |f(t)|` by structural recursion,
//! which the λ* bracketing relies on.

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bounded, continuous function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum Forcing {
    #[serde(rename = "const")]
    Constant { value: f64 },
    /// `amplitude * sin(omega * t + phase)`
    #[serde(rename = "sin")]
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    #[serde(rename = "sum")]
    Sum { children: Vec<Forcing> },
    #[serde(rename = "scaled")]
    Scaled { child: Box<Forcing>, factor: f64 },
    /// `(2/π) atan(rate * t)`, the transition ramp between the past and
    /// future limit equations.
    #[serde(rename = "atan_ramp")]
    ArctanRamp { rate: f64 },
    /// `2 rate / (π (rate² t² + 1))`, the time derivative of the ramp.
    #[serde(rename = "bump")]
    RationalBump { rate: f64 },
    /// `child(t)` for `|t| >= tstar`, the constant `child(tstar)` inside.
    #[serde(rename = "clamp")]
    CenterClamped { child: Box<Forcing>, tstar: f64 },
}

impl Forcing {
    pub fn constant(value: f64) -> Self {
        Forcing::Constant { value }
    }

    pub fn sinusoid(amplitude: f64, omega: f64, phase: f64) -> Self {
        Forcing::Sinusoid {
            amplitude,
            omega,
            phase,
        }
    }

    pub fn sum(children: Vec<Forcing>) -> Self {
        Forcing::Sum { children }
    }

    pub fn scaled(child: Forcing, factor: f64) -> Self {
        Forcing::Scaled {
            child: Box::new(child),
            factor,
        }
    }

    pub fn arctan_ramp(rate: f64) -> Self {
        Forcing::ArctanRamp { rate }
    }

    pub fn rational_bump(rate: f64) -> Self {
        Forcing::RationalBump { rate }
    }

    pub fn center_clamped(child: Forcing, tstar: f64) -> Self {
        Forcing::CenterClamped {
            child: Box::new(child),
            tstar,
        }
    }

    /// `self + value`, flattening into an existing sum.
    pub fn shifted(&self, value: f64) -> Self {
        match self {
            Forcing::Constant { value: v } => Forcing::constant(v + value),
            Forcing::Sum { children } => {
                let mut children = children.clone();
                children.push(Forcing::constant(value));
                Forcing::sum(children)
            }
            other => Forcing::sum(vec![other.clone(), Forcing::constant(value)]),
        }
    }

    /// The forcing `0.895 - sin(t/2) - sin(√5 t)` used for the quasi-periodic
    /// sweep with three tipping rates.
    pub fn quasi_periodic_example() -> Self {
        Forcing::sum(vec![
            Forcing::constant(0.895),
            Forcing::scaled(Forcing::sinusoid(1.0, 0.5, 0.0), -1.0),
            Forcing::scaled(Forcing::sinusoid(1.0, 5f64.sqrt(), 0.0), -1.0),
        ])
    }

    /// The slow periodic forcing `0.9 - sin(t/5)`.
    pub fn slow_periodic_example() -> Self {
        Forcing::sum(vec![
            Forcing::constant(0.9),
            Forcing::scaled(Forcing::sinusoid(1.0, 0.2, 0.0), -1.0),
        ])
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Forcing::Constant { value } => *value,
            Forcing::Sinusoid {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * t + phase).sin(),
            Forcing::Sum { children } => children.iter().map(|c| c.eval(t)).sum(),
            Forcing::Scaled { child, factor } => factor * child.eval(t),
            Forcing::ArctanRamp { rate } => FRAC_2_PI * (rate * t).atan(),
            Forcing::RationalBump { rate } => {
                let ct = rate * t;
                2.0 * rate / (PI * (ct * ct + 1.0))
            }
            Forcing::CenterClamped { child, tstar } => {
                if t.abs() >= *tstar {
                    child.eval(t)
                } else {
                    child.eval(*tstar)
                }
            }
        }
    }

    /// Upper bound on `sup_t |f(t)|`. Exact for single constants, sinusoids,
    /// ramps and bumps; sums fall back to the triangle inequality.
    pub fn sup_bound(&self) -> f64 {
        match self {
            Forcing::Constant { value } => value.abs(),
            Forcing::Sinusoid {
                amplitude,
                omega,
                phase,
            } => {
                if *omega == 0.0 {
                    (amplitude * phase.sin()).abs()
                } else {
                    amplitude.abs()
                }
            }
            Forcing::Sum { children } => children.iter().map(Forcing::sup_bound).sum(),
            Forcing::Scaled { child, factor } => factor.abs() * child.sup_bound(),
            Forcing::ArctanRamp { rate } => {
                if *rate == 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            Forcing::RationalBump { rate } => 2.0 * rate.abs() / PI,
            Forcing::CenterClamped { child, .. } => child.sup_bound(),
        }
    }

    /// Checks node parameters: finite values, `rate >= 0` for ramps and bumps,
    /// `tstar > 0` for clamps.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("forcing field `{name}` is not finite")))
            }
        };
        match self {
            Forcing::Constant { value } => finite("value", *value),
            Forcing::Sinusoid {
                amplitude,
                omega,
                phase,
            } => {
                finite("amplitude", *amplitude)?;
                finite("omega", *omega)?;
                finite("phase", *phase)
            }
            Forcing::Sum { children } => children.iter().try_for_each(Forcing::validate),
            Forcing::Scaled { child, factor } => {
                finite("factor", *factor)?;
                child.validate()
            }
            Forcing::ArctanRamp { rate } | Forcing::RationalBump { rate } => {
                finite("rate", *rate)?;
                if *rate < 0.0 {
                    return Err(Error::Domain(format!("rate must be >= 0, got {rate}")));
                }
                Ok(())
            }
            Forcing::CenterClamped { child, tstar } => {
                finite("tstar", *tstar)?;
                if *tstar <= 0.0 {
                    return Err(Error::Domain(format!("tstar must be > 0, got {tstar}")));
                }
                child.validate()
            }
        }
    }
}

/// Bound on the rate pulse `q_c(s)` valid for every `|s| >= t` and every `c > 0`.
pub fn q_c_tail_bound(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("tail bound needs t > 0, got {t}")));
    }
    Ok(1.0 / (PI * t))
}

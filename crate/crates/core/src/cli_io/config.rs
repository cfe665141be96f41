use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bifurcation::ClassifierParams;
use crate::error::{Error, Result};
use crate::forcing::Forcing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Classify,
    LambdaStar,
    Curve,
    Tipping,
    Collision,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Simulate,
        Mode::Classify,
        Mode::LambdaStar,
        Mode::Curve,
        Mode::Tipping,
        Mode::Collision,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Classify => "classify",
            Mode::LambdaStar => "lambda-star",
            Mode::Curve => "curve",
            Mode::Tipping => "tipping",
            Mode::Collision => "collision",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode {s:?}")))
    }
}

/// Evenly spaced rates, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

/// Initial value problem for `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub t0: f64,
    pub x0: f64,
    pub t1: f64,
}

/// One run of the command-line tool. Which fields are required depends on
/// the mode; see `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// The forcing `p`.
    pub forcing: Forcing,
    /// Linear coefficient `q` (simulate and lambda-star without a rate).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Forcing>,
    /// Transition rate; selects the transition equation in y coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default)]
    pub lambda: f64,
    /// Bisection tolerance on λ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_grid: Option<RateGrid>,
    /// Bisection tolerance on the rate when locating tipping points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
    #[serde(default)]
    pub classifier: ClassifierParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_C_TOL: f64 = 1e-6;

impl RunConfig {
    pub fn new(forcing: Forcing) -> Self {
        Self {
            mode: None,
            forcing,
            q: None,
            c: None,
            lambda: 0.0,
            tol: None,
            c_grid: None,
            c_tol: None,
            c0: None,
            deltas: None,
            span: None,
            classifier: ClassifierParams::default(),
            out: None,
            workers: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    pub fn c_tol(&self) -> f64 {
        self.c_tol.unwrap_or(DEFAULT_C_TOL)
    }

    /// The mode to run: `requested` (from the command line) must agree with
    /// the config's own `mode` when both are given.
    pub fn resolve_mode(&self, requested: Option<Mode>) -> Result<Mode> {
        match (requested, self.mode) {
            (Some(a), Some(b)) if a != b => Err(Error::Config(format!(
                "mode {a} on the command line but {b} in the config"
            ))),
            (Some(m), _) | (None, Some(m)) => Ok(m),
            (None, None) => Err(Error::Config("no mode given".into())),
        }
    }

    /// Checks everything that can be checked without integrating.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        let cfg = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.forcing.validate().map_err(cfg)?;
        if let Some(q) = &self.q {
            q.validate().map_err(cfg)?;
        }
        self.classifier.validate().map_err(cfg)?;
        finite("lambda", self.lambda)?;
        if let Some(tol) = self.tol {
            positive("tol", tol)?;
        }
        if let Some(c_tol) = self.c_tol {
            positive("c_tol", c_tol)?;
        }
        if let Some(c) = self.c {
            non_negative("c", c)?;
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let need = |name: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("mode {mode} needs `{name}`")))
            }
        };
        match mode {
            Mode::Simulate => {
                need("span", self.span.is_some())?;
                let s = self.span.unwrap();
                for (name, v) in [("span.t0", s.t0), ("span.x0", s.x0), ("span.t1", s.t1)] {
                    finite(name, v)?;
                }
                if s.t0 == s.t1 {
                    return Err(Error::Config("span.t0 and span.t1 coincide".into()));
                }
            }
            Mode::Classify => need("c", self.c.is_some())?,
            Mode::LambdaStar => {
                if self.c.is_some() && self.q.is_some() {
                    return Err(Error::Config("lambda-star takes either `c` or `q`, not both".into()));
                }
            }
            Mode::Curve | Mode::Tipping => {
                need("c_grid", self.c_grid.is_some())?;
                let g = self.c_grid.unwrap();
                non_negative("c_grid.lo", g.lo)?;
                finite("c_grid.hi", g.hi)?;
                let min_n = if mode == Mode::Curve { 1 } else { 2 };
                if g.n < min_n || (g.n > 1 && !(g.lo < g.hi)) {
                    return Err(Error::Config(format!(
                        "c_grid needs lo < hi and n >= {min_n}, got {g:?}"
                    )));
                }
            }
            Mode::Collision => {
                need("c0", self.c0.is_some())?;
                need("deltas", self.deltas.as_ref().is_some_and(|d| !d.is_empty()))?;
                non_negative("c0", self.c0.unwrap())?;
                for &d in self.deltas.as_ref().unwrap() {
                    finite("deltas", d)?;
                }
            }
        }
        Ok(())
    }

    /// Canonical text of everything that determines the result of `mode`.
    /// Keys are sorted and floats use the shortest round-trip rendering.
    pub fn canonical_key_text(&self, mode: Mode) -> String {
        let mut v = self.clone();
        v.mode = Some(mode);
        v.out = None;
        v.workers = None;
        let value = serde_json::to_value(&v).expect("config serializes");
        let mut out = String::new();
        write_canonical(&value, &mut out);
        out
    }
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("`{name}` must be finite")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("`{name}` must be positive, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("`{name}` must be non-negative, got {v}")))
    }
}

//! Rate-induced tipping and saddle-node bifurcation for scalar concave
//! quadratic equations `x' = -x² + q(t) x + p(t) + λ`.

pub mod bifurcation;
pub mod cli_io;
pub mod error;
pub mod forcing;
pub mod integrator;
pub mod riccati;

pub use error::{Error, Result};

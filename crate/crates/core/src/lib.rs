//! Numerical toolkit for nonlinear Volterra–Hammerstein integral equations
//!
//! ```text
//! x(t) = f(t, ∫₀ᵗ g(t, s, x(s)) ds, x(t))
//! ```
//!
//! on a truncated horizon `[0, L]`, together with sampled verification of
//! the comparison-function hypotheses that guarantee a fixed point, and an
//! ensemble estimator of the measure of noncompactness
//! `μ(X) = ω₀(X) + lim sup diam X(t)` used to watch the set iteration
//! `Aₙ₊₁ = conv(T Aₙ)` shrink.
//!
//! Module map:
//!
//! - [`expr`]: expression language for every user-supplied function
//! - [`comparison`]: the (Ψ, Φ, φ) triple and its property checks
//! - [`grid`]: uniform grids, grid functions and the inner quadrature
//! - [`problem`]: a problem instance and its hypothesis checks
//! - [`solver`]: the operator T, fixed-point solves and contraction probes
//! - [`mnc`]: the noncompactness estimator and the set iteration
//! - [`config`] and [`cli`]: the config file format and the commands

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod comparison;
pub mod config;
pub mod expr;
pub mod grid;
pub mod mnc;
pub mod problem;
pub mod report;
pub mod sampling;
pub mod solver;

use thiserror::Error;

pub use comparison::{ComparisonTriple, Preset};
pub use grid::{Grid, GridFunction, QuadRule};
pub use problem::IntegralProblem;
pub use report::PropertyReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] expr::ParseError),
    #[error(transparent)]
    Bind(#[from] expr::BindError),
    /// An expression failed while evaluating `context` (which function, at
    /// which point).
    #[error("{context}: {source}")]
    Eval {
        context: String,
        #[source]
        source: expr::EvalError,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn eval(context: impl Into<String>, source: expr::EvalError) -> Self {
        Error::Eval { context: context.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

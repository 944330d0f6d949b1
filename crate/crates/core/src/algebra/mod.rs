//! Exact coefficient arithmetic.
//!
//! Scalars are `num_rational::BigRational`. Polynomials are sparse maps from
//! monomials to nonzero rational coefficients, generic over the variable
//! type so the same code serves Butcher coefficients (`b[i]`, `c[i]`,
//! `a[i,j]`) and the state variables `x1..xd` of polynomial vector fields.

mod poly;
mod rational;

pub use num_rational::BigRational;
pub use poly::{CoeffPolynomial, CoeffVar, Monomial, Polynomial, RenderStyle, Variable};
pub use rational::{format_rational, format_rational_latex, int, parse_rational, q, rat, to_f64};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("malformed rational {input:?}: {reason}")]
    MalformedRational { input: String, reason: &'static str },
    #[error("polynomial still depends on {0}")]
    FreeVariables(String),
    #[error("malformed polynomial at byte {pos}: {reason}")]
    MalformedPolynomial { pos: usize, reason: String },
}

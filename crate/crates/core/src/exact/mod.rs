//! Exact arithmetic: rationals, dense rational linear algebra, and the two symbolic value
//! types (formal log sums and bound expressions).

pub mod arith;
pub mod expr;
pub mod logsum;
pub mod matrix;
pub mod rational;

pub use expr::{Atom, BoundExpression, ExprError};
pub use logsum::FormalLogSum;
pub use matrix::{quadratic_form, solve_singular_symmetric, LinalgError, Matrix};
pub use rational::{format_rational, int, parse_rational, rat, Rational};

//! Exact fibral intersection data on special fibers of arithmetic surfaces, and symbolic
//! upper bounds for the arithmetic self-intersection of the dualizing sheaf.
//!
//! The crate is organized bottom-up:
//!
//! - [`exact`]: rationals, singular symmetric solving, [`FormalLogSum`], [`BoundExpression`].
//! - [`fiber`]: special fibers as weighted crossing graphs and their derived quantities.
//! - [`fiber_io`]: the JSON fiber description format.
//! - [`divisors`]: correction divisors `G_j`, `F_j` and the geometric contribution `a_p`.
//! - [`bounds`]: `b_p`, the analytic contribution and the total bound assembly.
//! - [`catalog`]: built-in X0(N) fibers, and parameter-level X(N) and Fermat data.
//! - [`green`]: exact Green kernels on finite measured graphs.
//! - [`exec`]: sequential / rayon execution switch used by the sweeps.

pub mod bounds;
pub mod catalog;
pub mod checks;
pub mod divisors;
pub mod exact;
pub mod exec;
pub mod fiber;
pub mod fiber_io;
pub mod green;

pub use exact::{Atom, BoundExpression, FormalLogSum, Matrix, Rational};
pub use exec::Execution;

//! Built-in curve families: full X₀(N) fiber models, and parameter-level data for X(N) and
//! Fermat curves, with end-to-end bound reports.

use thiserror::Error;

use crate::bounds::BoundError;
use crate::divisors::DivisorError;
use crate::fiber::FiberError;

pub use crate::checks::{first_failure, Check};

pub mod fermat;
pub mod x0n;
pub mod xn;

pub use fermat::{fermat_omega_bound, fermat_params, fermat_report, FermatParams, FermatReport};
pub use x0n::{
    valid_levels, x0n_cusps, x0n_fiber, x0n_genus, x0n_index, x0n_report, x0n_sweep, Cusp,
    X0NData, X0NPrimeReport, X0NReport,
};
pub use xn::{xn_genus, xn_omega_bound, xn_params, xn_report, XNParams, XNReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("invalid N = {n}: {reason}")]
    InvalidN { n: u64, reason: String },
    #[error("invalid prime {p}: {reason}")]
    InvalidPrime { p: u64, reason: String },
    #[error("N = {n}, p = {p}: C0·Cinf = {value} is not a nonnegative integer")]
    NonIntegralCrossing { n: u64, p: u64, value: String },
    #[error("N = {n}, p = {p}: s_p = {value} is not an integer")]
    NonIntegralSupersingular { n: u64, p: u64, value: String },
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error(transparent)]
    Divisor(#[from] DivisorError),
    #[error(transparent)]
    Bound(#[from] BoundError),
}

impl CatalogError {
    pub(crate) fn invalid_n(n: u64, reason: &str) -> Self {
        CatalogError::InvalidN {
            n,
            reason: reason.to_string(),
        }
    }

    /// True for errors caused by the caller's input rather than an internal inconsistency.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            CatalogError::InvalidN { .. } | CatalogError::InvalidPrime { .. }
        )
    }
}

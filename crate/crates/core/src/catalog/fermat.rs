//! Fermat curves `x^p + y^p = z^p` over Q(ζ_p): worst-case fiber statistics and the bound.

use serde::Serialize;

use super::CatalogError;
use crate::bounds::{analytic_simplified, compute_bp, omega_total_bound, EnvelopeFlag, TotalBoundSpec};
use crate::exact::arith::is_prime;
use crate::exact::rational::{from_u64, int, Rational};
use crate::exact::{BoundExpression, FormalLogSum};
use crate::fiber::DualStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FermatParams {
    pub p: u64,
    /// Largest possible number of components of the fiber above `p`.
    pub r_max: u64,
    pub u: u64,
    pub l: u64,
    pub c: u64,
    pub genus: u64,
    /// `[Q(ζ_p):Q]`.
    pub field_degree: u64,
}

impl FermatParams {
    pub fn worst_case_stats(&self) -> DualStats {
        DualStats {
            r: self.r_max,
            u: self.u,
            l: self.l,
            c: self.c,
        }
    }
}

pub fn fermat_params(p: u64) -> Result<FermatParams, CatalogError> {
    if p < 5 || !is_prime(p) {
        return Err(CatalogError::InvalidPrime {
            p,
            reason: "exponent must be a prime >= 5".into(),
        });
    }
    Ok(FermatParams {
        p,
        r_max: 4 + p * (p - 3) / 2,
        u: p,
        l: 1,
        c: 3,
        genus: (p - 1) * (p - 2) / 2,
        field_degree: p - 1,
    })
}

/// `p⁷/2`.
pub fn fermat_envelope(p: u64) -> Rational {
    from_u64(p.pow(7)) / int(2)
}

/// `(2g-2)·(2·logDisc + (p-1)·(kappa1·log p + kappa2) + g·p⁷·log p)`.
pub fn fermat_omega_bound(p: u64) -> Result<BoundExpression, CatalogError> {
    let fp = fermat_params(p)?;
    let geometric = FormalLogSum::single(p, from_u64(fp.genus * p.pow(7)));
    fermat_total(&fp, &geometric)
}

fn fermat_total(fp: &FermatParams, geometric: &FormalLogSum) -> Result<BoundExpression, CatalogError> {
    Ok(omega_total_bound(
        &TotalBoundSpec {
            genus: fp.genus,
            field_degree: fp.field_degree,
            disc_present: true,
            torsion_cuspidal: true,
        },
        &analytic_simplified(fp.field_degree, fp.p),
        geometric,
    )?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FermatReport {
    pub params: FermatParams,
    #[serde(with = "crate::exact::rational::serde_str")]
    pub b_p_raw: Rational,
    #[serde(with = "crate::exact::rational::serde_str")]
    pub envelope: Rational,
    pub flag: EnvelopeFlag,
    /// Bound with the published envelope as geometric term.
    pub bound: BoundExpression,
    /// Same bound with `2·b_p(raw)·log p` (Galois over P¹) as geometric term.
    pub bound_raw: BoundExpression,
}

pub fn fermat_report(p: u64) -> Result<FermatReport, CatalogError> {
    let params = fermat_params(p)?;
    let b_p_raw = compute_bp(&params.worst_case_stats())?;
    let envelope = fermat_envelope(p);
    let raw_geo = FormalLogSum::single(p, int(2) * &b_p_raw);
    Ok(FermatReport {
        flag: EnvelopeFlag::compare(&b_p_raw, &envelope),
        bound: fermat_omega_bound(p)?,
        bound_raw: fermat_total(&params, &raw_geo)?,
        params,
        b_p_raw,
        envelope,
    })
}

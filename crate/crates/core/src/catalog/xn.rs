//! The full modular curve X(N) over Q(ζ_N): per-prime fiber parameters and the bound.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use super::CatalogError;
use crate::bounds::{analytic_simplified, omega_total_bound, TotalBoundSpec};
use crate::exact::arith::{euler_phi, factorize, multiplicative_order, prime_factors};
use crate::exact::rational::{from_u64, int, is_integral, Rational};
use crate::exact::{BoundExpression, FormalLogSum};
use crate::fiber::DualStats;

/// Parameters of the fiber above a prime `p | N`, with `N = p^k·m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct XNPrime {
    pub p: u64,
    pub k: u32,
    pub m: u64,
    /// Number of components, `p^k + p^(k-1)`.
    pub r: u64,
    /// Number of supersingular crossing points.
    pub s: u64,
    /// Component multiplicity bound `p^(2k-2)`.
    pub m_p: u64,
    /// `(r-1)²·m_p/s`.
    #[serde(with = "crate::exact::rational::serde_str")]
    pub envelope: Rational,
    /// Residue degree of each prime above `p`.
    pub residue_degree: u64,
    pub primes_above: u64,
}

impl XNPrime {
    /// Statistics for which the `b_p` formula reduces to [`XNPrime::envelope`].
    pub fn equivalent_stats(&self) -> DualStats {
        DualStats {
            r: self.r,
            u: (self.r - 1) * self.m_p * self.s,
            l: self.s,
            c: 1,
        }
    }

    /// `Σ_{P|p} log Nm P`, which equals `φ(m)·log p`.
    pub fn norm_logs(&self) -> FormalLogSum {
        FormalLogSum::single(self.p, from_u64(self.primes_above * self.residue_degree))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct XNParams {
    #[serde(rename = "N")]
    pub n: u64,
    pub genus: u64,
    pub field_degree: u64,
    pub primes: Vec<XNPrime>,
}

fn validate(n: u64) -> Result<Vec<(u64, u32)>, CatalogError> {
    if n % 2 == 0 || n % 3 == 0 {
        return Err(CatalogError::invalid_n(n, "N must be coprime to 6"));
    }
    let f = factorize(n);
    if f.len() < 2 {
        return Err(CatalogError::invalid_n(n, "N must have at least two prime factors"));
    }
    Ok(f)
}

/// Genus of X(N): `1 + μ(N-6)/(12N)` with `μ = (N³/2)·Π_{p|N}(1 - 1/p²)`.
pub fn xn_genus(n: u64) -> Result<u64, CatalogError> {
    if n < 3 {
        return Err(CatalogError::invalid_n(n, "N must be at least 3"));
    }
    let mu = prime_factors(n).iter().fold(from_u64(n).pow(3) / int(2), |acc, &p| {
        acc * (Rational::one() - Rational::one() / from_u64(p * p))
    });
    let g = Rational::one() + mu * (from_u64(n) - int(6)) / from_u64(12 * n);
    assert!(is_integral(&g) && g >= Rational::zero(), "X({n}) genus {g}");
    Ok(g.to_integer().try_into().expect("genus fits in u64"))
}

pub fn xn_params(n: u64) -> Result<XNParams, CatalogError> {
    let factors = validate(n)?;
    let mut primes = Vec::with_capacity(factors.len());
    for &(p, k) in &factors {
        let pk = p.pow(k);
        let m = n / pk;
        let s = prime_factors(m).iter().fold(
            from_u64(p - 1) / int(24) * from_u64(m * m) * from_u64(euler_phi(m)),
            |acc, &q| acc * (Rational::one() + Rational::one() / from_u64(q)),
        );
        if !is_integral(&s) || s <= Rational::zero() {
            return Err(CatalogError::NonIntegralSupersingular {
                n,
                p,
                value: crate::exact::rational::format_rational(&s),
            });
        }
        let s: u64 = s.to_integer().try_into().expect("s fits in u64");
        let r = pk + pk / p;
        let m_p = p.pow(2 * k - 2);
        let f = multiplicative_order(p % m, m).expect("p is a unit mod m");
        primes.push(XNPrime {
            p,
            k,
            m,
            r,
            s,
            m_p,
            envelope: from_u64((r - 1) * (r - 1) * m_p) / from_u64(s),
            residue_degree: f,
            primes_above: euler_phi(m) / f,
        });
    }
    Ok(XNParams {
        n,
        genus: xn_genus(n)?,
        field_degree: euler_phi(n),
        primes,
    })
}

/// `(2g-2)·(2·logDisc + φ(N)·(kappa1·log N + kappa2) + 2·Σ_p envelope_p·Σ_{P|p} log Nm P)`.
pub fn xn_omega_bound(params: &XNParams) -> Result<BoundExpression, CatalogError> {
    let geometric = params.primes.iter().fold(FormalLogSum::new(), |acc, pr| {
        acc + &pr.norm_logs() * &(int(2) * &pr.envelope)
    });
    Ok(omega_total_bound(
        &TotalBoundSpec {
            genus: params.genus,
            field_degree: params.field_degree,
            disc_present: true,
            torsion_cuspidal: true,
        },
        &analytic_simplified(params.field_degree, params.n),
        &geometric,
    )?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct XNReport {
    pub params: XNParams,
    /// Envelope per prime, keyed by `p`.
    #[serde(skip)]
    pub envelopes: BTreeMap<u64, Rational>,
    pub bound: BoundExpression,
}

pub fn xn_report(n: u64) -> Result<XNReport, CatalogError> {
    let params = xn_params(n)?;
    let bound = xn_omega_bound(&params)?;
    Ok(XNReport {
        envelopes: params.primes.iter().map(|p| (p.p, p.envelope.clone())).collect(),
        params,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::compute_bp;
    use crate::exact::rational::rat;

    #[test]
    fn params_175() {
        let x = xn_params(175).unwrap();
        let p5 = &x.primes[0];
        assert_eq!((p5.p, p5.k, p5.m, p5.r, p5.s, p5.m_p), (5, 2, 7, 30, 56, 25));
        assert_eq!(p5.envelope, rat(21025, 56));
        assert_eq!(compute_bp(&p5.equivalent_stats()).unwrap(), p5.envelope);
        let p7 = &x.primes[1];
        assert_eq!((p7.r, p7.s, p7.m_p), (8, 3750, 1));
        assert_eq!(x.field_degree, 120);
    }

    #[test]
    fn params_35() {
        let x = xn_params(35).unwrap();
        assert_eq!((x.primes[0].r, x.primes[0].m_p), (6, 1));
        // 5 has order 6 mod 7: one prime above 5 in Q(ζ_35).
        assert_eq!((x.primes[0].residue_degree, x.primes[0].primes_above), (6, 1));
        assert_eq!(xn_genus(35).unwrap(), 1393);
    }

    #[test]
    fn small_genera() {
        // X(5) and X(7) have genus 0 and 3.
        assert_eq!(xn_genus(5).unwrap(), 0);
        assert_eq!(xn_genus(7).unwrap(), 3);
    }

    #[test]
    fn invalid_levels() {
        assert!(xn_params(25).is_err());
        assert!(xn_params(30).is_err());
    }
}

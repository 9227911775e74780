//! X₀(N) for square-free `N` coprime to 6: index, genus, cusps, the Deligne–Rapoport
//! special fibers, and the full bound report.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use super::{first_failure, CatalogError, Check};
use crate::bounds::{
    analytic_bbeta_bound, ap_upper_bound, compute_bp, omega_total_bound, x0n_leading_term,
    AnalyticInputs, TotalBoundSpec,
};
use crate::divisors::{geometric_contribution, PrimeContribution};
use crate::exact::arith::{divisors, is_square_free, legendre, prime_factors};
use crate::exact::expr::LBAR2;
use crate::exact::rational::{format_rational, from_u64, int, is_integral, Rational};
use crate::exact::{BoundExpression, FormalLogSum};
use crate::exec::{self, Execution};
use crate::fiber::{ComponentRecord, DualStats, MarkedFiber, SectionHit, SpecialFiber};

/// Index of Γ₀(N) in SL₂(Z): `Π_{p|N}(p+1)`.
pub fn x0n_index(n: u64) -> Result<u64, CatalogError> {
    if n == 0 || !is_square_free(n) {
        return Err(CatalogError::invalid_n(n, "N must be square-free"));
    }
    Ok(prime_factors(n).iter().map(|p| p + 1).product())
}

fn check_coprime_square_free(n: u64) -> Result<(), CatalogError> {
    if n == 0 || !is_square_free(n) {
        return Err(CatalogError::invalid_n(n, "N must be square-free"));
    }
    if n % 2 == 0 || n % 3 == 0 {
        return Err(CatalogError::invalid_n(n, "N must be coprime to 6"));
    }
    Ok(())
}

/// Levels accepted by the fiber model: square-free, coprime to 6, at least two primes.
pub fn validate_level(n: u64) -> Result<Vec<u64>, CatalogError> {
    check_coprime_square_free(n)?;
    let primes = prime_factors(n);
    if primes.len() < 2 {
        return Err(CatalogError::invalid_n(n, "N must have at least two prime factors"));
    }
    Ok(primes)
}

/// Genus of X₀(N); valid for every square-free `N` coprime to 6 (including 1 and primes).
pub fn x0n_genus(n: u64) -> Result<u64, CatalogError> {
    check_coprime_square_free(n)?;
    let primes = prime_factors(n);
    let d: u64 = primes.iter().map(|p| p + 1).product();
    let e2: i64 = primes.iter().map(|&p| 1 + legendre(-1, p)).product();
    let e3: i64 = primes.iter().map(|&p| 1 + legendre(-3, p)).product();
    let cusps = 1u64 << primes.len();
    let g = Rational::one() + from_u64(d) / int(12)
        - Rational::new(e2.into(), 4.into())
        - Rational::new(e3.into(), 3.into())
        - Rational::new(cusps.into(), 2.into());
    assert!(
        is_integral(&g) && g >= Rational::zero(),
        "genus formula produced {g} for N = {n}"
    );
    Ok(g.to_integer().try_into().expect("genus fits in u64"))
}

/// A cusp of X₀(N), labelled by a divisor `e | N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cusp {
    pub e: u64,
    pub width: u64,
    pub name: String,
    /// Component hit in the fiber at each `p | N`.
    pub reduces_to: BTreeMap<u64, &'static str>,
}

pub const C0: &str = "C0";
pub const CINF: &str = "Cinf";

fn cusp_name(e: u64) -> String {
    format!("e{e}")
}

/// All `2^ν` cusps, `e | N` with width `N/e`, in increasing `e`.
pub fn x0n_cusps(n: u64) -> Result<Vec<Cusp>, CatalogError> {
    let primes = validate_level(n)?;
    let cusps: Vec<Cusp> = divisors(n)
        .into_iter()
        .map(|e| Cusp {
            e,
            width: n / e,
            name: cusp_name(e),
            reduces_to: primes
                .iter()
                .map(|&p| (p, if e % p == 0 { CINF } else { C0 }))
                .collect(),
        })
        .collect();
    let total: u64 = cusps.iter().map(|c| c.width).sum();
    assert_eq!(total, x0n_index(n)?, "cusp widths must sum to the index");
    Ok(cusps)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct X0NData {
    #[serde(rename = "N")]
    pub n: u64,
    pub prime_factors: Vec<u64>,
    pub d: u64,
    pub g: u64,
    pub cusps: Vec<Cusp>,
}

pub fn x0n_data(n: u64) -> Result<X0NData, CatalogError> {
    let prime_factors = validate_level(n)?;
    Ok(X0NData {
        n,
        d: x0n_index(n)?,
        g: x0n_genus(n)?,
        cusps: x0n_cusps(n)?,
        prime_factors,
    })
}

/// The `(u, v)` flags selecting the extra rational chains at `p`.
pub fn x0n_flags(n: u64, p: u64) -> (bool, bool) {
    let qs: Vec<u64> = prime_factors(n / p);
    let u = matches!(p % 12, 7 | 11) && qs.iter().all(|q| q % 4 == 1);
    let v = matches!(p % 12, 5 | 11) && qs.iter().all(|q| q % 3 == 1);
    (u, v)
}

fn check_prime(n: u64, p: u64) -> Result<(), CatalogError> {
    validate_level(n)?;
    if n % p != 0 || !crate::exact::arith::is_prime(p) {
        return Err(CatalogError::InvalidPrime {
            p,
            reason: format!("not a prime divisor of N = {n}"),
        });
    }
    Ok(())
}

/// Special fiber of X₀(N) at `p | N` with its cusps as sections.
///
/// Components are `C0`, `Cinf`, then `F1..` (if `u`) and interleaved `G1, H1, G2, H2, ..`
/// (if `v`). `C0` and `Cinf` carry the genus of X₀(N/p).
pub fn x0n_fiber(n: u64, p: u64) -> Result<MarkedFiber, CatalogError> {
    check_prime(n, p)?;
    let d = x0n_index(n)?;
    let m = n / p;
    let nu = prime_factors(m).len() as u32;
    let copies = 1u64 << nu;
    let (u, v) = x0n_flags(n, p);

    let mut crossing = from_u64(d * (p - 1)) / from_u64(12 * (p + 1));
    if u {
        crossing -= from_u64(copies) / int(2);
    }
    if v {
        crossing -= from_u64(copies) / int(3);
    }
    if !is_integral(&crossing) || crossing < Rational::zero() {
        return Err(CatalogError::NonIntegralCrossing {
            n,
            p,
            value: format_rational(&crossing),
        });
    }
    let crossing: u64 = crossing.to_integer().try_into().expect("small crossing");

    let gm = x0n_genus(m)?;
    let mut comps = vec![
        ComponentRecord::new(C0, 1, gm).with_local_degree(from_u64(p * d / (p + 1))),
        ComponentRecord::new(CINF, 1, gm).with_local_degree(from_u64(d / (p + 1))),
    ];
    let mut cross = vec![(0usize, 1usize, crossing)];
    if u {
        for k in 1..=copies {
            let i = comps.len();
            comps.push(ComponentRecord::new(format!("F{k}"), 1, 0).with_local_degree(Rational::zero()));
            cross.extend([(0, i, 1), (i, 1, 1)]);
        }
    }
    if v {
        for k in 1..=copies {
            let gi = comps.len();
            comps.push(ComponentRecord::new(format!("G{k}"), 1, 0).with_local_degree(Rational::zero()));
            comps.push(ComponentRecord::new(format!("H{k}"), 1, 0).with_local_degree(Rational::zero()));
            cross.extend([(0, gi, 1), (gi, gi + 1, 1), (gi + 1, 1, 1)]);
        }
    }
    cross.retain(|&(_, _, k)| k > 0);
    let fiber = SpecialFiber::new(p, p, comps, cross)?;
    let sections = divisors(n)
        .into_iter()
        .map(|e| SectionHit::new(cusp_name(e), n / e, if e % p == 0 { 1 } else { 0 }))
        .collect();
    Ok(MarkedFiber::new(fiber, sections))
}

/// `-12p/(p²-1)`, the expected value of `Σ_j b_j·G_j²` at `p`.
pub fn expected_weighted_g2(p: u64) -> Rational {
    -from_u64(12 * p) / from_u64(p * p - 1)
}

/// `-3(p+1)/(p-1)`, the expected value of `Σ_j b_j·F_j²` at `p`.
pub fn expected_weighted_f2(p: u64) -> Rational {
    -from_u64(3 * (p + 1)) / from_u64(p - 1)
}

/// `(2/d)·[12gp/(p²-1) - 6(g-1)/(p-1) - 3(g-1)]`.
pub fn closed_form_a_p(p: u64, g: u64, d: u64) -> Rational {
    let (pq, gq) = (from_u64(p), from_u64(g));
    let gm1 = &gq - Rational::one();
    let inner = int(12) * &gq * &pq / (&pq * &pq - Rational::one())
        - int(6) * &gm1 / (&pq - Rational::one())
        - int(3) * gm1;
    int(2) / from_u64(d) * inner
}

/// `Σ_p a_p·log p` in closed form.
pub fn closed_form_geometric(n: u64, g: u64, d: u64) -> FormalLogSum {
    let mut out = FormalLogSum::new();
    for p in prime_factors(n) {
        out.add_log(p, closed_form_a_p(p, g, d));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct X0NPrimeReport {
    pub p: u64,
    pub u_flag: bool,
    pub v_flag: bool,
    /// `Π(q+1)` over the primes `q` of `N/p`.
    pub q_product: u64,
    pub components: Vec<String>,
    pub stats: DualStats,
    #[serde(with = "crate::exact::rational::serde_str")]
    pub b_p: Rational,
    /// `2g·b_p`.
    #[serde(with = "crate::exact::rational::serde_str")]
    pub a_p_bound: Rational,
    #[serde(with = "crate::exact::rational::serde_str")]
    pub adjunction_sum: Rational,
    #[serde(with = "crate::exact::rational::serde_str")]
    pub expected_weighted_g2: Rational,
    #[serde(with = "crate::exact::rational::serde_str")]
    pub expected_weighted_f2: Rational,
    #[serde(with = "crate::exact::rational::serde_str")]
    pub closed_form_a_p: Rational,
    pub solved: PrimeContribution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct X0NReport {
    pub data: X0NData,
    pub primes: Vec<X0NPrimeReport>,
    /// Solver-assembled `Σ a_p·log p`.
    pub geometric: FormalLogSum,
    pub geometric_closed_form: FormalLogSum,
    pub analytic: BoundExpression,
    pub total: BoundExpression,
    /// `g·(16π·kappa0 - 1)·log N`.
    pub leading_term: BoundExpression,
    pub checks: Vec<Check>,
}

impl X0NReport {
    pub fn all_passed(&self) -> bool {
        first_failure(&self.checks).is_none()
    }

    pub fn prime(&self, p: u64) -> Option<&X0NPrimeReport> {
        self.primes.iter().find(|r| r.p == p)
    }
}

fn adjunction_sum(f: &SpecialFiber) -> Result<Rational, CatalogError> {
    let w = f.canonical_degrees()?;
    Ok(w.iter()
        .zip(f.multiplicities())
        .fold(Rational::zero(), |acc, (wi, mi)| acc + wi * mi))
}

/// Builds every fiber, solves all correction divisors, and assembles the bound.
pub fn x0n_report(n: u64, exec: Execution) -> Result<X0NReport, CatalogError> {
    let data = x0n_data(n)?;
    let (g, d) = (data.g, data.d);
    let fibers = exec::try_map(exec, &data.prime_factors, |&p| x0n_fiber(n, p))?;
    let geo = geometric_contribution(&fibers, g, d, exec)?;

    let mut checks = vec![Check::new(
        "cusp widths sum to d",
        data.cusps.iter().map(|c| c.width).sum::<u64>() == d,
    )];
    let mut primes = Vec::with_capacity(fibers.len());
    for (marked, solved) in fibers.iter().zip(&geo.primes) {
        let p = marked.fiber.prime_norm();
        debug_assert_eq!(p, solved.prime_norm);
        let (u_flag, v_flag) = x0n_flags(n, p);
        let stats = marked.fiber.dual_graph_stats()?;
        let b_p = compute_bp(&stats)?;
        let a_p_bound = ap_upper_bound(g, &b_p, false);
        let adj = adjunction_sum(&marked.fiber)?;
        let r = X0NPrimeReport {
            p,
            u_flag,
            v_flag,
            q_product: d / (p + 1),
            components: marked.fiber.components().iter().map(|c| c.name.clone()).collect(),
            stats,
            b_p,
            a_p_bound,
            adjunction_sum: adj,
            expected_weighted_g2: expected_weighted_g2(p),
            expected_weighted_f2: expected_weighted_f2(p),
            closed_form_a_p: closed_form_a_p(p, g, d),
            solved: solved.clone(),
        };
        checks.push(Check::new(
            format!("fiber valid at p={p}"),
            marked.validate(Some(d)).is_empty(),
        ));
        checks.push(
            Check::new(
                format!("adjunction sum at p={p}"),
                r.adjunction_sum == from_u64(2 * g - 2),
            )
            .with_detail(format_rational(&r.adjunction_sum)),
        );
        checks.push(
            Check::new(
                format!("sum b G^2 at p={p}"),
                r.solved.weighted_g2 == r.expected_weighted_g2,
            )
            .with_detail(format_rational(&r.solved.weighted_g2)),
        );
        checks.push(
            Check::new(
                format!("sum b F^2 at p={p}"),
                r.solved.weighted_f2 == r.expected_weighted_f2,
            )
            .with_detail(format_rational(&r.solved.weighted_f2)),
        );
        checks.push(Check::new(
            format!("a_p closed form at p={p}"),
            r.solved.a_p == r.closed_form_a_p,
        ));
        checks.push(Check::new(
            format!("a_p <= 2g b_p at p={p}"),
            r.solved.a_p <= r.a_p_bound,
        ));
        primes.push(r);
    }
    let closed = closed_form_geometric(n, g, d);
    checks.push(Check::new("geometric sum equals closed form", geo.value == closed));

    let analytic = analytic_bbeta_bound(&AnalyticInputs {
        genus: g,
        degree: d,
        field_degree: 1,
        widths: data.cusps.iter().map(|c| c.width).collect(),
        l_self_intersection: BoundExpression::sym(LBAR2),
        deg_l: 1,
        cusp_orders: vec![1; data.cusps.len()],
    })?;
    let total = omega_total_bound(
        &TotalBoundSpec {
            genus: g,
            field_degree: 1,
            disc_present: false,
            torsion_cuspidal: true,
        },
        &analytic,
        &geo.value,
    )?;
    let leading_term = x0n_leading_term(g, n)?;
    Ok(X0NReport {
        data,
        primes,
        geometric: geo.value,
        geometric_closed_form: closed,
        analytic,
        total,
        leading_term,
        checks,
    })
}

/// Valid levels `N <= max_n`, increasing.
pub fn valid_levels(max_n: u64) -> Vec<u64> {
    (5..=max_n).filter(|&n| validate_level(n).is_ok()).collect()
}

/// Reports for every valid level up to `max_n`; levels are processed in parallel when
/// requested and returned in increasing order.
pub fn x0n_sweep(max_n: u64, exec: Execution) -> Result<Vec<X0NReport>, CatalogError> {
    let levels = valid_levels(max_n);
    exec::try_map(exec, &levels, |&n| x0n_report(n, Execution::Sequential))
}

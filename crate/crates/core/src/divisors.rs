//! Correction divisors on one fiber and the geometric contribution `Σ a_p log Nm p`.
//!
//! For a cusp `S` meeting a fiber, `G` is the vertical divisor with
//! `(S + G - (1/d)·β*∞)·C_i = 0` for every component, and `F` the one with
//! `(S + F - K/(2g-2))·C_i = 0`. Both are found by solving `M·x = t` against the fiber's
//! intersection matrix, pinned at a component so the full-fiber ambiguity disappears.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::exact::matrix::{quadratic_form, solve_singular_symmetric, LinalgError};
use crate::exact::rational::{format_rational, from_u64, Rational};
use crate::exact::FormalLogSum;
use crate::exec::{self, Execution};
use crate::fiber::{FiberError, MarkedFiber, SectionHit, SpecialFiber};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DivisorError {
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error("component {component:?} has no local degree")]
    MissingLocalDegree { component: String },
    #[error("correction system for section {section:?} is inconsistent (degree bookkeeping broken)")]
    Inconsistent { section: String },
    #[error("fiber over {prime_norm}: cusp widths sum to {found}, expected d = {expected}")]
    WidthMismatch {
        prime_norm: u64,
        expected: u64,
        found: u64,
    },
    #[error("fiber over {prime_norm} has no section data")]
    MissingSections { prime_norm: u64 },
    #[error("two fibers share the prime norm {0}")]
    DuplicatePrimeNorm(u64),
    #[error("solved divisor for section {section:?} fails the orthogonality re-check")]
    Orthogonality { section: String },
}

fn linalg(section: &SectionHit) -> impl Fn(LinalgError) -> DivisorError + '_ {
    move |e| match e {
        LinalgError::Inconsistent => DivisorError::Inconsistent {
            section: section.name.clone(),
        },
        other => DivisorError::Fiber(FiberError::Linalg(other)),
    }
}

/// Rational combination of the components of one fiber, normalized by `coefficients[pin] = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerticalDivisor<'a> {
    fiber: &'a SpecialFiber,
    coefficients: Vec<Rational>,
    pin: usize,
}

impl<'a> VerticalDivisor<'a> {
    pub fn fiber(&self) -> &'a SpecialFiber {
        self.fiber
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    pub fn pin(&self) -> usize {
        self.pin
    }

    /// `xᵀ·M·x`, the coefficient of `log Nm p` in the divisor's self-intersection.
    pub fn self_intersection(&self) -> Rational {
        let m = self
            .fiber
            .intersection_matrix()
            .expect("divisor fibers are validated on construction");
        quadratic_form(&m, &self.coefficients).expect("dimensions agree")
    }
}

/// `D² = (xᵀMx)·log Nm p` as a single-atom log sum.
pub fn divisor_self_intersection(d: &VerticalDivisor<'_>) -> FormalLogSum {
    FormalLogSum::single(d.fiber.prime_norm(), d.self_intersection())
}

/// `t_i = deg_i/d - S·C_i`.
pub fn g_target(f: &SpecialFiber, s: &SectionHit, d: u64) -> Result<Vec<Rational>, DivisorError> {
    let dq = from_u64(d);
    f.components()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let deg = c
                .local_degree
                .as_ref()
                .ok_or_else(|| DivisorError::MissingLocalDegree {
                    component: c.name.clone(),
                })?;
            Ok(deg / &dq - from_u64(s.hit(i)))
        })
        .collect()
}

/// `t_i = (omega·C_i)/(2g-2) - S·C_i`, with the adjunction sum checked.
pub fn f_target(f: &SpecialFiber, s: &SectionHit, genus: u64) -> Result<Vec<Rational>, DivisorError> {
    let w = f.omega_restrictions(genus)?;
    let k = from_u64(2 * genus - 2);
    Ok(w.iter()
        .enumerate()
        .map(|(i, wi)| wi / &k - from_u64(s.hit(i)))
        .collect())
}

fn solve_against<'a>(
    f: &'a SpecialFiber,
    s: &SectionHit,
    target: Vec<Rational>,
    pin: usize,
) -> Result<VerticalDivisor<'a>, DivisorError> {
    let m = f.intersection_matrix()?;
    let x = solve_singular_symmetric(&m, &target, pin).map_err(linalg(s))?;
    if m.mul_vec(&x).map_err(linalg(s))? != target {
        return Err(DivisorError::Orthogonality {
            section: s.name.clone(),
        });
    }
    Ok(VerticalDivisor {
        fiber: f,
        coefficients: x,
        pin,
    })
}

fn ensure_valid(f: &SpecialFiber, degree: Option<u64>) -> Result<(), DivisorError> {
    let v = f.validate(degree);
    if v.is_empty() {
        Ok(())
    } else {
        Err(FiberError::Invalid(v).into())
    }
}

/// Solves for `G` pinned at component 0.
pub fn solve_g<'a>(
    f: &'a SpecialFiber,
    s: &SectionHit,
    d: u64,
) -> Result<VerticalDivisor<'a>, DivisorError> {
    solve_g_pinned(f, s, d, 0)
}

pub fn solve_g_pinned<'a>(
    f: &'a SpecialFiber,
    s: &SectionHit,
    d: u64,
    pin: usize,
) -> Result<VerticalDivisor<'a>, DivisorError> {
    let target = g_target(f, s, d)?;
    ensure_valid(f, Some(d))?;
    solve_against(f, s, target, pin)
}

/// Solves for `F` pinned at component 0.
pub fn solve_f<'a>(
    f: &'a SpecialFiber,
    s: &SectionHit,
    genus: u64,
) -> Result<VerticalDivisor<'a>, DivisorError> {
    solve_f_pinned(f, s, genus, 0)
}

pub fn solve_f_pinned<'a>(
    f: &'a SpecialFiber,
    s: &SectionHit,
    genus: u64,
    pin: usize,
) -> Result<VerticalDivisor<'a>, DivisorError> {
    ensure_valid(f, None)?;
    let target = f_target(f, s, genus)?;
    solve_against(f, s, target, pin)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CuspSolution {
    pub name: String,
    pub width: u64,
    #[serde(serialize_with = "crate::exact::rational::serde_str::vec::serialize")]
    pub g_coefficients: Vec<Rational>,
    #[serde(serialize_with = "crate::exact::rational::serde_str::vec::serialize")]
    pub f_coefficients: Vec<Rational>,
    #[serde(with = "crate::exact::rational::serde_str")]
    pub g_self_intersection: Rational,
    #[serde(with = "crate::exact::rational::serde_str")]
    pub f_self_intersection: Rational,
}

/// Everything solved on one fiber.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeContribution {
    pub prime_norm: u64,
    /// `Σ_j b_j·G_j²` (coefficient of `log Nm p`).
    #[serde(with = "crate::exact::rational::serde_str")]
    pub weighted_g2: Rational,
    /// `Σ_j b_j·F_j²`.
    #[serde(with = "crate::exact::rational::serde_str")]
    pub weighted_f2: Rational,
    #[serde(with = "crate::exact::rational::serde_str")]
    pub a_p: Rational,
    pub cusps: Vec<CuspSolution>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeometricContribution {
    /// `Σ a_p·log Nm p`.
    pub value: FormalLogSum,
    #[serde(skip)]
    pub per_prime: BTreeMap<u64, Rational>,
    #[serde(skip)]
    pub per_cusp_g2: BTreeMap<(u64, String), Rational>,
    #[serde(skip)]
    pub per_cusp_f2: BTreeMap<(u64, String), Rational>,
    pub primes: Vec<PrimeContribution>,
}

/// Solves every cusp on one fiber and forms
/// `a_p = -(2g/d)·Σ b_j G_j² + ((2g-2)/d)·Σ b_j F_j²`.
pub fn prime_contribution(
    marked: &MarkedFiber,
    genus: u64,
    d: u64,
) -> Result<PrimeContribution, DivisorError> {
    let f = &marked.fiber;
    if marked.sections.is_empty() {
        return Err(DivisorError::MissingSections {
            prime_norm: f.prime_norm(),
        });
    }
    let violations = marked.validate(Some(d));
    if !violations.is_empty() {
        return Err(FiberError::Invalid(violations).into());
    }
    let width_sum: u64 = marked.sections.iter().map(|s| s.width).sum();
    if width_sum != d {
        return Err(DivisorError::WidthMismatch {
            prime_norm: f.prime_norm(),
            expected: d,
            found: width_sum,
        });
    }
    let mut cusps = Vec::with_capacity(marked.sections.len());
    let (mut wg, mut wf) = (Rational::zero(), Rational::zero());
    for s in &marked.sections {
        let g = solve_g(f, s, d)?;
        let fd = solve_f(f, s, genus)?;
        let (g2, f2) = (g.self_intersection(), fd.self_intersection());
        let b = from_u64(s.width);
        wg += &b * &g2;
        wf += &b * &f2;
        cusps.push(CuspSolution {
            name: s.name.clone(),
            width: s.width,
            g_coefficients: g.coefficients().to_vec(),
            f_coefficients: fd.coefficients().to_vec(),
            g_self_intersection: g2,
            f_self_intersection: f2,
        });
    }
    let dq = from_u64(d);
    let a_p = -(from_u64(2 * genus) / &dq) * &wg + (from_u64(2 * genus - 2) / &dq) * &wf;
    Ok(PrimeContribution {
        prime_norm: f.prime_norm(),
        weighted_g2: wg,
        weighted_f2: wf,
        a_p,
        cusps,
    })
}

/// Assembles the geometric contribution over all fibers; per-fiber work may run in parallel
/// and is merged in input order.
pub fn geometric_contribution(
    fibers: &[MarkedFiber],
    genus: u64,
    d: u64,
    exec: Execution,
) -> Result<GeometricContribution, DivisorError> {
    if genus < 2 {
        return Err(FiberError::GenusTooSmall(genus).into());
    }
    let mut seen = std::collections::BTreeSet::new();
    for m in fibers {
        if !seen.insert(m.fiber.prime_norm()) {
            return Err(DivisorError::DuplicatePrimeNorm(m.fiber.prime_norm()));
        }
    }
    let primes = exec::try_map(exec, fibers, |m| prime_contribution(m, genus, d))?;
    let mut out = GeometricContribution {
        value: FormalLogSum::new(),
        per_prime: BTreeMap::new(),
        per_cusp_g2: BTreeMap::new(),
        per_cusp_f2: BTreeMap::new(),
        primes,
    };
    for pc in &out.primes {
        out.value.add_log(pc.prime_norm, pc.a_p.clone());
        out.per_prime.insert(pc.prime_norm, pc.a_p.clone());
        for c in &pc.cusps {
            let key = (pc.prime_norm, c.name.clone());
            out.per_cusp_g2.insert(key.clone(), c.g_self_intersection.clone());
            out.per_cusp_f2.insert(key, c.f_self_intersection.clone());
        }
    }
    out.primes.sort_by_key(|p| p.prime_norm);
    Ok(out)
}

impl GeometricContribution {
    /// Rebuilds `a_p` from the per-cusp maps; must agree with `per_prime`.
    pub fn reconstruct_a_p(&self, genus: u64, d: u64, widths: &BTreeMap<(u64, String), u64>) -> BTreeMap<u64, Rational> {
        let dq = from_u64(d);
        let mut out: BTreeMap<u64, Rational> = BTreeMap::new();
        for (key, g2) in &self.per_cusp_g2 {
            let f2 = &self.per_cusp_f2[key];
            let b = from_u64(widths[key]);
            let term = -(from_u64(2 * genus) / &dq) * &b * g2
                + (from_u64(2 * genus - 2) / &dq) * &b * f2;
            *out.entry(key.0).or_insert_with(Rational::zero) += term;
        }
        out.retain(|_, v| !v.is_zero());
        out
    }
}

impl std::fmt::Display for PrimeContribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "p={} a_p={} sum_bG2={} sum_bF2={}",
            self.prime_norm,
            format_rational(&self.a_p),
            format_rational(&self.weighted_g2),
            format_rational(&self.weighted_f2)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{int, rat};
    use crate::fiber::ComponentRecord;

    /// X0(35) at p = 5 by hand: C0, Cinf, G1, H1, G2, H2 with local degrees 40, 8.
    fn x0_35_at_5() -> SpecialFiber {
        let p1 = |n: &str| ComponentRecord::new(n, 1, 0).with_local_degree(int(0));
        SpecialFiber::new(
            5,
            5,
            vec![
                ComponentRecord::new("C0", 1, 0).with_local_degree(int(40)),
                ComponentRecord::new("Cinf", 1, 0).with_local_degree(int(8)),
                p1("G1"),
                p1("H1"),
                p1("G2"),
                p1("H2"),
            ],
            [(0, 1, 2), (0, 2, 1), (2, 3, 1), (3, 1, 1), (0, 4, 1), (4, 5, 1), (5, 1, 1)],
        )
        .unwrap()
    }

    #[test]
    fn irreducible_fiber_needs_no_correction() {
        let f = SpecialFiber::new(
            7,
            7,
            vec![ComponentRecord::new("X", 1, 3).with_local_degree(int(5))],
            [],
        )
        .unwrap();
        let s = SectionHit::new("s", 5, 0);
        assert_eq!(solve_g(&f, &s, 5).unwrap().coefficients(), &[int(0)]);
        assert_eq!(solve_f(&f, &s, 3).unwrap().coefficients(), &[int(0)]);
        assert!(divisor_self_intersection(&solve_g(&f, &s, 5).unwrap()).is_zero());
    }

    #[test]
    fn g_at_infinity_cusp() {
        let f = x0_35_at_5();
        let s = SectionHit::new("inf", 1, 1);
        let g = solve_g(&f, &s, 48).unwrap();
        assert_eq!(
            g.coefficients(),
            &[int(0), rat(5, 16), rat(5, 48), rat(5, 24), rat(5, 48), rat(5, 24)]
        );
        assert_eq!(g.self_intersection(), rat(-25, 96));
        assert_eq!(divisor_self_intersection(&g), FormalLogSum::single(5, rat(-25, 96)));
        let zero = SectionHit::new("zero", 35, 0);
        assert_eq!(solve_g(&f, &zero, 48).unwrap().self_intersection(), rat(-1, 96));
    }

    #[test]
    fn f_at_both_cusps() {
        let f = x0_35_at_5();
        let inf = solve_f(&f, &SectionHit::new("inf", 1, 1), 3).unwrap();
        assert_eq!(
            inf.coefficients(),
            &[int(0), rat(3, 16), rat(1, 16), rat(1, 8), rat(1, 16), rat(1, 8)]
        );
        assert_eq!(inf.self_intersection(), rat(-3, 32));
        assert_eq!(
            divisor_self_intersection(&inf),
            FormalLogSum::single(5, rat(-3, 32))
        );
        let zero = solve_f(&f, &SectionHit::new("zero", 35, 0), 3).unwrap();
        assert_eq!(zero.self_intersection(), rat(-3, 32));
    }

    #[test]
    fn missing_degree_and_width_errors() {
        let f = SpecialFiber::new(5, 5, vec![ComponentRecord::new("X", 1, 2)], []).unwrap();
        assert!(matches!(
            solve_g(&f, &SectionHit::new("s", 1, 0), 1),
            Err(DivisorError::MissingLocalDegree { .. })
        ));
        let marked = MarkedFiber::new(x0_35_at_5(), vec![SectionHit::new("inf", 1, 1)]);
        assert_eq!(
            prime_contribution(&marked, 3, 48),
            Err(DivisorError::WidthMismatch {
                prime_norm: 5,
                expected: 48,
                found: 1
            })
        );
        let bare = MarkedFiber::new(x0_35_at_5(), vec![]);
        assert_eq!(
            prime_contribution(&bare, 3, 48),
            Err(DivisorError::MissingSections { prime_norm: 5 })
        );
    }

    #[test]
    fn broken_degree_bookkeeping_is_rejected() {
        let f = x0_35_at_5();
        // d = 47 makes the weighted local degrees disagree with d
        assert!(matches!(
            solve_g(&f, &SectionHit::new("inf", 1, 1), 47),
            Err(DivisorError::Fiber(FiberError::Invalid(_)))
        ));
    }

    #[test]
    fn all_irreducible_fibers_contribute_nothing() {
        let f = |p| {
            MarkedFiber::new(
                SpecialFiber::new(
                    p,
                    p,
                    vec![ComponentRecord::new("X", 1, 2).with_local_degree(int(3))],
                    [],
                )
                .unwrap(),
                vec![SectionHit::new("a", 2, 0), SectionHit::new("b", 1, 0)],
            )
        };
        let gc = geometric_contribution(&[f(5), f(7)], 2, 3, Execution::Sequential).unwrap();
        assert!(gc.value.is_zero());
        assert!(gc.per_prime.values().all(Zero::is_zero));
    }
}

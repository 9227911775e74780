//! Closed-form bound assembly: the combinatorial `b_p`, the analytic contribution, the
//! spectral constant bound, and the total upper bound for the self-intersection of the
//! dualizing sheaf.
//!
//! The constants `kappa0`, `kappa`, `kappa1`, `kappa2`, `pi`, `logDisc` and `Lbar2` stay
//! symbolic in every [`BoundExpression`]; numbers appear only when a caller evaluates with
//! explicit bindings.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact::arith::{is_square_free, prime_factors};
use crate::exact::expr::{KAPPA, KAPPA0, KAPPA1, KAPPA2, LOG_DISC, PI};
use crate::exact::rational::{from_u64, Rational};
use crate::exact::{BoundExpression, FormalLogSum};
use crate::fiber::DualStats;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("degenerate dual-graph statistics {0:?}: need r >= 2, c >= 1, l >= 1 and r - c - 1 >= 0")]
    DegenerateStats(DualStats),
    #[error("invalid analytic inputs: {0}")]
    InvalidInputs(String),
    #[error("first nonzero eigenvalue must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("negative squared norm {0}")]
    NegativeNorm(f64),
    #[error("the total bound needs torsion cuspidal divisors (Manin-Drinfeld) to be asserted")]
    ManinDrinfeldNotAsserted,
    #[error("genus must be at least 2, got {0}")]
    GenusTooSmall(u64),
    #[error("invalid level N = {0}: need square-free, coprime to 6, at least two prime factors")]
    InvalidN(u64),
}

/// `b_p` from `(r, u, l, c)`:
/// `[Σ_{k=1}^{c} (Σ_{i=1}^{k} q^{i-1})² + (r-c-1)·(Σ_{i=1}^{c} q^{i-1})²]·u/l²` with `q = u/l`.
pub fn compute_bp(s: &DualStats) -> Result<Rational, BoundError> {
    if s.r < 2 || s.c < 1 || s.l < 1 || s.c + 1 > s.r {
        return Err(BoundError::DegenerateStats(*s));
    }
    let q = Rational::new(BigInt::from(s.u), BigInt::from(s.l));
    // partial[k] = Σ_{i=1}^{k} q^{i-1}
    let mut partial = Vec::with_capacity(s.c as usize);
    let (mut acc, mut pow) = (Rational::zero(), Rational::one());
    for _ in 0..s.c {
        acc += &pow;
        pow *= &q;
        partial.push(acc.clone());
    }
    let head: Rational = partial.iter().map(|x| x * x).sum();
    let last = partial.last().expect("c >= 1");
    let tail = from_u64(s.r - s.c - 1) * last * last;
    Ok((head + tail) * from_u64(s.u) / from_u64(s.l * s.l))
}

/// `a_p <= 2g·b_p`, or `2·b_p` for a Galois cover of the projective line.
pub fn ap_upper_bound(genus: u64, bp: &Rational, galois_over_p1: bool) -> Rational {
    let factor = if galois_over_p1 { 2 } else { 2 * genus };
    from_u64(factor) * bp
}

/// Inputs to the analytic contribution of a covering `X -> Y` of degree `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyticInputs {
    pub genus: u64,
    pub degree: u64,
    pub field_degree: u64,
    /// Cusp widths `b_j`; must sum to `degree`.
    pub widths: Vec<u64>,
    /// Arithmetic self-intersection of the metrized bundle on the base.
    pub l_self_intersection: BoundExpression,
    pub deg_l: u64,
    /// `ord_{f(S_j)}(l)`, parallel to `widths`.
    pub cusp_orders: Vec<u64>,
}

impl AnalyticInputs {
    pub fn validate(&self) -> Result<(), BoundError> {
        let bad = |m: String| Err(BoundError::InvalidInputs(m));
        if self.genus < 2 {
            return Err(BoundError::GenusTooSmall(self.genus));
        }
        if self.widths.is_empty() {
            return bad("no cusp widths".into());
        }
        if self.widths.contains(&0) {
            return bad("cusp width 0".into());
        }
        let total: u64 = self.widths.iter().sum();
        if total != self.degree {
            return bad(format!("widths sum to {total}, degree is {}", self.degree));
        }
        if self.cusp_orders.len() != self.widths.len() {
            return bad(format!(
                "{} cusp orders for {} widths",
                self.cusp_orders.len(),
                self.widths.len()
            ));
        }
        if self.field_degree == 0 || self.degree == 0 {
            return bad("field degree and covering degree must be positive".into());
        }
        Ok(())
    }

    pub fn b_max(&self) -> u64 {
        self.widths.iter().copied().max().unwrap_or(1)
    }
}

fn pi_kappa0() -> String {
    format!("{PI}*{KAPPA0}")
}

/// `Σ_j w_j·b_j·log b_j` as a log expression.
fn weighted_width_logs(widths: &[u64], weights: impl Iterator<Item = u64>) -> BoundExpression {
    widths
        .iter()
        .zip(weights)
        .fold(BoundExpression::zero(), |acc, (&b, w)| {
            acc + BoundExpression::log(b, from_u64(w * b))
        })
}

/// `4π·kappa0·Σ_j ord_j·b_j·log(b_j)/g + (d/g)·kappa`.
pub fn jk_integral_bound(inp: &AnalyticInputs) -> Result<BoundExpression, BoundError> {
    inp.validate()?;
    let g = from_u64(inp.genus);
    let logs = weighted_width_logs(&inp.widths, inp.cusp_orders.iter().copied());
    let pk = BoundExpression::sym(&pi_kappa0()).scale(&(from_u64(4) / &g));
    Ok(pk.mul(&logs).expect("linear") + BoundExpression::sym(KAPPA).scale(&(from_u64(inp.degree) / g)))
}

/// `-(2g/d)·Lbar² + [K:Q]·(8π·kappa0·Σ_j b_j·log(b_j)/d + 2·kappa)`.
pub fn analytic_bbeta_bound(inp: &AnalyticInputs) -> Result<BoundExpression, BoundError> {
    inp.validate()?;
    let d = from_u64(inp.degree);
    let logs = weighted_width_logs(&inp.widths, std::iter::repeat(1));
    let inner = BoundExpression::sym(&pi_kappa0())
        .scale(&(from_u64(8) / &d))
        .mul(&logs)
        .expect("linear")
        + BoundExpression::sym(KAPPA).scale(&from_u64(2));
    Ok(inp
        .l_self_intersection
        .scale(&-(from_u64(2 * inp.genus) / d))
        + inner.scale(&from_u64(inp.field_degree)))
}

/// Simplified analytic bound `[K:Q]·(kappa1·log b_max + kappa2)`.
pub fn analytic_simplified(field_degree: u64, b_max: u64) -> BoundExpression {
    let k = from_u64(field_degree);
    BoundExpression::sym_log(KAPPA1, b_max, k.clone()) + BoundExpression::sym(KAPPA2).scale(&k)
}

/// `(2/λ₁)·‖f‖²`, with `λ₁` replaced by `min(λ₁, 1/4)` in the hyperbolic case.
pub fn spectral_c_bound(lambda1: f64, f_norm_sq: f64, hyperbolic: bool) -> Result<f64, BoundError> {
    if !(lambda1 > 0.0) {
        return Err(BoundError::NonPositiveLambda(lambda1));
    }
    if f_norm_sq < 0.0 {
        return Err(BoundError::NegativeNorm(f_norm_sq));
    }
    let lambda = if hyperbolic { lambda1.min(0.25) } else { lambda1 };
    Ok(2.0 / lambda * f_norm_sq)
}

/// Global data for the total bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TotalBoundSpec {
    pub genus: u64,
    pub field_degree: u64,
    /// Include the `2·logDisc` term (absent over Q).
    pub disc_present: bool,
    /// Caller asserts all cuspidal divisors are torsion, so Néron–Tate terms vanish.
    pub torsion_cuspidal: bool,
}

/// `(2g-2)·(2·logDisc + analytic + geometric)`.
pub fn omega_total_bound(
    spec: &TotalBoundSpec,
    analytic: &BoundExpression,
    geometric: &FormalLogSum,
) -> Result<BoundExpression, BoundError> {
    if !spec.torsion_cuspidal {
        return Err(BoundError::ManinDrinfeldNotAsserted);
    }
    if spec.genus < 2 {
        return Err(BoundError::GenusTooSmall(spec.genus));
    }
    if spec.field_degree == 0 {
        return Err(BoundError::InvalidInputs("field degree must be positive".into()));
    }
    let mut inner = analytic.clone() + BoundExpression::from_logsum(geometric);
    if spec.disc_present {
        inner += BoundExpression::sym(LOG_DISC).scale(&from_u64(2));
    }
    Ok(inner.scale(&from_u64(2 * spec.genus - 2)))
}

pub(crate) fn check_x0n_level(n: u64) -> Result<Vec<u64>, BoundError> {
    let primes = prime_factors(n);
    if !is_square_free(n) || n % 2 == 0 || n % 3 == 0 || primes.len() < 2 {
        return Err(BoundError::InvalidN(n));
    }
    Ok(primes)
}

/// Leading shape `g·(16π·kappa0 - 1)·log N`, with `log N` expanded over primes.
pub fn x0n_leading_term(genus: u64, n: u64) -> Result<BoundExpression, BoundError> {
    check_x0n_level(n)?;
    Ok(x0n_leading_coefficient(genus)
        .mul(&BoundExpression::log(n, Rational::one()))
        .expect("linear"))
}

/// `16g·π·kappa0 - g`, the coefficient of `log N` in the leading shape.
pub fn x0n_leading_coefficient(genus: u64) -> BoundExpression {
    let g = from_u64(genus);
    BoundExpression::sym(&pi_kappa0()).scale(&(from_u64(16) * &g)) - BoundExpression::constant(g)
}

/// Whether a raw value sits inside a published envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EnvelopeFlag {
    Ok,
    EnvelopeExceeded,
}

impl EnvelopeFlag {
    pub fn compare(raw: &Rational, envelope: &Rational) -> Self {
        if raw <= envelope {
            EnvelopeFlag::Ok
        } else {
            EnvelopeFlag::EnvelopeExceeded
        }
    }
}

impl std::fmt::Display for EnvelopeFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnvelopeFlag::Ok => "OK",
            EnvelopeFlag::EnvelopeExceeded => "ENVELOPE_EXCEEDED",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::expr::{Atom, LBAR2};
    use crate::exact::rational::{int, rat};

    fn stats(r: u64, u: u64, l: u64, c: u64) -> DualStats {
        DualStats { r, u, l, c }
    }

    #[test]
    fn bp_examples() {
        assert_eq!(compute_bp(&stats(2, 1, 1, 1)).unwrap(), int(1));
        assert_eq!(compute_bp(&stats(9, 5, 1, 3)).unwrap(), int(29015));
        assert_eq!(compute_bp(&stats(6, 2, 1, 3)).unwrap(), int(314));
        assert_eq!(compute_bp(&stats(18, 7, 1, 3)).unwrap(), int(341_600));
    }

    #[test]
    fn bp_degenerate() {
        assert!(compute_bp(&stats(1, 1, 1, 1)).is_err());
        assert!(compute_bp(&stats(3, 1, 1, 3)).is_err());
        assert!(compute_bp(&stats(3, 1, 1, 0)).is_err());
    }

    #[test]
    fn ap_bounds() {
        assert_eq!(ap_upper_bound(3, &int(314), false), int(1884));
        assert_eq!(ap_upper_bound(17, &int(29015), true), int(58030));
        assert!(rat(-1, 16) <= ap_upper_bound(3, &int(314), false));
    }

    fn x0_35_inputs() -> AnalyticInputs {
        AnalyticInputs {
            genus: 3,
            degree: 48,
            field_degree: 1,
            widths: vec![35, 7, 5, 1],
            l_self_intersection: BoundExpression::sym(LBAR2),
            deg_l: 1,
            cusp_orders: vec![1; 4],
        }
    }

    #[test]
    fn jk_bound_examples() {
        let ones = AnalyticInputs {
            widths: vec![1; 4],
            degree: 4,
            ..x0_35_inputs()
        };
        assert_eq!(
            jk_integral_bound(&ones).unwrap(),
            BoundExpression::sym(KAPPA).scale(&rat(4, 3))
        );
        let e = jk_integral_bound(&x0_35_inputs()).unwrap();
        // (4/3)(35 log 35 + 7 log 7 + 5 log 5) = (4/3)(40 log 5 + 42 log 7)
        assert_eq!(e.sym_log_coeff("pi*kappa0", 5), rat(160, 3));
        assert_eq!(e.sym_log_coeff("pi*kappa0", 7), int(56));
        assert_eq!(e.coeff(&Atom::Sym(KAPPA.into())), int(16));
    }

    #[test]
    fn single_cusp_of_width_n() {
        let inp = AnalyticInputs {
            genus: 3,
            degree: 35,
            widths: vec![35],
            cusp_orders: vec![1],
            ..x0_35_inputs()
        };
        let expected = BoundExpression::sym_log("pi*kappa0", 35, rat(4 * 35, 3))
            + BoundExpression::sym(KAPPA).scale(&rat(35, 3));
        assert_eq!(jk_integral_bound(&inp).unwrap(), expected);
    }

    #[test]
    fn analytic_examples() {
        let ones = AnalyticInputs {
            widths: vec![1; 4],
            degree: 4,
            l_self_intersection: BoundExpression::zero(),
            field_degree: 2,
            ..x0_35_inputs()
        };
        assert_eq!(
            analytic_bbeta_bound(&ones).unwrap(),
            BoundExpression::sym(KAPPA).scale(&int(4))
        );
        let e = analytic_bbeta_bound(&x0_35_inputs()).unwrap();
        assert_eq!(e.coeff(&Atom::Sym(LBAR2.into())), rat(-1, 8));
        assert_eq!(e.sym_log_coeff("pi*kappa0", 5), rat(8 * 40, 48));
        assert_eq!(e.sym_log_coeff("pi*kappa0", 7), int(7));
        assert_eq!(e.coeff(&Atom::Sym(KAPPA.into())), int(2));
        let s = analytic_simplified(1, 35);
        assert_eq!(
            s,
            BoundExpression::sym_log(KAPPA1, 5, int(1))
                + BoundExpression::sym_log(KAPPA1, 7, int(1))
                + BoundExpression::sym(KAPPA2)
        );
    }

    #[test]
    fn invalid_inputs() {
        let bad = AnalyticInputs {
            widths: vec![35, 7],
            ..x0_35_inputs()
        };
        assert!(matches!(jk_integral_bound(&bad), Err(BoundError::InvalidInputs(_))));
    }

    #[test]
    fn spectral_examples() {
        assert_eq!(spectral_c_bound(4.0, 0.25, false).unwrap(), 0.125);
        assert_eq!(spectral_c_bound(1.0, 1.0, true).unwrap(), 8.0);
        assert_eq!(spectral_c_bound(0.1, 1.0, true).unwrap(), 20.0);
        assert!(matches!(
            spectral_c_bound(0.0, 1.0, false),
            Err(BoundError::NonPositiveLambda(_))
        ));
    }

    #[test]
    fn total_bound() {
        let spec = TotalBoundSpec {
            genus: 2,
            field_degree: 1,
            disc_present: true,
            torsion_cuspidal: true,
        };
        let t = omega_total_bound(&spec, &BoundExpression::zero(), &FormalLogSum::new()).unwrap();
        assert_eq!(t, BoundExpression::sym(LOG_DISC).scale(&int(4)));
        let no_md = TotalBoundSpec {
            torsion_cuspidal: false,
            ..spec
        };
        assert_eq!(
            omega_total_bound(&no_md, &BoundExpression::zero(), &FormalLogSum::new()),
            Err(BoundError::ManinDrinfeldNotAsserted)
        );
    }

    #[test]
    fn leading_term() {
        let e = x0n_leading_term(3, 35).unwrap();
        for p in [5, 7] {
            assert_eq!(e.sym_log_coeff("pi*kappa0", p), int(48));
            assert_eq!(e.coeff(&Atom::Log(p)), int(-3));
        }
        assert!(matches!(x0n_leading_term(3, 36), Err(BoundError::InvalidN(36))));
        assert!(matches!(x0n_leading_term(3, 7), Err(BoundError::InvalidN(7))));
    }
}

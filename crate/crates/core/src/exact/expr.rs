//! Symbolic bound expressions: exact linear combinations of `1`, `log n`, named constants
//! (and products of them), and named constants times `log n`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use super::arith::factorize;
use super::logsum::FormalLogSum;
use super::rational::{format_rational, from_u64, to_f64, Rational};

pub const PI: &str = "pi";
pub const KAPPA0: &str = "kappa0";
pub const KAPPA: &str = "kappa";
pub const KAPPA1: &str = "kappa1";
pub const KAPPA2: &str = "kappa2";
pub const LOG_DISC: &str = "logDisc";
/// Arithmetic self-intersection of the metrized line bundle on the base curve.
pub const LBAR2: &str = "Lbar2";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("unbound symbol {0:?}")]
    UnboundSymbol(String),
    #[error("product is not linear in logarithms: {0} * {1}")]
    NonLinear(String, String),
    #[error("invalid symbol name {0:?}")]
    InvalidName(String),
}

/// Basis element of a [`BoundExpression`].
///
/// `Log` atoms are always rational primes; `Sym` names are monomials in named constants,
/// written with factors sorted and joined by `*` (`kappa0*pi`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Unit,
    Log(u64),
    Sym(String),
    SymTimesLog(String, u64),
}

impl Atom {
    fn log_prime(&self) -> Option<u64> {
        match self {
            Atom::Log(p) | Atom::SymTimesLog(_, p) => Some(*p),
            _ => None,
        }
    }

    fn monomial(&self) -> Option<&str> {
        match self {
            Atom::Sym(s) | Atom::SymTimesLog(s, _) => Some(s),
            _ => None,
        }
    }

    fn from_parts(monomial: Option<String>, log: Option<u64>) -> Atom {
        match (monomial, log) {
            (None, None) => Atom::Unit,
            (None, Some(p)) => Atom::Log(p),
            (Some(s), None) => Atom::Sym(s),
            (Some(s), Some(p)) => Atom::SymTimesLog(s, p),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Unit => f.write_str("1"),
            Atom::Log(p) => write!(f, "log {p}"),
            Atom::Sym(s) => f.write_str(s),
            Atom::SymTimesLog(s, p) => write!(f, "{s}·log {p}"),
        }
    }
}

fn multiply_monomials(a: &str, b: &str) -> String {
    let mut factors: Vec<&str> = a.split('*').chain(b.split('*')).collect();
    factors.sort_unstable();
    factors.join("*")
}

fn canonical_monomial(name: &str) -> Result<String, ExprError> {
    let mut factors: Vec<&str> = name.split('*').map(str::trim).collect();
    let ok = factors.iter().all(|f| {
        !f.is_empty()
            && f.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && f.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
    });
    if !ok {
        return Err(ExprError::InvalidName(name.to_string()));
    }
    factors.sort_unstable();
    Ok(factors.join("*"))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundExpression {
    terms: BTreeMap<Atom, Rational>,
}

impl BoundExpression {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(q: Rational) -> Self {
        let mut e = Self::zero();
        e.add_term(Atom::Unit, q);
        e
    }

    /// `q · log n`, expanded over the prime factors of `n`.
    pub fn log(n: u64, q: Rational) -> Self {
        let mut e = Self::zero();
        for (p, k) in factorize(n) {
            e.add_term(Atom::Log(p), &q * from_u64(k as u64));
        }
        e
    }

    /// A named constant (or a `*`-product of them) with coefficient 1.
    pub fn sym(name: &str) -> Self {
        Self::try_sym(name).expect("valid symbol name")
    }

    pub fn try_sym(name: &str) -> Result<Self, ExprError> {
        let mut e = Self::zero();
        e.add_term(Atom::Sym(canonical_monomial(name)?), Rational::one());
        Ok(e)
    }

    /// `name · log n` with coefficient `q`.
    pub fn sym_log(name: &str, n: u64, q: Rational) -> Self {
        Self::sym(name)
            .mul(&Self::log(n, q))
            .expect("symbol times log is linear")
    }

    pub fn from_logsum(s: &FormalLogSum) -> Self {
        s.terms()
            .fold(Self::zero(), |acc, (a, c)| acc + Self::log(a, c.clone()))
    }

    fn add_term(&mut self, atom: Atom, q: Rational) {
        if q.is_zero() {
            return;
        }
        let entry = self.terms.entry(atom.clone()).or_insert_with(Rational::zero);
        *entry += q;
        if entry.is_zero() {
            self.terms.remove(&atom);
        }
    }

    pub fn coeff(&self, atom: &Atom) -> Rational {
        self.terms.get(atom).cloned().unwrap_or_else(Rational::zero)
    }

    /// Coefficient of `name · log p` (name canonicalized).
    pub fn sym_log_coeff(&self, name: &str, p: u64) -> Rational {
        match canonical_monomial(name) {
            Ok(m) => self.coeff(&Atom::SymTimesLog(m, p)),
            Err(_) => Rational::zero(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Atom, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(a, c)| (a.clone(), c * q)).collect(),
        }
    }

    /// Product of two expressions; fails if a `log·log` term would arise.
    pub fn mul(&self, other: &BoundExpression) -> Result<BoundExpression, ExprError> {
        let mut out = Self::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let log = match (a.log_prime(), b.log_prime()) {
                    (Some(_), Some(_)) => {
                        return Err(ExprError::NonLinear(a.to_string(), b.to_string()))
                    }
                    (x, y) => x.or(y),
                };
                let mono = match (a.monomial(), b.monomial()) {
                    (Some(x), Some(y)) => Some(multiply_monomials(x, y)),
                    (x, y) => x.or(y).map(str::to_string),
                };
                out.add_term(Atom::from_parts(mono, log), ca * cb);
            }
        }
        Ok(out)
    }

    /// Replaces the named constant `name` by `value` wherever it occurs as a factor.
    pub fn substitute(&self, name: &str, value: &BoundExpression) -> Result<BoundExpression, ExprError> {
        let name = canonical_monomial(name)?;
        let mut out = Self::zero();
        for (atom, c) in &self.terms {
            let Some(mono) = atom.monomial() else {
                out.add_term(atom.clone(), c.clone());
                continue;
            };
            let mut factors: Vec<&str> = mono.split('*').collect();
            let hits = factors.iter().filter(|f| **f == name).count();
            if hits == 0 {
                out.add_term(atom.clone(), c.clone());
                continue;
            }
            factors.retain(|f| *f != name);
            let rest = if factors.is_empty() {
                None
            } else {
                Some(factors.join("*"))
            };
            let mut term = Self::zero();
            term.add_term(Atom::from_parts(rest, atom.log_prime()), c.clone());
            for _ in 0..hits {
                term = term.mul(value)?;
            }
            out += term;
        }
        Ok(out)
    }

    /// All constant names appearing as factors.
    pub fn symbols(&self) -> BTreeSet<String> {
        self.terms
            .keys()
            .filter_map(Atom::monomial)
            .flat_map(|m| m.split('*').map(str::to_string))
            .collect()
    }

    /// Names not covered by `bindings` (`pi` counts as bound).
    pub fn unbound_symbols(&self, bindings: &BTreeMap<String, f64>) -> BTreeSet<String> {
        self.symbols()
            .into_iter()
            .filter(|s| s != PI && !bindings.contains_key(s))
            .collect()
    }

    /// Splits into `(evaluable, rest)`: terms whose every factor is bound, and the others.
    pub fn partition_by_bindings(&self, bindings: &BTreeMap<String, f64>) -> (Self, Self) {
        let mut bound = Self::zero();
        let mut rest = Self::zero();
        for (atom, c) in &self.terms {
            let ok = atom
                .monomial()
                .map_or(true, |m| m.split('*').all(|f| f == PI || bindings.contains_key(f)));
            let target = if ok { &mut bound } else { &mut rest };
            target.add_term(atom.clone(), c.clone());
        }
        (bound, rest)
    }

    /// Numeric value; `pi` is bound to π unless the caller overrides it.
    pub fn eval(&self, bindings: &BTreeMap<String, f64>) -> Result<f64, ExprError> {
        let lookup = |name: &str| -> Result<f64, ExprError> {
            match bindings.get(name) {
                Some(v) => Ok(*v),
                None if name == PI => Ok(std::f64::consts::PI),
                None => Err(ExprError::UnboundSymbol(name.to_string())),
            }
        };
        let mut total = 0.0;
        for (atom, c) in &self.terms {
            let mut v = to_f64(c);
            if let Some(m) = atom.monomial() {
                for f in m.split('*') {
                    v *= lookup(f)?;
                }
            }
            if let Some(p) = atom.log_prime() {
                v *= (p as f64).ln();
            }
            total += v;
        }
        Ok(total)
    }
}

impl Add for BoundExpression {
    type Output = BoundExpression;
    fn add(mut self, rhs: BoundExpression) -> BoundExpression {
        self += rhs;
        self
    }
}

impl AddAssign for BoundExpression {
    fn add_assign(&mut self, rhs: BoundExpression) {
        for (a, c) in rhs.terms {
            self.add_term(a, c);
        }
    }
}

impl Neg for BoundExpression {
    type Output = BoundExpression;
    fn neg(self) -> BoundExpression {
        Self {
            terms: self.terms.into_iter().map(|(a, c)| (a, -c)).collect(),
        }
    }
}

impl Sub for BoundExpression {
    type Output = BoundExpression;
    fn sub(self, rhs: BoundExpression) -> BoundExpression {
        self + (-rhs)
    }
}

impl From<&FormalLogSum> for BoundExpression {
    fn from(s: &FormalLogSum) -> Self {
        Self::from_logsum(s)
    }
}

impl fmt::Display for BoundExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (a, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            match (i, c.is_negative()) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            match (a, mag.is_one()) {
                (Atom::Unit, _) => write!(f, "{mag}")?,
                (_, true) => write!(f, "{a}")?,
                (_, false) => write!(f, "{mag}·{a}")?,
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct TermRecord<'a> {
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    symbol: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log: Option<u64>,
    coeff: String,
}

impl Serialize for BoundExpression {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let records: Vec<TermRecord<'_>> = self
            .terms
            .iter()
            .map(|(a, c)| TermRecord {
                kind: match a {
                    Atom::Unit => "unit",
                    Atom::Log(_) => "log",
                    Atom::Sym(_) => "sym",
                    Atom::SymTimesLog(_, _) => "sym_log",
                },
                symbol: a.monomial(),
                log: a.log_prime(),
                coeff: format_rational(c),
            })
            .collect();
        records.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{int, rat};

    fn binds(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(BoundExpression::constant(int(3)).eval(&binds(&[])).unwrap(), 3.0);
        let e = BoundExpression::sym_log(KAPPA1, 35, int(1));
        let v = e.eval(&binds(&[(KAPPA1, 2.0)])).unwrap();
        assert!((v - 2.0 * 35f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn leading_x0_35_numeric() {
        // (16 pi kappa0 - 1) * 3 * log 35
        let shape = BoundExpression::sym("pi*kappa0").scale(&int(16)) - BoundExpression::constant(int(1));
        let e = shape.mul(&BoundExpression::log(35, int(3))).unwrap();
        let v = e.eval(&binds(&[(KAPPA0, 1.0)])).unwrap();
        let expected = (16.0 * std::f64::consts::PI - 1.0) * 3.0 * 35f64.ln();
        assert!((v - expected).abs() < 1e-9);
        assert!((v - 525.4678).abs() < 1e-3);
        assert_eq!(e.sym_log_coeff("kappa0*pi", 5), int(48));
        assert_eq!(e.coeff(&Atom::Log(7)), int(-3));
    }

    #[test]
    fn partition_splits_on_unbound_factors() {
        let e = BoundExpression::sym("pi*kappa0").scale(&int(2))
            + BoundExpression::sym(LBAR2).scale(&rat(-1, 2))
            + BoundExpression::log(5, int(3));
        let b = binds(&[(KAPPA0, 1.0)]);
        let (bound, rest) = e.partition_by_bindings(&b);
        assert_eq!(bound.clone() + rest.clone(), e);
        assert_eq!(rest, BoundExpression::sym(LBAR2).scale(&rat(-1, 2)));
        let v = bound.eval(&b).unwrap();
        assert!((v - (2.0 * std::f64::consts::PI + 3.0 * 5f64.ln())).abs() < 1e-12);
        let (all, none) = e.partition_by_bindings(&binds(&[(KAPPA0, 1.0), (LBAR2, 0.0)]));
        assert_eq!((all, none.is_zero()), (e, true));
    }

    #[test]
    fn unbound_symbol_is_reported() {
        let e = BoundExpression::sym(KAPPA);
        assert_eq!(
            e.eval(&binds(&[])),
            Err(ExprError::UnboundSymbol("kappa".into()))
        );
        assert_eq!(
            e.unbound_symbols(&binds(&[])),
            BTreeSet::from(["kappa".to_string()])
        );
    }

    #[test]
    fn logs_are_canonical_over_primes() {
        let a = BoundExpression::log(35, int(1));
        let b = BoundExpression::log(5, int(1)) + BoundExpression::log(7, int(1));
        assert_eq!(a, b);
        assert_eq!(BoundExpression::log(25, int(1)), BoundExpression::log(5, int(2)));
        assert!(BoundExpression::log(1, int(9)).is_zero());
    }

    #[test]
    fn monomials_commute() {
        assert_eq!(BoundExpression::sym("pi*kappa0"), BoundExpression::sym("kappa0*pi"));
        let p = BoundExpression::sym(PI).mul(&BoundExpression::sym(KAPPA0)).unwrap();
        assert_eq!(p, BoundExpression::sym("kappa0*pi"));
    }

    #[test]
    fn log_times_log_rejected() {
        let l = BoundExpression::log(5, int(1));
        assert!(matches!(l.mul(&l), Err(ExprError::NonLinear(..))));
    }

    #[test]
    fn substitution() {
        let e = BoundExpression::sym_log("kappa0*pi", 5, int(2)) + BoundExpression::sym(KAPPA);
        let s = e
            .substitute(KAPPA0, &BoundExpression::constant(rat(1, 2)))
            .unwrap()
            .substitute(KAPPA, &BoundExpression::log(7, int(1)))
            .unwrap();
        assert_eq!(s, BoundExpression::sym_log(PI, 5, int(1)) + BoundExpression::log(7, int(1)));
        assert!(BoundExpression::try_sym("bad name").is_err());
    }

    #[test]
    fn display() {
        let e = BoundExpression::constant(int(-2)) + BoundExpression::sym_log(KAPPA1, 5, rat(1, 2));
        assert_eq!(e.to_string(), "-2 + 1/2·kappa1·log 5");
    }
}

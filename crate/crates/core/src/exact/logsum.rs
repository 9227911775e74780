//! Exact formal sums `Σ q·log(n)` over prime-norm atoms.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_traits::{Signed, Zero};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use super::arith::{factorize, prime_power_base};
use super::rational::{format_rational, from_u64, to_f64, Rational};

/// Linear combination of logarithms with exact rational coefficients.
///
/// Atoms are norms of prime ideals, so prime powers are kept as they are; any other
/// composite is expanded into its prime factors (`log 35 = log 5 + log 7`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FormalLogSum {
    terms: BTreeMap<u64, Rational>,
}

impl FormalLogSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// `coeff · log(n)`; `n = 1` contributes nothing.
    pub fn single(n: u64, coeff: Rational) -> Self {
        let mut s = Self::new();
        s.add_log(n, coeff);
        s
    }

    /// Adds `coeff · log(n)`. Panics on `n = 0`.
    pub fn add_log(&mut self, n: u64, coeff: Rational) {
        assert!(n > 0, "log of zero");
        if n == 1 || coeff.is_zero() {
            return;
        }
        if prime_power_base(n).is_some() {
            self.add_atom(n, coeff);
        } else {
            for (p, e) in factorize(n) {
                self.add_atom(p, &coeff * from_u64(e as u64));
            }
        }
    }

    fn add_atom(&mut self, atom: u64, coeff: Rational) {
        let entry = self.terms.entry(atom).or_insert_with(Rational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&atom);
        }
    }

    pub fn coeff(&self, atom: u64) -> Rational {
        self.terms.get(&atom).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &Rational)> {
        self.terms.iter().map(|(&a, q)| (a, q))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::new();
        }
        Self {
            terms: self.terms.iter().map(|(&a, c)| (a, c * q)).collect(),
        }
    }

    /// Fully expanded over rational primes: `{25: 1}` becomes `{5: 2}`.
    pub fn expand_primes(&self) -> Self {
        let mut out = Self::new();
        for (&a, c) in &self.terms {
            for (p, e) in factorize(a) {
                out.add_atom(p, c * from_u64(e as u64));
            }
        }
        out
    }

    /// `Σ coeff·ln(atom)` in double precision.
    pub fn eval(&self) -> f64 {
        self.terms
            .iter()
            .map(|(&a, c)| to_f64(c) * (a as f64).ln())
            .sum()
    }
}

impl Add for FormalLogSum {
    type Output = FormalLogSum;
    fn add(mut self, rhs: FormalLogSum) -> FormalLogSum {
        self += rhs;
        self
    }
}

impl AddAssign for FormalLogSum {
    fn add_assign(&mut self, rhs: FormalLogSum) {
        for (a, c) in rhs.terms {
            self.add_atom(a, c);
        }
    }
}

impl Neg for FormalLogSum {
    type Output = FormalLogSum;
    fn neg(self) -> FormalLogSum {
        Self {
            terms: self.terms.into_iter().map(|(a, c)| (a, -c)).collect(),
        }
    }
}

impl Sub for FormalLogSum {
    type Output = FormalLogSum;
    fn sub(self, rhs: FormalLogSum) -> FormalLogSum {
        self + (-rhs)
    }
}

impl Mul<&Rational> for &FormalLogSum {
    type Output = FormalLogSum;
    fn mul(self, q: &Rational) -> FormalLogSum {
        self.scale(q)
    }
}

impl fmt::Display for FormalLogSum {
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
            write!(f, "{mag}·log {a}")?;
        }
        Ok(())
    }
}

impl Serialize for FormalLogSum {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.terms.len()))?;
        for (a, c) in &self.terms {
            map.serialize_entry(&a.to_string(), &format_rational(c))?;
        }
        map.end()
    }
}

//! Special fibers as weighted crossing graphs.
//!
//! A fiber is a list of irreducible components (multiplicity, arithmetic genus, optional
//! local degree of the pulled-back line bundle) plus the pairwise crossing numbers
//! `C_i·C_j`, `i != j`. The self-intersections are never input: they are forced by the
//! full fiber having zero intersection with every component.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact::arith::{is_prime, prime_power_base};
use crate::exact::matrix::LinalgError;
use crate::exact::rational::{format_rational, from_u64, Rational};
use crate::exact::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentRecord {
    pub name: String,
    pub multiplicity: u64,
    pub genus: u64,
    #[serde(with = "crate::exact::rational::serde_str::option")]
    pub local_degree: Option<Rational>,
}

impl ComponentRecord {
    pub fn new(name: impl Into<String>, multiplicity: u64, genus: u64) -> Self {
        Self {
            name: name.into(),
            multiplicity,
            genus,
            local_degree: None,
        }
    }

    pub fn with_local_degree(mut self, deg: Rational) -> Self {
        self.local_degree = Some(deg);
        self
    }
}

/// Closure of a section (cusp) and the components it meets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SectionHit {
    pub name: String,
    /// Ramification index `b_j` of the cusp.
    pub width: u64,
    /// `S_j·C_i` keyed by component index; absent means zero.
    pub hits: BTreeMap<usize, u64>,
}

impl SectionHit {
    pub fn new(name: impl Into<String>, width: u64, component: usize) -> Self {
        Self {
            name: name.into(),
            width,
            hits: BTreeMap::from([(component, 1)]),
        }
    }

    pub fn hit(&self, component: usize) -> u64 {
        self.hits.get(&component).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Disconnected,
    ZeroMultiplicity { component: String },
    InvalidPrimeNorm { prime_norm: u64 },
    ResidueCharNotPrime { residue_char: u64 },
    NormNotPowerOfChar { prime_norm: u64, residue_char: u64 },
    DuplicateName { name: String },
    MissingLocalDegree { component: String },
    NegativeLocalDegree { component: String },
    DegreeMismatch { expected: u64, found: String },
    ZeroWidth { section: String },
    SectionMultiplicity { section: String, total: u64 },
    SectionComponentOutOfRange { section: String, component: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Disconnected => f.write_str("fiber graph not connected"),
            Violation::ZeroMultiplicity { component } => {
                write!(f, "component {component:?} has multiplicity 0")
            }
            Violation::InvalidPrimeNorm { prime_norm } => {
                write!(f, "prime norm {prime_norm} is not a prime power")
            }
            Violation::ResidueCharNotPrime { residue_char } => {
                write!(f, "residue characteristic {residue_char} is not prime")
            }
            Violation::NormNotPowerOfChar {
                prime_norm,
                residue_char,
            } => write!(
                f,
                "prime norm {prime_norm} is not a power of the residue characteristic {residue_char}"
            ),
            Violation::DuplicateName { name } => write!(f, "duplicate name {name:?}"),
            Violation::MissingLocalDegree { component } => {
                write!(f, "component {component:?} has no local degree")
            }
            Violation::NegativeLocalDegree { component } => {
                write!(f, "component {component:?} has a negative local degree")
            }
            Violation::DegreeMismatch { expected, found } => write!(
                f,
                "weighted local degrees sum to {found}, expected covering degree {expected}"
            ),
            Violation::ZeroWidth { section } => write!(f, "section {section:?} has width 0"),
            Violation::SectionMultiplicity { section, total } => write!(
                f,
                "section {section:?} meets the fiber with total multiplicity {total}, expected 1"
            ),
            Violation::SectionComponentOutOfRange { section, component } => write!(
                f,
                "section {section:?} refers to component index {component} out of range"
            ),
        }
    }
}

fn render(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FiberError {
    #[error("fiber has no components")]
    Empty,
    #[error("crossing refers to component index {index}, fiber has {len}")]
    ComponentIndex { index: usize, len: usize },
    #[error("component {component} crosses itself; self-intersections are derived")]
    SelfCrossing { component: usize },
    #[error("crossing between components {a} and {b} given twice")]
    DuplicateCrossing { a: usize, b: usize },
    #[error("invalid fiber: {}", render(.0))]
    Invalid(Vec<Violation>),
    #[error("single-component fiber (r = {r}): u, l and c are undefined")]
    SingleComponent { r: usize },
    #[error("genus must be at least 2, got {0}")]
    GenusTooSmall(u64),
    #[error("adjunction mismatch: sum of m_i·(omega·C_i) is {found}, expected 2g-2 = {expected}")]
    AdjunctionMismatch { expected: String, found: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `(r_p, u_p, l_p, c_p)`: component count, max and min nonzero crossing, dual-graph diameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DualStats {
    pub r: u64,
    pub u: u64,
    pub l: u64,
    pub c: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialFiber {
    prime_norm: u64,
    residue_char: u64,
    components: Vec<ComponentRecord>,
    crossings: BTreeMap<(usize, usize), u64>,
}

impl SpecialFiber {
    /// Builds a fiber from components and unordered crossings `(i, j, C_i·C_j)`.
    ///
    /// Only structural problems are rejected here; see [`SpecialFiber::validate`] for the
    /// semantic checks (connectivity, multiplicities, degrees).
    pub fn new(
        prime_norm: u64,
        residue_char: u64,
        components: Vec<ComponentRecord>,
        crossings: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Result<Self, FiberError> {
        if components.is_empty() {
            return Err(FiberError::Empty);
        }
        let len = components.len();
        let mut map = BTreeMap::new();
        for (a, b, n) in crossings {
            for index in [a, b] {
                if index >= len {
                    return Err(FiberError::ComponentIndex { index, len });
                }
            }
            if a == b {
                return Err(FiberError::SelfCrossing { component: a });
            }
            let key = (a.min(b), a.max(b));
            if map.insert(key, n).is_some() {
                return Err(FiberError::DuplicateCrossing { a: key.0, b: key.1 });
            }
        }
        Ok(Self {
            prime_norm,
            residue_char,
            components,
            crossings: map,
        })
    }

    pub fn prime_norm(&self) -> u64 {
        self.prime_norm
    }

    pub fn residue_char(&self) -> u64 {
        self.residue_char
    }

    pub fn components(&self) -> &[ComponentRecord] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    /// `C_i·C_j` for `i != j`.
    pub fn crossing(&self, i: usize, j: usize) -> u64 {
        self.crossings
            .get(&(i.min(j), i.max(j)))
            .copied()
            .unwrap_or(0)
    }

    /// Nonzero crossings as `(i, j, n)` with `i < j`.
    pub fn crossings(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.crossings
            .iter()
            .filter(|(_, &n)| n > 0)
            .map(|(&(i, j), &n)| (i, j, n))
    }

    pub fn multiplicities(&self) -> Vec<Rational> {
        self.components
            .iter()
            .map(|c| from_u64(c.multiplicity))
            .collect()
    }

    fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.len()];
        for (i, j, _) in self.crossings() {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    /// Edge-count distances from `from` in the dual graph (`None` = unreachable).
    pub fn bfs_distances(&self, from: usize) -> Vec<Option<u64>> {
        let adj = self.neighbours();
        let mut dist = vec![None; self.len()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v].expect("queued vertices are reached");
            for &w in &adj[v] {
                if dist[w].is_none() {
                    dist[w] = Some(dv + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(Option::is_some)
    }

    fn graph_violations(&self) -> Vec<Violation> {
        let mut out: Vec<Violation> = self
            .components
            .iter()
            .filter(|c| c.multiplicity == 0)
            .map(|c| Violation::ZeroMultiplicity {
                component: c.name.clone(),
            })
            .collect();
        if !self.is_connected() {
            out.insert(0, Violation::Disconnected);
        }
        out
    }

    fn ensure_graph_valid(&self) -> Result<(), FiberError> {
        let v = self.graph_violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(FiberError::Invalid(v))
        }
    }

    /// All semantic problems with this fiber; empty means valid.
    ///
    /// With `degree = Some(d)` and local degrees present, also checks `Σ m_i·deg_i = d`.
    pub fn validate(&self, degree: Option<u64>) -> Vec<Violation> {
        let mut out = self.graph_violations();
        match prime_power_base(self.prime_norm) {
            None => out.push(Violation::InvalidPrimeNorm {
                prime_norm: self.prime_norm,
            }),
            Some(p) if p != self.residue_char => {
                if !is_prime(self.residue_char) {
                    out.push(Violation::ResidueCharNotPrime {
                        residue_char: self.residue_char,
                    });
                } else {
                    out.push(Violation::NormNotPowerOfChar {
                        prime_norm: self.prime_norm,
                        residue_char: self.residue_char,
                    });
                }
            }
            Some(_) => {}
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.components {
            if !seen.insert(c.name.as_str()) {
                out.push(Violation::DuplicateName {
                    name: c.name.clone(),
                });
            }
        }
        let any_degree = self.components.iter().any(|c| c.local_degree.is_some());
        if let (Some(d), true) = (degree, any_degree) {
            let mut total = Rational::zero();
            for c in &self.components {
                match &c.local_degree {
                    None => out.push(Violation::MissingLocalDegree {
                        component: c.name.clone(),
                    }),
                    Some(deg) if deg.is_negative() => out.push(Violation::NegativeLocalDegree {
                        component: c.name.clone(),
                    }),
                    Some(deg) => total += deg * from_u64(c.multiplicity),
                }
            }
            if total != from_u64(d) {
                out.push(Violation::DegreeMismatch {
                    expected: d,
                    found: format_rational(&total),
                });
            }
        }
        out
    }

    /// `C_i² = -(1/m_i)·Σ_{j≠i} m_j·(C_i·C_j)`.
    pub fn self_intersections(&self) -> Result<Vec<Rational>, FiberError> {
        self.ensure_graph_valid()?;
        let m = self.multiplicities();
        Ok((0..self.len())
            .map(|i| {
                let s = (0..self.len())
                    .filter(|&j| j != i)
                    .fold(Rational::zero(), |acc, j| {
                        acc + &m[j] * from_u64(self.crossing(i, j))
                    });
                -(s / &m[i])
            })
            .collect())
    }

    /// Full intersection matrix with the derived diagonal; satisfies `M·m = 0`.
    pub fn intersection_matrix(&self) -> Result<Matrix, FiberError> {
        let diag = self.self_intersections()?;
        let n = self.len();
        let mut m = Matrix::zeros(n, n);
        for (i, d) in diag.into_iter().enumerate() {
            m[(i, i)] = d;
        }
        for (i, j, c) in self.crossings() {
            m[(i, j)] = from_u64(c);
            m[(j, i)] = from_u64(c);
        }
        Ok(m)
    }

    /// `(r, u, l, c)` from off-diagonal crossings and the BFS diameter.
    pub fn dual_graph_stats(&self) -> Result<DualStats, FiberError> {
        self.ensure_graph_valid()?;
        let r = self.len();
        if r < 2 {
            return Err(FiberError::SingleComponent { r });
        }
        let (mut u, mut l) = (0u64, u64::MAX);
        for (_, _, n) in self.crossings() {
            u = u.max(n);
            l = l.min(n);
        }
        let c = (0..r)
            .map(|v| {
                self.bfs_distances(v)
                    .into_iter()
                    .map(|d| d.expect("connected"))
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0);
        Ok(DualStats {
            r: r as u64,
            u,
            l,
            c,
        })
    }

    /// `omega·C_i = 2·p_a(C_i) - 2 - C_i²` for every component, without the sum check.
    pub fn canonical_degrees(&self) -> Result<Vec<Rational>, FiberError> {
        let si = self.self_intersections()?;
        Ok(self
            .components
            .iter()
            .zip(si)
            .map(|(c, s)| from_u64(2 * c.genus) - from_u64(2) - s)
            .collect())
    }

    /// Adjunction restrictions `omega·C_i`, checked against `Σ m_i·(omega·C_i) = 2g - 2`.
    pub fn omega_restrictions(&self, genus: u64) -> Result<Vec<Rational>, FiberError> {
        if genus < 2 {
            return Err(FiberError::GenusTooSmall(genus));
        }
        let w = self.canonical_degrees()?;
        let total = w
            .iter()
            .zip(self.multiplicities())
            .fold(Rational::zero(), |acc, (wi, mi)| acc + wi * mi);
        let expected = from_u64(2 * genus - 2);
        if total != expected {
            return Err(FiberError::AdjunctionMismatch {
                expected: format_rational(&expected),
                found: format_rational(&total),
            });
        }
        Ok(w)
    }
}

/// A fiber together with the sections (cusps) meeting it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedFiber {
    pub fiber: SpecialFiber,
    pub sections: Vec<SectionHit>,
}

impl MarkedFiber {
    pub fn new(fiber: SpecialFiber, sections: Vec<SectionHit>) -> Self {
        Self { fiber, sections }
    }

    /// Fiber violations plus per-section checks (`Σ_i m_i·(S·C_i) = 1`, positive width).
    pub fn validate(&self, degree: Option<u64>) -> Vec<Violation> {
        let mut out = self.fiber.validate(degree);
        let mut names = std::collections::BTreeSet::new();
        for s in &self.sections {
            if !names.insert(s.name.as_str()) {
                out.push(Violation::DuplicateName {
                    name: s.name.clone(),
                });
            }
            if s.width == 0 {
                out.push(Violation::ZeroWidth {
                    section: s.name.clone(),
                });
            }
            let mut total = 0;
            for (&i, &n) in &s.hits {
                match self.fiber.components.get(i) {
                    Some(c) => total += c.multiplicity * n,
                    None => out.push(Violation::SectionComponentOutOfRange {
                        section: s.name.clone(),
                        component: i,
                    }),
                }
            }
            if total != 1 {
                out.push(Violation::SectionMultiplicity {
                    section: s.name.clone(),
                    total,
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{int, rat};

    fn p1(name: &str) -> ComponentRecord {
        ComponentRecord::new(name, 1, 0)
    }

    fn pair() -> SpecialFiber {
        SpecialFiber::new(5, 5, vec![p1("A"), p1("B")], [(0, 1, 1)]).unwrap()
    }

    #[test]
    fn single_component() {
        let f = SpecialFiber::new(5, 5, vec![ComponentRecord::new("X", 1, 3)], []).unwrap();
        assert!(f.validate(None).is_empty());
        assert_eq!(f.self_intersections().unwrap(), vec![int(0)]);
        assert_eq!(f.intersection_matrix().unwrap(), Matrix::from_i64(&[&[0]]));
        assert_eq!(f.dual_graph_stats(), Err(FiberError::SingleComponent { r: 1 }));
        assert_eq!(f.omega_restrictions(3).unwrap(), vec![int(4)]);
    }

    #[test]
    fn disconnected_pair() {
        let f = SpecialFiber::new(5, 5, vec![p1("A"), p1("B")], []).unwrap();
        assert_eq!(f.validate(None), vec![Violation::Disconnected]);
        assert!(matches!(f.self_intersections(), Err(FiberError::Invalid(_))));
        assert_eq!(Violation::Disconnected.to_string(), "fiber graph not connected");
    }

    #[test]
    fn crossing_pair() {
        let f = pair();
        assert_eq!(
            f.intersection_matrix().unwrap(),
            Matrix::from_i64(&[&[-1, 1], &[1, -1]])
        );
        assert_eq!(
            f.dual_graph_stats().unwrap(),
            DualStats {
                r: 2,
                u: 1,
                l: 1,
                c: 1
            }
        );
    }

    #[test]
    fn adjunction_mismatch() {
        let err = pair().omega_restrictions(2).unwrap_err();
        assert_eq!(
            err,
            FiberError::AdjunctionMismatch {
                expected: "2/1".into(),
                found: "-2/1".into()
            }
        );
    }

    #[test]
    fn structural_errors() {
        assert_eq!(
            SpecialFiber::new(5, 5, vec![], []).unwrap_err(),
            FiberError::Empty
        );
        assert_eq!(
            SpecialFiber::new(5, 5, vec![p1("A")], [(0, 0, 1)]).unwrap_err(),
            FiberError::SelfCrossing { component: 0 }
        );
        assert_eq!(
            SpecialFiber::new(5, 5, vec![p1("A"), p1("B")], [(0, 1, 1), (1, 0, 2)]).unwrap_err(),
            FiberError::DuplicateCrossing { a: 0, b: 1 }
        );
        assert!(matches!(
            SpecialFiber::new(5, 5, vec![p1("A")], [(0, 3, 1)]),
            Err(FiberError::ComponentIndex { index: 3, len: 1 })
        ));
    }

    #[test]
    fn norm_checks() {
        let f = SpecialFiber::new(6, 2, vec![p1("A")], []).unwrap();
        assert_eq!(
            f.validate(None),
            vec![Violation::InvalidPrimeNorm { prime_norm: 6 }]
        );
        let g = SpecialFiber::new(25, 7, vec![p1("A")], []).unwrap();
        assert_eq!(
            g.validate(None),
            vec![Violation::NormNotPowerOfChar {
                prime_norm: 25,
                residue_char: 7
            }]
        );
        assert!(SpecialFiber::new(25, 5, vec![p1("A")], []).unwrap().validate(None).is_empty());
    }

    #[test]
    fn multiplicity_two_chain() {
        // A(1) - B(2) - C(1): B² = -(1 + 1)/2 = -1, A² = -2
        let f = SpecialFiber::new(
            3,
            3,
            vec![p1("A"), ComponentRecord::new("B", 2, 0), p1("C")],
            [(0, 1, 1), (1, 2, 1)],
        )
        .unwrap();
        let si = f.self_intersections().unwrap();
        assert_eq!(si, vec![int(-2), int(-1), int(-2)]);
        let m = f.intersection_matrix().unwrap();
        assert!(m.mul_vec(&f.multiplicities()).unwrap().iter().all(Zero::is_zero));
    }

    #[test]
    fn degree_bookkeeping() {
        let f = SpecialFiber::new(
            5,
            5,
            vec![
                p1("A").with_local_degree(rat(3, 1)),
                p1("B").with_local_degree(rat(1, 1)),
            ],
            [(0, 1, 1)],
        )
        .unwrap();
        assert!(f.validate(Some(4)).is_empty());
        assert!(matches!(
            f.validate(Some(5)).as_slice(),
            [Violation::DegreeMismatch { expected: 5, .. }]
        ));
    }

    #[test]
    fn section_checks() {
        let f = pair();
        let good = MarkedFiber::new(f.clone(), vec![SectionHit::new("s", 1, 0)]);
        assert!(good.validate(None).is_empty());
        let mut twice = SectionHit::new("t", 1, 0);
        twice.hits.insert(1, 1);
        let bad = MarkedFiber::new(f, vec![twice]);
        assert!(matches!(
            bad.validate(None).as_slice(),
            [Violation::SectionMultiplicity { total: 2, .. }]
        ));
    }
}

//! Independent reference computations shared by the integration tests. Nothing here calls
//! into the library's solvers, so agreement is a genuine cross-check.
#![allow(dead_code)]

use std::collections::BTreeSet;

use arakelov_core::fiber::{ComponentRecord, MarkedFiber, SectionHit, SpecialFiber};
use arakelov_core::Rational;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn qu(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn primes_of(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn square_free(n: u64) -> bool {
    (2..=n).take_while(|p| p * p <= n).all(|p| n % (p * p) != 0)
}

/// Levels with the fiber model available, by direct enumeration.
pub fn sweep_levels(max_n: u64) -> Vec<u64> {
    (2..=max_n)
        .filter(|&n| gcd(n, 6) == 1 && square_free(n) && primes_of(n).len() >= 2)
        .collect()
}

/// Genus of X₀(N) from the action of SL₂(Z) on P¹(Z/N): counts fixed points of the order-2
/// and order-3 generators and the orbits of translation, then applies Riemann–Hurwitz over
/// the j-line.
pub fn genus_by_cosets(n: u64) -> (u64, u64) {
    let units: Vec<u64> = (1..n.max(2)).filter(|&u| gcd(u, n) == 1).collect();
    let units = if n == 1 { vec![0] } else { units };
    let canon = |c: u64, d: u64| -> (u64, u64) {
        units
            .iter()
            .map(|&u| ((u * c) % n.max(1), (u * d) % n.max(1)))
            .min()
            .unwrap()
    };
    let mut points = BTreeSet::new();
    for c in 0..n.max(1) {
        for d in 0..n.max(1) {
            if gcd(gcd(c, d), n) == 1 {
                points.insert(canon(c, d));
            }
        }
    }
    let pts: Vec<(u64, u64)> = points.into_iter().collect();
    let neg = |x: u64| (n - x % n) % n;
    let e2 = pts.iter().filter(|&&(c, d)| canon(d, neg(c)) == (c, d)).count() as i64;
    let e3 = pts
        .iter()
        .filter(|&&(c, d)| canon(d, (neg(c) + d) % n) == (c, d))
        .count() as i64;
    let mut seen = BTreeSet::new();
    let mut cusps = 0i64;
    for &p in &pts {
        if seen.contains(&p) {
            continue;
        }
        cusps += 1;
        let mut cur = p;
        while seen.insert(cur) {
            cur = canon(cur.0, (cur.0 + cur.1) % n);
        }
    }
    let index = pts.len() as i64;
    let twelve_g = 12 + index - 3 * e2 - 4 * e3 - 6 * cusps;
    assert_eq!(twelve_g % 12, 0, "non-integral genus for N = {n}");
    (index as u64, (twelve_g / 12) as u64)
}

/// Self-intersections from crossings only: `C_i² = -(1/m_i)·Σ_{j≠i} m_j·C_i·C_j`.
pub fn self_intersections(f: &SpecialFiber) -> Vec<Rational> {
    let r = f.len();
    let m: Vec<u64> = f.components().iter().map(|c| c.multiplicity).collect();
    (0..r)
        .map(|i| {
            let s: u64 = (0..r).filter(|&j| j != i).map(|j| m[j] * f.crossing(i, j)).sum();
            -qu(s) / qu(m[i])
        })
        .collect()
}

/// `Σ_i m_i·(2p_a(C_i) - 2 - C_i²)`.
pub fn adjunction_sum(f: &SpecialFiber) -> Rational {
    let si = self_intersections(f);
    f.components()
        .iter()
        .zip(&si)
        .map(|(c, s)| qu(c.multiplicity) * (qu(2 * c.genus) - qu(2) - s))
        .sum()
}

/// Dual-graph diameter by Floyd–Warshall.
pub fn diameter_floyd(f: &SpecialFiber) -> Option<u64> {
    let r = f.len();
    const INF: u64 = u64::MAX / 4;
    let mut d = vec![vec![INF; r]; r];
    for i in 0..r {
        d[i][i] = 0;
        for j in 0..r {
            if i != j && f.crossing(i, j) > 0 {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..r {
        for i in 0..r {
            for j in 0..r {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let m = d.iter().flatten().copied().max().unwrap();
    (m < INF).then_some(m)
}

/// `b_p` by the direct double sum, from raw `(r, u, l, c)`.
pub fn bp_direct(r: u64, u: u64, l: u64, c: u64) -> Rational {
    let ratio = qu(u) / qu(l);
    let partial = |k: u64| -> Rational { (0..k).map(|i| num_traits::pow(ratio.clone(), i as usize)).sum() };
    let head: Rational = (1..=c).map(|k| partial(k) * partial(k)).sum();
    let last = partial(c);
    (head + qu(r - c - 1) * &last * &last) * qu(u) / qu(l * l)
}

/// Statistics straight from the crossing table.
pub fn stats_direct(f: &SpecialFiber) -> (u64, u64, u64, u64) {
    let r = f.len();
    let mut nz = Vec::new();
    for i in 0..r {
        for j in (i + 1)..r {
            let n = f.crossing(i, j);
            if n > 0 {
                nz.push(n);
            }
        }
    }
    (
        r as u64,
        *nz.iter().max().unwrap(),
        *nz.iter().min().unwrap(),
        diameter_floyd(f).unwrap(),
    )
}

/// Plain symmetric bilinear form from crossings and derived diagonal.
pub fn quadratic(f: &SpecialFiber, x: &[Rational]) -> Rational {
    let si = self_intersections(f);
    let r = f.len();
    let mut acc = Rational::zero();
    for i in 0..r {
        acc += &x[i] * &x[i] * &si[i];
        for j in 0..r {
            if i != j {
                acc += &x[i] * &x[j] * qu(f.crossing(i, j));
            }
        }
    }
    acc
}

/// Number of negative eigenvalues of a symmetric rational matrix via LDLᵀ without pivoting.
/// Returns `None` when a zero pivot makes the count undecidable this way.
pub fn negative_inertia(a: &[Vec<Rational>]) -> Option<usize> {
    let n = a.len();
    let mut a: Vec<Vec<Rational>> = a.to_vec();
    let mut neg = 0;
    for k in 0..n {
        let piv = a[k][k].clone();
        if piv.is_zero() {
            return None;
        }
        if piv.is_negative() {
            neg += 1;
        }
        for i in (k + 1)..n {
            let f = &a[i][k] / &piv;
            for j in (k + 1)..n {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
        }
    }
    Some(neg)
}

/// Random connected fiber with a single multiplicity-one section carrying the full degree.
/// Returns the fiber, its degree, and a genus compatible with adjunction when one exists.
pub fn random_fiber(seed: u64) -> (MarkedFiber, u64, Option<u64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = rng.random_range(2..=7usize);
    let mut comps = Vec::with_capacity(r);
    let mut d = 0;
    for i in 0..r {
        let m = if i == 0 { 1 } else { rng.random_range(1..=3u64) };
        let deg = if i == 0 { rng.random_range(1..=4u64) } else { rng.random_range(0..=4u64) };
        d += m * deg;
        comps.push(
            ComponentRecord::new(format!("C{i}"), m, rng.random_range(0..=2u64))
                .with_local_degree(qu(deg)),
        );
    }
    let mut crossings = Vec::new();
    for i in 1..r {
        crossings.push((rng.random_range(0..i), i, rng.random_range(1..=3u64)));
    }
    for i in 0..r {
        for j in (i + 1)..r {
            if !crossings.iter().any(|&(a, b, _)| (a, b) == (i, j)) && rng.random_bool(0.25) {
                crossings.push((i, j, rng.random_range(1..=3u64)));
            }
        }
    }
    let fiber = SpecialFiber::new(5, 5, comps, crossings).expect("structurally valid");
    let total = adjunction_sum(&fiber);
    let genus = if total.is_integer() && total >= qu(2) && (total.to_integer() % 2u8).is_zero() {
        let t: u64 = total.to_integer().try_into().unwrap();
        Some(t / 2 + 1)
    } else {
        None
    };
    (
        MarkedFiber::new(fiber, vec![SectionHit::new("s", d, 0)]),
        d,
        genus,
    )
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    (0..n)
        .map(|_| q(rng.random_range(-20..=20), rng.random_range(1..=7)))
        .collect()
}

pub fn one() -> Rational {
    Rational::one()
}

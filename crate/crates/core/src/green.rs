//! Green kernels on a finite measured space with a Dirichlet form.
//!
//! A [`DiscreteSurface`] is a symmetric positive semidefinite form `Q` whose kernel is
//! exactly the constants, together with a positive probability vector `μ`. The Green kernel
//! normalized against `ν` is the unique symmetric `G` with
//!
//! ```text
//! Q·G = I - ν·1ᵀ,    νᵀ·G = 0.
//! ```
//!
//! Everything except the first nonzero eigenvalue is computed in exact arithmetic.

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::checks::{first_failure, Check};
use crate::exact::matrix::{dot, psd_rank, solve_singular_symmetric_many, LinalgError};
use crate::exact::rational::{format_rational, from_u64, to_f64, Rational};
use crate::exact::Matrix;
use crate::exec::{self, Execution};

/// Relative tolerance used when comparing exact values against eigenvalue-based bounds.
pub const SPECTRAL_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GreenError {
    #[error("invalid surface: {0}")]
    InvalidSurface(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("eigensolver failure: {0}")]
    EigenFailure(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteSurface {
    q: Matrix,
    mu: Vec<Rational>,
}

fn check_measure(n: usize, m: &[Rational]) -> Result<(), GreenError> {
    if m.len() != n {
        return Err(GreenError::InvalidMeasure(format!(
            "length {} for {n} points",
            m.len()
        )));
    }
    if let Some(i) = m.iter().position(|x| !x.is_positive()) {
        return Err(GreenError::InvalidMeasure(format!("mass at point {i} is not positive")));
    }
    let total: Rational = m.iter().sum();
    if !total.is_one() {
        return Err(GreenError::InvalidMeasure(format!(
            "total mass is {}",
            format_rational(&total)
        )));
    }
    Ok(())
}

impl DiscreteSurface {
    pub fn new(q: Matrix, mu: Vec<Rational>) -> Result<Self, GreenError> {
        let bad = |m: &str| Err(GreenError::InvalidSurface(m.to_string()));
        let n = q.rows();
        if !q.is_square() {
            return bad("form is not square");
        }
        if n < 2 {
            return bad("need at least two points");
        }
        if !q.is_symmetric() {
            return bad("form is not symmetric");
        }
        if q.mul_vec(&vec![Rational::one(); n])?.iter().any(|x| !x.is_zero()) {
            return bad("constants are not in the kernel");
        }
        match psd_rank(&q)? {
            None => return bad("form is not positive semidefinite"),
            Some(r) if r != n - 1 => return bad("kernel is larger than the constants (disconnected)"),
            Some(_) => {}
        }
        check_measure(n, &mu)?;
        Ok(Self { q, mu })
    }

    pub fn len(&self) -> usize {
        self.q.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn form(&self) -> &Matrix {
        &self.q
    }

    pub fn base_measure(&self) -> &[Rational] {
        &self.mu
    }

    /// Weighted graph Laplacian from undirected edges `(i, j, w)`.
    pub fn laplacian(n: usize, edges: &[(usize, usize, Rational)]) -> Matrix {
        let mut q = Matrix::zeros(n, n);
        for (i, j, w) in edges {
            q[(*i, *j)] -= w;
            q[(*j, *i)] -= w;
            q[(*i, *i)] += w;
            q[(*j, *j)] += w;
        }
        q
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreenKernel {
    pub matrix: Matrix,
    pub measure: Vec<Rational>,
}

/// The Green kernel normalized against `nu`.
pub fn green_matrix(s: &DiscreteSurface, nu: &[Rational]) -> Result<GreenKernel, GreenError> {
    let n = s.len();
    check_measure(n, nu)?;
    // Column j solves Q·x = e_j - ν, then is shifted to be ν-orthogonal to the constants.
    let rhs: Vec<Vec<Rational>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let e = if i == j { Rational::one() } else { Rational::zero() };
                    e - &nu[i]
                })
                .collect()
        })
        .collect();
    let cols = solve_singular_symmetric_many(&s.q, &rhs, 0)?;
    let mut g = Matrix::zeros(n, n);
    for (j, x) in cols.iter().enumerate() {
        let shift = dot(nu, x);
        for i in 0..n {
            g[(i, j)] = &x[i] - &shift;
        }
    }
    Ok(GreenKernel {
        matrix: g,
        measure: nu.to_vec(),
    })
}

/// `(a, c)` with `a = -G_μ·ν` and `c = νᵀ·G_μ·ν`.
pub fn change_of_measure(
    s: &DiscreteSurface,
    mu: &[Rational],
    nu: &[Rational],
) -> Result<(Vec<Rational>, Rational), GreenError> {
    let g_mu = green_matrix(s, mu)?;
    check_measure(s.len(), nu)?;
    Ok(measure_shift(&g_mu.matrix, nu))
}

fn measure_shift(g_mu: &Matrix, nu: &[Rational]) -> (Vec<Rational>, Rational) {
    let gn = g_mu.mul_vec(nu).expect("dimensions checked");
    let c = dot(nu, &gn);
    (gn.into_iter().map(|x| -x).collect(), c)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub checks: Vec<Check>,
    pub first_failure: Option<String>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

fn kernel_checks(s: &DiscreteSurface, g: &GreenKernel, label: &str, out: &mut Vec<Check>) {
    let n = s.len();
    let qg = s.q.mul(&g.matrix).expect("square");
    let eq = (0..n).all(|i| {
        (0..n).all(|j| {
            let e = if i == j { Rational::one() } else { Rational::zero() };
            qg[(i, j)] == e - &g.measure[i]
        })
    });
    out.push(Check::new(format!("Q G_{label} = I - {label} 1^T"), eq));
    let normalized = (0..n).all(|j| dot(&g.measure, &g.matrix.column(j)).is_zero());
    out.push(Check::new(format!("{label}^T G_{label} = 0"), normalized));
    out.push(Check::new(format!("G_{label} symmetric"), g.matrix.is_symmetric()));
}

/// Runs every identity against the supplied kernels (which need not be correct).
pub fn check_kernels(
    s: &DiscreteSurface,
    g_mu: &GreenKernel,
    g_nu: &GreenKernel,
) -> IdentityReport {
    let n = s.len();
    let (mu, nu) = (&g_mu.measure, &g_nu.measure);
    let mut checks = Vec::new();
    kernel_checks(s, g_mu, "mu", &mut checks);
    kernel_checks(s, g_nu, "nu", &mut checks);

    let (a, c) = measure_shift(&g_mu.matrix, nu);
    let shifted = (0..n).all(|z| {
        (0..n).all(|w| g_nu.matrix[(z, w)] == &g_mu.matrix[(z, w)] + &a[z] + &a[w] + &c)
    });
    checks.push(Check::new("g_nu = g_mu + a(z) + a(w) + c", shifted));

    let second = (0..n).all(|p| {
        let lhs: Rational = (0..n)
            .map(|z| (&g_nu.matrix[(z, p)] - &g_mu.matrix[(z, p)]) * (&mu[z] + &nu[z]))
            .sum();
        lhs == from_u64(2) * &a[p] + &c
    });
    checks.push(Check::new("sum_z (g_nu - g_mu)(z,P)(mu + nu)(z) = 2a(P) + c", second));

    // f_j = e_j/ν_j - 1 spans the ν-mean-zero functions.
    let resolvent = (0..n).all(|j| {
        let f: Vec<Rational> = (0..n)
            .map(|i| {
                let e = if i == j { Rational::one() / &nu[j] } else { Rational::zero() };
                e - Rational::one()
            })
            .collect();
        let df: Vec<Rational> = f.iter().zip(nu).map(|(x, m)| x * m).collect();
        let gdf = g_nu.matrix.mul_vec(&df).expect("square");
        let qgdf = s.q.mul_vec(&gdf).expect("square");
        qgdf.iter().zip(nu).zip(&f).all(|((y, m), fi)| &(y / m) == fi)
    });
    checks.push(Check::new("D_nu^-1 Q G_nu D_nu f = f for mean-zero f", resolvent));

    checks.push(Check::new("c >= 0", !c.is_negative()));
    checks.push(Check::new("c = 0 iff mu = nu", c.is_zero() == (mu == nu)));

    let first_failure = first_failure(&checks).map(|c| c.name.clone());
    IdentityReport {
        checks,
        first_failure,
    }
}

/// Computes both kernels exactly and checks every identity.
pub fn verify_green_identities(
    s: &DiscreteSurface,
    mu: &[Rational],
    nu: &[Rational],
) -> Result<IdentityReport, GreenError> {
    let g_mu = green_matrix(s, mu)?;
    let g_nu = green_matrix(s, nu)?;
    Ok(check_kernels(s, &g_mu, &g_nu))
}

/// Smallest nonzero eigenvalue of `D_μ⁻¹·Q`, via the symmetric form `D^{-1/2}·Q·D^{-1/2}`.
pub fn first_eigenvalue(s: &DiscreteSurface, mu: &[Rational]) -> Result<f64, GreenError> {
    let n = s.len();
    check_measure(n, mu)?;
    let inv_sqrt: Vec<f64> = mu.iter().map(|m| 1.0 / to_f64(m).sqrt()).collect();
    let b = DMatrix::from_fn(n, n, |i, j| to_f64(&s.q[(i, j)]) * inv_sqrt[i] * inv_sqrt[j]);
    let mut ev: Vec<f64> = SymmetricEigen::new(b).eigenvalues.iter().copied().collect();
    if ev.iter().any(|x| !x.is_finite()) {
        return Err(GreenError::EigenFailure("non-finite eigenvalue".into()));
    }
    ev.sort_by(|a, b| a.total_cmp(b));
    let lambda1 = ev[1];
    if lambda1 <= 0.0 {
        return Err(GreenError::EigenFailure(format!(
            "first nonzero eigenvalue is {lambda1}"
        )));
    }
    Ok(lambda1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralCheck {
    #[serde(with = "crate::exact::rational::serde_str")]
    pub c_exact: Rational,
    /// `‖ν/μ - 1‖²` in `L²(μ)`.
    #[serde(with = "crate::exact::rational::serde_str")]
    pub f_norm_sq: Rational,
    pub lambda1: f64,
    /// `‖f‖²/λ₁`.
    pub bound_resolvent: f64,
    /// `2‖f‖²/λ₁`.
    pub bound_doubled: f64,
    pub sandwich_holds: bool,
}

/// `0 <= c <= ‖f‖²/λ₁ <= 2‖f‖²/λ₁`, with `c` exact and `λ₁` numeric.
pub fn spectral_bound_check(
    s: &DiscreteSurface,
    mu: &[Rational],
    nu: &[Rational],
) -> Result<SpectralCheck, GreenError> {
    let g_mu = green_matrix(s, mu)?;
    check_measure(s.len(), nu)?;
    spectral_from_kernel(s, &g_mu, nu)
}

fn spectral_from_kernel(
    s: &DiscreteSurface,
    g_mu: &GreenKernel,
    nu: &[Rational],
) -> Result<SpectralCheck, GreenError> {
    let mu = &g_mu.measure;
    let (_, c) = measure_shift(&g_mu.matrix, nu);
    let f_norm_sq: Rational = mu
        .iter()
        .zip(nu)
        .map(|(m, v)| {
            let f = v / m - Rational::one();
            m * &f * &f
        })
        .sum();
    let lambda1 = first_eigenvalue(s, mu)?;
    let fsq = to_f64(&f_norm_sq);
    let bound_resolvent = fsq / lambda1;
    let bound_doubled = 2.0 * fsq / lambda1;
    let cf = to_f64(&c);
    let sandwich_holds = !c.is_negative()
        && cf <= bound_resolvent * (1.0 + SPECTRAL_RTOL) + f64::MIN_POSITIVE
        && bound_resolvent <= bound_doubled;
    Ok(SpectralCheck {
        c_exact: c,
        f_norm_sq,
        lambda1,
        bound_resolvent,
        bound_doubled,
        sandwich_holds,
    })
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    Rational::new(rng.random_range(1..=9i64).into(), rng.random_range(1..=5i64).into())
}

/// Random probability vector with small rational masses.
pub fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    let w: Vec<u64> = (0..n).map(|_| rng.random_range(1..=20)).collect();
    let total: u64 = w.iter().sum();
    w.into_iter().map(|x| from_u64(x) / from_u64(total)).collect()
}

/// Random connected weighted graph on `n` points: a random spanning tree plus extra edges.
pub fn random_surface(rng: &mut ChaCha8Rng, n: usize) -> Result<DiscreteSurface, GreenError> {
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        edges.push((i, j, random_rational(rng)));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let in_tree = edges.iter().any(|&(a, b, _)| (a, b) == (j, i));
            if !in_tree && rng.random_bool(0.3) {
                edges.push((i, j, random_rational(rng)));
            }
        }
    }
    let mu = random_measure(rng, n);
    DiscreteSurface::new(DiscreteSurface::laplacian(n, &edges), mu)
}

/// One self-test instance: surface, base measure and a second measure.
pub fn random_instance(
    n: usize,
    seed: u64,
) -> Result<(DiscreteSurface, Vec<Rational>), GreenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_surface(&mut rng, n)?;
    let nu = random_measure(&mut rng, n);
    Ok((s, nu))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceResult {
    pub trial: u64,
    pub instance_seed: u64,
    pub identities: IdentityReport,
    pub spectral: SpectralCheck,
}

impl InstanceResult {
    pub fn passed(&self) -> bool {
        self.identities.all_passed() && self.spectral.sandwich_holds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub n: usize,
    pub seed: u64,
    pub trials: u64,
    pub passed: u64,
    pub instances: Vec<InstanceResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }

    pub fn failures(&self) -> impl Iterator<Item = &InstanceResult> {
        self.instances.iter().filter(|r| !r.passed())
    }
}

pub fn run_instance(n: usize, seed: u64, trial: u64) -> Result<InstanceResult, GreenError> {
    let instance_seed = seed.wrapping_add(trial);
    let (s, nu) = random_instance(n, instance_seed)?;
    let g_mu = green_matrix(&s, s.base_measure())?;
    let g_nu = green_matrix(&s, &nu)?;
    Ok(InstanceResult {
        trial,
        instance_seed,
        identities: check_kernels(&s, &g_mu, &g_nu),
        spectral: spectral_from_kernel(&s, &g_mu, &nu)?,
    })
}

/// Runs `trials` random instances on `n` points; instance `t` uses seed `seed + t`.
pub fn selftest(n: usize, seed: u64, trials: u64, exec: Execution) -> Result<SelftestReport, GreenError> {
    if n < 2 {
        return Err(GreenError::InvalidSurface("need at least two points".into()));
    }
    let ts: Vec<u64> = (0..trials).collect();
    let instances = exec::try_map(exec, &ts, |&t| run_instance(n, seed, t))?;
    let passed = instances.iter().filter(|r| r.passed()).count() as u64;
    Ok(SelftestReport {
        n,
        seed,
        trials,
        passed,
        instances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{int, rat};

    fn two_point() -> DiscreteSurface {
        DiscreteSurface::new(
            Matrix::from_i64(&[&[1, -1], &[-1, 1]]),
            vec![rat(1, 2), rat(1, 2)],
        )
        .unwrap()
    }

    #[test]
    fn two_point_kernels() {
        let s = two_point();
        let g = green_matrix(&s, &[rat(1, 2), rat(1, 2)]).unwrap();
        assert_eq!(
            g.matrix.to_rows(),
            vec![vec![rat(1, 4), rat(-1, 4)], vec![rat(-1, 4), rat(1, 4)]]
        );
        let g = green_matrix(&s, &[rat(3, 4), rat(1, 4)]).unwrap();
        assert_eq!(
            g.matrix.to_rows(),
            vec![vec![rat(1, 16), rat(-3, 16)], vec![rat(-3, 16), rat(9, 16)]]
        );
    }

    #[test]
    fn two_point_change_of_measure() {
        let s = two_point();
        let mu = [rat(1, 2), rat(1, 2)];
        let nu = [rat(3, 4), rat(1, 4)];
        let (a, c) = change_of_measure(&s, &mu, &nu).unwrap();
        assert_eq!(a, vec![rat(-1, 8), rat(1, 8)]);
        assert_eq!(c, rat(1, 16));
        let (a, c) = change_of_measure(&s, &mu, &mu).unwrap();
        assert!(a.iter().all(Zero::is_zero) && c.is_zero());
        assert!(verify_green_identities(&s, &mu, &nu).unwrap().all_passed());
        assert!(verify_green_identities(&s, &mu, &mu).unwrap().all_passed());
    }

    #[test]
    fn two_point_spectral_is_tight() {
        let s = two_point();
        let sc = spectral_bound_check(&s, &[rat(1, 2), rat(1, 2)], &[rat(3, 4), rat(1, 4)]).unwrap();
        assert_eq!(sc.c_exact, rat(1, 16));
        assert_eq!(sc.f_norm_sq, rat(1, 4));
        assert!((sc.lambda1 - 4.0).abs() < 1e-12);
        assert!((sc.bound_resolvent - 1.0 / 16.0).abs() < 1e-12);
        assert!((sc.bound_doubled - 1.0 / 8.0).abs() < 1e-12);
        assert!(sc.sandwich_holds);
    }

    #[test]
    fn broken_kernel_is_flagged() {
        let s = two_point();
        let mu = [rat(1, 2), rat(1, 2)];
        let nu = [rat(3, 4), rat(1, 4)];
        let g_mu = green_matrix(&s, &mu).unwrap();
        let mut g_nu = green_matrix(&s, &nu).unwrap();
        g_nu.matrix[(1, 1)] += int(1);
        let r = check_kernels(&s, &g_mu, &g_nu);
        assert_eq!(r.first_failure.as_deref(), Some("Q G_nu = I - nu 1^T"));
    }

    #[test]
    fn invalid_surfaces() {
        let half = vec![rat(1, 2), rat(1, 2)];
        assert!(DiscreteSurface::new(Matrix::from_i64(&[&[1]]), vec![int(1)]).is_err());
        let disconnected = Matrix::from_i64(&[&[0, 0], &[0, 0]]);
        assert!(DiscreteSurface::new(disconnected, half.clone()).is_err());
        let negative = Matrix::from_i64(&[&[-1, 1], &[1, -1]]);
        assert!(DiscreteSurface::new(negative, half).is_err());
        let q = Matrix::from_i64(&[&[1, -1], &[-1, 1]]);
        assert!(matches!(
            DiscreteSurface::new(q, vec![rat(1, 2), rat(1, 3)]),
            Err(GreenError::InvalidMeasure(_))
        ));
    }

    #[test]
    fn small_selftest() {
        let r = selftest(6, 11, 10, Execution::Sequential).unwrap();
        assert!(r.all_passed());
        assert!(selftest(1, 0, 1, Execution::Sequential).is_err());
    }
}

//! Dense rational matrices and exact solving of singular symmetric systems.

use std::ops::{Index, IndexMut};

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::rational::{int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (entry ({row}, {col}) differs from its transpose)")]
    NotSymmetric { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("pin index {pin} out of range for dimension {dim}")]
    PinOutOfRange { pin: usize, dim: usize },
    #[error("right-hand side is not in the column space")]
    Inconsistent,
    #[error("solution not unique after pinning: kernel dimension {kernel_dim}")]
    AmbiguousKernel { kernel_dim: usize },
}

/// Row-major dense matrix of exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    /// Convenience constructor from integer literals; panics on ragged input.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| int(v)).collect())
                .collect(),
        )
        .expect("ragged integer matrix")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// First asymmetric position, if any.
    pub fn asymmetry(&self) -> Option<(usize, usize)> {
        if !self.is_square() {
            return Some((0, 0));
        }
        (0..self.rows)
            .flat_map(|i| (i + 1..self.cols).map(move |j| (i, j)))
            .find(|&(i, j)| self[(i, j)] != self[(j, i)])
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry().is_none()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[Rational]) -> Result<Vec<Rational>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    fn check_square_symmetric(&self) -> Result<(), LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if let Some((row, col)) = self.asymmetry() {
            return Err(LinalgError::NotSymmetric { row, col });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// `xᵀ·M·x`, exactly.
pub fn quadratic_form(m: &Matrix, x: &[Rational]) -> Result<Rational, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let mx = m.mul_vec(x)?;
    Ok(dot(x, &mx))
}

/// Solves `M·x = b` for symmetric `M` with the normalization `x[pin] = 0`.
///
/// Fails with [`LinalgError::Inconsistent`] when `b` is outside the column space and with
/// [`LinalgError::AmbiguousKernel`] when pinning one coordinate does not remove the whole
/// kernel (a disconnected fiber, for intersection matrices).
pub fn solve_singular_symmetric(
    m: &Matrix,
    b: &[Rational],
    pin: usize,
) -> Result<Vec<Rational>, LinalgError> {
    let mut sols = solve_singular_symmetric_many(m, std::slice::from_ref(&b.to_vec()), pin)?;
    Ok(sols.pop().expect("one right-hand side"))
}

/// Same as [`solve_singular_symmetric`] for several right-hand sides sharing one elimination.
pub fn solve_singular_symmetric_many(
    m: &Matrix,
    rhs: &[Vec<Rational>],
    pin: usize,
) -> Result<Vec<Vec<Rational>>, LinalgError> {
    m.check_square_symmetric()?;
    let n = m.rows;
    if pin >= n {
        return Err(LinalgError::PinOutOfRange { pin, dim: n });
    }
    for b in rhs {
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
    }
    // Unknowns are every coordinate except the pinned one.
    let unknowns: Vec<usize> = (0..n).filter(|&j| j != pin).collect();
    let nu = unknowns.len();
    let k = rhs.len();
    let width = nu + k;
    let mut a: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut row = Vec::with_capacity(width);
            row.extend(unknowns.iter().map(|&j| m[(i, j)].clone()));
            row.extend(rhs.iter().map(|b| b[i].clone()));
            row
        })
        .collect();

    let mut pivot_cols = Vec::with_capacity(nu);
    let mut r = 0;
    for col in 0..nu {
        let Some(p) = (r..n).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][col].recip();
        for v in a[r][col..].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, pv) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        pivot_cols.push(col);
        r += 1;
    }

    if a[r..].iter().any(|row| row[nu..].iter().any(|v| !v.is_zero())) {
        return Err(LinalgError::Inconsistent);
    }
    if r < nu {
        return Err(LinalgError::AmbiguousKernel { kernel_dim: nu - r });
    }

    Ok((0..k)
        .map(|s| {
            let mut x = vec![Rational::zero(); n];
            for (row, &col) in pivot_cols.iter().enumerate() {
                x[unknowns[col]] = a[row][nu + s].clone();
            }
            x
        })
        .collect())
}

/// Exact test for positive semidefiniteness of a symmetric matrix; returns the rank when PSD.
pub fn psd_rank(m: &Matrix) -> Result<Option<usize>, LinalgError> {
    m.check_square_symmetric()?;
    let n = m.rows;
    let mut a = m.to_rows();
    let mut active: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    loop {
        if active.is_empty() {
            return Ok(Some(rank));
        }
        if active.iter().any(|&i| a[i][i].is_negative()) {
            return Ok(None);
        }
        let Some(pos) = active.iter().position(|&i| !a[i][i].is_zero()) else {
            // all remaining diagonals vanish: PSD forces the remaining block to be zero
            let zero_block = active
                .iter()
                .all(|&i| active.iter().all(|&j| a[i][j].is_zero()));
            return Ok(zero_block.then_some(rank));
        };
        let p = active.swap_remove(pos);
        let inv = a[p][p].recip();
        for &i in &active {
            if a[i][p].is_zero() {
                continue;
            }
            let f = &a[i][p] * &inv;
            for &j in &active {
                if !a[p][j].is_zero() {
                    let delta = &f * &a[p][j];
                    a[i][j] -= delta;
                }
            }
        }
        rank += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::rat;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn zero_system() {
        let m = Matrix::from_i64(&[&[0]]);
        assert_eq!(solve_singular_symmetric(&m, &ints(&[0]), 0).unwrap(), ints(&[0]));
    }

    #[test]
    fn two_component_system() {
        let m = Matrix::from_i64(&[&[-1, 1], &[1, -1]]);
        let x = solve_singular_symmetric(&m, &ints(&[-1, 1]), 0).unwrap();
        assert_eq!(x, ints(&[0, -1]));
        assert_eq!(quadratic_form(&m, &x).unwrap(), int(-1));
    }

    #[test]
    fn x0_35_at_5() {
        // components C0, Cinf, G1, H1, G2, H2
        let m = Matrix::from_i64(&[
            &[-4, 2, 1, 0, 1, 0],
            &[2, -4, 0, 1, 0, 1],
            &[1, 0, -2, 1, 0, 0],
            &[0, 1, 1, -2, 0, 0],
            &[1, 0, 0, 0, -2, 1],
            &[0, 1, 0, 0, 1, -2],
        ]);
        // local degrees 40 on C0, 8 on Cinf, d = 48; cusp at infinity hits Cinf
        let b = vec![rat(40, 48), rat(8, 48) - int(1), int(0), int(0), int(0), int(0)];
        let x = solve_singular_symmetric(&m, &b, 0).unwrap();
        assert_eq!(
            x,
            vec![int(0), rat(5, 16), rat(5, 48), rat(5, 24), rat(5, 48), rat(5, 24)]
        );
        assert_eq!(m.mul_vec(&x).unwrap(), b);
        assert_eq!(quadratic_form(&m, &x).unwrap(), rat(-25, 96));
    }

    #[test]
    fn errors() {
        let m = Matrix::from_i64(&[&[-1, 1], &[1, -1]]);
        assert_eq!(
            solve_singular_symmetric(&m, &ints(&[1, 1]), 0),
            Err(LinalgError::Inconsistent)
        );
        let disconnected = Matrix::from_i64(&[&[0, 0], &[0, 0]]);
        assert_eq!(
            solve_singular_symmetric(&disconnected, &ints(&[0, 0]), 0),
            Err(LinalgError::AmbiguousKernel { kernel_dim: 1 })
        );
        assert!(matches!(
            solve_singular_symmetric(&m, &ints(&[0, 0]), 2),
            Err(LinalgError::PinOutOfRange { .. })
        ));
        let asym = Matrix::from_i64(&[&[1, 2], &[3, 4]]);
        assert!(matches!(
            solve_singular_symmetric(&asym, &ints(&[0, 0]), 0),
            Err(LinalgError::NotSymmetric { .. })
        ));
        assert!(matches!(
            quadratic_form(&m, &ints(&[1])),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quadratic_form_examples() {
        assert_eq!(
            quadratic_form(&Matrix::from_i64(&[&[-2]]), &ints(&[1])).unwrap(),
            int(-2)
        );
    }

    #[test]
    fn psd_detection() {
        let lap = Matrix::from_i64(&[&[1, -1], &[-1, 1]]);
        assert_eq!(psd_rank(&lap).unwrap(), Some(1));
        assert_eq!(psd_rank(&Matrix::from_i64(&[&[-1, 1], &[1, -1]])).unwrap(), None);
        assert_eq!(psd_rank(&Matrix::from_i64(&[&[0, 1], &[1, 0]])).unwrap(), None);
        assert_eq!(psd_rank(&Matrix::zeros(3, 3)).unwrap(), Some(0));
    }
}

//! Exact rational matrices: fraction-free rank, determinants,
//! characteristic polynomials and linear solves over the rationals.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::linalg::Matrix;
use crate::scalar::rational_to_f64;

/// Row-major dense matrix over the rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct RatMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigRational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigRational::one();
        }
        m
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            for &v in row {
                data.push(BigRational::from_integer(BigInt::from(v)));
            }
        }
        RatMatrix { rows: r, cols: c, data }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn matmul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = RatMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let add = &self[(i, k)] * &other[(k, j)];
                    out[(i, j)] += add;
                }
            }
        }
        out
    }

    pub fn trace(&self) -> BigRational {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)].clone()).sum()
    }

    pub fn neg(&self) -> RatMatrix {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v = -v.clone();
        }
        out
    }

    pub fn transpose(&self) -> RatMatrix {
        let mut t = RatMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn to_float(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(rational_to_f64).collect(),
        }
    }

    /// Exact rank by Bareiss fraction-free elimination on the
    /// denominator-cleared integer matrix.
    pub fn rank(&self) -> usize {
        let m = self.rows;
        let n = self.cols;
        if m == 0 || n == 0 {
            return 0;
        }
        // clear denominators row by row
        let mut a: Vec<Vec<BigInt>> = (0..m)
            .map(|i| {
                let lcm = (0..n).fold(BigInt::one(), |acc, j| {
                    let d = self[(i, j)].denom();
                    num_integer::lcm(acc, d.clone())
                });
                (0..n)
                    .map(|j| {
                        let v = &self[(i, j)];
                        v.numer() * (&lcm / v.denom())
                    })
                    .collect()
            })
            .collect();
        let mut prev = BigInt::one();
        let mut rank = 0;
        let mut pivot_row = 0;
        for col in 0..n {
            // find nonzero pivot
            let piv = (pivot_row..m).find(|&r| !a[r][col].is_zero());
            let piv = match piv {
                Some(p) => p,
                None => continue,
            };
            a.swap(pivot_row, piv);
            for r in 0..m {
                if r == pivot_row {
                    continue;
                }
                for j in 0..n {
                    if j == col {
                        continue;
                    }
                    let num = &a[pivot_row][col] * &a[r][j] - &a[r][col] * &a[pivot_row][j];
                    a[r][j] = num / &prev;
                }
                a[r][col] = BigInt::zero();
            }
            prev = a[pivot_row][col].clone();
            rank += 1;
            pivot_row += 1;
            if pivot_row == m {
                break;
            }
        }
        rank
    }

    pub fn determinant(&self) -> BigRational {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = BigRational::one();
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[(r, col)].is_zero());
            let piv = match piv {
                Some(p) => p,
                None => return BigRational::zero(),
            };
            if piv != col {
                for j in 0..n {
                    let tmp = a[(piv, j)].clone();
                    a[(piv, j)] = a[(col, j)].clone();
                    a[(col, j)] = tmp;
                }
                det = -det;
            }
            det *= a[(col, col)].clone();
            for r in col + 1..n {
                if a[(r, col)].is_zero() {
                    continue;
                }
                let f = &a[(r, col)] / &a[(col, col)];
                for j in col..n {
                    let sub = &f * &a[(col, j)];
                    a[(r, j)] -= sub;
                }
            }
        }
        det
    }

    /// Exact solve of a square system; `None` if singular.
    pub fn solve(&self, b: &[BigRational]) -> Option<Vec<BigRational>> {
        assert!(self.is_square());
        assert_eq!(b.len(), self.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut x: Vec<BigRational> = b.to_vec();
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            if piv != col {
                for j in 0..n {
                    let tmp = a[(piv, j)].clone();
                    a[(piv, j)] = a[(col, j)].clone();
                    a[(col, j)] = tmp;
                }
                x.swap(piv, col);
            }
            for r in col + 1..n {
                if a[(r, col)].is_zero() {
                    continue;
                }
                let f = &a[(r, col)] / &a[(col, col)];
                for j in col..n {
                    let sub = &f * &a[(col, j)];
                    a[(r, j)] -= sub;
                }
                let sub = &f * &x[col];
                x[r] -= sub;
            }
        }
        for col in (0..n).rev() {
            let mut s = x[col].clone();
            for j in col + 1..n {
                let sub = &a[(col, j)] * &x[j];
                s -= sub;
            }
            x[col] = s / &a[(col, col)];
        }
        Some(x)
    }

    /// Coefficients of the characteristic polynomial det(xI - A), lowest
    /// degree first, monic. Faddeev-LeVerrier over the rationals.
    pub fn char_poly(&self) -> Vec<BigRational> {
        assert!(self.is_square());
        let n = self.rows;
        let mut coeffs = vec![BigRational::zero(); n + 1];
        coeffs[n] = BigRational::one();
        let mut m = RatMatrix::identity(n);
        for k in 1..=n {
            m = self.matmul(&m);
            let c = -(m.trace() / BigRational::from_integer(BigInt::from(k as i64)));
            for i in 0..n {
                m[(i, i)] += c.clone();
            }
            coeffs[n - k] = c;
        }
        coeffs
    }
}

impl core::ops::Index<(usize, usize)> for RatMatrix {
    type Output = BigRational;
    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }
}

/// Exact square root of a nonnegative rational, when it is rational.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let ns = r.numer().sqrt();
    let ds = r.denom().sqrt();
    if &(&ns * &ns) == r.numer() && &(&ds * &ds) == r.denom() {
        Some(BigRational::new(ns, ds))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_rank() {
        let a = RatMatrix::from_i64_rows(&[
            vec![1, 2, 3],
            vec![2, 4, 6],
            vec![1, 0, 1],
        ]);
        assert_eq!(a.rank(), 2);
        assert_eq!(RatMatrix::identity(3).rank(), 3);
        assert_eq!(RatMatrix::zeros(2, 5).rank(), 0);
    }

    #[test]
    fn rank_with_fractions() {
        let mut a = RatMatrix::zeros(2, 2);
        a[(0, 0)] = BigRational::new(BigInt::from(1), BigInt::from(3));
        a[(0, 1)] = BigRational::new(BigInt::from(1), BigInt::from(6));
        a[(1, 0)] = BigRational::new(BigInt::from(2), BigInt::from(3));
        a[(1, 1)] = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert_eq!(a.rank(), 1);
    }

    #[test]
    fn determinant_and_solve() {
        let a = RatMatrix::from_i64_rows(&[vec![2, 1], vec![1, 3]]);
        assert_eq!(a.determinant(), BigRational::from_integer(BigInt::from(5)));
        let b = [
            BigRational::from_integer(BigInt::from(3)),
            BigRational::from_integer(BigInt::from(5)),
        ];
        let x = a.solve(&b).unwrap();
        assert_eq!(x[0], BigRational::new(BigInt::from(4), BigInt::from(5)));
        assert_eq!(x[1], BigRational::new(BigInt::from(7), BigInt::from(5)));
    }

    #[test]
    fn char_poly_companion() {
        // B = [[0,0],[1,0]]: char poly x^2
        let b = RatMatrix::from_i64_rows(&[vec![0, 0], vec![1, 0]]);
        let cp = b.char_poly();
        assert!(cp[0].is_zero());
        assert!(cp[1].is_zero());
        assert!(cp[2].is_one());
        // rotation: x^2 + 1
        let j = RatMatrix::from_i64_rows(&[vec![0, 1], vec![-1, 0]]);
        let cp = j.char_poly();
        assert!(cp[0].is_one());
        assert!(cp[1].is_zero());
    }

    #[test]
    fn sqrt_detection() {
        let r = BigRational::new(BigInt::from(9), BigInt::from(4));
        assert_eq!(
            rational_sqrt(&r),
            Some(BigRational::new(BigInt::from(3), BigInt::from(2)))
        );
        assert_eq!(rational_sqrt(&BigRational::from_integer(BigInt::from(2))), None);
    }
}

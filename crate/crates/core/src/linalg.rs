//! Small dense float matrices: just enough linear algebra for the
//! toolkit (solve, rank, symmetric eigenvalues, matrix exponential,
//! polynomial roots). Everything here targets desk-scale dimensions.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // f64 math comes from the trait under no_std
use num_traits::Float;


/// Row-major dense matrix of doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    /// Maximum column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Solve A x = b by partial-pivot LU. Returns `None` for (numerically)
    /// singular systems.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(b.len(), self.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut x: Vec<f64> = b.to_vec();
        for col in 0..n {
            let (piv, mag) = (col..n)
                .map(|r| (r, a[(r, col)].abs()))
                .fold((col, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if mag < 1e-300 {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    let tmp = a[(piv, j)];
                    a[(piv, j)] = a[(col, j)];
                    a[(col, j)] = tmp;
                }
                x.swap(piv, col);
            }
            for r in col + 1..n {
                let f = a[(r, col)] / a[(col, col)];
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    let v = a[(col, j)];
                    a[(r, j)] -= f * v;
                }
                x[r] -= f * x[col];
            }
        }
        for col in (0..n).rev() {
            let mut s = x[col];
            for j in col + 1..n {
                s -= a[(col, j)] * x[j];
            }
            x[col] = s / a[(col, col)];
        }
        Some(x)
    }

    /// Inverse via `solve` on unit vectors.
    pub fn inverse(&self) -> Option<Matrix> {
        let n = self.rows;
        let mut out = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e)?;
            e[j] = 0.0;
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        Some(out)
    }

    pub fn determinant(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = 1.0;
        for col in 0..n {
            let (piv, mag) = (col..n)
                .map(|r| (r, a[(r, col)].abs()))
                .fold((col, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if mag == 0.0 {
                return 0.0;
            }
            if piv != col {
                for j in 0..n {
                    let tmp = a[(piv, j)];
                    a[(piv, j)] = a[(col, j)];
                    a[(col, j)] = tmp;
                }
                det = -det;
            }
            det *= a[(col, col)];
            for r in col + 1..n {
                let f = a[(r, col)] / a[(col, col)];
                for j in col..n {
                    let v = a[(col, j)];
                    a[(r, j)] -= f * v;
                }
            }
        }
        det
    }

    /// Numerical rank via Householder QR with column pivoting.
    pub fn rank(&self, tol: f64) -> usize {
        let mut a = self.clone();
        let m = a.rows;
        let n = a.cols;
        let kmax = m.min(n);
        let mut col_norms: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>())
            .collect();
        let scale = col_norms.iter().fold(0.0f64, |s, v| s.max(*v)).sqrt();
        if scale == 0.0 {
            return 0;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rank = 0;
        for k in 0..kmax {
            // pivot: column with largest remaining norm
            let (pj, _) = (k..n)
                .map(|j| (j, col_norms[j]))
                .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if pj != k {
                for i in 0..m {
                    let tmp = a[(i, pj)];
                    a[(i, pj)] = a[(i, k)];
                    a[(i, k)] = tmp;
                }
                col_norms.swap(pj, k);
                perm.swap(pj, k);
            }
            // Householder on column k below row k
            let alpha = (k..m).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
            if alpha <= tol * scale {
                break;
            }
            rank += 1;
            let sign = if a[(k, k)] >= 0.0 { 1.0 } else { -1.0 };
            let mut v: Vec<f64> = (k..m).map(|i| a[(i, k)]).collect();
            v[0] += sign * alpha;
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            if vnorm2 > 0.0 {
                for j in k..n {
                    let dot: f64 = (k..m).map(|i| v[i - k] * a[(i, j)]).sum();
                    let f = 2.0 * dot / vnorm2;
                    for i in k..m {
                        a[(i, j)] -= f * v[i - k];
                    }
                }
            }
            for (j, cn) in col_norms.iter_mut().enumerate().skip(k + 1) {
                *cn = (k + 1..m).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>();
                let _ = j;
            }
        }
        rank
    }

    /// Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi.
    /// Returns (eigenvalues ascending, column eigenvectors).
    pub fn symmetric_eigen(&self) -> (Vec<f64>, Matrix) {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        // enforce symmetry
        for i in 0..n {
            for j in i + 1..n {
                let s = 0.5 * (a[(i, j)] + a[(j, i)]);
                a[(i, j)] = s;
                a[(j, i)] = s;
            }
        }
        let mut v = Matrix::identity(n);
        for _sweep in 0..64 {
            let mut off = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            if off.sqrt() < 1e-14 * (1.0 + a.max_abs()) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
        let evals: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
        let mut vecs = Matrix::zeros(n, n);
        for (new_j, &old_j) in order.iter().enumerate() {
            for i in 0..n {
                vecs[(i, new_j)] = v[(i, old_j)];
            }
        }
        (evals, vecs)
    }

    pub fn min_symmetric_eigenvalue(&self) -> f64 {
        self.symmetric_eigen().0[0]
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Matrix exponential by scaling-and-squaring with the Pade(13)
/// approximant (Higham's method, real case).
pub fn expm(a: &Matrix) -> Matrix {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    let theta_13 = 5.371920351148152;
    let norm = a.norm_1();
    let s = if norm > theta_13 {
        (norm / theta_13).log2().ceil() as u32
    } else {
        0
    };
    let a_scaled = a.scale(0.5f64.powi(s as i32));
    let mut result = pade13(&a_scaled);
    for _ in 0..s {
        result = result.matmul(&result);
    }
    result
}

fn pade13(a: &Matrix) -> Matrix {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.rows;
    let ident = Matrix::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);
    let u_inner = a6
        .scale(B[13])
        .add(&a4.scale(B[11]))
        .add(&a2.scale(B[9]));
    let u = a.matmul(
        &a6.matmul(&u_inner)
            .add(&a6.scale(B[7]))
            .add(&a4.scale(B[5]))
            .add(&a2.scale(B[3]))
            .add(&ident.scale(B[1])),
    );
    let v_inner = a6
        .scale(B[12])
        .add(&a4.scale(B[10]))
        .add(&a2.scale(B[8]));
    let v = a6
        .matmul(&v_inner)
        .add(&a6.scale(B[6]))
        .add(&a4.scale(B[4]))
        .add(&a2.scale(B[2]))
        .add(&ident.scale(B[0]));
    // exp(A) ~= (V - U)^{-1} (V + U)
    let vmu = v.sub(&u);
    let vpu = v.add(&u);
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| vpu[(i, j)]).collect();
        let x = vmu.solve(&col).expect("Pade denominator is nonsingular");
        for i in 0..n {
            out[(i, j)] = x[i];
        }
    }
    out
}

/// Complex pair (re, im) used only for polynomial root finding.
pub type C = (f64, f64);

fn cmul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn csub(a: C, b: C) -> C {
    (a.0 - b.0, a.1 - b.1)
}

fn cdiv(a: C, b: C) -> C {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

fn cabs(a: C) -> f64 {
    (a.0 * a.0 + a.1 * a.1).sqrt()
}

/// All complex roots of a monic real polynomial x^n + c[n-1]x^{n-1}+...+c[0]
/// by Durand-Kerner iteration with fixed deterministic starting points.
pub fn polynomial_roots_monic(coeffs_low_to_high: &[f64]) -> Vec<C> {
    let n = coeffs_low_to_high.len();
    if n == 0 {
        return Vec::new();
    }
    let eval = |z: C| -> C {
        // Horner on monic poly
        let mut acc: C = (1.0, 0.0);
        for k in (0..n).rev() {
            acc = cmul(acc, z);
            acc = (acc.0 + coeffs_low_to_high[k], acc.1);
        }
        acc
    };
    let radius = 1.0
        + coeffs_low_to_high
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
    let base: C = (0.4, 0.9);
    let mut roots: Vec<C> = Vec::with_capacity(n);
    let mut p: C = (1.0, 0.0);
    for _ in 0..n {
        p = cmul(p, base);
        roots.push((p.0 * radius, p.1 * radius));
    }
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut denom: C = (1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom = cmul(denom, csub(roots[i], roots[j]));
                }
            }
            let step = cdiv(eval(roots[i]), denom);
            roots[i] = csub(roots[i], step);
            delta = delta.max(cabs(step));
        }
        if delta < 1e-14 * radius {
            break;
        }
    }
    roots
}

//! Symbolic matrix exponential: the entries of exp(t*B) as expressions in
//! one variable, for a rational square matrix B.
//!
//! Entries of exp(t*B) are linear combinations of t^j * e^{a t} * cos(b t)
//! and t^j * e^{a t} * sin(b t) over the eigenvalues a + ib of B. When all
//! eigenvalues are rational (or a single conjugate pair with rational real
//! and imaginary parts), the combination coefficients are computed exactly
//! by matching derivatives at t = 0 against the powers of B. Otherwise
//! eigenvalues come from a Durand-Kerner solve and the coefficients are
//! floats; the result is flagged [`Exactness::Numeric`].

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
#[allow(unused_imports)] // f64 math comes from the trait under no_std
use num_traits::Float;

use crate::linalg::{polynomial_roots_monic, Matrix};
use crate::ratmat::{rational_sqrt, RatMatrix};
use crate::scalar::{rational_to_f64, RationalComplex, Scalar};
use crate::symbolic::{AffineForm, Expr};

/// Whether symbolic coefficients are exact rationals or floats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    Numeric,
}

/// exp(t*B) with entries in the expression ring, all in one variable.
#[derive(Debug, Clone)]
pub struct SymbolicMatrixExp {
    pub dim: usize,
    pub entries: Vec<Vec<Expr>>,
    pub exactness: Exactness,
}

impl SymbolicMatrixExp {
    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i][j]
    }

    /// Evaluate all entries at a concrete time.
    pub fn eval(&self, t: f64, var: usize) -> Matrix {
        let mut point = vec![0.0; var + 1];
        point[var] = t;
        let mut out = Matrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = self.entries[i][j].eval(&point);
            }
        }
        out
    }
}

/// One basis function t^degree * e^{re t} * {1 | cos(im t) | sin(im t)}.
#[derive(Debug, Clone)]
enum BasisFn {
    ExactReal { rate: BigRational, degree: usize },
    ExactCos { re: BigRational, im: BigRational, degree: usize },
    ExactSin { re: BigRational, im: BigRational, degree: usize },
    FloatReal { rate: f64, degree: usize },
    FloatCos { re: f64, im: f64, degree: usize },
    FloatSin { re: f64, im: f64, degree: usize },
}

impl BasisFn {
    /// k-th derivative at 0. Exact variants return a rational.
    fn derivative_at_zero(&self, k: usize) -> Scalar {
        match self {
            BasisFn::ExactReal { rate, degree } => match falling(k, *degree) {
                None => Scalar::zero(),
                Some(fac) => Scalar::Exact(fac * pow_rat(rate, k - degree)),
            },
            BasisFn::ExactCos { re, im, degree } => match falling(k, *degree) {
                None => Scalar::zero(),
                Some(fac) => {
                    let z = pow_complex(re, im, k - degree);
                    Scalar::Exact(fac * z.re)
                }
            },
            BasisFn::ExactSin { re, im, degree } => match falling(k, *degree) {
                None => Scalar::zero(),
                Some(fac) => {
                    let z = pow_complex(re, im, k - degree);
                    Scalar::Exact(fac * z.im)
                }
            },
            BasisFn::FloatReal { rate, degree } => match falling_f64(k, *degree) {
                None => Scalar::zero(),
                Some(fac) => Scalar::Float(fac * rate.powi((k - degree) as i32)),
            },
            BasisFn::FloatCos { re, im, degree } => match falling_f64(k, *degree) {
                None => Scalar::zero(),
                Some(fac) => Scalar::Float(fac * cpow(*re, *im, k - degree).0),
            },
            BasisFn::FloatSin { re, im, degree } => match falling_f64(k, *degree) {
                None => Scalar::zero(),
                Some(fac) => Scalar::Float(fac * cpow(*re, *im, k - degree).1),
            },
        }
    }

    /// The basis function times `coeff`, as an expression in `var`.
    fn to_expr(&self, coeff: Scalar, var: usize) -> Expr {
        let (degree, osc) = match self {
            BasisFn::ExactReal { rate, degree } => {
                let arg = AffineForm::term(var, Scalar::Exact(rate.clone()));
                (*degree, vec![Expr::exp(arg)])
            }
            BasisFn::ExactCos { re, im, degree } => (
                *degree,
                vec![
                    Expr::exp(AffineForm::term(var, Scalar::Exact(re.clone()))),
                    Expr::cos(AffineForm::term(var, Scalar::Exact(im.clone()))),
                ],
            ),
            BasisFn::ExactSin { re, im, degree } => (
                *degree,
                vec![
                    Expr::exp(AffineForm::term(var, Scalar::Exact(re.clone()))),
                    Expr::sin(AffineForm::term(var, Scalar::Exact(im.clone()))),
                ],
            ),
            BasisFn::FloatReal { rate, degree } => (
                *degree,
                vec![Expr::exp(AffineForm::term(var, Scalar::Float(*rate)))],
            ),
            BasisFn::FloatCos { re, im, degree } => (
                *degree,
                vec![
                    Expr::exp(AffineForm::term(var, Scalar::Float(*re))),
                    Expr::cos(AffineForm::term(var, Scalar::Float(*im))),
                ],
            ),
            BasisFn::FloatSin { re, im, degree } => (
                *degree,
                vec![
                    Expr::exp(AffineForm::term(var, Scalar::Float(*re))),
                    Expr::sin(AffineForm::term(var, Scalar::Float(*im))),
                ],
            ),
        };
        let mut factors = vec![Expr::Const(coeff)];
        if degree > 0 {
            factors.push(Expr::pow(Expr::var(var), degree as u32));
        }
        factors.extend(osc);
        Expr::product(factors)
    }
}

/// k!/(k-j)! as a rational, or None when k < j.
fn falling(k: usize, j: usize) -> Option<BigRational> {
    if k < j {
        return None;
    }
    let mut acc = BigInt::one();
    for m in (k - j + 1)..=k {
        acc *= BigInt::from(m as u64);
    }
    Some(BigRational::from_integer(acc))
}

fn falling_f64(k: usize, j: usize) -> Option<f64> {
    falling(k, j).map(|r| rational_to_f64(&r))
}

fn pow_rat(r: &BigRational, k: usize) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..k {
        acc *= r;
    }
    acc
}

fn pow_complex(re: &BigRational, im: &BigRational, k: usize) -> RationalComplex {
    let base = RationalComplex::new(re.clone(), im.clone());
    let mut acc = RationalComplex::one();
    for _ in 0..k {
        acc = acc.mul(&base);
    }
    acc
}

fn cpow(re: f64, im: f64, k: usize) -> (f64, f64) {
    let mut acc = (1.0, 0.0);
    for _ in 0..k {
        acc = (acc.0 * re - acc.1 * im, acc.0 * im + acc.1 * re);
    }
    acc
}

/// Symbolic exp(t*B), entries in variable `var`.
pub fn exp_tb(b: &RatMatrix, var: usize) -> SymbolicMatrixExp {
    assert!(b.is_square(), "exp(tB) needs a square matrix");
    let n = b.rows;
    if n == 0 {
        return SymbolicMatrixExp { dim: 0, entries: Vec::new(), exactness: Exactness::Exact };
    }
    let char_poly = b.char_poly();
    let (basis, exactness) = match exact_eigen_basis(&char_poly) {
        Some(basis) => (basis, Exactness::Exact),
        None => (numeric_eigen_basis(&char_poly), Exactness::Numeric),
    };
    debug_assert_eq!(basis.len(), n);

    // Confluent system: row k states sum_b c_b * f_b^{(k)}(0) = (B^k)_{ij}.
    let exact = exactness == Exactness::Exact;
    let entries = if exact {
        let mut m = RatMatrix::zeros(n, n);
        for k in 0..n {
            for (bi, f) in basis.iter().enumerate() {
                m[(k, bi)] = f
                    .derivative_at_zero(k)
                    .as_exact()
                    .expect("exact basis derivative")
                    .clone();
            }
        }
        let powers = rational_powers(b, n);
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let rhs: Vec<BigRational> =
                    (0..n).map(|k| powers[k][(i, j)].clone()).collect();
                let coeffs = m.solve(&rhs).expect("confluent system is nonsingular");
                row.push(assemble(&basis, coeffs.into_iter().map(Scalar::Exact), var));
            }
            rows.push(row);
        }
        rows
    } else {
        let mut m = Matrix::zeros(n, n);
        for k in 0..n {
            for (bi, f) in basis.iter().enumerate() {
                m[(k, bi)] = f.derivative_at_zero(k).to_f64();
            }
        }
        let bf = b.to_float();
        let mut powers = vec![Matrix::identity(n)];
        for k in 1..n {
            powers.push(powers[k - 1].matmul(&bf));
        }
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let rhs: Vec<f64> = (0..n).map(|k| powers[k][(i, j)]).collect();
                let coeffs = m.solve(&rhs).expect("confluent system is nonsingular");
                let scale = coeffs.iter().fold(1.0f64, |s, c| s.max(c.abs()));
                row.push(assemble(
                    &basis,
                    coeffs.into_iter().map(|c| {
                        // suppress solver noise so structural zeros stay zero
                        if c.abs() < 1e-12 * scale {
                            Scalar::zero()
                        } else {
                            Scalar::Float(c)
                        }
                    }),
                    var,
                ));
            }
            rows.push(row);
        }
        rows
    };
    SymbolicMatrixExp { dim: n, entries, exactness }
}

fn assemble(
    basis: &[BasisFn],
    coeffs: impl Iterator<Item = Scalar>,
    var: usize,
) -> Expr {
    let terms: Vec<Expr> = basis
        .iter()
        .zip(coeffs)
        .filter(|(_, c)| !c.is_zero())
        .map(|(f, c)| f.to_expr(c, var))
        .collect();
    Expr::sum(terms)
}

fn rational_powers(b: &RatMatrix, count: usize) -> Vec<RatMatrix> {
    let mut powers = vec![RatMatrix::identity(b.rows)];
    for k in 1..count {
        powers.push(powers[k - 1].matmul(b));
    }
    powers
}

/// Try to split the monic characteristic polynomial into rational linear
/// factors plus at most one rational-complex quadratic. Returns the basis
/// functions in a deterministic order, or None when the spectrum is not
/// expressible that way (caller falls back to floats).
fn exact_eigen_basis(char_poly: &[BigRational]) -> Option<Vec<BasisFn>> {
    let mut poly: Vec<BigRational> = char_poly.to_vec();
    // roots collected as (root, multiplicity), deterministic order
    let mut real_roots: Vec<(BigRational, usize)> = Vec::new();

    let add_root = |roots: &mut Vec<(BigRational, usize)>, r: BigRational| {
        if let Some(slot) = roots.iter_mut().find(|(x, _)| *x == r) {
            slot.1 += 1;
        } else {
            roots.push((r, 1));
        }
    };

    // strip powers of x (zero eigenvalues)
    while poly.len() > 1 && poly[0].is_zero() {
        add_root(&mut real_roots, BigRational::zero());
        poly.remove(0);
    }

    // extract rational roots by trial over divisors
    'outer: while poly.len() > 2 {
        let candidates = rational_root_candidates(&poly)?;
        for cand in candidates {
            if eval_poly(&poly, &cand).is_zero() {
                poly = deflate(&poly, &cand);
                add_root(&mut real_roots, cand);
                continue 'outer;
            }
        }
        break;
    }

    let mut complex_pair: Option<(BigRational, BigRational)> = None;
    match poly.len() {
        1 => {}
        2 => {
            // monic linear: x + c0
            add_root(&mut real_roots, -poly[0].clone());
        }
        3 => {
            // monic quadratic x^2 + bx + c
            let b = poly[1].clone();
            let c = poly[0].clone();
            let disc = &b * &b - BigRational::from_integer(4.into()) * &c;
            if disc.is_negative() {
                let s = rational_sqrt(&(-disc))?;
                let two = BigRational::from_integer(2.into());
                complex_pair = Some((-b / &two, s / &two));
            } else {
                let s = rational_sqrt(&disc)?;
                let two = BigRational::from_integer(2.into());
                add_root(&mut real_roots, (-&b + &s) / &two);
                add_root(&mut real_roots, (-&b - &s) / &two);
            }
        }
        _ => return None,
    }

    let mut basis = Vec::new();
    for (root, mult) in real_roots {
        for degree in 0..mult {
            basis.push(BasisFn::ExactReal { rate: root.clone(), degree });
        }
    }
    if let Some((re, im)) = complex_pair {
        basis.push(BasisFn::ExactCos { re: re.clone(), im: im.clone(), degree: 0 });
        basis.push(BasisFn::ExactSin { re, im, degree: 0 });
    }
    Some(basis)
}

fn eval_poly(poly: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in poly.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Divide monic poly by (x - r); assumes r is a root.
fn deflate(poly: &[BigRational], r: &BigRational) -> Vec<BigRational> {
    let n = poly.len() - 1;
    let mut out = vec![BigRational::zero(); n];
    let mut carry = poly[n].clone(); // leading 1
    for k in (0..n).rev() {
        out[k] = carry.clone();
        carry = &poly[k] + &(carry * r);
    }
    out
}

/// Candidate rational roots p/q of the integerized polynomial, organized
/// small-first. None when the constant term is too big to factor cheaply.
fn rational_root_candidates(poly: &[BigRational]) -> Option<Vec<BigRational>> {
    let lcm = poly.iter().fold(BigInt::one(), |acc, c| {
        num_integer::lcm(acc, c.denom().clone())
    });
    let ints: Vec<BigInt> = poly.iter().map(|c| c.numer() * (&lcm / c.denom())).collect();
    let a0 = ints[0].magnitude();
    let lead = ints[ints.len() - 1].magnitude();
    let a0 = a0.to_u64()?;
    let lead = lead.to_u64()?;
    if a0 == 0 {
        // handled by the zero-root loop; nothing more to try here
        return Some(Vec::new());
    }
    if a0 > 1_000_000_000_000 || lead > 1_000_000 {
        return None;
    }
    let ps = divisors(a0);
    let qs = divisors(lead);
    let mut out = Vec::new();
    for &p in &ps {
        for &q in &qs {
            let r = BigRational::new(BigInt::from(p), BigInt::from(q));
            if !out.contains(&r) {
                out.push(r.clone());
                out.push(-r);
            }
        }
    }
    Some(out)
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}

/// Numeric eigenvalue basis from Durand-Kerner roots, with clustering for
/// multiplicities and conjugate pairing.
fn numeric_eigen_basis(char_poly: &[BigRational]) -> Vec<BasisFn> {
    let n = char_poly.len() - 1;
    let coeffs: Vec<f64> = char_poly[..n].iter().map(rational_to_f64).collect();
    let mut roots = polynomial_roots_monic(&coeffs);
    let scale = roots.iter().fold(1.0f64, |m, r| m.max(r.0.abs() + r.1.abs()));
    let tol = 1e-7 * scale;
    // snap near-real roots
    for r in roots.iter_mut() {
        if r.1.abs() < tol {
            r.1 = 0.0;
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // cluster equal roots
    let mut clusters: Vec<(f64, f64, usize)> = Vec::new();
    for r in &roots {
        match clusters
            .iter_mut()
            .find(|(re, im, _)| (re - r.0).abs() < tol && (im - r.1).abs() < tol)
        {
            Some(c) => c.2 += 1,
            None => clusters.push((r.0, r.1, 1)),
        }
    }
    let mut basis = Vec::new();
    let mut used_pairs: Vec<(f64, f64)> = Vec::new();
    for &(re, im, mult) in &clusters {
        if im == 0.0 {
            for degree in 0..mult {
                basis.push(BasisFn::FloatReal { rate: re, degree });
            }
        } else if im > 0.0 {
            used_pairs.push((re, im));
            for degree in 0..mult {
                basis.push(BasisFn::FloatCos { re, im, degree });
                basis.push(BasisFn::FloatSin { re, im, degree });
            }
        }
        // im < 0: the conjugate partner already contributed
    }
    debug_assert_eq!(basis.len(), n, "basis does not span the solution space");
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm;
    use crate::sample::Stream;

    fn check_against_numeric(b: &RatMatrix, ts: &[f64], tol: f64) {
        let sym = exp_tb(b, 0);
        for &t in ts {
            let num = expm(&b.to_float().scale(t));
            let s = sym.eval(t, 0);
            for i in 0..b.rows {
                for j in 0..b.cols {
                    assert!(
                        (num[(i, j)] - s[(i, j)]).abs() < tol,
                        "entry ({i},{j}) at t={t}: numeric {} vs symbolic {}",
                        num[(i, j)],
                        s[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn nilpotent_2x2_is_linear_in_t() {
        let b = RatMatrix::from_i64_rows(&[vec![0, 0], vec![1, 0]]);
        let sym = exp_tb(&b, 0);
        assert_eq!(sym.exactness, Exactness::Exact);
        // entry (2,1) is the expression "t"; frozen oracle: value 2 at t=2
        assert_eq!(sym.entry(1, 0), &Expr::var(0));
        assert!((sym.entry(1, 0).eval(&[2.0]) - 2.0).abs() < 1e-15);
        assert!(sym.entry(0, 1).is_zero());
        assert!(sym.entry(0, 0).is_one());
        check_against_numeric(&b, &[-2.0, 0.0, 0.7, 3.0], 1e-12);
    }

    #[test]
    fn rotation_gives_exact_trig() {
        let b = RatMatrix::from_i64_rows(&[vec![0, 1], vec![-1, 0]]);
        let sym = exp_tb(&b, 0);
        assert_eq!(sym.exactness, Exactness::Exact);
        let t = 1.3;
        assert!((sym.entry(0, 0).eval(&[t]) - t.cos()).abs() < 1e-15);
        assert!((sym.entry(0, 1).eval(&[t]) - t.sin()).abs() < 1e-15);
        check_against_numeric(&b, &[-1.0, 0.4, 2.0], 1e-12);
    }

    #[test]
    fn distinct_rational_eigenvalues() {
        let b = RatMatrix::from_i64_rows(&[vec![1, 0], vec![0, 2]]);
        let sym = exp_tb(&b, 0);
        assert_eq!(sym.exactness, Exactness::Exact);
        check_against_numeric(&b, &[-1.0, 0.0, 1.5], 1e-11);
    }

    #[test]
    fn companion_nilpotent_3x3() {
        let b = RatMatrix::from_i64_rows(&[
            vec![0, 0, 0],
            vec![1, 0, 0],
            vec![0, 1, 0],
        ]);
        let sym = exp_tb(&b, 0);
        assert_eq!(sym.exactness, Exactness::Exact);
        // first column is 1, t, t^2/2
        assert!(sym.entry(0, 0).is_one());
        assert_eq!(sym.entry(1, 0), &Expr::var(0));
        let half_t2 = Expr::ratio(1, 2) * Expr::pow(Expr::var(0), 2);
        assert_eq!(sym.entry(2, 0), &half_t2);
        check_against_numeric(&b, &[-2.0, 1.0], 1e-12);
    }

    #[test]
    fn repeated_rational_eigenvalue() {
        // [[1,1],[0,1]]: exp(tB) = e^t [[1,t],[0,1]]
        let b = RatMatrix::from_i64_rows(&[vec![1, 1], vec![0, 1]]);
        let sym = exp_tb(&b, 0);
        assert_eq!(sym.exactness, Exactness::Exact);
        check_against_numeric(&b, &[-1.0, 0.5, 2.0], 1e-11);
    }

    #[test]
    fn irrational_spectrum_falls_back_to_floats() {
        // eigenvalues (1 +- i sqrt(3))/2
        let b = RatMatrix::from_i64_rows(&[vec![1, 1], vec![-1, 0]]);
        let sym = exp_tb(&b, 0);
        assert_eq!(sym.exactness, Exactness::Numeric);
        check_against_numeric(&b, &[-2.0, -0.3, 0.0, 1.1, 2.5], 1e-9);
    }

    #[test]
    fn half_rate_exponential() {
        let mut b = RatMatrix::zeros(1, 1);
        b[(0, 0)] = BigRational::new(BigInt::from(1), BigInt::from(2));
        let sym = exp_tb(&b, 0);
        assert_eq!(sym.exactness, Exactness::Exact);
        assert!((sym.entry(0, 0).eval(&[2.0]) - core::f64::consts::E).abs() < 1e-14);
    }

    #[test]
    fn determinant_is_exp_trace_on_random_rationals() {
        // Liouville's formula det exp(tB) = exp(t trace B), verified
        // numerically for fixed-seed random rational 2x2 matrices.
        let mut rng = Stream::new(11);
        for _ in 0..8 {
            let mut b = RatMatrix::zeros(2, 2);
            for i in 0..2 {
                for j in 0..2 {
                    let (p, q) = rng.small_ratio(3, 3);
                    b[(i, j)] = BigRational::new(BigInt::from(p), BigInt::from(q));
                }
            }
            let sym = exp_tb(&b, 0);
            let tr = rational_to_f64(&b.trace());
            for &t in &[-1.0, 0.3, 1.7] {
                let m = sym.eval(t, 0);
                let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
                let expect = (t * tr).exp();
                assert!(
                    (det - expect).abs() <= 1e-9 * expect.abs().max(1.0),
                    "det {det} vs exp(t tr) {expect} for B={:?}",
                    b
                );
            }
        }
    }
}

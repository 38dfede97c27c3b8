//! Second-order operators L = sum a_ij(x) d2/dx_i dx_j + sum b_j(x) d/dx_j
//! with symmetric positive-semidefinite principal part and no zero-order
//! term: quasi-divergence decomposition, the quadratic form Psi_A, the
//! chain-rule identity, invariance checks, formal adjoints and sign
//! classification of symbolic functions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)] // f64 math comes from the trait under no_std
use num_traits::Float;

use crate::fields::{lie_bracket, VectorField};
use crate::group::{GroupLaw, Side};
use crate::sample::SampleSpec;
use crate::scalar::Scalar;
use crate::symbolic::{equal_on_samples, Expr, VarSet};

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorError {
    DimensionMismatch { expected: usize, got: usize },
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    NegativeSquareSign { index: usize },
}

impl fmt::Display for OperatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {}, got {}", expected, got)
            }
            OperatorError::NotPositiveSemidefinite { min_eigenvalue } => write!(
                f,
                "principal part is not positive semidefinite (min eigenvalue {:.3e})",
                min_eigenvalue
            ),
            OperatorError::NegativeSquareSign { index } => {
                write!(f, "square coefficient {} must be nonnegative", index)
            }
        }
    }
}

impl core::error::Error for OperatorError {}

/// Coordinate-form operator; A is stored upper-triangular and read
/// symmetrized, the drift vector is b, and no zero-order term exists.
#[derive(Debug, Clone)]
pub struct SecondOrderOperator {
    dim: usize,
    /// upper triangle, row-major: (i, j) with i <= j
    a_upper: Vec<Expr>,
    b: Vec<Expr>,
    vars: VarSet,
}

impl SecondOrderOperator {
    /// Build from a full matrix (symmetrized) and drift; the principal
    /// part is checked for positive semidefiniteness on samples.
    pub fn new(
        a: Vec<Vec<Expr>>,
        b: Vec<Expr>,
        vars: VarSet,
    ) -> Result<SecondOrderOperator, OperatorError> {
        let dim = vars.len();
        if a.len() != dim || a.iter().any(|row| row.len() != dim) {
            return Err(OperatorError::DimensionMismatch { expected: dim, got: a.len() });
        }
        if b.len() != dim {
            return Err(OperatorError::DimensionMismatch { expected: dim, got: b.len() });
        }
        let mut a_upper = Vec::with_capacity(dim * (dim + 1) / 2);
        let half = Expr::ratio(1, 2);
        for i in 0..dim {
            for j in i..dim {
                if i == j {
                    a_upper.push(a[i][j].clone());
                } else {
                    a_upper.push(half.clone() * (a[i][j].clone() + a[j][i].clone()));
                }
            }
        }
        let op = SecondOrderOperator { dim, a_upper, b, vars };
        op.validate_psd(&SampleSpec::default())?;
        Ok(op)
    }

    fn upper_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // row i starts after sum_{r<i} (dim - r) entries
        i * self.dim - i * (i + 1) / 2 + i + (j - i)
    }

    /// Entry of the symmetrized principal matrix.
    pub fn a(&self, i: usize, j: usize) -> &Expr {
        &self.a_upper[self.upper_index(i, j)]
    }

    pub fn b(&self, j: usize) -> &Expr {
        &self.b[j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    fn validate_psd(&self, spec: &SampleSpec) -> Result<(), OperatorError> {
        for p in spec.points(self.dim) {
            let m = self.principal_at(&p);
            let min = m.min_symmetric_eigenvalue();
            if min < -1e-10 {
                return Err(OperatorError::NotPositiveSemidefinite { min_eigenvalue: min });
            }
        }
        Ok(())
    }

    /// A(x) as a float matrix.
    pub fn principal_at(&self, point: &[f64]) -> crate::linalg::Matrix {
        let mut m = crate::linalg::Matrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self.a(i, j).eval(point);
            }
        }
        m
    }

    /// Lu as a ring expression.
    pub fn apply(&self, u: &Expr) -> Result<Expr, OperatorError> {
        self.compatible(u)?;
        let mut terms = Vec::new();
        for i in 0..self.dim {
            let di = u.differentiate(i);
            for j in 0..self.dim {
                let a = self.a(i, j);
                if a.is_zero() {
                    continue;
                }
                terms.push(a.clone() * di.differentiate(j));
            }
        }
        for (j, bj) in self.b.iter().enumerate() {
            if bj.is_zero() {
                continue;
            }
            terms.push(bj.clone() * u.differentiate(j));
        }
        Ok(Expr::sum(terms))
    }

    fn compatible(&self, u: &Expr) -> Result<(), OperatorError> {
        if let Some(v) = u.max_var() {
            if v >= self.dim {
                return Err(OperatorError::DimensionMismatch {
                    expected: self.dim,
                    got: v + 1,
                });
            }
        }
        Ok(())
    }

    /// Quasi-divergence decomposition L = sum_i d_i(X_i .) + X_0 with
    /// X_i = sum_j a_ij d_j and the drift correction on X_0.
    pub fn decompose(&self) -> DecomposedOperator {
        let mut xs = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let coeffs: Vec<Expr> = (0..self.dim).map(|j| self.a(i, j).clone()).collect();
            xs.push(VectorField::new(coeffs, format!("X{}", i + 1)));
        }
        let mut drift_coeffs = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let mut corr = vec![self.b[j].clone()];
            for i in 0..self.dim {
                corr.push(self.a(i, j).differentiate(i).neg());
            }
            drift_coeffs.push(Expr::sum(corr));
        }
        DecomposedOperator {
            fields: xs,
            drift: VectorField::new(drift_coeffs, "X0"),
        }
    }

    /// Psi_A(u) = <A grad u, grad u> as a ring expression.
    pub fn psi(&self, u: &Expr) -> Result<Expr, OperatorError> {
        self.compatible(u)?;
        let grads: Vec<Expr> = (0..self.dim).map(|i| u.differentiate(i)).collect();
        let mut terms = Vec::new();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.a(i, j);
                if a.is_zero() {
                    continue;
                }
                terms.push(a.clone() * grads[i].clone() * grads[j].clone());
            }
        }
        Ok(Expr::sum(terms))
    }

    /// Non-total-degeneracy: A(x) != 0 at every supplied point. Under left
    /// invariance a single point suffices (the report notes this).
    pub fn check_nd(&self, points: &[Vec<f64>]) -> bool {
        assert!(!points.is_empty(), "need at least one point");
        points.iter().all(|p| {
            let mut max = 0.0f64;
            for i in 0..self.dim {
                for j in 0..self.dim {
                    max = max.max(self.a(i, j).eval(p).abs());
                }
            }
            max > 1e-12
        })
    }

    /// Max over sampled (g, u, x) of |L(u o tau_g)(x) - (Lu)(tau_g x)|,
    /// with u from a fixed bank of polynomial/exponential test functions.
    /// Composition is symbolic when the translation stays affine, exact
    /// chain-rule evaluation otherwise.
    pub fn left_invariance_residual(
        &self,
        group: &GroupLaw,
        spec: &SampleSpec,
    ) -> Result<f64, OperatorError> {
        if group.dim() != self.dim {
            return Err(OperatorError::DimensionMismatch {
                expected: self.dim,
                got: group.dim(),
            });
        }
        let bank = test_function_bank(self.dim);
        let g_points: Vec<Vec<f64>> =
            spec.points(self.dim).into_iter().take(8).collect();
        let x_points: Vec<Vec<f64>> = spec.points(self.dim).into_iter().take(16).collect();
        let mut worst = 0.0f64;
        for g in &g_points {
            let tau = group.translation_exprs_f64(Side::Left, g);
            for u in &bank {
                let lu = self.apply(u)?;
                match u.substitute(&tau) {
                    Ok(composed) => {
                        let l_composed = self.apply(&composed)?;
                        for x in &x_points {
                            let tx: Vec<f64> = tau.iter().map(|e| e.eval(x)).collect();
                            let lhs = l_composed.eval(x);
                            let rhs = lu.eval(&tx);
                            worst = worst.max((lhs - rhs).abs());
                        }
                    }
                    Err(_) => {
                        let chain = TranslationChain::new(self, u, &tau);
                        for x in &x_points {
                            let tx: Vec<f64> = tau.iter().map(|e| e.eval(x)).collect();
                            let lhs = chain.apply_at(x, &tx);
                            let rhs = lu.eval(&tx);
                            worst = worst.max((lhs - rhs).abs());
                        }
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Max over samples of |L(F(u)) - F'(u) Lu - F''(u) Psi_A(u)|.
    ///
    /// For a symbolic one-variable F the composition is substitution-based
    /// where possible; otherwise (and for closed-form numeric F) the left
    /// side is computed independently by nested central finite differences
    /// with one Richardson step.
    pub fn chain_rule_residual(
        &self,
        u: &Expr,
        f: &ChainFn<'_>,
        spec: &SampleSpec,
    ) -> Result<f64, OperatorError> {
        self.compatible(u)?;
        let lu = self.apply(u)?;
        let psi = self.psi(u)?;
        if let ChainFn::Expr(fe) = f {
            let map = [u.clone()];
            if let Ok(composed) = fe.substitute(&map) {
                let d1 = fe.differentiate(0);
                let d2 = d1.differentiate(0);
                let lhs = self.apply(&composed)?;
                let rhs = d1.substitute(&map).ok().zip(d2.substitute(&map).ok());
                if let Some((f1u, f2u)) = rhs {
                    let residual_expr = lhs - (f1u * lu + f2u * psi);
                    let mut worst = 0.0f64;
                    for p in spec.points(self.dim) {
                        worst = worst.max(residual_expr.eval(&p).abs());
                    }
                    return Ok(worst);
                }
            }
        }
        // numeric route: L(F o u) by finite differences
        let mut worst = 0.0f64;
        for p in spec.points(self.dim) {
            let composed = |x: &[f64]| f.value(u.eval(x));
            let lhs = self.apply_to_function_fd(&composed, &p, FD_STEP);
            let uv = u.eval(&p);
            let rhs = f.d1(uv) * lu.eval(&p) + f.d2(uv) * psi.eval(&p);
            worst = worst.max((lhs - rhs).abs());
        }
        Ok(worst)
    }

    /// Apply L to a black-box function by central finite differences with
    /// one Richardson extrapolation, at a single point.
    pub fn apply_to_function_fd(
        &self,
        func: &dyn Fn(&[f64]) -> f64,
        point: &[f64],
        h: f64,
    ) -> f64 {
        let d1 = |h: f64, j: usize| -> f64 {
            let mut plus = point.to_vec();
            let mut minus = point.to_vec();
            plus[j] += h;
            minus[j] -= h;
            (func(&plus) - func(&minus)) / (2.0 * h)
        };
        let d2 = |h: f64, i: usize, j: usize| -> f64 {
            if i == j {
                let mut plus = point.to_vec();
                let mut minus = point.to_vec();
                plus[i] += h;
                minus[i] -= h;
                (func(&plus) - 2.0 * func(point) + func(&minus)) / (h * h)
            } else {
                let mut pp = point.to_vec();
                let mut pm = point.to_vec();
                let mut mp = point.to_vec();
                let mut mm = point.to_vec();
                pp[i] += h;
                pp[j] += h;
                pm[i] += h;
                pm[j] -= h;
                mp[i] -= h;
                mp[j] += h;
                mm[i] -= h;
                mm[j] -= h;
                (func(&pp) - func(&pm) - func(&mp) + func(&mm)) / (4.0 * h * h)
            }
        };
        let richardson = |coarse: f64, fine: f64| (4.0 * fine - coarse) / 3.0;
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                let aij = self.a(i, j).eval(point);
                if aij == 0.0 {
                    continue;
                }
                let factor = if i == j { 1.0 } else { 2.0 };
                let v = richardson(d2(h, i, j), d2(h / 2.0, i, j));
                acc += factor * aij * v;
            }
        }
        for j in 0..self.dim {
            let bj = self.b[j].eval(point);
            if bj == 0.0 {
                continue;
            }
            let v = richardson(d1(h, j), d1(h / 2.0, j));
            acc += bj * v;
        }
        acc
    }

    /// Formal adjoint L* phi = sum d_i d_j (a_ij phi) - sum d_j (b_j phi),
    /// expanded to an operator triple (A, b~, c~); a zero-order term is
    /// permitted on this output type only.
    pub fn formal_adjoint(&self) -> AdjointOperator {
        let mut b_tilde = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let mut terms = Vec::new();
            for i in 0..self.dim {
                terms.push(Expr::int(2) * self.a(i, j).differentiate(i));
            }
            terms.push(self.b[j].clone().neg());
            b_tilde.push(Expr::sum(terms));
        }
        let mut c_terms = Vec::new();
        for i in 0..self.dim {
            for j in 0..self.dim {
                c_terms.push(self.a(i, j).differentiate(i).differentiate(j));
            }
        }
        for (j, bj) in self.b.iter().enumerate() {
            c_terms.push(bj.differentiate(j).neg());
        }
        AdjointOperator {
            base: self.clone(),
            b_tilde,
            c_tilde: Expr::sum(c_terms),
        }
    }

    /// Sign classification of Lu over region samples; "harmonic" requires
    /// the sampled identity Lu == 0, with tolerance 1e-10. This is a
    /// falsification tool over N sampled points, not a global proof.
    pub fn classify(
        &self,
        u: &Expr,
        spec: &SampleSpec,
    ) -> Result<Classification, OperatorError> {
        let lu = self.apply(u)?;
        if equal_on_samples(&lu, &Expr::zero(), self.dim, spec) {
            return Ok(Classification::Harmonic);
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for p in spec.points(self.dim) {
            let v = lu.eval(&p);
            min = min.min(v);
            max = max.max(v);
        }
        if min >= -1e-10 {
            Ok(Classification::Subharmonic)
        } else if max <= 1e-10 {
            Ok(Classification::Superharmonic)
        } else {
            Ok(Classification::None)
        }
    }
}

/// Finite-difference step for numeric compositions (central, with one
/// Richardson extrapolation). At 1e-4 the rounding term eps*|f|/h^2 of the
/// second-difference stencils already exceeds 1e-6 for exponential-scale
/// compositions; 1e-3 balances rounding against the (Richardson-cleaned)
/// truncation error at desk scale.
pub const FD_STEP: f64 = 1e-3;

/// Sign classification outcome on sampled points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Classification {
    Harmonic,
    Subharmonic,
    Superharmonic,
    None,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Classification::Harmonic => "harmonic",
            Classification::Subharmonic => "subharmonic",
            Classification::Superharmonic => "superharmonic",
            Classification::None => "none",
        };
        write!(f, "{}", s)
    }
}

/// Quasi-divergence form data: fields X_1..X_n and the drift X_0.
#[derive(Debug, Clone)]
pub struct DecomposedOperator {
    pub fields: Vec<VectorField>,
    pub drift: VectorField,
}

impl DecomposedOperator {
    /// Re-expand sum_i d_i (X_i u) + X_0 u; agrees with the coordinate
    /// form on samples.
    pub fn reexpand(&self, u: &Expr) -> Result<Expr, crate::fields::FieldError> {
        let mut terms = Vec::new();
        for (i, x) in self.fields.iter().enumerate() {
            let xu = crate::fields::apply_field(x, u)?;
            terms.push(xu.differentiate(i));
        }
        terms.push(crate::fields::apply_field(&self.drift, u)?);
        Ok(Expr::sum(terms))
    }
}

/// Build the coordinate form of sum_j s_j X_j^2 + X_0 from a frame; the
/// principal matrix is the Gram-type sum of s_j c_j c_j^T, positive
/// semidefinite whenever the square coefficients are nonnegative.
pub fn from_frame(
    fields: &[VectorField],
    drift: Option<&VectorField>,
    signs: Option<&[Scalar]>,
    vars: VarSet,
) -> Result<SecondOrderOperator, OperatorError> {
    assert!(!fields.is_empty(), "need at least one field");
    let dim = vars.len();
    for f in fields {
        if f.dim() != dim {
            return Err(OperatorError::DimensionMismatch { expected: dim, got: f.dim() });
        }
    }
    if let Some(s) = signs {
        if s.len() != fields.len() {
            return Err(OperatorError::DimensionMismatch {
                expected: fields.len(),
                got: s.len(),
            });
        }
        for (idx, v) in s.iter().enumerate() {
            if v.is_negative() {
                return Err(OperatorError::NegativeSquareSign { index: idx });
            }
        }
    }
    let sign = |j: usize| -> Scalar {
        signs.map(|s| s[j].clone()).unwrap_or_else(Scalar::one)
    };
    let mut a = vec![vec![Expr::zero(); dim]; dim];
    let mut b = vec![Expr::zero(); dim];
    for (fj, field) in fields.iter().enumerate() {
        let s = Expr::Const(sign(fj));
        for k in 0..dim {
            for l in 0..dim {
                a[k][l] = a[k][l].clone()
                    + s.clone() * field.coeffs[k].clone() * field.coeffs[l].clone();
            }
        }
        // first-order part of X_j^2: sum_k c_k (d_k c_l) d_l
        for l in 0..dim {
            let mut corr = Vec::new();
            for k in 0..dim {
                corr.push(field.coeffs[k].clone() * field.coeffs[l].differentiate(k));
            }
            b[l] = b[l].clone() + s.clone() * Expr::sum(corr);
        }
    }
    if let Some(d) = drift {
        if d.dim() != dim {
            return Err(OperatorError::DimensionMismatch { expected: dim, got: d.dim() });
        }
        for l in 0..dim {
            b[l] = b[l].clone() + d.coeffs[l].clone();
        }
    }
    SecondOrderOperator::new(a, b, vars)
}

/// The formal adjoint: same principal part, modified drift, and a
/// zero-order term (allowed on this type only).
#[derive(Debug, Clone)]
pub struct AdjointOperator {
    base: SecondOrderOperator,
    pub b_tilde: Vec<Expr>,
    pub c_tilde: Expr,
}

impl AdjointOperator {
    pub fn a(&self, i: usize, j: usize) -> &Expr {
        self.base.a(i, j)
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn apply(&self, phi: &Expr) -> Expr {
        let dim = self.base.dim();
        let mut terms = Vec::new();
        for i in 0..dim {
            let di = phi.differentiate(i);
            for j in 0..dim {
                let a = self.base.a(i, j);
                if a.is_zero() {
                    continue;
                }
                terms.push(a.clone() * di.differentiate(j));
            }
        }
        for (j, bj) in self.b_tilde.iter().enumerate() {
            if bj.is_zero() {
                continue;
            }
            terms.push(bj.clone() * phi.differentiate(j));
        }
        terms.push(self.c_tilde.clone() * phi.clone());
        Expr::sum(terms)
    }
}

/// A scalar C^2 function for the chain rule: either a one-variable ring
/// expression or closed-form value/derivative callbacks (used by the
/// piecewise convexity gadgets, which lie outside the ring).
pub enum ChainFn<'a> {
    Expr(&'a Expr),
    Closed {
        f: &'a dyn Fn(f64) -> f64,
        d1: &'a dyn Fn(f64) -> f64,
        d2: &'a dyn Fn(f64) -> f64,
    },
}

impl ChainFn<'_> {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            ChainFn::Expr(e) => e.eval(&[t]),
            ChainFn::Closed { f, .. } => f(t),
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match self {
            ChainFn::Expr(e) => e.differentiate(0).eval(&[t]),
            ChainFn::Closed { d1, .. } => d1(t),
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match self {
            ChainFn::Expr(e) => e.differentiate(0).differentiate(0).eval(&[t]),
            ChainFn::Closed { d2, .. } => d2(t),
        }
    }
}

/// Exact second-order chain rule for u composed with a concrete
/// translation: derivatives of the composition from symbolic derivatives
/// of u and of the translation components.
struct TranslationChain<'a> {
    op: &'a SecondOrderOperator,
    du: Vec<Expr>,
    d2u: Vec<Vec<Expr>>,
    jac: Vec<Vec<Expr>>,
    hess: Vec<Vec<Vec<Expr>>>,
    tau: &'a [Expr],
}

impl<'a> TranslationChain<'a> {
    fn new(op: &'a SecondOrderOperator, u: &Expr, tau: &'a [Expr]) -> Self {
        let dim = op.dim();
        let du: Vec<Expr> = (0..dim).map(|k| u.differentiate(k)).collect();
        let d2u: Vec<Vec<Expr>> = du
            .iter()
            .map(|dk| (0..dim).map(|l| dk.differentiate(l)).collect())
            .collect();
        let jac: Vec<Vec<Expr>> = tau
            .iter()
            .map(|c| (0..dim).map(|i| c.differentiate(i)).collect())
            .collect();
        let hess: Vec<Vec<Vec<Expr>>> = jac
            .iter()
            .map(|row| {
                row.iter()
                    .map(|ci| (0..dim).map(|j| ci.differentiate(j)).collect())
                    .collect()
            })
            .collect();
        TranslationChain { op, du, d2u, jac, hess, tau }
    }

    /// L(u o tau)(x), given tx = tau(x).
    fn apply_at(&self, x: &[f64], tx: &[f64]) -> f64 {
        let dim = self.op.dim();
        let _ = self.tau;
        let du: Vec<f64> = self.du.iter().map(|e| e.eval(tx)).collect();
        let d2u: Vec<Vec<f64>> = self
            .d2u
            .iter()
            .map(|row| row.iter().map(|e| e.eval(tx)).collect())
            .collect();
        let jac: Vec<Vec<f64>> = self
            .jac
            .iter()
            .map(|row| row.iter().map(|e| e.eval(x)).collect())
            .collect();
        let mut acc = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let aij = self.op.a(i, j).eval(x);
                if aij == 0.0 {
                    continue;
                }
                // d_i d_j (u o tau) = sum_kl u_kl J_ki J_lj + sum_k u_k H^k_ij
                let mut second = 0.0;
                for k in 0..dim {
                    for l in 0..dim {
                        second += d2u[k][l] * jac[k][i] * jac[l][j];
                    }
                    second += du[k] * self.hess[k][i][j].eval(x);
                }
                acc += aij * second;
            }
        }
        for j in 0..dim {
            let bj = self.op.b(j).eval(x);
            if bj == 0.0 {
                continue;
            }
            let mut first = 0.0;
            for k in 0..dim {
                first += du[k] * jac[k][j];
            }
            acc += bj * first;
        }
        acc
    }
}

/// Fixed bank of polynomial/exponential test functions in `dim` variables.
pub fn test_function_bank(dim: usize) -> Vec<Expr> {
    let mut bank = Vec::new();
    for i in 0..dim {
        bank.push(Expr::var(i));
        bank.push(Expr::pow(Expr::var(i), 2));
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            bank.push(Expr::var(i) * Expr::var(j));
        }
    }
    // one exponential and one oscillatory function with small rates
    let mut aff = crate::symbolic::AffineForm::zero();
    for i in 0..dim {
        aff = aff.add(&crate::symbolic::AffineForm::term(i, Scalar::from_ratio(1, 2)));
    }
    bank.push(Expr::exp(aff.clone()));
    bank.push(Expr::sin(aff.scale(&Scalar::from_ratio(1, 2))));
    bank
}

/// Consistency helper for the constant-function equivalences: for u and a
/// decomposed operator, evaluates which of the four conditions hold on
/// samples (constant; all X_i u = 0; Psi = 0 and X_0 = 0 applied to u;
/// harmonic and Psi = 0).
pub fn lemma_a_conditions(
    op: &SecondOrderOperator,
    u: &Expr,
    spec: &SampleSpec,
) -> Result<[bool; 4], OperatorError> {
    let dec = op.decompose();
    let dim = op.dim();
    let constant = (0..dim).all(|i| u.differentiate(i).is_zero())
        || (0..dim).all(|i| {
            equal_on_samples(&u.differentiate(i), &Expr::zero(), dim, spec)
        });
    let all_vanish = dec
        .fields
        .iter()
        .chain(core::iter::once(&dec.drift))
        .all(|x| {
            crate::fields::apply_field(x, u)
                .map(|e| equal_on_samples(&e, &Expr::zero(), dim, spec))
                .unwrap_or(false)
        });
    let psi_zero = equal_on_samples(&op.psi(u)?, &Expr::zero(), dim, spec);
    let drift_zero_on_u = crate::fields::apply_field(&dec.drift, u)
        .map(|e| equal_on_samples(&e, &Expr::zero(), dim, spec))
        .unwrap_or(false);
    let harmonic = equal_on_samples(&op.apply(u)?, &Expr::zero(), dim, spec);
    Ok([
        constant,
        all_vanish,
        psi_zero && drift_zero_on_u,
        harmonic && psi_zero,
    ])
}

/// The commutator check [X,Y]u = X(Yu) - Y(Xu) run on a sample function;
/// used by bracket consumers as a self-test.
pub fn bracket_commutator_residual(
    x: &VectorField,
    y: &VectorField,
    u: &Expr,
    spec: &SampleSpec,
) -> f64 {
    let br = lie_bracket(x, y).expect("same dimension");
    let lhs = crate::fields::apply_field(&br, u).expect("compatible");
    let xyu = crate::fields::apply_field(x, &crate::fields::apply_field(y, u).unwrap()).unwrap();
    let yxu = crate::fields::apply_field(y, &crate::fields::apply_field(x, u).unwrap()).unwrap();
    let rhs = xyu - yxu;
    crate::symbolic::max_difference_on_samples(&lhs, &rhs, x.dim(), spec)
}

/// Convenience constructors for widely used operators.
pub mod builtin {
    use super::*;

    /// The Laplacian on n variables.
    pub fn laplacian(n: usize) -> SecondOrderOperator {
        let vars = VarSet::spatial(n);
        let mut a = vec![vec![Expr::zero(); n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = Expr::one();
        }
        SecondOrderOperator::new(a, vec![Expr::zero(); n], vars).expect("PSD by construction")
    }

    /// The heat operator sum_j (d/dx_j)^2 - d/dt on (x_1..x_n, t).
    pub fn heat(n: usize) -> SecondOrderOperator {
        let vars = VarSet::time_last(n);
        let dim = n + 1;
        let mut a = vec![vec![Expr::zero(); dim]; dim];
        for i in 0..n {
            a[i][i] = Expr::one();
        }
        let mut b = vec![Expr::zero(); dim];
        b[n] = Expr::int(-1);
        SecondOrderOperator::new(a, b, vars).expect("PSD by construction")
    }

    /// Pure drift <Bx, grad> on n variables (totally degenerate).
    /// Construction bypasses the PSD check trivially since A = 0.
    pub fn pure_drift(b_matrix: &crate::ratmat::RatMatrix) -> SecondOrderOperator {
        let n = b_matrix.rows;
        let vars = VarSet::spatial(n);
        let a = vec![vec![Expr::zero(); n]; n];
        let mut b = Vec::with_capacity(n);
        for j in 0..n {
            let mut terms = Vec::new();
            for k in 0..n {
                let c = Scalar::Exact(b_matrix[(j, k)].clone());
                if !c.is_zero() {
                    terms.push(Expr::Const(c) * Expr::var(k));
                }
            }
            b.push(Expr::sum(terms));
        }
        SecondOrderOperator::new(a, b, vars).expect("zero matrix is PSD")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupLaw;
    use crate::ratmat::RatMatrix;
    use crate::symbolic::parse;

    fn heat2_counterexample() -> (SecondOrderOperator, Expr) {
        let op = builtin::heat(2);
        let u = parse("exp(x1 + x2 + 2*t)", op.vars()).unwrap();
        (op, u)
    }

    #[test]
    fn heat_annihilates_counterexample_symbolically() {
        let (op, u) = heat2_counterexample();
        let lu = op.apply(&u).unwrap();
        assert!(lu.is_zero(), "expected exact symbolic zero, got {:?}", lu);
        assert_eq!(op.classify(&u, &SampleSpec::default()).unwrap(), Classification::Harmonic);
    }

    #[test]
    fn laplacian_on_harmonic_polynomial() {
        let op = builtin::laplacian(2);
        let u = parse("x1^2 - x2^2", op.vars()).unwrap();
        assert!(op.apply(&u).unwrap().is_zero());
        // subharmonic and superharmonic classification
        let u = parse("x1^2", op.vars()).unwrap();
        assert_eq!(
            op.classify(&u, &SampleSpec::default()).unwrap(),
            Classification::Subharmonic
        );
        let u = parse("-x1^2", op.vars()).unwrap();
        assert_eq!(
            op.classify(&u, &SampleSpec::default()).unwrap(),
            Classification::Superharmonic
        );
    }

    /// Kolmogorov operator d2/dx1 + x1 d/dx2 - d/dt on (x1, x2, t).
    fn kolmogorov_n1() -> SecondOrderOperator {
        let vars = VarSet::time_last(2);
        let mut a = vec![vec![Expr::zero(); 3]; 3];
        a[0][0] = Expr::one();
        let b = vec![Expr::zero(), Expr::var(0), Expr::int(-1)];
        SecondOrderOperator::new(a, b, vars).unwrap()
    }

    #[test]
    fn kolmogorov_drift_on_time() {
        let op = kolmogorov_n1();
        let lu = op.apply(&parse("t", op.vars()).unwrap()).unwrap();
        assert_eq!(lu, Expr::int(-1));
        // x2 + t*x1 is harmonic for this operator
        let u = parse("x2 + t*x1", op.vars()).unwrap();
        assert!(op.apply(&u).unwrap().is_zero());
        // and exp(x1 + t) as well
        let u = parse("exp(x1 + t)", op.vars()).unwrap();
        assert!(op.apply(&u).unwrap().is_zero());
    }

    #[test]
    fn decompose_shapes() {
        // Laplacian: X_i = d_i, X0 = 0
        let op = builtin::laplacian(2);
        let dec = op.decompose();
        assert!(dec.fields[0].coeffs[0].is_one());
        assert!(dec.drift.is_zero_on_samples(&SampleSpec::default()));
        // heat: X0 = -dt
        let op = builtin::heat(2);
        let dec = op.decompose();
        assert_eq!(dec.drift.coeffs[2], Expr::int(-1));
        // Kolmogorov: X0 = x1 dx2 - dt
        let op = kolmogorov_n1();
        let dec = op.decompose();
        assert!(dec.drift.coeffs[0].is_zero());
        assert_eq!(dec.drift.coeffs[1], Expr::var(0));
        assert_eq!(dec.drift.coeffs[2], Expr::int(-1));
    }

    #[test]
    fn decompose_reexpands_to_coordinate_form() {
        let spec = SampleSpec::default();
        for op in [builtin::heat(2), kolmogorov_n1()] {
            let dec = op.decompose();
            for text in ["x1^2*x2", "exp(x1 - t)", "x2^2 + t*x1"] {
                let u = parse(text, op.vars()).unwrap();
                let direct = op.apply(&u).unwrap();
                let re = dec.reexpand(&u).unwrap();
                assert!(
                    equal_on_samples(&re, &direct, op.dim(), &spec),
                    "reexpansion mismatch for {text}"
                );
            }
        }
    }

    #[test]
    fn from_frame_polarized_heisenberg() {
        // fields {dx1}, drift -T with T = dt + x1 dx2, vars (t,x1,x2):
        // L2 = (dx1)^2 - dt - x1 dx2
        let vars = VarSet::time_first(2);
        let dx1 = VectorField::coordinate(3, 1, "dx1");
        let t = VectorField::new(vec![Expr::one(), Expr::zero(), Expr::var(1)], "T");
        let op = from_frame(&[dx1], Some(&t.neg()), None, vars.clone()).unwrap();
        assert!(op.a(1, 1).is_one());
        assert!(op.a(0, 0).is_zero());
        assert_eq!(op.b(0), &Expr::int(-1));
        assert_eq!(op.b(2), &Expr::var(1).neg());
    }

    #[test]
    fn from_frame_with_half_square() {
        // ((1/sqrt2) dx1)^2 realized as sign 1/2 on dx1:
        // 1/2 (dx1)^2 - (x1+x2) dx1 + x1 dx2 - dt
        let vars = VarSet::time_first(2);
        let dx1 = VectorField::coordinate(3, 1, "dx1");
        let t = VectorField::new(
            vec![Expr::one(), Expr::var(1) + Expr::var(2), Expr::var(1).neg()],
            "T",
        );
        let op =
            from_frame(&[dx1], Some(&t.neg()), Some(&[Scalar::from_ratio(1, 2)]), vars).unwrap();
        assert_eq!(op.a(1, 1), &Expr::ratio(1, 2));
        let expect_b1 = (Expr::var(1) + Expr::var(2)).neg();
        assert!(equal_on_samples(op.b(1), &expect_b1, 3, &SampleSpec::default()));
        assert_eq!(op.b(2), &Expr::var(1));
        assert_eq!(op.b(0), &Expr::int(-1));
    }

    #[test]
    fn from_frame_single_time_field() {
        let vars = VarSet::new(&["t"], Some("t")).unwrap();
        let dt = VectorField::coordinate(1, 0, "dt");
        let op = from_frame(&[dt], None, None, vars).unwrap();
        assert!(op.a(0, 0).is_one());
        assert!(op.b(0).is_zero());
    }

    #[test]
    fn from_frame_rejects_negative_signs() {
        let vars = VarSet::spatial(1);
        let dx = VectorField::coordinate(1, 0, "dx");
        let err = from_frame(&[dx], None, Some(&[Scalar::from_int(-1)]), vars).unwrap_err();
        assert!(matches!(err, OperatorError::NegativeSquareSign { .. }));
    }

    #[test]
    fn psd_violation_is_a_hard_error() {
        let vars = VarSet::spatial(2);
        let a = vec![
            vec![Expr::one(), Expr::zero()],
            vec![Expr::zero(), Expr::int(-1)],
        ];
        let err = SecondOrderOperator::new(a, vec![Expr::zero(); 2], vars).unwrap_err();
        assert!(matches!(err, OperatorError::NotPositiveSemidefinite { .. }));
    }

    #[test]
    fn psi_values() {
        let op = builtin::laplacian(2);
        let psi = op.psi(&Expr::var(0)).unwrap();
        assert!(psi.is_one());
        // heat counterexample: psi = n u^2 with n = 2
        let (op, u) = heat2_counterexample();
        let psi = op.psi(&u).unwrap();
        let expect = Expr::int(2) * Expr::pow(u.clone(), 2);
        assert!(equal_on_samples(&psi, &expect, 3, &SampleSpec::default()));
        // constants give zero
        assert!(op.psi(&Expr::int(5)).unwrap().is_zero());
        // nonnegativity on samples
        let spec = SampleSpec::default();
        for p in spec.points(3) {
            assert!(psi.eval(&p) >= -1e-10);
        }
    }

    #[test]
    fn psi_zero_iff_fields_annihilate() {
        let op = kolmogorov_n1();
        let dec = op.decompose();
        let spec = SampleSpec::default();
        // u independent of x1: Psi(u) = 0 and X_i u = 0
        let u = parse("x2^2 + t", op.vars()).unwrap();
        assert!(equal_on_samples(&op.psi(&u).unwrap(), &Expr::zero(), 3, &spec));
        for x in &dec.fields {
            let xu = crate::fields::apply_field(x, &u).unwrap();
            assert!(equal_on_samples(&xu, &Expr::zero(), 3, &spec));
        }
        // u depending on x1: both fail together
        let u = parse("x1*x2", op.vars()).unwrap();
        assert!(!equal_on_samples(&op.psi(&u).unwrap(), &Expr::zero(), 3, &spec));
        let xu = crate::fields::apply_field(&dec.fields[0], &u).unwrap();
        assert!(!equal_on_samples(&xu, &Expr::zero(), 3, &spec));
    }

    #[test]
    fn lemma_a_consistency() {
        let spec = SampleSpec::default();
        // constant u: all four conditions hold
        let vars = VarSet::time_first(2);
        let dx1 = VectorField::coordinate(3, 1, "dx1");
        let t = VectorField::new(vec![Expr::one(), Expr::zero(), Expr::var(1)], "T");
        let op = from_frame(&[dx1], Some(&t.neg()), None, vars).unwrap();
        let conds = lemma_a_conditions(&op, &Expr::int(3), &spec).unwrap();
        assert_eq!(conds, [true, true, true, true]);
        // u = x2 on the polarized Heisenberg frame: (2) fails and (1) fails
        let u = parse("x2", op.vars()).unwrap();
        let conds = lemma_a_conditions(&op, &u, &spec).unwrap();
        assert!(!conds[0]);
        assert!(!conds[1]);
    }

    #[test]
    fn chain_rule_identity_symbolic() {
        let op = builtin::laplacian(1);
        // F = s^2, u = x1^2: both sides assembled independently
        let f = parse("x1^2", &VarSet::spatial(1)).unwrap(); // one-variable expr
        let u = parse("x1^2", op.vars()).unwrap();
        let res = op
            .chain_rule_residual(&u, &ChainFn::Expr(&f), &SampleSpec::default())
            .unwrap();
        assert!(res <= 1e-8, "residual {res}");
        // F identity: the residual vanishes exactly
        let ident = Expr::var(0);
        let res = op
            .chain_rule_residual(&u, &ChainFn::Expr(&ident), &SampleSpec::default())
            .unwrap();
        assert_eq!(res, 0.0);
    }

    #[test]
    fn chain_rule_numeric_route() {
        // heat counterexample with a closed-form F outside the ring
        let (op, u) = heat2_counterexample();
        let p = 1.5f64;
        let f = move |t: f64| ((1.0 + t * t).sqrt() - 1.0).powf(p);
        let d1 = move |t: f64| {
            let s = (1.0 + t * t).sqrt();
            p * (s - 1.0).powf(p - 1.0) * t / s
        };
        let d2 = move |t: f64| {
            let s = (1.0 + t * t).sqrt();
            let g = t * t / (s + 1.0); // s - 1, stably
            if t == 0.0 {
                return if p == 1.0 { 1.0 } else { 0.0 };
            }
            p * ((p - 1.0) * g.powf(p - 2.0) * t * t / (s * s) + g.powf(p - 1.0) / (s * s * s))
        };
        let spec = SampleSpec::new(32, -0.4, 0.4, 3);
        let res = op
            .chain_rule_residual(&u, &ChainFn::Closed { f: &f, d1: &d1, d2: &d2 }, &spec)
            .unwrap();
        assert!(res <= 1e-6, "residual {res}");
    }

    #[test]
    fn nd_checks() {
        let spec = SampleSpec::default();
        let pts = spec.points(2);
        assert!(builtin::laplacian(2).check_nd(&pts));
        let b = RatMatrix::from_i64_rows(&[vec![0, 1], vec![-1, 0]]);
        assert!(!builtin::pure_drift(&b).check_nd(&pts));
        assert!(kolmogorov_n1().check_nd(&spec.points(3)));
    }

    #[test]
    fn left_invariance_laplacian_abelian() {
        let op = builtin::laplacian(2);
        let g = GroupLaw::abelian(2);
        let res = op.left_invariance_residual(&g, &SampleSpec::default()).unwrap();
        assert!(res <= 1e-9, "residual {res}");
    }

    #[test]
    fn left_invariance_heisenberg_l2() {
        let vars = VarSet::time_first(2);
        let dx1 = VectorField::coordinate(3, 1, "dx1");
        let t = VectorField::new(vec![Expr::one(), Expr::zero(), Expr::var(1)], "T");
        let op = from_frame(&[dx1], Some(&t.neg()), None, vars).unwrap();
        let b = RatMatrix::from_i64_rows(&[vec![0, 0], vec![1, 0]]);
        let g = GroupLaw::inverse_matrix_exponential(b).unwrap();
        let res = op.left_invariance_residual(&g, &SampleSpec::default()).unwrap();
        assert!(res <= 1e-7, "residual {res}");
    }

    #[test]
    fn left_invariance_negative_control() {
        // the heat operator is NOT left invariant on the polarized
        // Heisenberg group; the residual must be visibly large
        let op = {
            // heat in (t, x1, x2) ordering to match the group's variables
            let vars = VarSet::time_first(2);
            let mut a = vec![vec![Expr::zero(); 3]; 3];
            a[1][1] = Expr::one();
            a[2][2] = Expr::one();
            let b = vec![Expr::int(-1), Expr::zero(), Expr::zero()];
            SecondOrderOperator::new(a, b, vars).unwrap()
        };
        let b = RatMatrix::from_i64_rows(&[vec![0, 0], vec![1, 0]]);
        let g = GroupLaw::inverse_matrix_exponential(b).unwrap();
        let res = op.left_invariance_residual(&g, &SampleSpec::default()).unwrap();
        assert!(res > 1e-3, "negative control too small: {res}");
    }

    #[test]
    fn adjoint_closed_forms() {
        // Laplacian is self-adjoint with no zero-order term
        let op = builtin::laplacian(2);
        let adj = op.formal_adjoint();
        assert!(adj.c_tilde.is_zero());
        for j in 0..2 {
            assert!(adj.b_tilde[j].is_zero());
        }
        // pure drift d/dx1 -> -d/dx1
        let vars = VarSet::spatial(1);
        let op = SecondOrderOperator::new(
            vec![vec![Expr::zero()]],
            vec![Expr::one()],
            vars,
        )
        .unwrap();
        let adj = op.formal_adjoint();
        assert_eq!(adj.b_tilde[0], Expr::int(-1));
        assert!(adj.c_tilde.is_zero());
        // drift <Bx, grad> -> -<Bx, grad> - trace B
        let b = RatMatrix::from_i64_rows(&[vec![2, 1], vec![0, 3]]);
        let op = builtin::pure_drift(&b);
        let adj = op.formal_adjoint();
        let spec = SampleSpec::default();
        assert!(equal_on_samples(&adj.c_tilde, &Expr::int(-5), 2, &spec));
        let expect0 = (Expr::int(2) * Expr::var(0) + Expr::var(1)).neg();
        assert!(equal_on_samples(&adj.b_tilde[0], &expect0, 2, &spec));
    }

    #[test]
    fn adjoint_duality_by_quadrature() {
        // int (Lu) phi = int u (L* phi) for phi vanishing to first order
        // at the box boundary
        let op = kolmogorov_n1();
        let adj = op.formal_adjoint();
        let vars = op.vars();
        let phi = parse("(1 - x1^2)^2 * (1 - x2^2)^2 * (1 - t^2)^2", vars).unwrap();
        let u = parse("x1*x2 + exp(t - x1)", vars).unwrap();
        let lu = op.apply(&u).unwrap();
        let lstar_phi = adj.apply(&phi);
        let bounds = [(-1.0, 1.0); 3];
        let lhs = crate::quad::tensor_integrate(&bounds, 24, |p| lu.eval(p) * phi.eval(p));
        let rhs = crate::quad::tensor_integrate(&bounds, 24, |p| u.eval(p) * lstar_phi.eval(p));
        assert!((lhs - rhs).abs() < 1e-8, "duality residual {}", (lhs - rhs).abs());
    }
}

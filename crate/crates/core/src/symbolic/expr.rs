//! Expression trees for the differential ring.
//!
//! The ring contains rational (or, for numeric-coefficient group families,
//! float) constants, variables, n-ary sums and products, nonnegative
//! integer powers, and exp/sin/cos of *affine* arguments. It is closed
//! under differentiation with respect to any variable, and evaluation is
//! total.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_rational::BigRational;
use num_traits::Zero;
#[allow(unused_imports)] // f64 math comes from the trait under no_std
use num_traits::Float;

use crate::scalar::Scalar;

/// Affine form c0 + sum_i c_i * x_i with scalar coefficients. The only
/// admissible argument shape for exp/sin/cos.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub constant: Scalar,
    /// Dense coefficients indexed by variable; trailing zeros trimmed.
    pub coeffs: Vec<Scalar>,
}

impl AffineForm {
    pub fn constant(c: Scalar) -> Self {
        AffineForm { constant: c, coeffs: Vec::new() }.trimmed()
    }

    pub fn zero() -> Self {
        AffineForm::constant(Scalar::zero())
    }

    pub fn var(index: usize) -> Self {
        let mut coeffs = vec![Scalar::zero(); index + 1];
        coeffs[index] = Scalar::one();
        AffineForm { constant: Scalar::zero(), coeffs }
    }

    pub fn term(index: usize, coeff: Scalar) -> Self {
        let mut coeffs = vec![Scalar::zero(); index + 1];
        coeffs[index] = coeff;
        AffineForm { constant: Scalar::zero(), coeffs }.trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last().map(Scalar::is_zero).unwrap_or(false) {
            self.coeffs.pop();
        }
        self
    }

    pub fn coeff(&self, index: usize) -> Scalar {
        self.coeffs.get(index).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn add(&self, other: &AffineForm) -> AffineForm {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| self.coeff(i) + other.coeff(i))
            .collect();
        AffineForm { constant: self.constant.clone() + other.constant.clone(), coeffs }
            .trimmed()
    }

    pub fn scale(&self, s: &Scalar) -> AffineForm {
        AffineForm {
            constant: self.constant.clone() * s.clone(),
            coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect(),
        }
        .trimmed()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.is_constant() && self.constant.is_zero()
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut acc = self.constant.to_f64();
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                acc += c.to_f64() * point[i];
            }
        }
        acc
    }

    pub fn eval_exact(&self, point: &[BigRational]) -> Option<BigRational> {
        let mut acc = self.constant.as_exact()?.clone();
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                acc += c.as_exact()? * &point[i];
            }
        }
        Some(acc)
    }

    /// Compose with affine substitutions per variable.
    pub fn compose(&self, map: &[AffineForm]) -> AffineForm {
        let mut acc = AffineForm::constant(self.constant.clone());
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            acc = acc.add(&map[i].scale(c));
        }
        acc
    }

    pub fn max_var(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    fn cmp_structural(&self, other: &AffineForm) -> Ordering {
        match self.constant.total_cmp(&other.constant) {
            Ordering::Equal => {}
            ord => return ord,
        }
        match self.coeffs.len().cmp(&other.coeffs.len()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            match a.total_cmp(b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

/// A symbolic scalar function of finitely many variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Scalar),
    Var(usize),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    Pow(Box<Expr>, u32),
    Exp(AffineForm),
    Sin(AffineForm),
    Cos(AffineForm),
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        fn rank(e: &Expr) -> u8 {
            match e {
                Expr::Const(_) => 0,
                Expr::Var(_) => 1,
                Expr::Sum(_) => 2,
                Expr::Prod(_) => 3,
                Expr::Pow(_, _) => 4,
                Expr::Exp(_) => 5,
                Expr::Sin(_) => 6,
                Expr::Cos(_) => 7,
            }
        }
        match (self, other) {
            (Expr::Const(a), Expr::Const(b)) => a.total_cmp(b),
            (Expr::Var(a), Expr::Var(b)) => a.cmp(b),
            (Expr::Sum(a), Expr::Sum(b)) | (Expr::Prod(a), Expr::Prod(b)) => {
                match a.len().cmp(&b.len()) {
                    Ordering::Equal => a
                        .iter()
                        .zip(b)
                        .map(|(x, y)| x.cmp(y))
                        .find(|o| *o != Ordering::Equal)
                        .unwrap_or(Ordering::Equal),
                    ord => ord,
                }
            }
            (Expr::Pow(a, m), Expr::Pow(b, k)) => match a.cmp(b) {
                Ordering::Equal => m.cmp(k),
                ord => ord,
            },
            (Expr::Exp(a), Expr::Exp(b))
            | (Expr::Sin(a), Expr::Sin(b))
            | (Expr::Cos(a), Expr::Cos(b)) => a.cmp_structural(b),
            (a, b) => rank(a).cmp(&rank(b)),
        }
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(Scalar::zero())
    }

    pub fn one() -> Expr {
        Expr::Const(Scalar::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(Scalar::from_int(n))
    }

    pub fn ratio(p: i64, q: i64) -> Expr {
        Expr::Const(Scalar::from_ratio(p, q))
    }

    pub fn var(index: usize) -> Expr {
        Expr::Var(index)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    pub fn as_const(&self) -> Option<&Scalar> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    /// n-ary sum with constant folding and like-term collection: terms
    /// that agree up to a leading constant factor are merged, so e.g.
    /// exp(l) + exp(l) - 2*exp(l) collapses to the symbolic zero.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut constant = Scalar::zero();
        let mut collected: BTreeMap<Expr, Scalar> = BTreeMap::new();
        let mut stack: Vec<Expr> = terms;
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t {
                Expr::Sum(inner) => {
                    for e in inner.into_iter().rev() {
                        stack.push(e);
                    }
                }
                Expr::Const(c) => constant = constant + c,
                other => {
                    let (coeff, core) = split_leading_constant(other);
                    if core.is_one() {
                        constant = constant + coeff;
                    } else {
                        let entry = collected.entry(core).or_insert_with(Scalar::zero);
                        *entry = entry.clone() + coeff;
                    }
                }
            }
        }
        let mut out: Vec<Expr> = Vec::new();
        for (core, coeff) in collected {
            if coeff.is_zero() {
                continue;
            }
            if coeff.is_one() {
                out.push(core);
            } else {
                out.push(Expr::product(vec![Expr::Const(coeff), core]));
            }
        }
        if !constant.is_zero() {
            out.insert(0, Expr::Const(constant));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::Sum(out),
        }
    }

    /// n-ary product with constant folding, zero/one elimination and
    /// merging of exponential factors.
    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut constant = Scalar::one();
        let mut exp_arg: Option<AffineForm> = None;
        let mut out: Vec<Expr> = Vec::new();
        let mut stack: Vec<Expr> = factors;
        stack.reverse();
        while let Some(f) = stack.pop() {
            match f {
                Expr::Prod(inner) => {
                    for e in inner.into_iter().rev() {
                        stack.push(e);
                    }
                }
                Expr::Const(c) => {
                    if c.is_zero() {
                        return Expr::zero();
                    }
                    constant = constant * c;
                }
                Expr::Exp(l) => {
                    exp_arg = Some(match exp_arg {
                        Some(acc) => acc.add(&l),
                        None => l,
                    });
                }
                other => out.push(other),
            }
        }
        if let Some(l) = exp_arg {
            if !l.is_zero() {
                out.push(Expr::Exp(l));
            }
        }
        if out.is_empty() {
            return Expr::Const(constant);
        }
        if !constant.is_one() {
            out.insert(0, Expr::Const(constant));
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => Expr::Prod(out),
        }
    }

    /// Integer power with folding; exp(l)^k folds to exp(k*l).
    pub fn pow(base: Expr, k: u32) -> Expr {
        match k {
            0 => Expr::one(),
            1 => base,
            _ => match base {
                Expr::Const(c) => {
                    let mut acc = Scalar::one();
                    for _ in 0..k {
                        acc = acc * c.clone();
                    }
                    Expr::Const(acc)
                }
                Expr::Pow(inner, m) => Expr::pow(*inner, m * k),
                Expr::Exp(l) => Expr::Exp(l.scale(&Scalar::from_int(k as i64))),
                other => Expr::Pow(Box::new(other), k),
            },
        }
    }

    /// exp of an affine form. A constant argument folds: exp(0) stays the
    /// exact 1, a nonzero constant becomes a float constant (its value is
    /// irrational anyway, and folding keeps translated group products
    /// recognizable as affine maps).
    pub fn exp(arg: AffineForm) -> Expr {
        if arg.is_constant() {
            if arg.constant.is_zero() {
                Expr::one()
            } else {
                Expr::Const(Scalar::Float(arg.constant.to_f64().exp()))
            }
        } else {
            Expr::Exp(arg)
        }
    }

    pub fn sin(arg: AffineForm) -> Expr {
        if arg.is_constant() {
            if arg.constant.is_zero() {
                Expr::zero()
            } else {
                Expr::Const(Scalar::Float(arg.constant.to_f64().sin()))
            }
        } else {
            Expr::Sin(arg)
        }
    }

    pub fn cos(arg: AffineForm) -> Expr {
        if arg.is_constant() {
            if arg.constant.is_zero() {
                Expr::one()
            } else {
                Expr::Const(Scalar::Float(arg.constant.to_f64().cos()))
            }
        } else {
            Expr::Cos(arg)
        }
    }

    pub fn neg(self) -> Expr {
        Expr::product(vec![Expr::int(-1), self])
    }

    pub fn from_affine(l: &AffineForm) -> Expr {
        let mut terms = Vec::new();
        if !l.constant.is_zero() {
            terms.push(Expr::Const(l.constant.clone()));
        }
        for (i, c) in l.coeffs.iter().enumerate() {
            if !c.is_zero() {
                terms.push(Expr::product(vec![Expr::Const(c.clone()), Expr::Var(i)]));
            }
        }
        Expr::sum(terms)
    }

    /// View this expression as an affine form, if it is one.
    pub fn as_affine(&self) -> Option<AffineForm> {
        match self {
            Expr::Const(c) => Some(AffineForm::constant(c.clone())),
            Expr::Var(i) => Some(AffineForm::var(*i)),
            Expr::Sum(terms) => {
                let mut acc = AffineForm::zero();
                for t in terms {
                    acc = acc.add(&t.as_affine()?);
                }
                Some(acc)
            }
            Expr::Prod(factors) => {
                let mut coeff = Scalar::one();
                let mut linear: Option<AffineForm> = None;
                for f in factors {
                    if let Some(c) = f.as_const() {
                        coeff = coeff * c.clone();
                    } else {
                        let l = f.as_affine()?;
                        if l.is_constant() {
                            coeff = coeff * l.constant;
                        } else if linear.is_none() {
                            linear = Some(l);
                        } else {
                            return None; // product of two genuinely linear parts
                        }
                    }
                }
                Some(match linear {
                    Some(l) => l.scale(&coeff),
                    None => AffineForm::constant(coeff),
                })
            }
            Expr::Pow(base, k) => match k {
                0 => Some(AffineForm::constant(Scalar::one())),
                1 => base.as_affine(),
                _ => {
                    let l = base.as_affine()?;
                    if l.is_constant() {
                        let mut acc = Scalar::one();
                        for _ in 0..*k {
                            acc = acc * l.constant.clone();
                        }
                        Some(AffineForm::constant(acc))
                    } else {
                        None
                    }
                }
            },
            Expr::Exp(_) | Expr::Sin(_) | Expr::Cos(_) => None,
        }
    }

    /// Largest variable index appearing in the expression.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Sum(v) | Expr::Prod(v) => v.iter().filter_map(Expr::max_var).max(),
            Expr::Pow(b, _) => b.max_var(),
            Expr::Exp(l) | Expr::Sin(l) | Expr::Cos(l) => l.max_var(),
        }
    }

    /// IEEE double evaluation; total on the ring.
    pub fn eval(&self, point: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => c.to_f64(),
            Expr::Var(i) => point[*i],
            Expr::Sum(terms) => terms.iter().map(|t| t.eval(point)).sum(),
            Expr::Prod(factors) => factors.iter().map(|f| f.eval(point)).product(),
            Expr::Pow(base, k) => base.eval(point).powi(*k as i32),
            Expr::Exp(l) => l.eval(point).exp(),
            Expr::Sin(l) => l.eval(point).sin(),
            Expr::Cos(l) => l.eval(point).cos(),
        }
    }

    /// Exact rational evaluation. Succeeds when all constants are exact
    /// and every exp/sin/cos argument evaluates to zero.
    pub fn eval_exact(&self, point: &[BigRational]) -> Option<BigRational> {
        match self {
            Expr::Const(c) => c.as_exact().cloned(),
            Expr::Var(i) => Some(point[*i].clone()),
            Expr::Sum(terms) => {
                let mut acc = BigRational::zero();
                for t in terms {
                    acc += t.eval_exact(point)?;
                }
                Some(acc)
            }
            Expr::Prod(factors) => {
                let mut acc = BigRational::from_integer(1.into());
                for f in factors {
                    acc *= f.eval_exact(point)?;
                }
                Some(acc)
            }
            Expr::Pow(base, k) => {
                let b = base.eval_exact(point)?;
                let mut acc = BigRational::from_integer(1.into());
                for _ in 0..*k {
                    acc *= &b;
                }
                Some(acc)
            }
            Expr::Exp(l) => {
                let v = l.eval_exact(point)?;
                if v.is_zero() {
                    Some(BigRational::from_integer(1.into()))
                } else {
                    None
                }
            }
            Expr::Sin(l) => {
                let v = l.eval_exact(point)?;
                if v.is_zero() {
                    Some(BigRational::zero())
                } else {
                    None
                }
            }
            Expr::Cos(l) => {
                let v = l.eval_exact(point)?;
                if v.is_zero() {
                    Some(BigRational::from_integer(1.into()))
                } else {
                    None
                }
            }
        }
    }

    /// Exact partial derivative; the ring is closed under this.
    pub fn differentiate(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(i) => {
                if *i == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Sum(terms) => {
                Expr::sum(terms.iter().map(|t| t.differentiate(var)).collect())
            }
            Expr::Prod(factors) => {
                let mut terms = Vec::with_capacity(factors.len());
                for (i, f) in factors.iter().enumerate() {
                    let df = f.differentiate(var);
                    if df.is_zero() {
                        continue;
                    }
                    let mut parts: Vec<Expr> = Vec::with_capacity(factors.len());
                    for (j, g) in factors.iter().enumerate() {
                        if i == j {
                            parts.push(df.clone());
                        } else {
                            parts.push(g.clone());
                        }
                    }
                    terms.push(Expr::product(parts));
                }
                Expr::sum(terms)
            }
            Expr::Pow(base, k) => {
                let db = base.differentiate(var);
                if db.is_zero() {
                    return Expr::zero();
                }
                Expr::product(vec![
                    Expr::int(*k as i64),
                    Expr::pow((**base).clone(), k - 1),
                    db,
                ])
            }
            Expr::Exp(l) => {
                let c = l.coeff(var);
                if c.is_zero() {
                    Expr::zero()
                } else {
                    Expr::product(vec![Expr::Const(c), Expr::Exp(l.clone())])
                }
            }
            Expr::Sin(l) => {
                let c = l.coeff(var);
                if c.is_zero() {
                    Expr::zero()
                } else {
                    Expr::product(vec![Expr::Const(c), Expr::Cos(l.clone())])
                }
            }
            Expr::Cos(l) => {
                let c = l.coeff(var);
                if c.is_zero() {
                    Expr::zero()
                } else {
                    Expr::product(vec![Expr::Const(-c), Expr::Sin(l.clone())])
                }
            }
        }
    }

    /// Substitute `map[i]` for variable `i`. Fails if a substitution would
    /// put a non-affine argument under exp/sin/cos (the result would leave
    /// the ring).
    pub fn substitute(&self, map: &[Expr]) -> Result<Expr, NonAffineSubstitution> {
        match self {
            Expr::Const(c) => Ok(Expr::Const(c.clone())),
            Expr::Var(i) => Ok(map
                .get(*i)
                .cloned()
                .unwrap_or_else(|| Expr::Var(*i))),
            Expr::Sum(terms) => Ok(Expr::sum(
                terms
                    .iter()
                    .map(|t| t.substitute(map))
                    .collect::<Result<Vec<_>, _>>()?,
            )),
            Expr::Prod(factors) => Ok(Expr::product(
                factors
                    .iter()
                    .map(|f| f.substitute(map))
                    .collect::<Result<Vec<_>, _>>()?,
            )),
            Expr::Pow(base, k) => Ok(Expr::pow(base.substitute(map)?, *k)),
            Expr::Exp(l) => Ok(Expr::exp(compose_affine(l, map)?)),
            Expr::Sin(l) => Ok(Expr::sin(compose_affine(l, map)?)),
            Expr::Cos(l) => Ok(Expr::cos(compose_affine(l, map)?)),
        }
    }
}

/// Error: a substitution target was not affine where affinity is required.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonAffineSubstitution;

impl core::fmt::Display for NonAffineSubstitution {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "substitution produces a non-affine argument under exp/sin/cos")
    }
}

impl core::error::Error for NonAffineSubstitution {}

fn compose_affine(l: &AffineForm, map: &[Expr]) -> Result<AffineForm, NonAffineSubstitution> {
    let mut acc = AffineForm::constant(l.constant.clone());
    for (i, c) in l.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let target = match map.get(i) {
            Some(e) => e.as_affine().ok_or(NonAffineSubstitution)?,
            None => AffineForm::var(i),
        };
        acc = acc.add(&target.scale(c));
    }
    Ok(acc)
}

fn split_leading_constant(e: Expr) -> (Scalar, Expr) {
    match e {
        Expr::Const(c) => (c, Expr::one()),
        Expr::Prod(factors) => {
            let mut coeff = Scalar::one();
            let mut rest = Vec::with_capacity(factors.len());
            for f in factors {
                match f {
                    Expr::Const(c) => coeff = coeff * c,
                    other => rest.push(other),
                }
            }
            (coeff, Expr::product(rest))
        }
        other => (Scalar::one(), other),
    }
}

impl core::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs])
    }
}

impl core::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs.neg()])
    }
}

impl core::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product(vec![self, rhs])
    }
}

impl core::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

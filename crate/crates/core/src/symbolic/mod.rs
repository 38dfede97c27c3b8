//! A minimal differential ring of symbolic expressions: parsing,
//! evaluation, differentiation and sampled equality testing. This is the
//! substrate for every coefficient function and test function in the
//! toolkit.
//!
//! There is deliberately no canonical simplification beyond constant
//! folding, zero/one elimination and like-term collection in sums;
//! equality of expressions is decided numerically on fixed-seed samples.

mod compile;
mod expr;
mod parser;
mod print;

pub use compile::CompiledExpr;
pub use expr::{AffineForm, Expr, NonAffineSubstitution};
pub use parser::{parse, ParseError, ParseErrorKind};
pub use print::{expr_to_string, Printed};

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;


use crate::sample::SampleSpec;
#[allow(unused_imports)] // f64 math comes from the trait under no_std
use num_traits::Float;

/// Ordered set of variable names with roles. Indices are meaningful for
/// the lifetime of a session: expressions store variable indices, not
/// names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSet {
    names: Vec<String>,
    time: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarSetError {
    DuplicateName(String),
    UnknownTimeVariable(String),
    InvalidName(String),
}

impl fmt::Display for VarSetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarSetError::DuplicateName(n) => write!(f, "duplicate variable name '{}'", n),
            VarSetError::UnknownTimeVariable(n) => {
                write!(f, "time variable '{}' is not among the declared names", n)
            }
            VarSetError::InvalidName(n) => write!(f, "invalid variable name '{}'", n),
        }
    }
}

impl core::error::Error for VarSetError {}

impl VarSet {
    /// Build a variable set from ordered names; `time` marks one of them
    /// as the time coordinate.
    pub fn new(names: &[&str], time: Option<&str>) -> Result<VarSet, VarSetError> {
        let mut seen: Vec<&str> = Vec::with_capacity(names.len());
        for &n in names {
            if !is_identifier(n) {
                return Err(VarSetError::InvalidName(n.to_string()));
            }
            if seen.contains(&n) {
                return Err(VarSetError::DuplicateName(n.to_string()));
            }
            seen.push(n);
        }
        let time = match time {
            Some(t) => Some(
                names
                    .iter()
                    .position(|&n| n == t)
                    .ok_or_else(|| VarSetError::UnknownTimeVariable(t.to_string()))?,
            ),
            None => None,
        };
        Ok(VarSet { names: names.iter().map(|s| s.to_string()).collect(), time })
    }

    /// Spatial-only set x1..xn.
    pub fn spatial(n: usize) -> VarSet {
        let names: Vec<String> = (1..=n).map(|i| alloc::format!("x{}", i)).collect();
        VarSet { names, time: None }
    }

    /// t, x1..xn with t first (matrix-exponential family convention).
    pub fn time_first(n: usize) -> VarSet {
        let mut names: Vec<String> = Vec::with_capacity(n + 1);
        names.push("t".to_string());
        names.extend((1..=n).map(|i| alloc::format!("x{}", i)));
        VarSet { names, time: Some(0) }
    }

    /// x1..xn, t with t last (Kolmogorov-class convention).
    pub fn time_last(n: usize) -> VarSet {
        let mut names: Vec<String> = (1..=n).map(|i| alloc::format!("x{}", i)).collect();
        names.push("t".to_string());
        let time = Some(names.len() - 1);
        VarSet { names, time }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn time_index(&self) -> Option<usize> {
        self.time
    }

    /// The 2n-variable set used for group products: the right-factor
    /// block gets primed (suffixed) names.
    pub fn doubled(&self) -> VarSet {
        let mut names = self.names.clone();
        for n in &self.names {
            let mut primed = alloc::format!("{}_r", n);
            while names.contains(&primed) {
                primed.push('_');
            }
            names.push(primed);
        }
        VarSet { names, time: self.time }
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Absolute/relative tolerance pair for sampled comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { atol: 1e-10, rtol: 1e-9 }
    }
}

/// Probabilistic identity test: true iff |e1 - e2| <= atol + rtol*|e1| at
/// every sampled point.
pub fn equal_on_samples(e1: &Expr, e2: &Expr, dim: usize, spec: &SampleSpec) -> bool {
    equal_on_samples_tol(e1, e2, dim, spec, Tolerance::default())
}

pub fn equal_on_samples_tol(
    e1: &Expr,
    e2: &Expr,
    dim: usize,
    spec: &SampleSpec,
    tol: Tolerance,
) -> bool {
    debug_assert!(e1.max_var().map(|v| v < dim).unwrap_or(true));
    debug_assert!(e2.max_var().map(|v| v < dim).unwrap_or(true));
    for p in spec.points(dim) {
        let a = e1.eval(&p);
        let b = e2.eval(&p);
        if (a - b).abs() > tol.atol + tol.rtol * a.abs() {
            return false;
        }
    }
    true
}

/// Max of |e1 - e2| over the sample cloud.
pub fn max_difference_on_samples(e1: &Expr, e2: &Expr, dim: usize, spec: &SampleSpec) -> f64 {
    spec.points(dim)
        .iter()
        .map(|p| (e1.eval(p) - e2.eval(p)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::SampleSpec;

    fn vars_xt() -> VarSet {
        VarSet::new(&["x1", "x2", "t"], Some("t")).unwrap()
    }

    #[test]
    fn parse_two_summands() {
        let vs = vars_xt();
        let e = parse("x1^2 + exp(2*t)", &vs).unwrap();
        match &e {
            Expr::Sum(terms) => assert_eq!(terms.len(), 2),
            other => panic!("expected sum, got {:?}", other),
        }
        assert!((e.eval(&[3.0, 0.0, 0.0]) - 9.0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parse_rejects_non_affine_call() {
        let vs = vars_xt();
        let err = parse("exp(x1*x2)", &vs).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::NonAffineArgument("exp")));
    }

    #[test]
    fn parse_counterexample_function() {
        // the heat counterexample in exp form, n = 2 spatial variables
        let vs = vars_xt();
        let e = parse("exp(x1 + x2 + 2*t)", &vs).unwrap();
        assert!((e.eval(&[1.0, 1.0, 0.5]) - 3.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn parse_reports_positions() {
        let vs = vars_xt();
        let err = parse("x1 + ?", &vs).unwrap_err();
        assert_eq!(err.pos, 5);
        let err = parse("x1 + y", &vs).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnknownVariable(ref n) if n == "y"));
        assert_eq!(err.pos, 5);
    }

    #[test]
    fn parse_rejects_bad_powers() {
        let vs = vars_xt();
        assert!(matches!(
            parse("x1^-1", &vs).unwrap_err().kind,
            ParseErrorKind::NegativePower
        ));
        assert!(matches!(
            parse("x1^(1/2)", &vs).unwrap_err().kind,
            ParseErrorKind::FractionalPower
        ));
        // 4/2 folds to the integer 2
        assert!(parse("x1^(4/2)", &vs).is_ok());
    }

    #[test]
    fn parse_rejects_non_constant_divisor() {
        let vs = vars_xt();
        assert!(matches!(
            parse("x1 / x2", &vs).unwrap_err().kind,
            ParseErrorKind::NonConstantDivisor
        ));
        assert!(matches!(
            parse("x1 / 0", &vs).unwrap_err().kind,
            ParseErrorKind::DivisionByZero
        ));
        let e = parse("x1 / 2", &vs).unwrap();
        assert!((e.eval(&[3.0, 0.0, 0.0]) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn decimal_literals_are_exact_rationals() {
        let vs = vars_xt();
        let e = parse("0.125 * x1", &vs).unwrap();
        match &e {
            Expr::Prod(fs) => {
                let c = fs[0].as_const().unwrap();
                assert_eq!(c, &crate::scalar::Scalar::from_ratio(1, 8));
            }
            other => panic!("unexpected shape {:?}", other),
        }
    }

    #[test]
    fn evaluate_identity_cases() {
        let vs = vars_xt();
        let e = parse("exp(t)", &vs).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0, 0.0]), 1.0);
        let e = parse("x1^2 + x2^2", &vs).unwrap();
        assert_eq!(e.eval(&[3.0, 4.0, 0.0]), 25.0);
    }

    #[test]
    fn differentiate_basics() {
        let vs = vars_xt();
        let e = parse("x1^2", &vs).unwrap();
        let d = e.differentiate(0);
        assert!(equal_on_samples(
            &d,
            &parse("2*x1", &vs).unwrap(),
            3,
            &SampleSpec::default()
        ));
        // d/dt exp(3*t) = 3 exp(3*t)
        let e = parse("exp(3*t)", &vs).unwrap();
        let d = e.differentiate(2);
        assert!(equal_on_samples(
            &d,
            &parse("3*exp(3*t)", &vs).unwrap(),
            3,
            &SampleSpec::default()
        ));
    }

    #[test]
    fn differentiate_product_frozen_values() {
        // d/dt (t*exp(t)) = exp(t) + t*exp(t); frozen oracle values at
        // t = 0 and t = 1 computed from the closed form.
        let vs = VarSet::new(&["t"], Some("t")).unwrap();
        let e = parse("t*exp(t)", &vs).unwrap();
        let d = e.differentiate(0);
        assert!((d.eval(&[0.0]) - 1.0).abs() < 1e-14);
        let e1 = core::f64::consts::E;
        assert!((d.eval(&[1.0]) - 2.0 * e1).abs() < 1e-13);
        // central finite difference agreement at O(h^2)
        let h = 1e-5;
        for &t in &[0.0f64, 1.0] {
            let fd = (e.eval(&[t + h]) - e.eval(&[t - h])) / (2.0 * h);
            assert!((d.eval(&[t]) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn equality_trig_identity() {
        let vs = vars_xt();
        let e = parse("sin(x1)^2 + cos(x1)^2", &vs).unwrap();
        assert!(equal_on_samples(&e, &Expr::one(), 3, &SampleSpec::default()));
        let lhs = parse("x1", &vs).unwrap();
        let rhs = parse("x1 + 1/1000", &vs).unwrap();
        assert!(!equal_on_samples(&lhs, &rhs, 3, &SampleSpec::default()));
    }

    #[test]
    fn like_terms_collapse_to_symbolic_zero() {
        let vs = vars_xt();
        let a = parse("exp(x1 + 2*t)", &vs).unwrap();
        let b = parse("exp(x1 + 2*t)", &vs).unwrap();
        let c = parse("2*exp(x1 + 2*t)", &vs).unwrap();
        let z = a + b - c;
        assert!(z.is_zero(), "expected symbolic zero, got {:?}", z);
    }

    #[test]
    fn substitute_affine_composition() {
        let vs = vars_xt();
        let e = parse("exp(x1 + t)", &vs).unwrap();
        // x1 -> x1 + 1, t -> 2*t
        let map = [
            parse("x1 + 1", &vs).unwrap(),
            Expr::var(1),
            parse("2*t", &vs).unwrap(),
        ];
        let s = e.substitute(&map).unwrap();
        let expect = parse("exp(x1 + 2*t + 1)", &vs).unwrap();
        assert!(equal_on_samples(&s, &expect, 3, &SampleSpec::default()));
        // substituting a product into the exponential leaves the ring
        let bad = [parse("x1*x2", &vs).unwrap(), Expr::var(1), Expr::var(2)];
        assert!(e.substitute(&bad).is_err());
    }

    #[test]
    fn print_parse_round_trip_samples() {
        let vs = vars_xt();
        for text in [
            "x1^2 + exp(2*t)",
            "1/2*x1 - 3*x2*cos(t - x1)",
            "-x1*(x2 + 1)^3",
            "exp(-1*t)",
            "sin(x1 + 1/3) - 0.25",
        ] {
            let e = parse(text, &vs).unwrap();
            let printed = expr_to_string(&e, &vs);
            let back = parse(&printed, &vs)
                .unwrap_or_else(|err| panic!("reparse of '{}' failed: {}", printed, err));
            assert!(
                equal_on_samples(&e, &back, 3, &SampleSpec::default()),
                "round trip mismatch: '{}' -> '{}'",
                text,
                printed
            );
        }
    }

    #[test]
    fn density_prints_in_reference_form() {
        let vs = VarSet::new(&["t", "x1", "x2"], Some("t")).unwrap();
        let e = Expr::exp(AffineForm::term(0, crate::scalar::Scalar::from_int(-1)));
        assert_eq!(expr_to_string(&e, &vs), "exp(-1*t)");
    }

    #[test]
    fn varset_rejects_duplicates() {
        assert!(matches!(
            VarSet::new(&["x", "x"], None),
            Err(VarSetError::DuplicateName(_))
        ));
        assert!(matches!(
            VarSet::new(&["x"], Some("t")),
            Err(VarSetError::UnknownTimeVariable(_))
        ));
    }

    #[test]
    fn doubled_names_stay_unique() {
        let vs = VarSet::new(&["t", "t_r"], None).unwrap();
        let d = vs.doubled();
        let names: Vec<&str> = d.names().collect();
        assert_eq!(names.len(), 4);
        let mut dedup = names.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 4);
    }

    #[test]
    fn exact_evaluation_for_rational_points() {
        use num_bigint::BigInt;
        use num_rational::BigRational;
        let vs = vars_xt();
        let e = parse("x1^2/4 + exp(t - t)", &vs).unwrap();
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let point = [half.clone(), BigRational::from_integer(0.into()), half];
        let v = e.eval_exact(&point).unwrap();
        assert_eq!(v, BigRational::new(BigInt::from(17), BigInt::from(16)));
        // nonzero exponential argument has no exact value
        let e = parse("exp(t)", &vs).unwrap();
        assert!(e.eval_exact(&point).is_none());
    }
}

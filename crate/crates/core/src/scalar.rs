//! Exact-or-float scalar constants.
//!
//! Coefficients throughout the toolkit are exact rationals; floats enter
//! only for group families whose matrix exponential has irrational
//! eigenvalues, and at evaluation time. `Scalar` keeps the two worlds in
//! one type: arithmetic stays exact as long as both operands are exact.

use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A constant in the expression ring: exact rational or IEEE double.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Scalar::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Float(f) => *f == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_one(),
            Scalar::Float(f) => *f == 1.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    /// The exact rational value, if this scalar is exact.
    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => rational_to_f64(r),
            Scalar::Float(f) => *f,
        }
    }

    /// Multiplicative inverse. `None` for zero.
    pub fn recip(&self) -> Option<Scalar> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Scalar::Exact(r) => Scalar::Exact(r.recip()),
            Scalar::Float(f) => Scalar::Float(1.0 / f),
        })
    }

    /// If the scalar is an exact nonnegative integer that fits in u32.
    pub fn as_small_uint(&self) -> Option<u32> {
        match self {
            Scalar::Exact(r) if r.is_integer() && !r.is_negative() => r.numer().to_u32(),
            _ => None,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_negative(),
            Scalar::Float(f) => *f < 0.0,
        }
    }

    /// Total order used for deterministic term collection; exact values
    /// sort before floats of equal magnitude only via their bit patterns,
    /// which is fine: the order just has to be stable.
    pub fn total_cmp(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            (Scalar::Float(a), Scalar::Float(b)) => a.total_cmp(b),
            (Scalar::Exact(_), Scalar::Float(_)) => Ordering::Less,
            (Scalar::Float(_), Scalar::Exact(_)) => Ordering::Greater,
        }
    }
}

/// Correctly-enough rounded conversion; exact for anything at desk scale.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a + b),
            (a, b) => Scalar::Float(a.to_f64() + b.to_f64()),
        }
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        self + (-rhs)
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a * b),
            (a, b) => Scalar::Float(a.to_f64() * b.to_f64()),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Float(f) => Scalar::Float(-f),
        }
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_int(n)
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar::Exact(r)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Float(x) => write!(f, "{}", format_float(*x)),
        }
    }
}

/// Format a float so that it re-parses under the expression grammar
/// (which has no scientific notation) to the same double.
pub fn format_float(x: f64) -> String {
    let s = x.to_string();
    if s.contains('e') || s.contains('E') || s.contains("inf") || s.contains("NaN") {
        // Fall back to the exact dyadic rational form.
        let r = BigRational::from_float(x);
        match r {
            Some(r) => {
                if r.is_integer() {
                    r.numer().to_string()
                } else {
                    let mut out = r.numer().to_string();
                    out.push('/');
                    out.push_str(&r.denom().to_string());
                    out
                }
            }
            None => "0".to_string(),
        }
    } else {
        s
    }
}

/// Complex number with exact rational parts; used when assembling the
/// symbolic matrix exponential from exact eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalComplex {
    pub re: BigRational,
    pub im: BigRational,
}

impl RationalComplex {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        RationalComplex { re, im }
    }

    pub fn one() -> Self {
        RationalComplex::new(BigRational::one(), BigRational::zero())
    }

    pub fn mul(&self, other: &RationalComplex) -> RationalComplex {
        RationalComplex {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_arithmetic_stays_exact() {
        let a = Scalar::from_ratio(1, 3);
        let b = Scalar::from_ratio(1, 6);
        let s = a + b;
        assert_eq!(s, Scalar::from_ratio(1, 2));
        assert!(s.is_exact());
    }

    #[test]
    fn float_contaminates() {
        let a = Scalar::from_ratio(1, 3);
        let b = Scalar::Float(0.5);
        assert!(!(a * b).is_exact());
    }

    #[test]
    fn display_rational_and_float() {
        assert_eq!(Scalar::from_ratio(-3, 4).to_string(), "-3/4");
        assert_eq!(Scalar::from_int(7).to_string(), "7");
        assert_eq!(Scalar::Float(1.5).to_string(), "1.5");
    }

    #[test]
    fn tiny_float_formats_without_exponent() {
        let s = format_float(1e-30);
        assert!(!s.contains('e'));
    }

    #[test]
    fn small_uint_extraction() {
        assert_eq!(Scalar::from_int(4).as_small_uint(), Some(4));
        assert_eq!(Scalar::from_ratio(1, 2).as_small_uint(), None);
        assert_eq!(Scalar::from_int(-1).as_small_uint(), None);
    }
}

//! Infix printing. Output re-parses under the expression grammar to a
//! pointwise-identical expression (print/parse round trip).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::scalar::Scalar;

use super::expr::{AffineForm, Expr};
use super::VarSet;

/// An expression paired with its variable set, for display.
pub struct Printed<'a> {
    pub expr: &'a Expr,
    pub vars: &'a VarSet,
}

impl fmt::Display for Printed<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.vars, Prec::Sum)
    }
}

#[derive(PartialEq, PartialOrd, Clone, Copy)]
enum Prec {
    Sum = 0,
    Prod = 1,
    Unary = 2,
    Power = 3,
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, vars: &VarSet, ctx: Prec) -> fmt::Result {
    match e {
        Expr::Const(c) => write_scalar(f, c, ctx),
        Expr::Var(i) => write!(f, "{}", vars.name(*i)),
        Expr::Sum(terms) => {
            let parens = ctx > Prec::Sum;
            if parens {
                write!(f, "(")?;
            }
            for (k, t) in terms.iter().enumerate() {
                if k == 0 {
                    write_expr(f, t, vars, Prec::Sum)?;
                } else if let Some(pos) = negated(t) {
                    write!(f, " - ")?;
                    write_expr(f, &pos, vars, Prec::Prod)?;
                } else {
                    write!(f, " + ")?;
                    write_expr(f, t, vars, Prec::Prod)?;
                }
            }
            if parens {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::Prod(factors) => {
            let parens = ctx > Prec::Prod;
            if parens {
                write!(f, "(")?;
            }
            for (k, fac) in factors.iter().enumerate() {
                if k > 0 {
                    write!(f, "*")?;
                }
                write_expr(f, fac, vars, Prec::Unary)?;
            }
            if parens {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::Pow(base, k) => {
            write_expr(f, base, vars, Prec::Power)?;
            write!(f, "^{}", k)
        }
        Expr::Exp(l) => {
            write!(f, "exp(")?;
            write_affine(f, l, vars)?;
            write!(f, ")")
        }
        Expr::Sin(l) => {
            write!(f, "sin(")?;
            write_affine(f, l, vars)?;
            write!(f, ")")
        }
        Expr::Cos(l) => {
            write!(f, "cos(")?;
            write_affine(f, l, vars)?;
            write!(f, ")")
        }
    }
}

fn write_scalar(f: &mut fmt::Formatter<'_>, c: &Scalar, ctx: Prec) -> fmt::Result {
    let s = alloc::format!("{}", c);
    let needs_parens = (s.contains('/') && ctx >= Prec::Unary)
        || (s.starts_with('-') && ctx >= Prec::Prod);
    if needs_parens {
        write!(f, "({})", s)
    } else {
        write!(f, "{}", s)
    }
}

/// If the term has a negative leading constant, return its negation.
fn negated(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Const(c) if c.is_negative() => Some(Expr::Const(-c.clone())),
        Expr::Prod(factors) => match factors.first() {
            Some(Expr::Const(c)) if c.is_negative() => {
                let mut out: Vec<Expr> = Vec::with_capacity(factors.len());
                out.push(Expr::Const(-c.clone()));
                out.extend(factors[1..].iter().cloned());
                Some(Expr::product(out))
            }
            _ => None,
        },
        _ => None,
    }
}

fn write_affine(f: &mut fmt::Formatter<'_>, l: &AffineForm, vars: &VarSet) -> fmt::Result {
    let mut first = true;
    for (i, c) in l.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        if first {
            if c.is_one() {
                write!(f, "{}", vars.name(i))?;
            } else {
                write!(f, "{}*{}", c, vars.name(i))?;
            }
            first = false;
        } else if c.is_negative() {
            let pos = -c.clone();
            if pos.is_one() {
                write!(f, " - {}", vars.name(i))?;
            } else {
                write!(f, " - {}*{}", pos, vars.name(i))?;
            }
        } else if c.is_one() {
            write!(f, " + {}", vars.name(i))?;
        } else {
            write!(f, " + {}*{}", c, vars.name(i))?;
        }
    }
    if !l.constant.is_zero() || first {
        if first {
            write!(f, "{}", l.constant)?;
        } else if l.constant.is_negative() {
            write!(f, " - {}", -l.constant.clone())?;
        } else {
            write!(f, " + {}", l.constant)?;
        }
    }
    Ok(())
}

/// Render to a `String` (convenience over [`Printed`]).
pub fn expr_to_string(e: &Expr, vars: &VarSet) -> String {
    alloc::format!("{}", Printed { expr: e, vars })
}

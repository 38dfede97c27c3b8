//! Recursive-descent parser for the expression grammar:
//! infix `+ - * / ^`, unary minus, parentheses, calls `exp( ) sin( ) cos( )`,
//! rational literals `p/q` (via constant division), decimal literals
//! converted to exact rationals, identifiers `[a-zA-Z][a-zA-Z0-9_]*`.
//! `/` is only allowed with a constant divisor; exp/sin/cos arguments must
//! be affine; powers must be nonnegative integers.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::scalar::Scalar;

use super::expr::{AffineForm, Expr};
use super::VarSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    ExpectedToken(&'static str),
    UnknownVariable(String),
    NonAffineArgument(&'static str),
    NegativePower,
    FractionalPower,
    NonConstantDivisor,
    DivisionByZero,
}

/// Syntax or semantic error, with the byte position where it occurred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => {
                write!(f, "unexpected character '{}' at position {}", c, self.pos)
            }
            ParseErrorKind::UnexpectedEnd => {
                write!(f, "unexpected end of input at position {}", self.pos)
            }
            ParseErrorKind::ExpectedToken(t) => {
                write!(f, "expected {} at position {}", t, self.pos)
            }
            ParseErrorKind::UnknownVariable(name) => {
                write!(f, "unknown variable '{}' at position {}", name, self.pos)
            }
            ParseErrorKind::NonAffineArgument(func) => write!(
                f,
                "argument of {}() at position {} is not an affine form",
                func, self.pos
            ),
            ParseErrorKind::NegativePower => {
                write!(f, "negative power at position {}", self.pos)
            }
            ParseErrorKind::FractionalPower => {
                write!(f, "fractional power at position {}", self.pos)
            }
            ParseErrorKind::NonConstantDivisor => {
                write!(f, "divisor at position {} is not a constant", self.pos)
            }
            ParseErrorKind::DivisionByZero => {
                write!(f, "division by zero at position {}", self.pos)
            }
        }
    }
}

impl core::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0 }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let start = self.pos;
            let c = self.src[self.pos] as char;
            match c {
                ' ' | '\t' | '\r' | '\n' => {
                    self.pos += 1;
                }
                '+' => {
                    out.push((Tok::Plus, start));
                    self.pos += 1;
                }
                '-' => {
                    out.push((Tok::Minus, start));
                    self.pos += 1;
                }
                '*' => {
                    out.push((Tok::Star, start));
                    self.pos += 1;
                }
                '/' => {
                    out.push((Tok::Slash, start));
                    self.pos += 1;
                }
                '^' => {
                    out.push((Tok::Caret, start));
                    self.pos += 1;
                }
                '(' => {
                    out.push((Tok::LParen, start));
                    self.pos += 1;
                }
                ')' => {
                    out.push((Tok::RParen, start));
                    self.pos += 1;
                }
                '0'..='9' | '.' => {
                    let num = self.lex_number(start)?;
                    out.push((Tok::Number(num), start));
                }
                'a'..='z' | 'A'..='Z' => {
                    let mut end = self.pos + 1;
                    while end < self.src.len() {
                        let c = self.src[end] as char;
                        if c.is_ascii_alphanumeric() || c == '_' {
                            end += 1;
                        } else {
                            break;
                        }
                    }
                    let ident =
                        core::str::from_utf8(&self.src[self.pos..end]).unwrap().to_string();
                    self.pos = end;
                    out.push((Tok::Ident(ident), start));
                }
                other => {
                    return Err(ParseError {
                        kind: ParseErrorKind::UnexpectedChar(other),
                        pos: start,
                    })
                }
            }
        }
        Ok(out)
    }

    fn lex_number(&mut self, start: usize) -> Result<BigRational, ParseError> {
        let mut end = self.pos;
        while end < self.src.len() && (self.src[end] as char).is_ascii_digit() {
            end += 1;
        }
        let int_part = &self.src[self.pos..end];
        let mut frac_part: &[u8] = &[];
        if end < self.src.len() && self.src[end] == b'.' {
            let fs = end + 1;
            let mut fe = fs;
            while fe < self.src.len() && (self.src[fe] as char).is_ascii_digit() {
                fe += 1;
            }
            if fe == fs && int_part.is_empty() {
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar('.'),
                    pos: end,
                });
            }
            frac_part = &self.src[fs..fe];
            end = fe;
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(ParseError { kind: ParseErrorKind::UnexpectedChar('.'), pos: start });
        }
        self.pos = end;
        let mut numer = BigInt::zero();
        for &d in int_part.iter().chain(frac_part.iter()) {
            numer = numer * 10 + BigInt::from((d - b'0') as u32);
        }
        let mut denom = BigInt::from(1);
        for _ in 0..frac_part.len() {
            denom *= 10;
        }
        Ok(BigRational::new(numer, denom))
    }
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    idx: usize,
    vars: &'a VarSet,
    len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.idx).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.idx).map(|(_, p)| *p).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.idx).map(|(t, _)| t.clone());
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, label: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.idx += 1;
            Ok(())
        } else {
            Err(ParseError { kind: ParseErrorKind::ExpectedToken(label), pos: self.pos() })
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.parse_term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.idx += 1;
                    let rhs = self.parse_term()?;
                    acc = acc + rhs;
                }
                Some(Tok::Minus) => {
                    self.idx += 1;
                    let rhs = self.parse_term()?;
                    acc = acc - rhs;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.parse_factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.idx += 1;
                    let rhs = self.parse_factor()?;
                    acc = acc * rhs;
                }
                Some(Tok::Slash) => {
                    let op_pos = self.pos();
                    self.idx += 1;
                    let rhs = self.parse_factor()?;
                    let c = rhs
                        .as_affine()
                        .filter(AffineForm::is_constant)
                        .map(|l| l.constant)
                        .ok_or(ParseError {
                            kind: ParseErrorKind::NonConstantDivisor,
                            pos: op_pos,
                        })?;
                    let inv = c.recip().ok_or(ParseError {
                        kind: ParseErrorKind::DivisionByZero,
                        pos: op_pos,
                    })?;
                    acc = acc * Expr::Const(inv);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.idx += 1;
            let inner = self.parse_factor()?;
            return Ok(inner.neg());
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_atom()?;
        if self.peek() == Some(&Tok::Caret) {
            let op_pos = self.pos();
            self.idx += 1;
            let exponent = self.parse_factor()?;
            let c = exponent
                .as_affine()
                .filter(AffineForm::is_constant)
                .map(|l| l.constant)
                .ok_or(ParseError {
                    kind: ParseErrorKind::FractionalPower,
                    pos: op_pos,
                })?;
            let r = c.as_exact().ok_or(ParseError {
                kind: ParseErrorKind::FractionalPower,
                pos: op_pos,
            })?;
            if r.is_negative() {
                return Err(ParseError { kind: ParseErrorKind::NegativePower, pos: op_pos });
            }
            if !r.is_integer() {
                return Err(ParseError { kind: ParseErrorKind::FractionalPower, pos: op_pos });
            }
            let k = c.as_small_uint().ok_or(ParseError {
                kind: ParseErrorKind::FractionalPower,
                pos: op_pos,
            })?;
            return Ok(Expr::pow(base, k));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Number(r)) => Ok(Expr::Const(Scalar::Exact(r))),
            Some(Tok::LParen) => {
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                let is_call = self.peek() == Some(&Tok::LParen);
                if is_call {
                    let func: Option<&'static str> = match name.as_str() {
                        "exp" => Some("exp"),
                        "sin" => Some("sin"),
                        "cos" => Some("cos"),
                        _ => None,
                    };
                    if let Some(func) = func {
                        self.idx += 1; // consume '('
                        let arg_pos = self.pos();
                        let arg = self.parse_expr()?;
                        self.expect(Tok::RParen, "')'")?;
                        let l = arg.as_affine().ok_or(ParseError {
                            kind: ParseErrorKind::NonAffineArgument(func),
                            pos: arg_pos,
                        })?;
                        return Ok(match func {
                            "exp" => Expr::exp(l),
                            "sin" => Expr::sin(l),
                            _ => Expr::cos(l),
                        });
                    }
                }
                match self.vars.index_of(&name) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(ParseError {
                        kind: ParseErrorKind::UnknownVariable(name),
                        pos,
                    }),
                }
            }
            Some(_) => Err(ParseError {
                kind: ParseErrorKind::ExpectedToken("expression"),
                pos,
            }),
            None => Err(ParseError { kind: ParseErrorKind::UnexpectedEnd, pos }),
        }
    }
}

/// Parse `text` over the given variable set.
pub fn parse(text: &str, vars: &VarSet) -> Result<Expr, ParseError> {
    let tokens = Lexer::new(text).tokens()?;
    let mut parser = Parser { tokens, idx: 0, vars, len: text.len() };
    let expr = parser.parse_expr()?;
    if parser.idx != parser.tokens.len() {
        return Err(ParseError {
            kind: ParseErrorKind::ExpectedToken("end of input"),
            pos: parser.pos(),
        });
    }
    Ok(expr)
}

//! Flat stack-machine compilation of expressions for quadrature-grade
//! evaluation throughput. Constants are folded to doubles once; the
//! program is a postfix instruction list evaluated against a reusable
//! stack.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // f64 math comes from the trait under no_std
use num_traits::Float;

use super::expr::{AffineForm, Expr};

#[derive(Debug, Clone)]
enum Inst {
    Const(f64),
    Var(usize),
    /// pop n, push their sum
    AddN(usize),
    /// pop n, push their product
    MulN(usize),
    PowI(i32),
    /// push the affine form's value directly
    Affine { constant: f64, terms: Vec<(usize, f64)> },
    Exp,
    Sin,
    Cos,
}

/// A compiled expression; `eval` is allocation-free given a scratch stack.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    code: Vec<Inst>,
    stack_need: usize,
}

impl CompiledExpr {
    pub fn new(expr: &Expr) -> CompiledExpr {
        let mut code = Vec::new();
        emit(expr, &mut code);
        // conservative stack bound: one slot per instruction
        let stack_need = code.len().max(1);
        CompiledExpr { code, stack_need }
    }

    pub fn eval_with(&self, point: &[f64], stack: &mut Vec<f64>) -> f64 {
        stack.clear();
        if stack.capacity() < self.stack_need {
            stack.reserve(self.stack_need - stack.capacity());
        }
        for inst in &self.code {
            match inst {
                Inst::Const(c) => stack.push(*c),
                Inst::Var(i) => stack.push(point[*i]),
                Inst::AddN(n) => {
                    let at = stack.len() - n;
                    let mut acc = 0.0;
                    for v in stack.drain(at..) {
                        acc += v;
                    }
                    stack.push(acc);
                }
                Inst::MulN(n) => {
                    let at = stack.len() - n;
                    let mut acc = 1.0;
                    for v in stack.drain(at..) {
                        acc *= v;
                    }
                    stack.push(acc);
                }
                Inst::PowI(k) => {
                    let v = stack.last_mut().expect("stack underflow");
                    *v = v.powi(*k);
                }
                Inst::Affine { constant, terms } => {
                    let mut acc = *constant;
                    for (i, c) in terms {
                        acc += c * point[*i];
                    }
                    stack.push(acc);
                }
                Inst::Exp => {
                    let v = stack.last_mut().expect("stack underflow");
                    *v = v.exp();
                }
                Inst::Sin => {
                    let v = stack.last_mut().expect("stack underflow");
                    *v = v.sin();
                }
                Inst::Cos => {
                    let v = stack.last_mut().expect("stack underflow");
                    *v = v.cos();
                }
            }
        }
        stack.pop().expect("empty program")
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut stack = vec![0.0; 0];
        self.eval_with(point, &mut stack)
    }
}

fn emit(expr: &Expr, code: &mut Vec<Inst>) {
    match expr {
        Expr::Const(c) => code.push(Inst::Const(c.to_f64())),
        Expr::Var(i) => code.push(Inst::Var(*i)),
        Expr::Sum(terms) => {
            for t in terms {
                emit(t, code);
            }
            code.push(Inst::AddN(terms.len()));
        }
        Expr::Prod(factors) => {
            for f in factors {
                emit(f, code);
            }
            code.push(Inst::MulN(factors.len()));
        }
        Expr::Pow(base, k) => {
            emit(base, code);
            code.push(Inst::PowI(*k as i32));
        }
        Expr::Exp(l) => {
            code.push(affine_inst(l));
            code.push(Inst::Exp);
        }
        Expr::Sin(l) => {
            code.push(affine_inst(l));
            code.push(Inst::Sin);
        }
        Expr::Cos(l) => {
            code.push(affine_inst(l));
            code.push(Inst::Cos);
        }
    }
}

fn affine_inst(l: &AffineForm) -> Inst {
    Inst::Affine {
        constant: l.constant.to_f64(),
        terms: l
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i, c.to_f64()))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::SampleSpec;
    use crate::symbolic::{parse, VarSet};

    #[test]
    fn compiled_matches_tree_eval() {
        let vs = VarSet::new(&["x1", "x2", "t"], Some("t")).unwrap();
        for text in [
            "x1^2 + exp(2*t) - 3*sin(x1 - x2)",
            "(1 - x1^2)^2 * (1 - x2^2)^2",
            "cos(t)*x1*x2 - 1/3",
            "exp(-1*t)*exp(t - x1)",
        ] {
            let e = parse(text, &vs).unwrap();
            let c = CompiledExpr::new(&e);
            let mut stack = Vec::new();
            for p in SampleSpec::default().points(3) {
                let a = e.eval(&p);
                let b = c.eval_with(&p, &mut stack);
                assert!(
                    (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                    "{text}: tree {a} vs compiled {b}"
                );
            }
        }
    }
}

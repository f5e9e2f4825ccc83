use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

use super::eval::{apply_binary, apply_pair, apply_unary};
use super::{BinOp, EvalError, Expr, ExprKind, Func};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("variable {name:?} at position {pos} is not one of [{allowed}]")]
pub struct BindError {
    pub name: String,
    pub pos: usize,
    pub allowed: String,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Binary(BinOp),
    Unary(Func),
    Pair(Func),
}

/// Postfix form of an [`Expr`] with variables resolved to argument slots.
///
/// Evaluation performs the same floating-point operations in the same order
/// as the tree walker, so both routes agree bit-for-bit.
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<(Op, usize)>,
    arity: usize,
}

impl Program {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, args: &[f64]) -> Result<f64, EvalError> {
        debug_assert_eq!(args.len(), self.arity);
        let mut stack: SmallVec<[f64; 16]> = SmallVec::new();
        for &(op, pos) in &self.ops {
            match op {
                Op::Const(v) => stack.push(v),
                Op::Var(slot) => stack.push(args[slot]),
                Op::Neg => {
                    let top = stack.last_mut().expect("stack underflow");
                    *top = -*top;
                }
                Op::Binary(bop) => {
                    let b = stack.pop().expect("stack underflow");
                    let a = stack.pop().expect("stack underflow");
                    stack.push(apply_binary(bop, a, b, pos)?);
                }
                Op::Unary(func) => {
                    let a = stack.pop().expect("stack underflow");
                    stack.push(apply_unary(func, a, pos)?);
                }
                Op::Pair(func) => {
                    let b = stack.pop().expect("stack underflow");
                    let a = stack.pop().expect("stack underflow");
                    stack.push(apply_pair(func, a, b, pos)?);
                }
            }
        }
        Ok(stack.pop().expect("empty program"))
    }
}

impl Expr {
    /// Resolves every variable against `vars` (slot order = argument order)
    /// and flattens the tree into a [`Program`].
    pub fn bind(&self, vars: &[&str]) -> Result<Program, BindError> {
        let mut ops = Vec::new();
        emit(self, vars, &mut ops)?;
        Ok(Program { ops, arity: vars.len() })
    }
}

fn emit(e: &Expr, vars: &[&str], ops: &mut Vec<(Op, usize)>) -> Result<(), BindError> {
    match &e.kind {
        ExprKind::Const(v) => ops.push((Op::Const(*v), e.pos)),
        ExprKind::Var(name) => {
            let slot = vars.iter().position(|v| v == name).ok_or_else(|| BindError {
                name: name.clone(),
                pos: e.pos,
                allowed: vars.join(", "),
            })?;
            ops.push((Op::Var(slot), e.pos));
        }
        ExprKind::Neg(inner) => {
            emit(inner, vars, ops)?;
            ops.push((Op::Neg, e.pos));
        }
        ExprKind::Binary(op, l, r) => {
            emit(l, vars, ops)?;
            emit(r, vars, ops)?;
            ops.push((Op::Binary(*op), e.pos));
        }
        ExprKind::Call(func, args) => {
            for a in args {
                emit(a, vars, ops)?;
            }
            let op = if args.len() == 1 { Op::Unary(*func) } else { Op::Pair(*func) };
            ops.push((op, e.pos));
        }
    }
    Ok(())
}

/// An expression bound to a fixed, named argument list.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    expr: Expr,
    program: Program,
    vars: Vec<&'static str>,
}

impl CompiledExpr {
    pub fn new(expr: Expr, vars: &[&'static str]) -> Result<Self, BindError> {
        let program = expr.bind(vars)?;
        Ok(CompiledExpr { expr, program, vars: vars.to_vec() })
    }

    pub fn parse(source: &str, vars: &[&'static str]) -> Result<Self, crate::Error> {
        let expr = super::parse_str(source)?;
        Ok(Self::new(expr, vars)?)
    }

    #[inline]
    pub fn eval(&self, args: &[f64]) -> Result<f64, EvalError> {
        self.program.eval(args)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn vars(&self) -> &[&'static str] {
        &self.vars
    }
}

impl fmt::Display for CompiledExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

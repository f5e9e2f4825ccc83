use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{BinOp, Expr, ExprKind, Func};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalErrorKind {
    #[error("unbound variable {0:?}")]
    Unbound(String),
    #[error("{func} undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("result overflowed")]
    NonFinite,
}

/// Evaluation failure, positioned at the sub-expression that produced it.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("evaluation error at position {pos}: {kind}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub pos: usize,
}

/// Variable lookup used by [`Expr::eval`].
pub trait Bindings {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Bindings for HashMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for HashMap<&str, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for BTreeMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for [(&str, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const N: usize> Bindings for [(&str, f64); N] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.as_slice().lookup(name)
    }
}

fn finite(v: f64, pos: usize) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError { kind: EvalErrorKind::NonFinite, pos })
    }
}

fn domain(func: &'static str, arg: f64, pos: usize) -> EvalError {
    EvalError { kind: EvalErrorKind::Domain { func, arg }, pos }
}

fn power(base: f64, exponent: f64, pos: usize) -> Result<f64, EvalError> {
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalError { kind: EvalErrorKind::DivisionByZero, pos });
    }
    let v = base.powf(exponent);
    if v.is_nan() {
        return Err(domain("pow", base, pos));
    }
    finite(v, pos)
}

pub(super) fn apply_binary(op: BinOp, a: f64, b: f64, pos: usize) -> Result<f64, EvalError> {
    match op {
        BinOp::Add => finite(a + b, pos),
        BinOp::Sub => finite(a - b, pos),
        BinOp::Mul => finite(a * b, pos),
        BinOp::Div => {
            if b == 0.0 {
                Err(EvalError { kind: EvalErrorKind::DivisionByZero, pos })
            } else {
                finite(a / b, pos)
            }
        }
        BinOp::Pow => power(a, b, pos),
    }
}

pub(super) fn apply_unary(func: Func, a: f64, pos: usize) -> Result<f64, EvalError> {
    let v = match func {
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Tan => a.tan(),
        Func::Exp => a.exp(),
        Func::Abs => a.abs(),
        Func::Ln => {
            if a <= 0.0 {
                return Err(domain("ln", a, pos));
            }
            a.ln()
        }
        Func::Sqrt => {
            if a < 0.0 {
                return Err(domain("sqrt", a, pos));
            }
            a.sqrt()
        }
        Func::Min | Func::Max | Func::Pow => unreachable!("binary builtin applied to one argument"),
    };
    finite(v, pos)
}

pub(super) fn apply_pair(func: Func, a: f64, b: f64, pos: usize) -> Result<f64, EvalError> {
    match func {
        Func::Min => Ok(a.min(b)),
        Func::Max => Ok(a.max(b)),
        Func::Pow => power(a, b, pos),
        _ => unreachable!("unary builtin applied to two arguments"),
    }
}

impl Expr {
    /// Tree-walking evaluation. Domain violations (`ln` of a non-positive
    /// value, `sqrt` of a negative one, division by zero, overflow) are
    /// errors rather than non-finite results.
    pub fn eval<B: Bindings + ?Sized>(&self, bindings: &B) -> Result<f64, EvalError> {
        match &self.kind {
            ExprKind::Const(v) => Ok(*v),
            ExprKind::Var(name) => bindings
                .lookup(name)
                .ok_or_else(|| EvalError { kind: EvalErrorKind::Unbound(name.clone()), pos: self.pos }),
            ExprKind::Neg(inner) => Ok(-inner.eval(bindings)?),
            ExprKind::Binary(op, l, r) => {
                let a = l.eval(bindings)?;
                let b = r.eval(bindings)?;
                apply_binary(*op, a, b, self.pos)
            }
            ExprKind::Call(func, args) => match args.as_slice() {
                [a] => apply_unary(*func, a.eval(bindings)?, self.pos),
                [a, b] => {
                    let a = a.eval(bindings)?;
                    let b = b.eval(bindings)?;
                    apply_pair(*func, a, b, self.pos)
                }
                _ => unreachable!("parser enforces arity"),
            },
        }
    }
}

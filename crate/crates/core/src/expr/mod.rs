//! Arithmetic expressions over named real variables.
//!
//! Every user-supplied function in a problem file (the integrand pieces, the
//! comparison functions and the density) enters the system as an [`Expr`].
//! Source text is lexed by [`tokenize`], parsed by [`parse`] into a tree, and
//! either interpreted directly with [`Expr::eval`] or bound to an ordered
//! variable list with [`Expr::bind`] for repeated evaluation.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?
//! atom   := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

mod eval;
mod lexer;
mod parser;
mod program;

use std::collections::BTreeSet;
use std::fmt;

pub use eval::{Bindings, EvalError, EvalErrorKind};
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{parse, ParseError, ParseErrorKind};
pub use program::{BindError, CompiledExpr, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => PREC_SUM,
            BinOp::Mul | BinOp::Div => PREC_PRODUCT,
            BinOp::Pow => PREC_POWER,
        }
    }
}

/// Builtin functions. Arity is fixed per function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Abs,
    Sqrt,
    Min,
    Max,
    Pow,
}

impl Func {
    pub const ALL: [Func; 10] =
        [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Ln, Func::Abs, Func::Sqrt, Func::Min, Func::Max, Func::Pow];

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// A parsed expression node. `pos` is the 0-based character offset of the
/// token that introduced the node (the operator for binary nodes, the name
/// for calls).
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: usize,
}

// Structural equality: positions are ignored, constants compare bitwise.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (ExprKind::Const(a), ExprKind::Const(b)) => a.to_bits() == b.to_bits(),
            (ExprKind::Var(a), ExprKind::Var(b)) => a == b,
            (ExprKind::Neg(a), ExprKind::Neg(b)) => a == b,
            (ExprKind::Binary(o1, l1, r1), ExprKind::Binary(o2, l2, r2)) => o1 == o2 && l1 == l2 && r1 == r2,
            (ExprKind::Call(f1, a1), ExprKind::Call(f2, a2)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_str(s)
    }
}

/// Tokenizes and parses in one step.
pub fn parse_str(source: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(source).map_err(ParseError::from)?;
    parse(&tokens)
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr { kind: ExprKind::Const(value), pos: 0 }
    }

    pub fn var(name: &str) -> Expr {
        Expr { kind: ExprKind::Var(name.to_string()), pos: 0 }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(inner: Expr) -> Expr {
        Expr { kind: ExprKind::Neg(Box::new(inner)), pos: 0 }
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos: 0 }
    }

    pub fn call(func: Func, args: Vec<Expr>) -> Expr {
        assert_eq!(args.len(), func.arity(), "arity mismatch for {}", func.name());
        Expr { kind: ExprKind::Call(func, args), pos: 0 }
    }

    /// Names of all variables referenced anywhere in the tree.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            ExprKind::Const(_) => {}
            ExprKind::Var(name) => {
                out.insert(name.clone());
            }
            ExprKind::Neg(inner) => inner.collect_vars(out),
            ExprKind::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            ExprKind::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn depends_on(&self, name: &str) -> bool {
        match &self.kind {
            ExprKind::Const(_) => false,
            ExprKind::Var(v) => v == name,
            ExprKind::Neg(inner) => inner.depends_on(name),
            ExprKind::Binary(_, l, r) => l.depends_on(name) || r.depends_on(name),
            ExprKind::Call(_, args) => args.iter().any(|a| a.depends_on(name)),
        }
    }

    /// Value of a variable-free expression, `None` if it references a
    /// variable or fails to evaluate.
    pub fn constant_value(&self) -> Option<f64> {
        if !self.variables().is_empty() {
            return None;
        }
        self.eval(&[] as &[(&str, f64)]).ok()
    }

    /// True when the tree is exactly the single variable `name`.
    pub fn is_var(&self, name: &str) -> bool {
        matches!(&self.kind, ExprKind::Var(v) if v == name)
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Const(_) | ExprKind::Var(_) | ExprKind::Call(..) => PREC_ATOM,
            ExprKind::Neg(_) => PREC_UNARY,
            ExprKind::Binary(op, ..) => op.precedence(),
        }
    }
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints with the minimum parentheses needed for the grammar to rebuild
/// the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Const(v) => write!(f, "{v}"),
            ExprKind::Var(name) => f.write_str(name),
            ExprKind::Neg(inner) => {
                f.write_str("-")?;
                write_operand(f, inner, inner.precedence() < PREC_UNARY)
            }
            ExprKind::Binary(BinOp::Pow, base, exponent) => {
                // base must be an atom, exponent is a factor
                write_operand(f, base, base.precedence() < PREC_ATOM)?;
                f.write_str("^")?;
                write_operand(f, exponent, exponent.precedence() < PREC_UNARY)
            }
            ExprKind::Binary(op, lhs, rhs) => {
                let p = op.precedence();
                write_operand(f, lhs, lhs.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, rhs, rhs.precedence() <= p)
            }
            ExprKind::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

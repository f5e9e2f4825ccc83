use thiserror::Error;

use super::lexer::{LexError, Token, TokenKind};
use super::{BinOp, Expr, ExprKind, Func};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected end of input, expected {expected}")]
    UnexpectedEnd { expected: &'static str },
    #[error("unexpected {found:?}, expected {expected}")]
    UnexpectedToken { found: String, expected: &'static str },
    #[error("unmatched ')'")]
    UnmatchedParen,
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
    #[error("{name} takes {expected} argument(s), got {found}")]
    Arity { name: &'static str, expected: usize, found: usize },
    #[error("illegal character {0:?}")]
    IllegalChar(char),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at position {pos}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: usize,
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError { kind: ParseErrorKind::IllegalChar(e.ch), pos: e.pos }
    }
}

/// Builds an expression tree from a token stream produced by
/// [`tokenize`](super::tokenize). The whole stream must be consumed.
pub fn parse(tokens: &[Token]) -> Result<Expr, ParseError> {
    let mut parser = Parser { tokens, idx: 0 };
    let expr = parser.expr()?;
    match parser.peek() {
        None => Ok(expr),
        Some(tok) if tok.kind == TokenKind::RightParen => {
            Err(ParseError { kind: ParseErrorKind::UnmatchedParen, pos: tok.pos })
        }
        Some(tok) => Err(parser.unexpected(tok, "operator or end of input")),
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    idx: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.idx)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let tok = self.tokens.get(self.idx);
        self.idx += 1;
        tok
    }

    fn end_pos(&self) -> usize {
        self.tokens.last().map(|t| t.pos + t.lexeme.chars().count()).unwrap_or(0)
    }

    fn unexpected(&self, tok: &Token, expected: &'static str) -> ParseError {
        ParseError { kind: ParseErrorKind::UnexpectedToken { found: tok.lexeme.clone(), expected }, pos: tok.pos }
    }

    fn eof(&self, expected: &'static str) -> ParseError {
        ParseError { kind: ParseErrorKind::UnexpectedEnd { expected }, pos: self.end_pos() }
    }

    fn peek_operator(&self, ops: &[char]) -> Option<(BinOp, usize)> {
        let tok = self.peek()?;
        if tok.kind != TokenKind::Operator {
            return None;
        }
        let c = tok.lexeme.chars().next()?;
        if !ops.contains(&c) {
            return None;
        }
        let op = match c {
            '+' => BinOp::Add,
            '-' => BinOp::Sub,
            '*' => BinOp::Mul,
            '/' => BinOp::Div,
            '^' => BinOp::Pow,
            _ => return None,
        };
        Some((op, tok.pos))
    }

    fn expect(&mut self, kind: TokenKind, expected: &'static str) -> Result<&'a Token, ParseError> {
        match self.bump() {
            Some(tok) if tok.kind == kind => Ok(tok),
            Some(tok) => Err(self.unexpected(tok, expected)),
            None => Err(self.eof(expected)),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some((op, pos)) = self.peek_operator(&['+', '-']) {
            self.idx += 1;
            let rhs = self.term()?;
            lhs = Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some((op, pos)) = self.peek_operator(&['*', '/']) {
            self.idx += 1;
            let rhs = self.factor()?;
            lhs = Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if let Some((BinOp::Sub, pos)) = self.peek_operator(&['-']) {
            self.idx += 1;
            let inner = self.factor()?;
            return Ok(Expr { kind: ExprKind::Neg(Box::new(inner)), pos });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some((BinOp::Pow, pos)) = self.peek_operator(&['^']) {
            self.idx += 1;
            let exponent = self.factor()?;
            return Ok(Expr { kind: ExprKind::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)), pos });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        const EXPECTED: &str = "number, identifier or '('";
        let tok = match self.bump() {
            Some(tok) => tok,
            None => return Err(self.eof(EXPECTED)),
        };
        match tok.kind {
            TokenKind::Number => {
                let value: f64 = tok.lexeme.parse().map_err(|_| self.unexpected(tok, EXPECTED))?;
                Ok(Expr { kind: ExprKind::Const(value), pos: tok.pos })
            }
            TokenKind::Identifier => {
                if self.peek().map(|t| t.kind) == Some(TokenKind::LeftParen) {
                    self.call(tok)
                } else {
                    Ok(Expr { kind: ExprKind::Var(tok.lexeme.clone()), pos: tok.pos })
                }
            }
            TokenKind::LeftParen => {
                let inner = self.expr()?;
                self.expect(TokenKind::RightParen, "')'")?;
                Ok(inner)
            }
            TokenKind::RightParen => Err(ParseError { kind: ParseErrorKind::UnmatchedParen, pos: tok.pos }),
            _ => Err(self.unexpected(tok, EXPECTED)),
        }
    }

    fn call(&mut self, name: &Token) -> Result<Expr, ParseError> {
        let func = Func::from_name(&name.lexeme)
            .ok_or_else(|| ParseError { kind: ParseErrorKind::UnknownFunction(name.lexeme.clone()), pos: name.pos })?;
        self.expect(TokenKind::LeftParen, "'('")?;
        let mut args = vec![self.expr()?];
        loop {
            match self.bump() {
                Some(t) if t.kind == TokenKind::Comma => args.push(self.expr()?),
                Some(t) if t.kind == TokenKind::RightParen => break,
                Some(t) => return Err(self.unexpected(t, "',' or ')'")),
                None => return Err(self.eof("',' or ')'")),
            }
        }
        if args.len() != func.arity() {
            return Err(ParseError {
                kind: ParseErrorKind::Arity { name: func.name(), expected: func.arity(), found: args.len() },
                pos: name.pos,
            });
        }
        Ok(Expr { kind: ExprKind::Call(func, args), pos: name.pos })
    }
}

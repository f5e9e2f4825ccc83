use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Number,
    Identifier,
    Operator,
    LeftParen,
    RightParen,
    Comma,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenKind::Number => "number",
            TokenKind::Identifier => "identifier",
            TokenKind::Operator => "operator",
            TokenKind::LeftParen => "'('",
            TokenKind::RightParen => "')'",
            TokenKind::Comma => "','",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// 0-based character offset into the source.
    pub pos: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("illegal character {ch:?} at position {pos}")]
pub struct LexError {
    pub ch: char,
    pub pos: usize,
}

/// Splits `source` into tokens. Whitespace separates tokens and is dropped.
///
/// Numbers are `digits [. digits] [e|E [+|-] digits]` or `. digits [...]`.
/// An exponent marker not followed by a digit is left for the next token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if c.is_ascii_digit() || (c == '.' && next_is_digit(&chars, i + 1)) {
            i = scan_number(&chars, i);
            TokenKind::Number
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            TokenKind::Identifier
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => TokenKind::Operator,
                '(' => TokenKind::LeftParen,
                ')' => TokenKind::RightParen,
                ',' => TokenKind::Comma,
                _ => return Err(LexError { ch: c, pos: start }),
            }
        };
        tokens.push(Token { kind, lexeme: chars[start..i].iter().collect(), pos: start });
    }
    Ok(tokens)
}

fn next_is_digit(chars: &[char], i: usize) -> bool {
    chars.get(i).is_some_and(|c| c.is_ascii_digit())
}

fn scan_number(chars: &[char], mut i: usize) -> usize {
    while next_is_digit(chars, i) {
        i += 1;
    }
    if chars.get(i) == Some(&'.') {
        i += 1;
        while next_is_digit(chars, i) {
            i += 1;
        }
    }
    if matches!(chars.get(i), Some('e') | Some('E')) {
        let mut j = i + 1;
        if matches!(chars.get(j), Some('+') | Some('-')) {
            j += 1;
        }
        if next_is_digit(chars, j) {
            i = j;
            while next_is_digit(chars, i) {
                i += 1;
            }
        }
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn rational_kernel_factor() {
        use TokenKind::*;
        let toks = tokenize("1/(t^2+1)").unwrap();
        assert_eq!(toks.len(), 9);
        assert_eq!(
            kinds("1/(t^2+1)"),
            vec![Number, Operator, LeftParen, Identifier, Operator, Number, Operator, Number, RightParen]
        );
        let lexemes: Vec<_> = toks.iter().map(|t| t.lexeme.as_str()).collect();
        assert_eq!(lexemes, ["1", "/", "(", "t", "^", "2", "+", "1", ")"]);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").unwrap().is_empty());
        assert!(tokenize("   \t\n").unwrap().is_empty());
    }

    #[test]
    fn illegal_character_position() {
        assert_eq!(tokenize("2 @ 3"), Err(LexError { ch: '@', pos: 2 }));
    }

    #[test]
    fn positions_count_characters_not_bytes() {
        let err = tokenize("γ").unwrap_err();
        assert_eq!(err.pos, 0);
        let err = tokenize("1+ γ").unwrap_err();
        assert_eq!(err.pos, 3);
    }

    #[test]
    fn scientific_literals() {
        let toks = tokenize("1.5e-3 + .25 + 2E+4 + 3.").unwrap();
        let nums: Vec<_> = toks.iter().filter(|t| t.kind == TokenKind::Number).map(|t| t.lexeme.as_str()).collect();
        assert_eq!(nums, ["1.5e-3", ".25", "2E+4", "3."]);
    }

    #[test]
    fn dangling_exponent_is_not_swallowed() {
        let toks = tokenize("2e").unwrap();
        assert_eq!(toks[0].lexeme, "2");
        assert_eq!(toks[1].kind, TokenKind::Identifier);
    }

    #[test]
    fn lexemes_reassemble_source() {
        let src = " exp(0 - s^2) * cos(x)/ (1.0e0+t) ";
        let joined: String = tokenize(src).unwrap().into_iter().map(|t| t.lexeme).collect();
        let stripped: String = src.chars().filter(|c| !c.is_whitespace()).collect();
        assert_eq!(joined, stripped);
    }
}

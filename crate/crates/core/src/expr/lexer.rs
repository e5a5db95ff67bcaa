//! Maximal-munch lexer with implicit-multiplication explicitation.

use super::{ExprError, FuncName, RelOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Number,
    Ident,
    Func,
    Op(char),
    LParen,
    RParen,
    Comma,
    Relation(RelOp, bool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// Byte offsets into the source; zero-width for injected `*` tokens.
    pub span: (usize, usize),
}

impl Token {
    fn new(kind: TokenKind, lexeme: impl Into<String>, span: (usize, usize)) -> Token {
        Token {
            kind,
            lexeme: lexeme.into(),
            span,
        }
    }
}

/// Lexes cleaned grammar text. Adjacency pairs that denote implicit
/// multiplication (number·identifier, number·`(`, identifier·`(` when the
/// identifier is not a known function, `)`·identifier, `)`·`(`) receive an
/// injected `*` token.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && matches!(bytes.get(i + 1), Some(b) if b.is_ascii_digit())) {
            let (tok, next) = lex_number(src, i)?;
            tokens.push(tok);
            i = next;
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len()
                && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            let lexeme = &src[start..i];
            let kind = if FuncName::from_ident(lexeme).is_some() {
                TokenKind::Func
            } else {
                TokenKind::Ident
            };
            tokens.push(Token::new(kind, lexeme, (start, i)));
            continue;
        }
        match c {
            '+' | '-' | '*' | '/' | '^' => {
                tokens.push(Token::new(TokenKind::Op(c), c, (i, i + 1)));
                i += 1;
            }
            '(' => {
                tokens.push(Token::new(TokenKind::LParen, "(", (i, i + 1)));
                i += 1;
            }
            ')' => {
                tokens.push(Token::new(TokenKind::RParen, ")", (i, i + 1)));
                i += 1;
            }
            ',' => {
                tokens.push(Token::new(TokenKind::Comma, ",", (i, i + 1)));
                i += 1;
            }
            '<' | '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    let op = if c == '<' { RelOp::Le } else { RelOp::Ge };
                    tokens.push(Token::new(
                        TokenKind::Relation(op, false),
                        &src[i..i + 2],
                        (i, i + 2),
                    ));
                    i += 2;
                } else {
                    let op = if c == '<' { RelOp::Le } else { RelOp::Ge };
                    tokens.push(Token::new(TokenKind::Relation(op, true), c, (i, i + 1)));
                    i += 1;
                }
            }
            '=' => {
                // Tolerate "==".
                let len = if bytes.get(i + 1) == Some(&b'=') { 2 } else { 1 };
                tokens.push(Token::new(
                    TokenKind::Relation(RelOp::Eq, false),
                    &src[i..i + len],
                    (i, i + len),
                ));
                i += len;
            }
            _ => return Err(ExprError::UnexpectedCharacter { ch: c, at: i }),
        }
    }
    Ok(inject_implicit_multiplication(tokens))
}

fn lex_number(src: &str, start: usize) -> Result<(Token, usize), ExprError> {
    let bytes = src.as_bytes();
    let mut i = start;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        if i >= bytes.len() || !bytes[i].is_ascii_digit() {
            return Err(ExprError::UnterminatedNumber { start, end: i });
        }
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    // Exponent suffix only when it is unambiguously numeric.
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            i = j;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    let lexeme = &src[start..i];
    if lexeme.parse::<f64>().map(|v| v.is_finite()) != Ok(true) {
        return Err(ExprError::UnterminatedNumber { start, end: i });
    }
    Ok((Token::new(TokenKind::Number, lexeme, (start, i)), i))
}

fn inject_implicit_multiplication(tokens: Vec<Token>) -> Vec<Token> {
    let mut out: Vec<Token> = Vec::with_capacity(tokens.len());
    for tok in tokens {
        if let Some(prev) = out.last() {
            let left = matches!(prev.kind, TokenKind::Number | TokenKind::RParen)
                || (prev.kind == TokenKind::Ident && tok.kind == TokenKind::LParen);
            let right = matches!(
                tok.kind,
                TokenKind::Ident | TokenKind::Func | TokenKind::LParen
            );
            if left && right {
                let at = tok.span.0;
                out.push(Token::new(TokenKind::Op('*'), "*", (at, at)));
            }
        }
        out.push(tok);
    }
    out
}

//! Precedence-climbing parser over the token stream.
//!
//! Binding order, tightest first: `^` (right-associative), unary minus,
//! `*` `/` (left-associative), `+` `-`.

use super::lexer::{Token, TokenKind};
use super::{clean_source, tokenize, ExprError, ExprNode, FuncName, Relation, RelationalExpr};

/// Parses a token stream (without relation tokens) into a canonical AST.
pub fn parse_expr(tokens: &[Token]) -> Result<ExprNode, ExprError> {
    if tokens.is_empty() {
        return Err(ExprError::EmptyInput);
    }
    let mut p = Parser { tokens, pos: 0 };
    let expr = p.parse_bp(0)?;
    if let Some(tok) = p.peek() {
        return Err(err_at(tok, "end of input"));
    }
    Ok(expr.canonicalize())
}

/// Cleans, tokenizes, and parses source text in one step.
pub fn parse_source(src: &str) -> Result<ExprNode, ExprError> {
    let cleaned = clean_source(src)?;
    parse_expr(&tokenize(&cleaned)?)
}

/// Parses text containing exactly one relation operator.
pub fn parse_relation(src: &str) -> Result<RelationalExpr, ExprError> {
    let cleaned = clean_source(src)?;
    let tokens = tokenize(&cleaned)?;
    let mut split: Option<(usize, Relation)> = None;
    for (i, tok) in tokens.iter().enumerate() {
        if let TokenKind::Relation(op, strict) = tok.kind {
            if split.is_some() {
                return Err(ExprError::MultipleRelations);
            }
            split = Some((i, Relation { op, strict }));
        }
    }
    let (at, relation) = split.ok_or(ExprError::MissingRelation)?;
    Ok(RelationalExpr {
        lhs: parse_expr(&tokens[..at])?,
        relation,
        rhs: parse_expr(&tokens[at + 1..])?,
    })
}

/// Alias kept for symmetry with [`parse_source`].
pub fn parse_relation_source(src: &str) -> Result<RelationalExpr, ExprError> {
    parse_relation(src)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

const UNARY_BP: u8 = 5;

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<&Token> {
        let tok = self.tokens.get(self.pos);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<(), ExprError> {
        match self.peek() {
            Some(tok) if tok.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(tok) => Err(err_at(tok, what)),
            None => Err(ExprError::ParseError {
                start: self.end(),
                end: self.end(),
                expected: what.to_string(),
            }),
        }
    }

    fn end(&self) -> usize {
        self.tokens.last().map(|t| t.span.1).unwrap_or(0)
    }

    fn parse_bp(&mut self, min_bp: u8) -> Result<ExprNode, ExprError> {
        let mut lhs = self.parse_prefix()?;
        loop {
            let (op, lbp, rbp) = match self.peek() {
                Some(Token {
                    kind: TokenKind::Op(op),
                    ..
                }) => match op {
                    '+' | '-' => (*op, 1, 2),
                    '*' | '/' => (*op, 3, 4),
                    '^' => (*op, 9, 8),
                    _ => break,
                },
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.parse_bp(rbp)?;
            lhs = match op {
                '+' => ExprNode::Sum(vec![lhs, rhs]),
                '-' => ExprNode::Sum(vec![lhs, ExprNode::Neg(Box::new(rhs))]),
                '*' => ExprNode::Product(vec![lhs, rhs]),
                '/' => ExprNode::Div(Box::new(lhs), Box::new(rhs)),
                '^' => ExprNode::Pow(Box::new(lhs), Box::new(rhs)),
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn parse_prefix(&mut self) -> Result<ExprNode, ExprError> {
        let tok = match self.bump() {
            Some(tok) => tok.clone(),
            None => {
                return Err(ExprError::ParseError {
                    start: self.end(),
                    end: self.end(),
                    expected: "an expression".to_string(),
                })
            }
        };
        match tok.kind {
            TokenKind::Number => {
                // Lexer guarantees finite values.
                Ok(ExprNode::Const(tok.lexeme.parse::<f64>().unwrap()))
            }
            TokenKind::Ident => Ok(ExprNode::Symbol(tok.lexeme.clone())),
            TokenKind::Func => {
                let name = FuncName::from_ident(&tok.lexeme).unwrap();
                self.expect(TokenKind::LParen, "'(' after function name")?;
                let arg = self.parse_bp(0)?;
                self.expect(TokenKind::RParen, "')' closing function argument")?;
                Ok(ExprNode::Func(name, Box::new(arg)))
            }
            TokenKind::LParen => {
                let inner = self.parse_bp(0)?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(inner)
            }
            TokenKind::Op('-') => {
                let operand = self.parse_bp(UNARY_BP)?;
                Ok(ExprNode::Neg(Box::new(operand)))
            }
            TokenKind::Op('+') => self.parse_bp(UNARY_BP),
            _ => Err(err_at(&tok, "a number, symbol, function, or '('")),
        }
    }
}

fn err_at(tok: &Token, expected: &str) -> ExprError {
    ExprError::ParseError {
        start: tok.span.0,
        end: tok.span.1,
        expected: expected.to_string(),
    }
}

//! Textual math grammar: lexing, parsing, LaTeX-fragment cleaning, and the
//! canonical expression AST shared by the whole pipeline.
//!
//! The grammar is deliberately small: identifiers `[A-Za-z][A-Za-z0-9_]*`,
//! decimal numbers, the operators `+ - * / ^`, parentheses, and the function
//! set `exp, log, sin, cos, abs` (`log` is the natural logarithm). Relations
//! use `<=, >=, =, <, >`.

mod latex;
mod lexer;
mod parser;

pub use latex::clean_source;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse_expr, parse_relation, parse_source, parse_relation_source};

use serde_json::json;
use std::collections::BTreeSet;
use std::fmt;

/// Errors produced while cleaning, lexing, or parsing expression text.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("unsupported LaTeX command \\{0}")]
    UnsupportedLatexCommand(String),
    #[error("unexpected character {ch:?} at byte {at}")]
    UnexpectedCharacter { ch: char, at: usize },
    #[error("unterminated number at bytes {start}..{end}")]
    UnterminatedNumber { start: usize, end: usize },
    #[error("parse error at bytes {start}..{end}: expected {expected}")]
    ParseError {
        start: usize,
        end: usize,
        expected: String,
    },
    #[error("empty input")]
    EmptyInput,
    #[error("no relation operator found")]
    MissingRelation,
    #[error("more than one relation operator found")]
    MultipleRelations,
}

/// Unary functions admitted as atoms by the decomposer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FuncName {
    Exp,
    Log,
    Sin,
    Cos,
    Abs,
}

impl FuncName {
    pub fn from_ident(s: &str) -> Option<FuncName> {
        match s {
            "exp" => Some(FuncName::Exp),
            "log" => Some(FuncName::Log),
            "sin" => Some(FuncName::Sin),
            "cos" => Some(FuncName::Cos),
            "abs" => Some(FuncName::Abs),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FuncName::Exp => "exp",
            FuncName::Log => "log",
            FuncName::Sin => "sin",
            FuncName::Cos => "cos",
            FuncName::Abs => "abs",
        }
    }
}

impl fmt::Display for FuncName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Expression AST. After [`ExprNode::canonicalize`]:
///
/// * `Sum` and `Product` have at least two children and no directly nested
///   node of the same variant;
/// * no `Neg` survives (folded into `Product` with `Const(-1)`);
/// * subtrees whose children are all `Const` are folded to a single `Const`
///   when the result is finite;
/// * `Div` stays `Div` (never rewritten to `Pow(den, -1)`) so the decomposer
///   keeps the syntactic denominator.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Const(f64),
    Symbol(String),
    Sum(Vec<ExprNode>),
    Product(Vec<ExprNode>),
    Pow(Box<ExprNode>, Box<ExprNode>),
    Div(Box<ExprNode>, Box<ExprNode>),
    Func(FuncName, Box<ExprNode>),
    Neg(Box<ExprNode>),
}

impl ExprNode {
    pub fn symbol(name: impl Into<String>) -> ExprNode {
        ExprNode::Symbol(name.into())
    }

    /// Rewrites the tree into canonical form (see type-level docs).
    pub fn canonicalize(self) -> ExprNode {
        match self {
            ExprNode::Const(_) | ExprNode::Symbol(_) => self,
            ExprNode::Neg(child) => {
                let child = child.canonicalize();
                ExprNode::Product(vec![ExprNode::Const(-1.0), child]).canonicalize()
            }
            ExprNode::Sum(children) => {
                let mut flat = Vec::with_capacity(children.len());
                let mut constant = 0.0;
                let mut saw_const = false;
                for child in children {
                    match child.canonicalize() {
                        ExprNode::Sum(inner) => {
                            for c in inner {
                                match c.const_value() {
                                    Some(v) => {
                                        constant += v;
                                        saw_const = true;
                                    }
                                    None => flat.push(c),
                                }
                            }
                        }
                        ExprNode::Const(v) => {
                            constant += v;
                            saw_const = true;
                        }
                        other => flat.push(other),
                    }
                }
                if flat.is_empty() {
                    return ExprNode::Const(constant);
                }
                // Combined constant goes last; an exact zero is dropped.
                if saw_const && constant != 0.0 {
                    flat.push(ExprNode::Const(constant));
                }
                match flat.len() {
                    1 => flat.pop().unwrap(),
                    _ => ExprNode::Sum(flat),
                }
            }
            ExprNode::Product(children) => {
                let mut flat = Vec::with_capacity(children.len());
                let mut constant = 1.0;
                let mut saw_const = false;
                for child in children {
                    match child.canonicalize() {
                        ExprNode::Product(inner) => {
                            for c in inner {
                                match c.const_value() {
                                    Some(v) => {
                                        constant *= v;
                                        saw_const = true;
                                    }
                                    None => flat.push(c),
                                }
                            }
                        }
                        ExprNode::Const(v) => {
                            constant *= v;
                            saw_const = true;
                        }
                        other => flat.push(other),
                    }
                }
                if flat.is_empty() {
                    return ExprNode::Const(constant);
                }
                // Combined constant leads as the coefficient; an exact one
                // is dropped. Zero is kept rather than annihilating the
                // symbolic factors.
                if saw_const && constant != 1.0 {
                    flat.insert(0, ExprNode::Const(constant));
                }
                match flat.len() {
                    1 => flat.pop().unwrap(),
                    _ => ExprNode::Product(flat),
                }
            }
            ExprNode::Pow(base, exp) => {
                let base = base.canonicalize();
                let exp = exp.canonicalize();
                if let (Some(b), Some(e)) = (base.const_value(), exp.const_value()) {
                    let v = b.powf(e);
                    if v.is_finite() {
                        return ExprNode::Const(v);
                    }
                }
                ExprNode::Pow(Box::new(base), Box::new(exp))
            }
            ExprNode::Div(num, den) => {
                let num = num.canonicalize();
                let den = den.canonicalize();
                if let (Some(n), Some(d)) = (num.const_value(), den.const_value()) {
                    let v = n / d;
                    if v.is_finite() {
                        return ExprNode::Const(v);
                    }
                }
                ExprNode::Div(Box::new(num), Box::new(den))
            }
            ExprNode::Func(name, arg) => {
                let arg = arg.canonicalize();
                if let Some(a) = arg.const_value() {
                    let v = match name {
                        FuncName::Exp => a.exp(),
                        FuncName::Log => a.ln(),
                        FuncName::Sin => a.sin(),
                        FuncName::Cos => a.cos(),
                        FuncName::Abs => a.abs(),
                    };
                    if v.is_finite() {
                        return ExprNode::Const(v);
                    }
                }
                ExprNode::Func(name, Box::new(arg))
            }
        }
    }

    pub fn const_value(&self) -> Option<f64> {
        match self {
            ExprNode::Const(v) => Some(*v),
            _ => None,
        }
    }

    /// Collects every symbol name occurring in the tree.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| {
            if let ExprNode::Symbol(name) = node {
                out.insert(name.clone());
            }
        });
        out
    }

    pub fn visit(&self, f: &mut impl FnMut(&ExprNode)) {
        f(self);
        match self {
            ExprNode::Const(_) | ExprNode::Symbol(_) => {}
            ExprNode::Sum(children) | ExprNode::Product(children) => {
                for c in children {
                    c.visit(f);
                }
            }
            ExprNode::Pow(a, b) | ExprNode::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            ExprNode::Func(_, a) | ExprNode::Neg(a) => a.visit(f),
        }
    }

    /// Grammar-valid rendering; reparsing the output yields a structurally
    /// identical canonical AST.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_text(&mut s);
        s
    }

    fn write_text(&self, out: &mut String) {
        match self {
            ExprNode::Const(v) => {
                out.push_str(&format_const(*v));
            }
            ExprNode::Symbol(name) => out.push_str(name),
            ExprNode::Sum(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" + ");
                    }
                    c.write_text(out);
                }
            }
            ExprNode::Product(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        out.push('*');
                    }
                    // A division after the first slot would reassociate
                    // (`x*y/z` parses as `(x*y)/z`), so it gets parens.
                    let needs = matches!(c, ExprNode::Sum(_))
                        || is_negative_const(c)
                        || (i > 0 && matches!(c, ExprNode::Div(_, _)));
                    if needs {
                        out.push('(');
                        c.write_text(out);
                        out.push(')');
                    } else {
                        c.write_text(out);
                    }
                }
            }
            ExprNode::Pow(base, exp) => {
                write_atomic(base, out);
                out.push('^');
                write_atomic(exp, out);
            }
            ExprNode::Div(num, den) => {
                write_atomic(num, out);
                out.push('/');
                write_atomic(den, out);
            }
            ExprNode::Func(name, arg) => {
                out.push_str(name.as_str());
                out.push('(');
                arg.write_text(out);
                out.push(')');
            }
            ExprNode::Neg(child) => {
                out.push_str("-(");
                child.write_text(out);
                out.push(')');
            }
        }
    }

    /// JSON tree in the CLI `parse` output shape: `{"op": "...", "children": [...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            ExprNode::Const(v) => json!({"op": "const", "value": v}),
            ExprNode::Symbol(name) => json!({"op": "symbol", "name": name}),
            ExprNode::Sum(children) => {
                json!({"op": "sum", "children": children.iter().map(|c| c.to_json()).collect::<Vec<_>>()})
            }
            ExprNode::Product(children) => {
                json!({"op": "product", "children": children.iter().map(|c| c.to_json()).collect::<Vec<_>>()})
            }
            ExprNode::Pow(base, exp) => {
                json!({"op": "pow", "children": [base.to_json(), exp.to_json()]})
            }
            ExprNode::Div(num, den) => {
                json!({"op": "div", "children": [num.to_json(), den.to_json()]})
            }
            ExprNode::Func(name, arg) => {
                json!({"op": name.as_str(), "children": [arg.to_json()]})
            }
            ExprNode::Neg(child) => json!({"op": "neg", "children": [child.to_json()]}),
        }
    }
}

fn format_const(v: f64) -> String {
    // f64 Display is shortest-round-trip, so reparsing restores the bits.
    format!("{}", v)
}

fn is_negative_const(node: &ExprNode) -> bool {
    matches!(node, ExprNode::Const(v) if *v < 0.0 || v.is_sign_negative())
}

fn write_atomic(node: &ExprNode, out: &mut String) {
    let atomic = matches!(node, ExprNode::Symbol(_) | ExprNode::Func(..))
        || matches!(node, ExprNode::Const(v) if !(*v < 0.0 || v.is_sign_negative()));
    if atomic {
        node.write_text(out);
    } else {
        out.push('(');
        node.write_text(out);
        out.push(')');
    }
}

impl fmt::Display for ExprNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Relation operators after lexing. Strict `<`/`>` are tracked via
/// [`Relation::strict`], not separate variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelOp {
    Le,
    Ge,
    Eq,
}

impl RelOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            RelOp::Le => "<=",
            RelOp::Ge => ">=",
            RelOp::Eq => "=",
        }
    }
}

/// A relation operator plus the strictness recorded from the source
/// (`<`/`>` parse as non-strict `<=`/`>=` with `strict = true`; codegen
/// shifts strict relations by an epsilon).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Relation {
    pub op: RelOp,
    pub strict: bool,
}

impl Relation {
    pub const LE: Relation = Relation {
        op: RelOp::Le,
        strict: false,
    };
    pub const GE: Relation = Relation {
        op: RelOp::Ge,
        strict: false,
    };
    pub const EQ: Relation = Relation {
        op: RelOp::Eq,
        strict: false,
    };

    pub fn strict(op: RelOp) -> Relation {
        Relation { op, strict: true }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.strict {
            f.write_str(match self.op {
                RelOp::Le => "<",
                RelOp::Ge => ">",
                RelOp::Eq => "=",
            })
        } else {
            f.write_str(self.op.as_str())
        }
    }
}

/// Two expression sides joined by a relation.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationalExpr {
    pub lhs: ExprNode,
    pub relation: Relation,
    pub rhs: ExprNode,
}

impl RelationalExpr {
    pub fn to_text(&self) -> String {
        format!("{} {} {}", self.lhs, self.relation, self.rhs)
    }

    /// Symbols from both sides.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut s = self.lhs.symbols();
        s.extend(self.rhs.symbols());
        s
    }
}

#[cfg(test)]
mod tests;

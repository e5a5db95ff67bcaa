//! Recursive decomposition of expressions into a set of atomic definitions
//! over auxiliary variables plus a final linear form.
//!
//! The rewriter walks the canonical AST bottom-up. Linear structure (sums,
//! constant multiplication) is retained and passed upward; chain products
//! are reduced to binary products; `A^x` with a constant base becomes
//! `exp(x·ln A)`; every other nonlinear node is replaced by a freshly minted
//! auxiliary variable whose defining atom lands in the definition list.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::expr::{ExprNode, Relation, RelationalExpr};
use crate::registry::{RegistryError, SymbolRegistry};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NedTreeError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),
    #[error("parametric base {0} is not positive; ln is undefined")]
    NonpositiveBase(f64),
}

/// Linear combination `constant + Σ coeff·name`. Zero coefficients are
/// never stored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    #[serde(rename = "const")]
    pub constant: f64,
    pub terms: BTreeMap<String, f64>,
}

impl LinearForm {
    pub fn constant(c: f64) -> LinearForm {
        LinearForm {
            constant: c,
            terms: BTreeMap::new(),
        }
    }

    pub fn term(name: impl Into<String>, coeff: f64) -> LinearForm {
        let mut f = LinearForm::default();
        f.add_term(name.into(), coeff);
        f
    }

    pub fn add_term(&mut self, name: String, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(name.clone()).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.remove(&name);
        }
    }

    pub fn add(&mut self, other: &LinearForm) {
        self.constant += other.constant;
        for (name, coeff) in &other.terms {
            self.add_term(name.clone(), *coeff);
        }
    }

    pub fn scaled(&self, k: f64) -> LinearForm {
        let mut out = LinearForm::constant(self.constant * k);
        for (name, coeff) in &self.terms {
            out.add_term(name.clone(), coeff * k);
        }
        out
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(name)` when the form is exactly `1.0 · name`.
    pub fn single_name(&self) -> Option<&str> {
        if self.constant == 0.0 && self.terms.len() == 1 {
            let (name, coeff) = self.terms.iter().next().unwrap();
            if *coeff == 1.0 {
                return Some(name);
            }
        }
        None
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    /// Renders as grammar text, e.g. `3*x + 2*y + -10`.
    pub fn to_text(&self) -> String {
        let mut parts: Vec<String> = self
            .terms
            .iter()
            .map(|(name, coeff)| {
                if *coeff == 1.0 {
                    name.clone()
                } else {
                    format!("{}*{}", crate::expr::ExprNode::Const(*coeff), name)
                }
            })
            .collect();
        if self.constant != 0.0 || parts.is_empty() {
            parts.push(format!("{}", ExprNode::Const(self.constant)));
        }
        parts.join(" + ")
    }
}

/// One atomic definition body. Nonlinear atoms reference only variable or
/// auxiliary names (plus real constants); `Linear` is the hoisted linear
/// equality used to keep every nonlinear atom single-name-argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Atom {
    Pow { arg: String, exponent: f64 },
    Exp { arg: String },
    Log { arg: String },
    Sin { arg: String },
    Cos { arg: String },
    Abs { arg: String },
    Bilinear { left: String, right: String },
    Div {
        numerator: LinearForm,
        denominator: LinearForm,
    },
    Linear { form: LinearForm },
}

impl Atom {
    /// Names referenced by this atom (variables or earlier auxiliaries).
    pub fn referenced_names(&self) -> Vec<&str> {
        match self {
            Atom::Pow { arg, .. }
            | Atom::Exp { arg }
            | Atom::Log { arg }
            | Atom::Sin { arg }
            | Atom::Cos { arg }
            | Atom::Abs { arg } => vec![arg],
            Atom::Bilinear { left, right } => vec![left, right],
            Atom::Div {
                numerator,
                denominator,
            } => numerator.names().chain(denominator.names()).collect(),
            Atom::Linear { form } => form.names().collect(),
        }
    }

    pub fn is_nonlinear(&self) -> bool {
        !matches!(self, Atom::Linear { .. })
    }
}

/// `aux = atom`, with the provenance text of the replaced subtree kept for
/// diagnostics (not part of the wire format or equality).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomDef {
    pub aux: String,
    pub atom: Atom,
    #[serde(skip)]
    pub source_span: String,
}

impl PartialEq for AtomDef {
    fn eq(&self, other: &Self) -> bool {
        self.aux == other.aux && self.atom == other.atom
    }
}

/// The decomposition output: ordered definitions plus the final linear form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NedTreeResult {
    #[serde(rename = "definitions")]
    pub defs: Vec<AtomDef>,
    pub linear: LinearForm,
}

/// A relation decomposed against zero: `linear <relation> 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposedRelation {
    pub defs: Vec<AtomDef>,
    pub linear: LinearForm,
    pub relation: Relation,
}

/// True iff the node is a constant or a registered variable symbol
/// (parameters are assumed substituted away).
pub fn is_atomic(node: &ExprNode, registry: &SymbolRegistry) -> bool {
    match node {
        ExprNode::Const(_) => true,
        ExprNode::Symbol(name) => registry.is_variable(name),
        _ => false,
    }
}

/// Linearity test for an operator applied to already-rewritten children:
/// sums are linear, products with at most one non-constant factor are
/// linear, division by a constant is linear; everything else is not.
pub fn is_linear(node: &ExprNode, children: &[LinearForm]) -> bool {
    match node {
        ExprNode::Const(_) | ExprNode::Symbol(_) => true,
        ExprNode::Sum(_) => true,
        ExprNode::Neg(_) => true,
        ExprNode::Product(_) => children.iter().filter(|f| !f.is_constant()).count() <= 1,
        ExprNode::Div(_, _) => children.get(1).is_some_and(LinearForm::is_constant),
        ExprNode::Pow(_, _) | ExprNode::Func(_, _) => false,
    }
}

/// Decomposes an expression into `(Set_D, L_FF)`. Scalar parameters are
/// substituted first, so passing an unsubstituted tree is fine.
pub fn decompose(
    expr: &ExprNode,
    registry: &mut SymbolRegistry,
) -> Result<NedTreeResult, NedTreeError> {
    let substituted = registry.substitute_params(expr)?;
    let mut rw = Rewriter {
        registry,
        defs: Vec::new(),
    };
    let linear = rw.rewrite(&substituted)?;
    Ok(NedTreeResult {
        defs: rw.defs,
        linear,
    })
}

/// Decomposition options. Denominator clearing is off by default: it flips
/// the inequality direction when a denominator is negative, so it is sound
/// only under an explicit positivity assumption.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecomposeOptions {
    pub assume_positive_denominator: bool,
}

/// Moves every term of `rel` to the left and decomposes, yielding the
/// normalized `linear <relation> 0` plus the accumulated definitions.
pub fn decompose_relation(
    rel: &RelationalExpr,
    registry: &mut SymbolRegistry,
) -> Result<DecomposedRelation, NedTreeError> {
    decompose_relation_opts(rel, registry, DecomposeOptions::default())
}

/// [`decompose_relation`] with options. Under
/// `assume_positive_denominator`, divisions appearing as top-level summands
/// (or factors of top-level products) are cleared by multiplying the whole
/// relation through by the denominator before decomposition; divisions
/// nested inside function arguments keep the product-equality definition.
pub fn decompose_relation_opts(
    rel: &RelationalExpr,
    registry: &mut SymbolRegistry,
    options: DecomposeOptions,
) -> Result<DecomposedRelation, NedTreeError> {
    let mut diff = ExprNode::Sum(vec![
        rel.lhs.clone(),
        ExprNode::Neg(Box::new(rel.rhs.clone())),
    ])
    .canonicalize();
    if options.assume_positive_denominator {
        diff = clear_denominators(registry.substitute_params(&diff)?);
    }
    let result = decompose(&diff, registry)?;
    Ok(DecomposedRelation {
        defs: result.defs,
        linear: result.linear,
        relation: rel.relation,
    })
}

/// Multiplies the relation difference through by top-level denominators
/// until none remain. Each round strictly reduces the number of clearable
/// divisions, so the cap is just a backstop.
fn clear_denominators(expr: ExprNode) -> ExprNode {
    let mut current = expr;
    for _ in 0..32 {
        let Some(g) = find_clearable_denominator(&current) else {
            return current;
        };
        current = multiply_through(current, &g).canonicalize();
    }
    current
}

fn find_clearable_denominator(expr: &ExprNode) -> Option<ExprNode> {
    match expr {
        ExprNode::Sum(children) => children.iter().find_map(term_denominator),
        other => term_denominator(other),
    }
}

fn term_denominator(term: &ExprNode) -> Option<ExprNode> {
    match term {
        ExprNode::Div(_, den) => {
            // A constant denominator is already linear; leave it alone.
            if den.const_value().is_some() {
                None
            } else {
                Some((**den).clone())
            }
        }
        ExprNode::Product(children) => children.iter().find_map(|c| match c {
            ExprNode::Div(_, den) if den.const_value().is_none() => Some((**den).clone()),
            _ => None,
        }),
        _ => None,
    }
}

fn multiply_through(expr: ExprNode, g: &ExprNode) -> ExprNode {
    match expr {
        ExprNode::Sum(children) => ExprNode::Sum(
            children
                .into_iter()
                .map(|c| multiply_term(c, g))
                .collect(),
        ),
        other => multiply_term(other, g),
    }
}

fn multiply_term(term: ExprNode, g: &ExprNode) -> ExprNode {
    match term {
        ExprNode::Div(num, den) if *den == *g => *num,
        ExprNode::Product(children) => {
            let mut out = Vec::with_capacity(children.len() + 1);
            let mut cleared = false;
            for child in children {
                match child {
                    ExprNode::Div(num, den) if !cleared && *den == *g => {
                        out.push(*num);
                        cleared = true;
                    }
                    other => out.push(other),
                }
            }
            if !cleared {
                out.push(g.clone());
            }
            ExprNode::Product(out)
        }
        other => ExprNode::Product(vec![other, g.clone()]),
    }
}

/// Left-fold of a chain product over the given factor names: a k-factor
/// chain yields exactly k−1 bilinear atoms. Returns the definitions and the
/// final auxiliary name.
pub fn transform_chain_product(
    factors: &[String],
    registry: &mut SymbolRegistry,
) -> (Vec<AtomDef>, String) {
    assert!(factors.len() >= 2, "chain product needs at least 2 factors");
    let mut rw = Rewriter {
        registry,
        defs: Vec::new(),
    };
    let last = rw.chain_product(factors);
    (rw.defs, last)
}

/// Rewrites `A^x` (constant base, variable exponent) via `A^x = e^{x ln A}`:
/// the constant `c = ln A` is computed at rewrite time, the inner linear
/// form `c·x` is hoisted to an auxiliary when it is not already a bare name,
/// and a final exponential atom is emitted. The degenerate base `A = 1`
/// yields the constant form 1 with zero atoms.
pub fn transform_param_base_power(
    base: f64,
    exponent: &ExprNode,
    registry: &mut SymbolRegistry,
) -> Result<(Vec<AtomDef>, LinearForm), NedTreeError> {
    let substituted = registry.substitute_params(exponent)?;
    let mut rw = Rewriter {
        registry,
        defs: Vec::new(),
    };
    let ef = rw.rewrite(&substituted)?;
    let form = rw.param_base_power(base, ef, &substituted.to_text())?;
    Ok((rw.defs, form))
}

struct Rewriter<'r> {
    registry: &'r mut SymbolRegistry,
    defs: Vec<AtomDef>,
}

impl Rewriter<'_> {
    fn rewrite(&mut self, node: &ExprNode) -> Result<LinearForm, NedTreeError> {
        match node {
            ExprNode::Const(v) => Ok(LinearForm::constant(*v)),
            ExprNode::Symbol(name) => {
                if self.registry.is_variable(name) {
                    Ok(LinearForm::term(name.clone(), 1.0))
                } else if self.registry.is_parameter(name) {
                    // Pre-substitution makes this unreachable for scalars.
                    Err(RegistryError::NonScalarParameterInExpression(name.clone()).into())
                } else {
                    Err(RegistryError::UnregisteredSymbol(name.clone()).into())
                }
            }
            ExprNode::Sum(children) => {
                let mut acc = LinearForm::default();
                for child in children {
                    let f = self.rewrite(child)?;
                    acc.add(&f);
                }
                Ok(acc)
            }
            ExprNode::Neg(child) => Ok(self.rewrite(child)?.scaled(-1.0)),
            ExprNode::Product(children) => self.rewrite_product(node, children),
            ExprNode::Pow(base, exp) => self.rewrite_pow(node, base, exp),
            ExprNode::Div(num, den) => self.rewrite_div(node, num, den),
            ExprNode::Func(name, arg) => {
                let af = self.rewrite(arg)?;
                let arg_name = self.ensure_name(af, &arg.to_text());
                let (atom, lower) = match name {
                    crate::expr::FuncName::Exp => (Atom::Exp { arg: arg_name }, 0.0),
                    crate::expr::FuncName::Log => {
                        (Atom::Log { arg: arg_name }, f64::NEG_INFINITY)
                    }
                    crate::expr::FuncName::Sin => {
                        (Atom::Sin { arg: arg_name }, f64::NEG_INFINITY)
                    }
                    crate::expr::FuncName::Cos => {
                        (Atom::Cos { arg: arg_name }, f64::NEG_INFINITY)
                    }
                    crate::expr::FuncName::Abs => (Atom::Abs { arg: arg_name }, 0.0),
                };
                let aux = self.define(atom, lower, f64::INFINITY, node.to_text());
                Ok(LinearForm::term(aux, 1.0))
            }
        }
    }

    fn rewrite_product(
        &mut self,
        node: &ExprNode,
        children: &[ExprNode],
    ) -> Result<LinearForm, NedTreeError> {
        let mut coeff = 1.0;
        let mut factors: Vec<(LinearForm, String)> = Vec::new();
        for child in children {
            let f = self.rewrite(child)?;
            if f.is_constant() {
                coeff *= f.constant;
            } else {
                factors.push((f, child.to_text()));
            }
        }
        let _ = node;
        if coeff == 0.0 || factors.is_empty() {
            return Ok(LinearForm::constant(coeff));
        }
        if factors.len() == 1 {
            // Constant multiplication keeps the linear structure.
            let (form, _) = factors.into_iter().next().unwrap();
            return Ok(form.scaled(coeff));
        }
        let names: Vec<String> = factors
            .into_iter()
            .map(|(f, text)| self.ensure_name(f, &text))
            .collect();
        let last = self.chain_product(&names);
        Ok(LinearForm::term(last, coeff))
    }

    fn chain_product(&mut self, names: &[String]) -> String {
        let mut acc = names[0].clone();
        let mut span = names[0].clone();
        for name in &names[1..] {
            span = format!("{}*{}", span, name);
            let lower = if acc == *name { 0.0 } else { f64::NEG_INFINITY };
            acc = self.define(
                Atom::Bilinear {
                    left: acc.clone(),
                    right: name.clone(),
                },
                lower,
                f64::INFINITY,
                span.clone(),
            );
        }
        acc
    }

    fn rewrite_pow(
        &mut self,
        node: &ExprNode,
        base: &ExprNode,
        exp: &ExprNode,
    ) -> Result<LinearForm, NedTreeError> {
        let bf = self.rewrite(base)?;
        let ef = self.rewrite(exp)?;
        if ef.is_constant() {
            let e = ef.constant;
            if bf.is_constant() {
                let v = bf.constant.powf(e);
                if v.is_finite() {
                    return Ok(LinearForm::constant(v));
                }
                return Err(NedTreeError::UnsupportedStructure(format!(
                    "constant power {}^{} has no finite value",
                    bf.constant, e
                )));
            }
            if e == 0.0 {
                return Ok(LinearForm::constant(1.0));
            }
            if e == 1.0 {
                return Ok(bf);
            }
            let arg = self.ensure_name(bf, &base.to_text());
            if e == 2.0 {
                // Squares go through the natively supported quadratic form.
                let aux = self.define(
                    Atom::Bilinear {
                        left: arg.clone(),
                        right: arg,
                    },
                    0.0,
                    f64::INFINITY,
                    node.to_text(),
                );
                return Ok(LinearForm::term(aux, 1.0));
            }
            let lower = if e.fract() == 0.0 && (e as i64) % 2 == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            let aux = self.define(
                Atom::Pow { arg, exponent: e },
                lower,
                f64::INFINITY,
                node.to_text(),
            );
            return Ok(LinearForm::term(aux, 1.0));
        }
        if bf.is_constant() {
            return self.param_base_power(bf.constant, ef, &node.to_text());
        }
        Err(NedTreeError::UnsupportedStructure(
            "variable base with variable exponent (x^y) is outside the atom set".to_string(),
        ))
    }

    fn param_base_power(
        &mut self,
        base: f64,
        exponent_form: LinearForm,
        span: &str,
    ) -> Result<LinearForm, NedTreeError> {
        if base <= 0.0 {
            return Err(NedTreeError::NonpositiveBase(base));
        }
        if base == 1.0 {
            return Ok(LinearForm::constant(1.0));
        }
        let c = base.ln();
        let inner = exponent_form.scaled(c);
        if inner.is_constant() {
            return Ok(LinearForm::constant(inner.constant.exp()));
        }
        let inner_name = self.ensure_name(inner, span);
        let aux = self.define(
            Atom::Exp { arg: inner_name },
            0.0,
            f64::INFINITY,
            span.to_string(),
        );
        Ok(LinearForm::term(aux, 1.0))
    }

    fn rewrite_div(
        &mut self,
        node: &ExprNode,
        num: &ExprNode,
        den: &ExprNode,
    ) -> Result<LinearForm, NedTreeError> {
        let nf = self.rewrite(num)?;
        let df = self.rewrite(den)?;
        if df.is_constant() {
            if df.constant == 0.0 {
                return Err(NedTreeError::UnsupportedStructure(
                    "division by constant zero".to_string(),
                ));
            }
            return Ok(nf.scaled(1.0 / df.constant));
        }
        // Kept as a product-equality definition y·den = num; algebraic
        // clearing is unsound without denominator sign knowledge.
        let aux = self.define(
            Atom::Div {
                numerator: nf,
                denominator: df,
            },
            f64::NEG_INFINITY,
            f64::INFINITY,
            node.to_text(),
        );
        Ok(LinearForm::term(aux, 1.0))
    }

    /// Returns the form's bare name, or mints an auxiliary defined by a
    /// linear equality so downstream atoms get a single-name argument.
    fn ensure_name(&mut self, form: LinearForm, span: &str) -> String {
        if let Some(name) = form.single_name() {
            return name.to_string();
        }
        self.define(
            Atom::Linear { form },
            f64::NEG_INFINITY,
            f64::INFINITY,
            span.to_string(),
        )
    }

    fn define(&mut self, atom: Atom, lower: f64, upper: f64, span: String) -> String {
        let decl = self.registry.mint_aux(lower, upper);
        self.defs.push(AtomDef {
            aux: decl.name.clone(),
            atom,
            source_span: span,
        });
        decl.name
    }
}

#[cfg(test)]
mod tests;

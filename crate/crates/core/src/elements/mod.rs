//! The structured elements pool: parameters, variables, constraints,
//! objective, and conditional constraints aggregated from per-sentence
//! extraction, plus the derived nonlinear set and routing gate.

pub mod schema;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use crate::expr::{ExprError, ExprNode, RelOp, Relation, RelationalExpr};
use crate::nedtree::NedTreeError;
use crate::registry::{ParameterDecl, RegistryError, SymbolRegistry, VariableDecl};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ElementsError {
    #[error("no objective found in any sentence")]
    NoObjectiveFound,
    #[error("conflicting objective senses: {0:?}")]
    ConflictingObjectives(Vec<String>),
    #[error("cannot parse {context}: {source}")]
    UnparseableExpression {
        context: String,
        source: ExprError,
    },
    #[error("malformed pool document: {0}")]
    BadDocument(String),
    #[error("unregistered symbols in pool expressions: {0:?}")]
    UnregisteredSymbols(Vec<String>),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Decompose(#[from] NedTreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Min => "min",
            Sense::Max => "max",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProblemType {
    #[serde(rename = "MILP")]
    Milp,
    #[serde(rename = "NLP")]
    Nlp,
}

/// A named constraint with traceability back to the sentences that
/// produced it. `sentence_refs` may be empty only for synthesized
/// (non-extracted) constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintElem {
    pub name: String,
    pub expression: RelationalExpr,
    pub source_text: String,
    pub sentence_refs: Vec<usize>,
}

/// `IF trigger THEN consequence`, both sides normalized against zero:
/// `lhs ⟨<=|=⟩ 0`, with `>=` flipped by negation and strictness kept as a
/// flag on the relation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalConstraint {
    pub trigger: RelationalExpr,
    pub consequence: RelationalExpr,
    pub sentence_refs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub sense: Sense,
    pub expression: ExprNode,
    pub source_text: String,
    pub sentence_ref: Option<usize>,
}

/// Aggregated, deduplicated problem elements plus the derived nonlinear
/// set and gate. `b_nl` is true exactly when `nlset` is nonempty.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementsPool {
    pub params: Vec<ParameterDecl>,
    pub vars: Vec<VariableDecl>,
    pub constraints: Vec<ConstraintElem>,
    pub conditionals: Vec<ConditionalConstraint>,
    pub objective: Objective,
    pub problem_type: ProblemType,
    pub nlset: Vec<ExprNode>,
    pub b_nl: bool,
    pub warnings: Vec<String>,
}

impl ElementsPool {
    /// Builds a registry over this pool's parameters and variables.
    pub fn build_registry(&self) -> Result<SymbolRegistry, RegistryError> {
        let mut reg = SymbolRegistry::new();
        for p in &self.params {
            reg.add_param(p.name.clone(), p.value.clone())?;
        }
        for v in &self.vars {
            reg.add_var(v.clone())?;
        }
        Ok(reg)
    }

    /// Closure check: every symbol in any expression must be registered.
    pub fn validate(&self) -> Result<(), ElementsError> {
        let reg = self.build_registry()?;
        let mut free: Vec<String> = Vec::new();
        let mut check = |expr: &ExprNode| {
            for s in expr.symbols() {
                if !reg.is_parameter(&s) && !reg.is_variable(&s) && !free.contains(&s) {
                    free.push(s);
                }
            }
        };
        check(&self.objective.expression);
        for c in &self.constraints {
            check(&c.expression.lhs);
            check(&c.expression.rhs);
        }
        for c in &self.conditionals {
            check(&c.trigger.lhs);
            check(&c.consequence.lhs);
        }
        if free.is_empty() {
            Ok(())
        } else {
            Err(ElementsError::UnregisteredSymbols(free))
        }
    }
}

/// Raw per-sentence extraction payload, already structured but with
/// expressions still in text form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentenceExtraction {
    pub index: usize,
    pub params: Vec<ParameterDecl>,
    pub vars: Vec<VariableDecl>,
    pub constraints: Vec<RawConstraint>,
    pub conditionals: Vec<RawConditional>,
    pub objective: Option<RawObjective>,
    pub problem_type: Option<ProblemType>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawConstraint {
    pub name: String,
    pub text: String,
    pub sentence_refs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawConditional {
    pub if_text: String,
    pub then_text: String,
    pub sentence_refs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawObjective {
    pub sentence_text: String,
    pub expression_text: String,
    pub sentence_ref: Option<usize>,
}

/// Whole-document first-pass extraction output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BirdeyeExtraction {
    pub params: Vec<ParameterDecl>,
    pub vars: Vec<VariableDecl>,
    /// Opaque annotated record of everything else the first pass reported.
    pub base_info: serde_json::Value,
}

/// Deduplicated union of all per-sentence extractions with the bird's-eye
/// pass. Birdeye parameters/variables win conflicts (with a recorded
/// warning); constraints dedup by the canonical normalized relation, not by
/// raw text; exactly one objective is retained (first occurrence wins).
pub fn aggregate(
    sentences: &[SentenceExtraction],
    birdeye: &BirdeyeExtraction,
) -> Result<ElementsPool, ElementsError> {
    let mut warnings = Vec::new();

    let mut params: BTreeMap<String, ParameterDecl> = BTreeMap::new();
    let mut param_order: Vec<String> = Vec::new();
    let mut vars: BTreeMap<String, VariableDecl> = BTreeMap::new();
    let mut var_order: Vec<String> = Vec::new();

    for s in sentences {
        for p in &s.params {
            merge_param(&mut params, &mut param_order, p, &mut warnings, false);
        }
        for v in &s.vars {
            merge_var(&mut vars, &mut var_order, v, &mut warnings, false);
        }
    }
    for p in &birdeye.params {
        merge_param(&mut params, &mut param_order, p, &mut warnings, true);
    }
    for v in &birdeye.vars {
        merge_var(&mut vars, &mut var_order, v, &mut warnings, true);
    }

    // Constraints dedup on the canonical normalized relation.
    let mut constraints: Vec<ConstraintElem> = Vec::new();
    let mut keys: BTreeMap<String, usize> = BTreeMap::new();
    for s in sentences {
        for rc in &s.constraints {
            let rel = match crate::expr::parse_relation(&rc.text) {
                Ok(rel) => rel,
                Err(e) => {
                    warnings.push(format!(
                        "skipping unparseable constraint {:?} (sentence {}): {}",
                        rc.text, s.index, e
                    ));
                    continue;
                }
            };
            let key = dedup_key(&rel);
            match keys.get(&key) {
                Some(&i) => {
                    let refs = &mut constraints[i].sentence_refs;
                    for r in &rc.sentence_refs {
                        if !refs.contains(r) {
                            refs.push(*r);
                        }
                    }
                    refs.sort_unstable();
                }
                None => {
                    keys.insert(key, constraints.len());
                    constraints.push(ConstraintElem {
                        name: rc.name.clone(),
                        expression: rel,
                        source_text: rc.text.clone(),
                        sentence_refs: rc.sentence_refs.clone(),
                    });
                }
            }
        }
    }

    let mut conditionals: Vec<ConditionalConstraint> = Vec::new();
    let mut cond_keys: BTreeMap<String, usize> = BTreeMap::new();
    for s in sentences {
        for rc in &s.conditionals {
            let cond = match normalize_conditional_texts(&rc.if_text, &rc.then_text) {
                Ok(mut c) => {
                    c.sentence_refs = rc.sentence_refs.clone();
                    c
                }
                Err(e) => {
                    warnings.push(format!(
                        "skipping unparseable conditional IF {:?} THEN {:?} (sentence {}): {}",
                        rc.if_text, rc.then_text, s.index, e
                    ));
                    continue;
                }
            };
            let key = format!(
                "{}|{}",
                dedup_key(&cond.trigger),
                dedup_key(&cond.consequence)
            );
            match cond_keys.get(&key) {
                Some(&i) => {
                    let refs = &mut conditionals[i].sentence_refs;
                    for r in &cond.sentence_refs {
                        if !refs.contains(r) {
                            refs.push(*r);
                        }
                    }
                    refs.sort_unstable();
                }
                None => {
                    cond_keys.insert(key, conditionals.len());
                    conditionals.push(cond);
                }
            }
        }
    }

    // First objective wins; later duplicates are warned about, and a sense
    // disagreement is an error.
    let mut objective: Option<Objective> = None;
    for s in sentences {
        if let Some(raw) = &s.objective {
            let sense = detect_sense(&raw.sentence_text).unwrap_or_else(|| {
                warnings.push(format!(
                    "objective sentence {:?} has no explicit sense; defaulting to min",
                    raw.sentence_text
                ));
                Sense::Min
            });
            let expression = crate::expr::parse_source(&raw.expression_text).map_err(|e| {
                ElementsError::UnparseableExpression {
                    context: format!("objective expression {:?}", raw.expression_text),
                    source: e,
                }
            })?;
            match &objective {
                None => {
                    objective = Some(Objective {
                        sense,
                        expression,
                        source_text: raw.sentence_text.clone(),
                        sentence_ref: raw.sentence_ref,
                    })
                }
                Some(kept) => {
                    if kept.sense != sense {
                        return Err(ElementsError::ConflictingObjectives(vec![
                            kept.source_text.clone(),
                            raw.sentence_text.clone(),
                        ]));
                    }
                    warnings.push(format!(
                        "duplicate objective from sentence {:?} ignored (first occurrence wins)",
                        raw.sentence_text
                    ));
                }
            }
        }
    }
    let objective = objective.ok_or(ElementsError::NoObjectiveFound)?;

    let mut problem_type: Option<ProblemType> = None;
    for s in sentences {
        if let Some(pt) = s.problem_type {
            match problem_type {
                None => problem_type = Some(pt),
                Some(kept) if kept != pt => {
                    warnings.push("sentences disagree on problem type".to_string());
                }
                _ => {}
            }
        }
    }

    let mut pool = ElementsPool {
        params: param_order.iter().map(|n| params[n].clone()).collect(),
        vars: var_order.iter().map(|n| vars[n].clone()).collect(),
        constraints,
        conditionals,
        objective,
        problem_type: problem_type.unwrap_or(ProblemType::Milp),
        nlset: Vec::new(),
        b_nl: false,
        warnings,
    };
    let registry = pool.build_registry()?;
    let (nlset, b_nl) = derive_nlset(&pool, &registry);
    pool.nlset = nlset;
    pool.b_nl = b_nl;

    // The extracted problem type is advisory; the gate does the routing.
    let advisory_nl = pool.problem_type == ProblemType::Nlp;
    if advisory_nl != pool.b_nl {
        pool.warnings.push(format!(
            "extracted problem type {:?} disagrees with derived nonlinearity gate b_nl={}",
            pool.problem_type, pool.b_nl
        ));
    }
    Ok(pool)
}

fn merge_param(
    map: &mut BTreeMap<String, ParameterDecl>,
    order: &mut Vec<String>,
    decl: &ParameterDecl,
    warnings: &mut Vec<String>,
    birdeye_wins: bool,
) {
    match map.get(&decl.name) {
        None => {
            order.push(decl.name.clone());
            map.insert(decl.name.clone(), decl.clone());
        }
        Some(existing) if existing.value == decl.value => {}
        Some(existing) => {
            if birdeye_wins {
                warnings.push(format!(
                    "parameter '{}': birdeye value {:?} overrides sentence value {:?}",
                    decl.name, decl.value, existing.value
                ));
                map.insert(decl.name.clone(), decl.clone());
            } else {
                warnings.push(format!(
                    "parameter '{}': keeping earlier value {:?}, ignoring {:?}",
                    decl.name, existing.value, decl.value
                ));
            }
        }
    }
}

fn merge_var(
    map: &mut BTreeMap<String, VariableDecl>,
    order: &mut Vec<String>,
    decl: &VariableDecl,
    warnings: &mut Vec<String>,
    birdeye_wins: bool,
) {
    match map.get(&decl.name) {
        None => {
            order.push(decl.name.clone());
            map.insert(decl.name.clone(), decl.clone());
        }
        Some(existing) if existing == decl => {}
        Some(_) => {
            if birdeye_wins {
                warnings.push(format!(
                    "variable '{}': birdeye declaration overrides sentence declaration",
                    decl.name
                ));
                map.insert(decl.name.clone(), decl.clone());
            } else {
                warnings.push(format!(
                    "variable '{}': keeping earlier declaration",
                    decl.name
                ));
            }
        }
    }
}

/// Canonical dedup key for a relation: normalized `lhs - rhs` rendered from
/// the canonical AST, joined with the relation operator.
fn dedup_key(rel: &RelationalExpr) -> String {
    let diff = ExprNode::Sum(vec![
        rel.lhs.clone(),
        ExprNode::Neg(Box::new(rel.rhs.clone())),
    ])
    .canonicalize();
    format!("{} {} 0", diff.to_text(), rel.relation)
}

/// Maps an objective sentence onto a sense, if it names one.
pub fn detect_sense(text: &str) -> Option<Sense> {
    let t = text.to_lowercase();
    const MIN: &[&str] = &["minimiz", "minimum", "smallest", "lowest", "least", "fewest"];
    const MAX: &[&str] = &["maximiz", "maximum", "largest", "highest", "greatest", "most profit"];
    if MIN.iter().any(|k| t.contains(k)) {
        return Some(Sense::Min);
    }
    if MAX.iter().any(|k| t.contains(k)) {
        return Some(Sense::Max);
    }
    None
}

/// Scans the objective and every constraint for nonlinear sub-elements
/// (after best-effort parameter substitution) and returns the set plus the
/// gate flag. Conditional constraints are excluded: they map to a dedicated
/// solver construct, not the decomposition flow.
pub fn derive_nlset(pool: &ElementsPool, registry: &SymbolRegistry) -> (Vec<ExprNode>, bool) {
    let mut out: Vec<ExprNode> = Vec::new();
    let mut seen: Vec<String> = Vec::new();

    let mut scan = |expr: &ExprNode| {
        let substituted = registry
            .substitute_params(expr)
            .unwrap_or_else(|_| expr.clone());
        collect_nonlinear(&substituted, &mut |node| {
            let key = node.to_text();
            if !seen.contains(&key) {
                seen.push(key);
                out.push(node.clone());
            }
        });
    };

    scan(&pool.objective.expression);
    for c in &pool.constraints {
        scan(&c.expression.lhs);
        scan(&c.expression.rhs);
    }
    let b_nl = !out.is_empty();
    (out, b_nl)
}

/// Walks to the maximal nonlinear subtrees: a node is a nonlinear root when
/// it is a power or function touching a symbol, a division with a symbol in
/// the denominator, or a product of two or more symbol-bearing factors.
fn collect_nonlinear(node: &ExprNode, sink: &mut impl FnMut(&ExprNode)) {
    let has_symbols = |n: &ExprNode| !n.symbols().is_empty();
    match node {
        ExprNode::Pow(_, _) if has_symbols(node) => sink(node),
        ExprNode::Func(_, _) if has_symbols(node) => sink(node),
        ExprNode::Div(num, den) => {
            if has_symbols(den) {
                sink(node);
            } else {
                collect_nonlinear(num, sink);
            }
        }
        ExprNode::Product(children) => {
            if children.iter().filter(|c| has_symbols(c)).count() >= 2 {
                sink(node);
            } else {
                for c in children {
                    collect_nonlinear(c, sink);
                }
            }
        }
        ExprNode::Sum(children) => {
            for c in children {
                collect_nonlinear(c, sink);
            }
        }
        ExprNode::Neg(child) => collect_nonlinear(child, sink),
        _ => {}
    }
}

/// Normalizes an `IF <relation> THEN <relation>` pair: each side becomes
/// `lhs - rhs ⟨<=|=⟩ 0`, with `>=` flipped to `<=` by negation. Strict
/// triggers keep their flag for codegen's epsilon handling.
pub fn normalize_conditional(
    trigger: &RelationalExpr,
    consequence: &RelationalExpr,
) -> ConditionalConstraint {
    ConditionalConstraint {
        trigger: normalize_relation(trigger),
        consequence: normalize_relation(consequence),
        sentence_refs: Vec::new(),
    }
}

fn normalize_conditional_texts(
    if_text: &str,
    then_text: &str,
) -> Result<ConditionalConstraint, ElementsError> {
    let trigger = crate::expr::parse_relation(if_text).map_err(|e| {
        ElementsError::UnparseableExpression {
            context: format!("conditional trigger {:?}", if_text),
            source: e,
        }
    })?;
    let consequence = crate::expr::parse_relation(then_text).map_err(|e| {
        ElementsError::UnparseableExpression {
            context: format!("conditional consequence {:?}", then_text),
            source: e,
        }
    })?;
    Ok(normalize_conditional(&trigger, &consequence))
}

fn normalize_relation(rel: &RelationalExpr) -> RelationalExpr {
    let diff = ExprNode::Sum(vec![
        rel.lhs.clone(),
        ExprNode::Neg(Box::new(rel.rhs.clone())),
    ])
    .canonicalize();
    let (lhs, op) = match rel.relation.op {
        RelOp::Le => (diff, RelOp::Le),
        RelOp::Eq => (diff, RelOp::Eq),
        RelOp::Ge => (ExprNode::Neg(Box::new(diff)).canonicalize(), RelOp::Le),
    };
    RelationalExpr {
        lhs,
        relation: Relation {
            op,
            strict: rel.relation.strict,
        },
        rhs: ExprNode::Const(0.0),
    }
}

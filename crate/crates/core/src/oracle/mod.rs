//! Independent numeric verifier: evaluates an original expression and its
//! decomposition (forward-solving the definitions) at sampled points and
//! certifies equivalence. This module never reuses the rewriter's logic —
//! it is the check on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::expr::{ExprNode, FuncName};
use crate::nedtree::{Atom, LinearForm, NedTreeResult};
use crate::registry::SymbolRegistry;

/// Domain failures that would otherwise surface as NaN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainViolation {
    LogNonpositive,
    DivisionByZero,
    ZeroToNegative,
    FractionalPowerOfNegativeBase,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("missing variable '{0}' in assignment")]
    MissingVariable(String),
    #[error("domain violation: {0:?}")]
    Domain(DomainViolation),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("all samples rejected after {attempts} draws; domains too tight")]
    AllSamplesRejected { attempts: usize },
    #[error("variable '{0}' has an empty sampling interval")]
    EmptySampleInterval(String),
}

/// A point assignment for the original variables.
pub type Assignment = BTreeMap<String, f64>;

/// Recursive evaluation of the original AST at a point.
pub fn eval_expr(expr: &ExprNode, a: &Assignment) -> Result<f64, EvalError> {
    let v = match expr {
        ExprNode::Const(c) => *c,
        ExprNode::Symbol(name) => *a
            .get(name)
            .ok_or_else(|| EvalError::MissingVariable(name.clone()))?,
        ExprNode::Sum(children) => {
            let mut acc = 0.0;
            for c in children {
                acc += eval_expr(c, a)?;
            }
            acc
        }
        ExprNode::Product(children) => {
            let mut acc = 1.0;
            for c in children {
                acc *= eval_expr(c, a)?;
            }
            acc
        }
        ExprNode::Pow(base, exp) => {
            let b = eval_expr(base, a)?;
            let e = eval_expr(exp, a)?;
            checked_pow(b, e)?
        }
        ExprNode::Div(num, den) => {
            let n = eval_expr(num, a)?;
            let d = eval_expr(den, a)?;
            if d == 0.0 {
                return Err(EvalError::Domain(DomainViolation::DivisionByZero));
            }
            n / d
        }
        ExprNode::Func(name, arg) => {
            let x = eval_expr(arg, a)?;
            match name {
                FuncName::Exp => x.exp(),
                FuncName::Log => {
                    if x <= 0.0 {
                        return Err(EvalError::Domain(DomainViolation::LogNonpositive));
                    }
                    x.ln()
                }
                FuncName::Sin => x.sin(),
                FuncName::Cos => x.cos(),
                FuncName::Abs => x.abs(),
            }
        }
        ExprNode::Neg(child) => -eval_expr(child, a)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain(DomainViolation::NonFinite))
    }
}

fn checked_pow(b: f64, e: f64) -> Result<f64, EvalError> {
    if b == 0.0 && e < 0.0 {
        return Err(EvalError::Domain(DomainViolation::ZeroToNegative));
    }
    if b < 0.0 && e.fract() != 0.0 {
        return Err(EvalError::Domain(
            DomainViolation::FractionalPowerOfNegativeBase,
        ));
    }
    Ok(b.powf(e))
}

// Terms sum first and the constant last, mirroring the canonical AST's
// constant-last sums so linear inputs compare exactly.
fn eval_linear(form: &LinearForm, values: &Assignment) -> Result<f64, EvalError> {
    let mut acc = 0.0;
    for (name, coeff) in &form.terms {
        let v = values
            .get(name)
            .ok_or_else(|| EvalError::MissingVariable(name.clone()))?;
        acc += coeff * v;
    }
    Ok(acc + form.constant)
}

/// Forward-solves the definitions top-down (their topological order is the
/// list order), then evaluates the final linear form.
pub fn eval_decomposed(result: &NedTreeResult, a: &Assignment) -> Result<f64, EvalError> {
    let mut values = a.clone();
    for def in &result.defs {
        let v = match &def.atom {
            Atom::Pow { arg, exponent } => {
                let x = lookup(&values, arg)?;
                checked_pow(x, *exponent)?
            }
            Atom::Exp { arg } => lookup(&values, arg)?.exp(),
            Atom::Log { arg } => {
                let x = lookup(&values, arg)?;
                if x <= 0.0 {
                    return Err(EvalError::Domain(DomainViolation::LogNonpositive));
                }
                x.ln()
            }
            Atom::Sin { arg } => lookup(&values, arg)?.sin(),
            Atom::Cos { arg } => lookup(&values, arg)?.cos(),
            Atom::Abs { arg } => lookup(&values, arg)?.abs(),
            Atom::Bilinear { left, right } => lookup(&values, left)? * lookup(&values, right)?,
            Atom::Div {
                numerator,
                denominator,
            } => {
                let n = eval_linear(numerator, &values)?;
                let d = eval_linear(denominator, &values)?;
                if d == 0.0 {
                    return Err(EvalError::Domain(DomainViolation::DivisionByZero));
                }
                n / d
            }
            Atom::Linear { form } => eval_linear(form, &values)?,
        };
        if !v.is_finite() {
            return Err(EvalError::Domain(DomainViolation::NonFinite));
        }
        values.insert(def.aux.clone(), v);
    }
    let out = eval_linear(&result.linear, &values)?;
    if out.is_finite() {
        Ok(out)
    } else {
        Err(EvalError::Domain(DomainViolation::NonFinite))
    }
}

fn lookup(values: &Assignment, name: &str) -> Result<f64, EvalError> {
    values
        .get(name)
        .copied()
        .ok_or_else(|| EvalError::MissingVariable(name.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of an equivalence check over sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub samples: usize,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub rejected_samples: usize,
    pub verdict: Verdict,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Compares `expr` against its decomposition on `n_samples` points drawn
/// uniformly within variable bounds (unbounded sides default to ±10).
/// Variables feeding log arguments or fractional-power bases sample from
/// [1e-3, 10]; denominator variables resample away from 0 by 1e-3. Points
/// where either side reports a domain violation are rejected and redrawn,
/// up to `10·n_samples` total rejections.
pub fn check_equivalence(
    expr: &ExprNode,
    result: &NedTreeResult,
    registry: &SymbolRegistry,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<EquivalenceReport, OracleError> {
    assert!(n_samples >= 1, "need at least one sample");
    // Compare at the source's parameter values.
    let expr = &registry
        .substitute_params(expr)
        .unwrap_or_else(|_| expr.clone());
    let vars: Vec<String> = expr
        .symbols()
        .into_iter()
        .filter(|s| registry.is_variable(s))
        .collect();
    let domains = DomainHints::analyze(expr);

    let mut intervals = Vec::with_capacity(vars.len());
    for name in &vars {
        let decl = registry.vars.get(name);
        let (dlo, dhi) = decl.map(|d| (d.lower, d.upper)).unwrap_or((
            f64::NEG_INFINITY,
            f64::INFINITY,
        ));
        let mut lo = if dlo.is_finite() { dlo } else { -10.0 };
        let hi = if dhi.is_finite() { dhi } else { 10.0 };
        if domains.positive.contains(name) {
            lo = lo.max(1e-3);
        }
        if lo > hi {
            return Err(OracleError::EmptySampleInterval(name.clone()));
        }
        intervals.push((name.clone(), lo, hi));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut max_abs_err: f64 = 0.0;
    let mut max_rel_err: f64 = 0.0;
    let mut rejected = 0usize;
    let mut accepted = 0usize;
    let budget = 10 * n_samples;

    while accepted < n_samples {
        let mut point = Assignment::new();
        for (name, lo, hi) in &intervals {
            let mut v = if lo == hi { *lo } else { rng.gen_range(*lo..*hi) };
            if domains.nonzero.contains(name) && v.abs() < 1e-3 {
                v = if v >= 0.0 { v + 1e-3 } else { v - 1e-3 };
            }
            point.insert(name.clone(), v);
        }
        let reference = eval_expr(expr, &point);
        let decomposed = eval_decomposed(result, &point);
        match (reference, decomposed) {
            (Ok(r), Ok(d)) => {
                accepted += 1;
                let abs = (r - d).abs();
                max_abs_err = max_abs_err.max(abs);
                max_rel_err = max_rel_err.max(abs / (1.0 + r.abs()));
            }
            (Err(EvalError::MissingVariable(name)), _)
            | (_, Err(EvalError::MissingVariable(name))) => {
                return Err(EvalError::MissingVariable(name).into());
            }
            _ => {
                rejected += 1;
                if rejected >= budget {
                    return Err(OracleError::AllSamplesRejected { attempts: budget });
                }
            }
        }
    }

    let verdict = if max_rel_err <= tol && rejected < accepted {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(EquivalenceReport {
        samples: accepted,
        max_abs_err,
        max_rel_err,
        rejected_samples: rejected,
        verdict,
    })
}

/// Variables needing positive or nonzero sampling, discovered structurally.
struct DomainHints {
    positive: BTreeSet<String>,
    nonzero: BTreeSet<String>,
}

impl DomainHints {
    fn analyze(expr: &ExprNode) -> DomainHints {
        let mut hints = DomainHints {
            positive: BTreeSet::new(),
            nonzero: BTreeSet::new(),
        };
        hints.walk(expr);
        hints
    }

    fn walk(&mut self, node: &ExprNode) {
        match node {
            ExprNode::Func(FuncName::Log, arg) => {
                self.positive.extend(arg.symbols());
                self.walk(arg);
            }
            ExprNode::Pow(base, exp) => {
                let fractional = matches!(**exp, ExprNode::Const(e) if e.fract() != 0.0 || e < 0.0);
                if fractional {
                    self.positive.extend(base.symbols());
                }
                self.walk(base);
                self.walk(exp);
            }
            ExprNode::Div(num, den) => {
                self.nonzero.extend(den.symbols());
                self.walk(num);
                self.walk(den);
            }
            ExprNode::Sum(children) | ExprNode::Product(children) => {
                for c in children {
                    self.walk(c);
                }
            }
            ExprNode::Func(_, arg) | ExprNode::Neg(arg) => self.walk(arg),
            ExprNode::Const(_) | ExprNode::Symbol(_) => {}
        }
    }
}

//! Symbol registration: every symbol is either a parameter (constant
//! coefficient, with a value) or a variable (optimization subject, with a
//! type and bounds). Auxiliary variables are minted here so names stay
//! unique across a decomposition run.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use crate::expr::ExprNode;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegistryError {
    #[error("symbol '{0}' is not registered as a parameter or variable")]
    UnregisteredSymbol(String),
    #[error("parameter '{0}' has a list/map value and cannot appear as a scalar expression symbol; pre-index it (e.g. cost_A)")]
    NonScalarParameterInExpression(String),
    #[error("name '{0}' is already registered")]
    DuplicateName(String),
    #[error("variable '{name}': lower bound {lower} exceeds upper bound {upper}")]
    InvertedBounds { name: String, lower: f64, upper: f64 },
    #[error("parameter '{0}' has a non-finite value")]
    NonFiniteValue(String),
    #[error("cannot parse range string {0:?}")]
    BadRange(String),
}

/// Scalar, list, or string-keyed map payload of a parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
    Map(BTreeMap<String, f64>),
}

impl ParamValue {
    pub fn kind(&self) -> &'static str {
        match self {
            ParamValue::Scalar(_) => "scalar",
            ParamValue::List(_) => "list",
            ParamValue::Map(_) => "map",
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            ParamValue::Scalar(v) => v.is_finite(),
            ParamValue::List(vs) => vs.iter().all(|v| v.is_finite()),
            ParamValue::Map(m) => m.values().all(|v| v.is_finite()),
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            ParamValue::Scalar(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDecl {
    pub name: String,
    pub value: ParamValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarType {
    Continuous,
    Integer,
    Binary,
}

impl fmt::Display for VarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarType::Continuous => "continuous",
            VarType::Integer => "integer",
            VarType::Binary => "binary",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDecl {
    pub name: String,
    pub vartype: VarType,
    /// `-inf` when unbounded below.
    #[serde(with = "bound_serde")]
    pub lower: f64,
    /// `+inf` when unbounded above.
    #[serde(with = "bound_serde")]
    pub upper: f64,
}

/// JSON has no infinities; bounds serialize as a number or the strings
/// `"inf"` / `"-inf"`.
mod bound_serde {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct BoundVisitor;
        impl<'de> Visitor<'de> for BoundVisitor {
            type Value = f64;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"inf\"/\"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                    "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                    _ => Err(E::custom(format!("bad bound string {:?}", v))),
                }
            }
        }
        d.deserialize_any(BoundVisitor)
    }
}

impl VariableDecl {
    pub fn new(
        name: impl Into<String>,
        vartype: VarType,
        lower: f64,
        upper: f64,
    ) -> Result<VariableDecl, RegistryError> {
        let name = name.into();
        // Binary variables always live in [0, 1].
        let (lower, upper) = match vartype {
            VarType::Binary => (0.0, 1.0),
            _ => (lower, upper),
        };
        if lower > upper {
            return Err(RegistryError::InvertedBounds { name, lower, upper });
        }
        Ok(VariableDecl {
            name,
            vartype,
            lower,
            upper,
        })
    }

    pub fn continuous(name: impl Into<String>) -> VariableDecl {
        VariableDecl {
            name: name.into(),
            vartype: VarType::Continuous,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }
}

/// Classification result for a symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Parameter,
    Variable,
}

/// Partition of all symbols into parameters and variables, plus the mint
/// counter for auxiliary names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SymbolRegistry {
    pub params: BTreeMap<String, ParameterDecl>,
    pub vars: BTreeMap<String, VariableDecl>,
    aux_counter: usize,
}

impl SymbolRegistry {
    pub fn new() -> SymbolRegistry {
        SymbolRegistry::default()
    }

    pub fn aux_counter(&self) -> usize {
        self.aux_counter
    }

    pub fn add_param(
        &mut self,
        name: impl Into<String>,
        value: ParamValue,
    ) -> Result<(), RegistryError> {
        let name = name.into();
        if !value.is_finite() {
            return Err(RegistryError::NonFiniteValue(name));
        }
        if self.params.contains_key(&name) || self.vars.contains_key(&name) {
            return Err(RegistryError::DuplicateName(name));
        }
        self.params.insert(name.clone(), ParameterDecl { name, value });
        Ok(())
    }

    pub fn add_scalar_param(
        &mut self,
        name: impl Into<String>,
        value: f64,
    ) -> Result<(), RegistryError> {
        self.add_param(name, ParamValue::Scalar(value))
    }

    pub fn add_var(&mut self, decl: VariableDecl) -> Result<(), RegistryError> {
        if self.params.contains_key(&decl.name) || self.vars.contains_key(&decl.name) {
            return Err(RegistryError::DuplicateName(decl.name));
        }
        self.vars.insert(decl.name.clone(), decl);
        Ok(())
    }

    pub fn is_variable(&self, name: &str) -> bool {
        self.vars.contains_key(name)
    }

    pub fn is_parameter(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    /// Labels every symbol in `expr` with the registry's classification.
    /// A symbol absent from both sets signals an extraction omission.
    pub fn classify(
        &self,
        expr: &ExprNode,
    ) -> Result<BTreeMap<String, SymbolKind>, RegistryError> {
        let mut out = BTreeMap::new();
        for name in expr.symbols() {
            let kind = if self.is_parameter(&name) {
                SymbolKind::Parameter
            } else if self.is_variable(&name) {
                SymbolKind::Variable
            } else {
                return Err(RegistryError::UnregisteredSymbol(name));
            };
            out.insert(name, kind);
        }
        Ok(out)
    }

    /// Mints a fresh continuous auxiliary variable `y_temp_{k}` and
    /// registers it. Calls must be externally serialized.
    pub fn mint_aux(&mut self, lower: f64, upper: f64) -> VariableDecl {
        self.aux_counter += 1;
        let decl = VariableDecl {
            name: format!("y_temp_{}", self.aux_counter),
            vartype: VarType::Continuous,
            lower,
            upper,
        };
        self.vars.insert(decl.name.clone(), decl.clone());
        decl
    }

    /// Mints a fresh binary trigger variable `b_cond_{k}` for indicator
    /// constraints, keeping the name distinct from the `y_temp` pool.
    pub fn mint_binary(&mut self, tag: usize) -> VariableDecl {
        let mut name = format!("b_cond_{}", tag);
        let mut n = tag;
        while self.vars.contains_key(&name) || self.params.contains_key(&name) {
            n += 1;
            name = format!("b_cond_{}", n);
        }
        let decl = VariableDecl {
            name,
            vartype: VarType::Binary,
            lower: 0.0,
            upper: 1.0,
        };
        self.vars.insert(decl.name.clone(), decl.clone());
        decl
    }

    /// Replaces parameter symbols by `Const` of their scalar values and
    /// re-applies constant folding. Variable symbols are untouched.
    pub fn substitute_params(&self, expr: &ExprNode) -> Result<ExprNode, RegistryError> {
        let substituted = self.substitute_inner(expr)?;
        Ok(substituted.canonicalize())
    }

    fn substitute_inner(&self, expr: &ExprNode) -> Result<ExprNode, RegistryError> {
        Ok(match expr {
            ExprNode::Const(v) => ExprNode::Const(*v),
            ExprNode::Symbol(name) => match self.params.get(name) {
                Some(p) => match p.value.as_scalar() {
                    Some(v) => ExprNode::Const(v),
                    None => {
                        return Err(RegistryError::NonScalarParameterInExpression(name.clone()))
                    }
                },
                None => ExprNode::Symbol(name.clone()),
            },
            ExprNode::Sum(children) => ExprNode::Sum(
                children
                    .iter()
                    .map(|c| self.substitute_inner(c))
                    .collect::<Result<_, _>>()?,
            ),
            ExprNode::Product(children) => ExprNode::Product(
                children
                    .iter()
                    .map(|c| self.substitute_inner(c))
                    .collect::<Result<_, _>>()?,
            ),
            ExprNode::Pow(b, e) => ExprNode::Pow(
                Box::new(self.substitute_inner(b)?),
                Box::new(self.substitute_inner(e)?),
            ),
            ExprNode::Div(n, d) => ExprNode::Div(
                Box::new(self.substitute_inner(n)?),
                Box::new(self.substitute_inner(d)?),
            ),
            ExprNode::Func(f, a) => ExprNode::Func(*f, Box::new(self.substitute_inner(a)?)),
            ExprNode::Neg(c) => ExprNode::Neg(Box::new(self.substitute_inner(c)?)),
        })
    }
}

/// Parses a `Range` string from the variables-list schema into bounds.
/// Accepted shapes: `a <= x <= b`, `x >= a`, `x <= b`, `a <= x`, and the
/// bare `>= a` / `<= b`.
pub fn parse_range(range: &str) -> Result<(f64, f64), RegistryError> {
    let s = range.trim();
    if s.is_empty() {
        return Ok((f64::NEG_INFINITY, f64::INFINITY));
    }
    let parts: Vec<&str> = s.split("<=").map(str::trim).collect();
    match parts.len() {
        3 => {
            // a <= x <= b
            let lo = parse_bound(parts[0])?;
            let hi = parse_bound(parts[2])?;
            return Ok((lo, hi));
        }
        2 => {
            // Either "a <= x" or "x <= b" (or "<= b" with empty lhs).
            if let Ok(lo) = parse_bound(parts[0]) {
                return Ok((lo, f64::INFINITY));
            }
            if let Ok(hi) = parse_bound(parts[1]) {
                return Ok((f64::NEG_INFINITY, hi));
            }
            return Err(RegistryError::BadRange(range.to_string()));
        }
        _ => {}
    }
    let parts: Vec<&str> = s.split(">=").map(str::trim).collect();
    if parts.len() == 2 {
        if let Ok(lo) = parse_bound(parts[1]) {
            return Ok((lo, f64::INFINITY));
        }
        if let Ok(hi) = parse_bound(parts[0]) {
            return Ok((f64::NEG_INFINITY, hi));
        }
    }
    Err(RegistryError::BadRange(range.to_string()))
}

fn parse_bound(s: &str) -> Result<f64, RegistryError> {
    let t = s.trim();
    match t {
        "-inf" | "-infinity" => return Ok(f64::NEG_INFINITY),
        "inf" | "+inf" | "infinity" => return Ok(f64::INFINITY),
        _ => {}
    }
    t.parse::<f64>()
        .map_err(|_| RegistryError::BadRange(s.to_string()))
}

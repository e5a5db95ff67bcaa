//! Serde mirror of the extraction JSON templates: a parameters list
//! (`Parameters_List` of `{Name, Type, Value}` entries) and the per-sentence
//! document (`Sentence_Scanning`, `Variables_List`, `Constraint_Table`,
//! `Objective`, `Problem_Type`). The loader accepts these documents
//! verbatim; the same shapes serve as the on-disk pool format.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::{
    aggregate, BirdeyeExtraction, ElementsError, ElementsPool, ProblemType, RawConditional,
    RawConstraint, RawObjective, SentenceExtraction,
};
use crate::registry::{parse_range, ParamValue, ParameterDecl, VarType, VariableDecl};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParametersDoc {
    #[serde(rename = "Parameters_List", default)]
    pub parameters: Vec<ParameterEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParameterEntry {
    #[serde(rename = "Name")]
    pub name: String,
    #[serde(rename = "Type", default)]
    pub typ: String,
    #[serde(rename = "Value")]
    pub value: serde_json::Value,
}

impl ParameterEntry {
    pub fn to_decl(&self) -> Result<ParameterDecl, String> {
        let value = json_to_param_value(&self.value)
            .ok_or_else(|| format!("parameter '{}' has a non-numeric value", self.name))?;
        Ok(ParameterDecl {
            name: self.name.clone(),
            value,
        })
    }
}

fn json_to_param_value(v: &serde_json::Value) -> Option<ParamValue> {
    match v {
        serde_json::Value::Number(n) => Some(ParamValue::Scalar(n.as_f64()?)),
        serde_json::Value::Array(items) => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                out.push(item.as_f64()?);
            }
            Some(ParamValue::List(out))
        }
        serde_json::Value::Object(map) => {
            let mut out = BTreeMap::new();
            for (k, item) in map {
                out.insert(k.clone(), item.as_f64()?);
            }
            Some(ParamValue::Map(out))
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariableEntry {
    pub symbol: String,
    #[serde(rename = "Meaning", default)]
    pub meaning: String,
    #[serde(rename = "Type", default)]
    pub typ: String,
    #[serde(rename = "Range", alias = "Range ", default)]
    pub range: String,
}

impl VariableEntry {
    pub fn to_decl(&self) -> Result<VariableDecl, String> {
        let t = self.typ.to_lowercase();
        let vartype = if t.contains("bin") {
            VarType::Binary
        } else if t.contains("int") {
            VarType::Integer
        } else {
            VarType::Continuous
        };
        let (lower, upper) =
            parse_range(&self.range).map_err(|e| format!("variable '{}': {}", self.symbol, e))?;
        VariableDecl::new(self.symbol.clone(), vartype, lower, upper)
            .map_err(|e| format!("variable '{}': {}", self.symbol, e))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectiveDoc {
    #[serde(rename = "Objective_sentence", default)]
    pub sentence: String,
    #[serde(rename = "Mathematical_expressions", default)]
    pub expression: String,
}

/// The per-sentence (and whole-pool) document shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceDoc {
    #[serde(rename = "Sentence_Scanning", default)]
    pub sentence_scanning: Vec<Vec<String>>,
    #[serde(rename = "Variables_List", default)]
    pub variables: Vec<VariableEntry>,
    #[serde(rename = "Constraint_Table", default)]
    pub constraints: Vec<Vec<String>>,
    #[serde(rename = "Objective", default)]
    pub objective: Option<ObjectiveDoc>,
    #[serde(rename = "Problem_Type", default)]
    pub problem_type: Option<String>,
    #[serde(rename = "Parameters_List", default)]
    pub parameters: Vec<ParameterEntry>,
}

impl SentenceDoc {
    /// Converts the document into a [`SentenceExtraction`] attributed to
    /// sentence `index`. Constraint rows whose expression reads
    /// `IF ... THEN ...` become conditional payloads.
    pub fn into_extraction(self, index: usize) -> Result<SentenceExtraction, String> {
        let mut out = SentenceExtraction {
            index,
            ..SentenceExtraction::default()
        };
        for p in &self.parameters {
            out.params.push(p.to_decl()?);
        }
        for v in &self.variables {
            out.vars.push(v.to_decl()?);
        }
        for row in &self.constraints {
            if row.len() < 2 {
                return Err(format!("constraint row too short: {:?}", row));
            }
            let name = row[0].clone();
            let text = row[1].clone();
            let mut refs = row
                .get(2)
                .map(|s| parse_sentence_numbers(s))
                .unwrap_or_default();
            if refs.is_empty() {
                refs.push(index);
            }
            match split_if_then(&text) {
                Some((if_text, then_text)) => out.conditionals.push(RawConditional {
                    if_text,
                    then_text,
                    sentence_refs: refs,
                }),
                None => out.constraints.push(RawConstraint {
                    name,
                    text,
                    sentence_refs: refs,
                }),
            }
        }
        if let Some(obj) = &self.objective {
            if !obj.expression.trim().is_empty() {
                out.objective = Some(RawObjective {
                    sentence_text: obj.sentence.clone(),
                    expression_text: obj.expression.clone(),
                    sentence_ref: Some(index),
                });
            }
        }
        out.problem_type = match self.problem_type.as_deref().map(str::trim) {
            Some("MILP") => Some(ProblemType::Milp),
            Some("NLP") => Some(ProblemType::Nlp),
            _ => None,
        };
        Ok(out)
    }
}

/// Pulls the digits out of a `sentence numbers:1,2` cell.
pub fn parse_sentence_numbers(s: &str) -> Vec<usize> {
    let tail = s.rsplit(':').next().unwrap_or(s);
    let mut out: Vec<usize> = tail
        .split(|c: char| !c.is_ascii_digit())
        .filter(|chunk| !chunk.is_empty())
        .filter_map(|chunk| chunk.parse().ok())
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Splits an `IF <trigger> THEN <consequence>` expression (case-insensitive).
pub fn split_if_then(text: &str) -> Option<(String, String)> {
    let upper = text.to_uppercase();
    let t = upper.trim_start();
    let offset = text.len() - t.len();
    if !t.starts_with("IF ") {
        return None;
    }
    let then_at = upper.find(" THEN ")?;
    let if_part = text[offset + 3..then_at].trim().to_string();
    let then_part = text[then_at + 6..].trim().to_string();
    Some((if_part, then_part))
}

/// Loads a whole pool from one document carrying the extraction-schema keys
/// (parameters, variables, constraint table, objective, problem type).
pub fn load_pool_json(doc: &serde_json::Value) -> Result<ElementsPool, ElementsError> {
    let sentence_doc: SentenceDoc = serde_json::from_value(doc.clone())
        .map_err(|e| ElementsError::BadDocument(e.to_string()))?;
    let extraction = sentence_doc
        .into_extraction(1)
        .map_err(ElementsError::BadDocument)?;
    aggregate(&[extraction], &BirdeyeExtraction::default())
}

/// Serializes a pool back into the document shape (inverse of
/// [`load_pool_json`] up to sentence bookkeeping).
pub fn pool_to_json(pool: &ElementsPool) -> serde_json::Value {
    let parameters: Vec<ParameterEntry> = pool
        .params
        .iter()
        .map(|p| ParameterEntry {
            name: p.name.clone(),
            typ: p.value.kind().to_string(),
            value: serde_json::to_value(&p.value).unwrap(),
        })
        .collect();
    let variables: Vec<VariableEntry> = pool
        .vars
        .iter()
        .map(|v| VariableEntry {
            symbol: v.name.clone(),
            meaning: String::new(),
            typ: v.vartype.to_string(),
            range: format_range(v),
        })
        .collect();
    let mut constraints: Vec<Vec<String>> = pool
        .constraints
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                c.expression.to_text(),
                format!(
                    "sentence numbers:{}",
                    c.sentence_refs
                        .iter()
                        .map(|r| r.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                ),
            ]
        })
        .collect();
    for c in &pool.conditionals {
        constraints.push(vec![
            "conditional".to_string(),
            format!(
                "IF {} THEN {}",
                c.trigger.to_text(),
                c.consequence.to_text()
            ),
            format!(
                "sentence numbers:{}",
                c.sentence_refs
                    .iter()
                    .map(|r| r.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        ]);
    }
    serde_json::json!({
        "Parameters_List": parameters,
        "Variables_List": variables,
        "Constraint_Table": constraints,
        "Objective": {
            "Objective_sentence": pool.objective.source_text,
            "Mathematical_expressions": pool.objective.expression.to_text(),
        },
        "Problem_Type": match pool.problem_type {
            ProblemType::Milp => "MILP",
            ProblemType::Nlp => "NLP",
        },
    })
}

fn format_range(v: &VariableDecl) -> String {
    match (v.lower.is_finite(), v.upper.is_finite()) {
        (true, true) => format!("{} <= {} <= {}", v.lower, v.name, v.upper),
        (true, false) => format!("{} >= {}", v.name, v.lower),
        (false, true) => format!("{} <= {}", v.name, v.upper),
        (false, false) => String::new(),
    }
}

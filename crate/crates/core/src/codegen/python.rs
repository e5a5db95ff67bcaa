//! Python source emitter driven by a backend profile. Output is
//! deterministic: identical IR yields byte-identical source, and constraints
//! appear in IR order.

use std::collections::BTreeMap;

use super::{BackendProfile, CodegenError, LinearConstraint, SolverIR};
use crate::elements::Sense;
use crate::expr::{RelOp, Relation};
use crate::nedtree::{Atom, LinearForm};
use crate::registry::VarType;

const PYTHON_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if",
    "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try",
    "while", "with", "yield",
    // Shadowing these would break the generated script.
    "gp", "GRB", "model", "print",
];

/// Emits solver source for the IR under the given profile. Every atom kind
/// present in the IR must be native to the profile.
pub fn emit(ir: &SolverIR, profile: &BackendProfile) -> Result<String, CodegenError> {
    profile.validate()?;
    for def in &ir.general_atoms {
        profile.api_for(atom_kind(&def.atom))?;
    }
    if !ir.indicators.is_empty() && !profile.indicator_support {
        return Err(CodegenError::UnsupportedAtomForBackend {
            kind: "indicator".to_string(),
            backend: profile.name.clone(),
        });
    }
    for ind in &ir.indicators {
        if ind.trigger.relation.op == RelOp::Eq {
            // The complement of an equality trigger is not expressible as a
            // single indicator constraint.
            return Err(CodegenError::UnsupportedAtomForBackend {
                kind: "indicator-equality-trigger".to_string(),
                backend: profile.name.clone(),
            });
        }
    }

    let names = NameTable::build(ir);
    let eps = profile.strict_inequality_epsilon;
    let mut out = String::new();
    let push = |out: &mut String, line: &str| {
        out.push_str(line);
        out.push('\n');
    };

    push(&mut out, &format!("# Model source emitted for backend profile '{}'.", profile.name));
    let renamed: Vec<(&String, &String)> = names
        .mangled
        .iter()
        .filter(|(orig, py)| orig != py)
        .collect();
    if !renamed.is_empty() {
        push(&mut out, "# Renamed identifiers (python := model):");
        for (orig, py) in renamed {
            push(&mut out, &format!("#   {} := {}", py, orig));
        }
    }
    push(&mut out, "import gurobipy as gp");
    push(&mut out, "from gurobipy import GRB");
    push(&mut out, "");
    push(&mut out, "model = gp.Model(\"nedtree_model\")");
    if !ir.quadratic_equalities.is_empty() || !ir.div_equalities.is_empty() {
        push(&mut out, "model.Params.NonConvex = 2");
    }
    push(&mut out, "");

    push(&mut out, "# Variables");
    for v in &ir.variables {
        let vtype = match v.vartype {
            VarType::Continuous => "GRB.CONTINUOUS",
            VarType::Integer => "GRB.INTEGER",
            VarType::Binary => "GRB.BINARY",
        };
        push(
            &mut out,
            &format!(
                "{} = model.addVar(lb={}, ub={}, vtype={}, name=\"{}\")",
                names.py(&v.name),
                bound_text(v.lower),
                bound_text(v.upper),
                vtype,
                escape(&v.name)
            ),
        );
    }
    push(&mut out, "");

    if !ir.linear_constraints.is_empty() {
        push(&mut out, "# Linear constraints");
        for c in &ir.linear_constraints {
            push(
                &mut out,
                &format!(
                    "model.addConstr({}, name=\"{}\")",
                    relation_text(c, eps, &names),
                    escape(&c.name)
                ),
            );
        }
        push(&mut out, "");
    }

    if !ir.quadratic_equalities.is_empty() {
        push(&mut out, "# Bilinear definitions (quadratic equalities)");
        for q in &ir.quadratic_equalities {
            push(
                &mut out,
                &format!(
                    "model.addConstr({} == {} * {}, name=\"quad_{}\")",
                    names.py(&q.aux),
                    names.py(&q.left),
                    names.py(&q.right),
                    escape(&q.aux)
                ),
            );
        }
        push(&mut out, "");
    }

    if !ir.general_atoms.is_empty() {
        push(&mut out, "# General constraints (atomic definitions)");
        for def in &ir.general_atoms {
            let line = match &def.atom {
                Atom::Pow { arg, exponent } => format!(
                    "model.{}({}, {}, {}, name=\"gen_{}\")",
                    profile.api_for("pow")?,
                    names.py(arg),
                    names.py(&def.aux),
                    num(*exponent),
                    escape(&def.aux)
                ),
                Atom::Exp { arg } => format!(
                    "model.{}({}, {}, name=\"gen_{}\")",
                    profile.api_for("exp")?,
                    names.py(arg),
                    names.py(&def.aux),
                    escape(&def.aux)
                ),
                Atom::Log { arg } => format!(
                    "model.{}({}, {}, name=\"gen_{}\")",
                    profile.api_for("log")?,
                    names.py(arg),
                    names.py(&def.aux),
                    escape(&def.aux)
                ),
                Atom::Sin { arg } => format!(
                    "model.{}({}, {}, name=\"gen_{}\")",
                    profile.api_for("sin")?,
                    names.py(arg),
                    names.py(&def.aux),
                    escape(&def.aux)
                ),
                Atom::Cos { arg } => format!(
                    "model.{}({}, {}, name=\"gen_{}\")",
                    profile.api_for("cos")?,
                    names.py(arg),
                    names.py(&def.aux),
                    escape(&def.aux)
                ),
                // The result variable comes first in the abs API.
                Atom::Abs { arg } => format!(
                    "model.{}({}, {}, name=\"gen_{}\")",
                    profile.api_for("abs")?,
                    names.py(&def.aux),
                    names.py(arg),
                    escape(&def.aux)
                ),
                other => {
                    return Err(CodegenError::UnsupportedAtomForBackend {
                        kind: atom_kind(other).to_string(),
                        backend: profile.name.clone(),
                    })
                }
            };
            push(&mut out, &line);
        }
        push(&mut out, "");
    }

    if !ir.div_equalities.is_empty() {
        push(&mut out, "# Division definitions: aux * denominator == numerator");
        for d in &ir.div_equalities {
            push(
                &mut out,
                &format!(
                    "model.addConstr({} * ({}) == ({}), name=\"div_{}\")",
                    names.py(&d.aux),
                    linear_text(&d.denominator, &names),
                    linear_text(&d.numerator, &names),
                    escape(&d.aux)
                ),
            );
        }
        push(&mut out, "");
    }

    if !ir.indicators.is_empty() {
        push(&mut out, "# Indicator constraints (binary <-> trigger, binary -> consequence)");
        for ind in &ir.indicators {
            let b = names.py(&ind.binary_var);
            // b = 1 forces the trigger; b = 0 forces its complement. Strict
            // triggers close exactly on the off side; non-strict ones take
            // the epsilon there.
            let (on, off) = trigger_pair(&ind.trigger, eps);
            push(
                &mut out,
                &format!(
                    "model.addGenConstrIndicator({}, True, {}, name=\"{}\")",
                    b,
                    inline_relation(&on, &names),
                    escape(&ind.trigger.name)
                ),
            );
            push(
                &mut out,
                &format!(
                    "model.addGenConstrIndicator({}, False, {}, name=\"{}_off\")",
                    b,
                    inline_relation(&off, &names),
                    escape(&ind.trigger.name)
                ),
            );
            push(
                &mut out,
                &format!(
                    "model.addGenConstrIndicator({}, True, {}, name=\"{}\")",
                    b,
                    relation_text(&ind.consequence, eps, &names),
                    escape(&ind.consequence.name)
                ),
            );
        }
        push(&mut out, "");
    }

    push(&mut out, "# Objective");
    let sense = match ir.objective.sense {
        Sense::Min => "GRB.MINIMIZE",
        Sense::Max => "GRB.MAXIMIZE",
    };
    push(
        &mut out,
        &format!(
            "model.setObjective({}, {})",
            linear_text(&ir.objective.linear, &names),
            sense
        ),
    );
    push(&mut out, "");
    push(&mut out, "model.optimize()");
    push(&mut out, "if model.SolCount > 0:");
    push(&mut out, "    print(f\"OBJECTIVE: {model.ObjVal}\")");
    push(&mut out, "else:");
    push(&mut out, "    print(f\"STATUS: {model.Status}\")");
    Ok(out)
}

fn atom_kind(atom: &Atom) -> &'static str {
    match atom {
        Atom::Pow { .. } => "pow",
        Atom::Exp { .. } => "exp",
        Atom::Log { .. } => "log",
        Atom::Sin { .. } => "sin",
        Atom::Cos { .. } => "cos",
        Atom::Abs { .. } => "abs",
        Atom::Bilinear { .. } => "bilinear",
        Atom::Div { .. } => "div",
        Atom::Linear { .. } => "linear",
    }
}

fn num(v: f64) -> String {
    format!("{}", crate::expr::ExprNode::Const(v))
}

fn bound_text(v: f64) -> String {
    if v == f64::INFINITY {
        "GRB.INFINITY".to_string()
    } else if v == f64::NEG_INFINITY {
        "-GRB.INFINITY".to_string()
    } else {
        num(v)
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn linear_text(form: &LinearForm, names: &NameTable) -> String {
    let mut parts: Vec<String> = form
        .terms
        .iter()
        .map(|(name, coeff)| format!("{} * {}", num(*coeff), names.py(name)))
        .collect();
    if form.constant != 0.0 || parts.is_empty() {
        parts.push(num(form.constant));
    }
    parts.join(" + ")
}

/// Renders `linear <relation> 0`, shifting strict inequalities by epsilon:
/// `F < 0` becomes `F + eps <= 0`, `F > 0` becomes `F - eps >= 0`.
fn relation_text(c: &LinearConstraint, eps: f64, names: &NameTable) -> String {
    let shifted = shift_strict(c, eps);
    inline_relation(&shifted, names)
}

fn shift_strict(c: &LinearConstraint, eps: f64) -> LinearConstraint {
    let mut out = c.clone();
    if c.relation.strict {
        match c.relation.op {
            RelOp::Le => out.linear.constant += eps,
            RelOp::Ge => out.linear.constant -= eps,
            RelOp::Eq => {}
        }
        out.relation = Relation {
            op: c.relation.op,
            strict: false,
        };
    }
    out
}

fn inline_relation(c: &LinearConstraint, names: &NameTable) -> String {
    let op = match c.relation.op {
        RelOp::Le => "<=",
        RelOp::Ge => ">=",
        RelOp::Eq => "==",
    };
    format!("{} {} 0", linear_text(&c.linear, names), op)
}

/// For a `<=`-or-`>=` trigger: the constraint forced when the binary is on,
/// and the complement forced when it is off.
fn trigger_pair(trigger: &LinearConstraint, eps: f64) -> (LinearConstraint, LinearConstraint) {
    let on = shift_strict(trigger, eps);
    let mut off = trigger.clone();
    off.relation = Relation {
        op: match trigger.relation.op {
            RelOp::Le => RelOp::Ge,
            RelOp::Ge => RelOp::Le,
            RelOp::Eq => RelOp::Eq,
        },
        strict: false,
    };
    if !trigger.relation.strict {
        // Complement of a closed half-space is open; close it by epsilon.
        match off.relation.op {
            RelOp::Ge => off.linear.constant -= eps,
            RelOp::Le => off.linear.constant += eps,
            RelOp::Eq => {}
        }
    }
    (on, off)
}

/// Identifier-safe mangling of IR names with a reversible map.
struct NameTable {
    mangled: BTreeMap<String, String>,
}

impl NameTable {
    fn build(ir: &SolverIR) -> NameTable {
        let mut mangled = BTreeMap::new();
        let mut taken: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
        for v in &ir.variables {
            let mut base: String = v
                .name
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
                .collect();
            if base.is_empty() || base.chars().next().unwrap().is_ascii_digit() {
                base.insert(0, 'v');
            }
            if PYTHON_KEYWORDS.contains(&base.as_str()) {
                base.push('_');
            }
            let mut candidate = base.clone();
            let mut n = 1;
            while !taken.insert(candidate.clone()) {
                n += 1;
                candidate = format!("{}_{}", base, n);
            }
            mangled.insert(v.name.clone(), candidate);
        }
        NameTable { mangled }
    }

    fn py<'a>(&'a self, name: &'a str) -> &'a str {
        self.mangled.get(name).map(String::as_str).unwrap_or(name)
    }
}

//! Mapping from decomposition output to solver code: a backend-neutral
//! [`SolverIR`] built once, then emitted as backend-specific source through
//! a solver-knowledge profile. The backend enters only at emit time.

mod neutral;
mod profile;
mod python;

pub use neutral::{emit_neutral, load_neutral};
pub use profile::{AtomCapability, BackendProfile};
pub use python::emit;

use serde::{Deserialize, Serialize};

use crate::elements::{ElementsPool, Sense};
use crate::expr::Relation;
use crate::nedtree::{
    decompose, decompose_relation_opts, Atom, AtomDef, DecomposeOptions, DecomposedRelation,
    LinearForm, NedTreeError, NedTreeResult,
};
use crate::registry::{SymbolRegistry, VariableDecl};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodegenError {
    #[error("auxiliary '{0}' is referenced but never defined")]
    DanglingAux(String),
    #[error("auxiliary '{0}' is defined more than once")]
    DuplicateDefinition(String),
    #[error("atom kind '{kind}' is not supported by backend '{backend}'")]
    UnsupportedAtomForBackend { kind: String, backend: String },
    #[error("bad backend profile: {0}")]
    BadProfile(String),
    #[error(transparent)]
    Decompose(#[from] NedTreeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub linear: LinearForm,
    pub relation: Relation,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadEquality {
    pub aux: String,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivEquality {
    pub aux: String,
    pub numerator: LinearForm,
    pub denominator: LinearForm,
}

/// One conditional constraint: the binary variable equals the truth of the
/// trigger, and forces the consequence when set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Indicator {
    pub binary_var: String,
    pub trigger: LinearConstraint,
    pub consequence: LinearConstraint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveIR {
    pub sense: Sense,
    pub linear: LinearForm,
}

/// Backend-neutral model document. Field order is the emission order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverIR {
    pub ir_version: u32,
    pub variables: Vec<VariableDecl>,
    pub linear_constraints: Vec<LinearConstraint>,
    pub quadratic_equalities: Vec<QuadEquality>,
    pub general_atoms: Vec<AtomDef>,
    pub div_equalities: Vec<DivEquality>,
    pub indicators: Vec<Indicator>,
    pub objective: ObjectiveIR,
}

pub const IR_VERSION: u32 = 1;

/// Decomposition results for every element of a pool, in pool order.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedPool {
    pub objective: NedTreeResult,
    pub constraints: Vec<DecomposedRelation>,
    pub conditionals: Vec<(DecomposedRelation, DecomposedRelation)>,
}

/// IR-construction options: the relation-level decomposition options plus
/// an optional denominator guard emitting `denominator >= eps` for every
/// division definition (off by default).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IrOptions {
    pub decompose: DecomposeOptions,
    pub denominator_guard: Option<f64>,
}

/// Decomposes the objective, every constraint, and both sides of every
/// conditional. The registry accumulates the minted auxiliaries.
pub fn decompose_pool(
    pool: &ElementsPool,
    registry: &mut SymbolRegistry,
) -> Result<DecomposedPool, NedTreeError> {
    decompose_pool_opts(pool, registry, DecomposeOptions::default())
}

pub fn decompose_pool_opts(
    pool: &ElementsPool,
    registry: &mut SymbolRegistry,
    options: DecomposeOptions,
) -> Result<DecomposedPool, NedTreeError> {
    let objective = decompose(&pool.objective.expression, registry)?;
    let mut constraints = Vec::with_capacity(pool.constraints.len());
    for c in &pool.constraints {
        constraints.push(decompose_relation_opts(&c.expression, registry, options)?);
    }
    let mut conditionals = Vec::with_capacity(pool.conditionals.len());
    for c in &pool.conditionals {
        let trigger = decompose_relation_opts(&c.trigger, registry, options)?;
        let consequence = decompose_relation_opts(&c.consequence, registry, options)?;
        conditionals.push((trigger, consequence));
    }
    Ok(DecomposedPool {
        objective,
        constraints,
        conditionals,
    })
}

/// Assembles the backend-neutral IR: linear parts map directly to linear
/// constraints, each atom is routed by kind, and conditionals become
/// indicator entries with a minted binary trigger variable.
pub fn build_ir(
    pool: &ElementsPool,
    decomposed: &DecomposedPool,
    registry: &mut SymbolRegistry,
) -> Result<SolverIR, CodegenError> {
    build_ir_opts(pool, decomposed, registry, IrOptions::default())
}

pub fn build_ir_opts(
    pool: &ElementsPool,
    decomposed: &DecomposedPool,
    registry: &mut SymbolRegistry,
    options: IrOptions,
) -> Result<SolverIR, CodegenError> {
    let mut ir = SolverIR {
        ir_version: IR_VERSION,
        variables: Vec::new(),
        linear_constraints: Vec::new(),
        quadratic_equalities: Vec::new(),
        general_atoms: Vec::new(),
        div_equalities: Vec::new(),
        indicators: Vec::new(),
        objective: ObjectiveIR {
            sense: pool.objective.sense,
            linear: decomposed.objective.linear.clone(),
        },
    };

    let mut defined: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    let mut route = |defs: &[AtomDef], ir: &mut SolverIR| -> Result<(), CodegenError> {
        for def in defs {
            if !defined.insert(def.aux.clone()) {
                return Err(CodegenError::DuplicateDefinition(def.aux.clone()));
            }
            match &def.atom {
                Atom::Bilinear { left, right } => ir.quadratic_equalities.push(QuadEquality {
                    aux: def.aux.clone(),
                    left: left.clone(),
                    right: right.clone(),
                }),
                Atom::Div {
                    numerator,
                    denominator,
                } => ir.div_equalities.push(DivEquality {
                    aux: def.aux.clone(),
                    numerator: numerator.clone(),
                    denominator: denominator.clone(),
                }),
                Atom::Linear { form } => {
                    // aux = form, expressed as form - aux = 0.
                    let mut linear = form.clone();
                    linear.add_term(def.aux.clone(), -1.0);
                    ir.linear_constraints.push(LinearConstraint {
                        linear,
                        relation: Relation::EQ,
                        name: format!("def_{}", def.aux),
                    });
                }
                _ => ir.general_atoms.push(def.clone()),
            }
        }
        Ok(())
    };

    route(&decomposed.objective.defs, &mut ir)?;
    for (elem, dec) in pool.constraints.iter().zip(&decomposed.constraints) {
        route(&dec.defs, &mut ir)?;
        ir.linear_constraints.push(LinearConstraint {
            linear: dec.linear.clone(),
            relation: dec.relation,
            name: elem.name.clone(),
        });
    }
    for (i, (cond, (trig, cons))) in pool
        .conditionals
        .iter()
        .zip(&decomposed.conditionals)
        .enumerate()
    {
        route(&trig.defs, &mut ir)?;
        route(&cons.defs, &mut ir)?;
        let binary = registry.mint_binary(i + 1);
        let _ = cond;
        ir.indicators.push(Indicator {
            binary_var: binary.name,
            trigger: LinearConstraint {
                linear: trig.linear.clone(),
                relation: trig.relation,
                name: format!("cond_{}_trigger", i + 1),
            },
            consequence: LinearConstraint {
                linear: cons.linear.clone(),
                relation: cons.relation,
                name: format!("cond_{}_consequence", i + 1),
            },
        });
    }

    if let Some(eps) = options.denominator_guard {
        for d in ir.div_equalities.clone() {
            let mut linear = d.denominator.clone();
            linear.constant -= eps;
            ir.linear_constraints.push(LinearConstraint {
                linear,
                relation: Relation::GE,
                name: format!("den_guard_{}", d.aux),
            });
        }
    }

    // Variable order: pool originals, then auxiliaries in mint order, then
    // the binary trigger variables.
    for v in &pool.vars {
        ir.variables.push(v.clone());
    }
    for k in 1..=registry.aux_counter() {
        let name = format!("y_temp_{}", k);
        if let Some(decl) = registry.vars.get(&name) {
            ir.variables.push(decl.clone());
        }
    }
    for ind in &ir.indicators {
        if let Some(decl) = registry.vars.get(&ind.binary_var) {
            ir.variables.push(decl.clone());
        }
    }

    check_references(&ir, &defined)?;
    Ok(ir)
}

/// Every referenced name must be a declared variable, and every `y_temp`
/// reference must have a defining row.
fn check_references(
    ir: &SolverIR,
    defined: &std::collections::BTreeSet<String>,
) -> Result<(), CodegenError> {
    let declared: std::collections::BTreeSet<&str> =
        ir.variables.iter().map(|v| v.name.as_str()).collect();
    let check_name = |name: &str| -> Result<(), CodegenError> {
        if !declared.contains(name) {
            return Err(CodegenError::DanglingAux(name.to_string()));
        }
        if name.starts_with("y_temp_") && !defined.contains(name) {
            return Err(CodegenError::DanglingAux(name.to_string()));
        }
        Ok(())
    };
    let check_form = |form: &LinearForm| -> Result<(), CodegenError> {
        for name in form.names() {
            check_name(name)?;
        }
        Ok(())
    };
    for c in &ir.linear_constraints {
        check_form(&c.linear)?;
    }
    for q in &ir.quadratic_equalities {
        check_name(&q.aux)?;
        check_name(&q.left)?;
        check_name(&q.right)?;
    }
    for def in &ir.general_atoms {
        check_name(&def.aux)?;
        for n in def.atom.referenced_names() {
            check_name(n)?;
        }
    }
    for d in &ir.div_equalities {
        check_name(&d.aux)?;
        check_form(&d.numerator)?;
        check_form(&d.denominator)?;
    }
    for ind in &ir.indicators {
        check_name(&ind.binary_var)?;
        check_form(&ind.trigger.linear)?;
        check_form(&ind.consequence.linear)?;
    }
    check_form(&ir.objective.linear)?;
    Ok(())
}

/// Convenience: decompose a pool and build its IR in one step.
pub fn pool_to_ir(pool: &ElementsPool) -> Result<SolverIR, CodegenError> {
    pool_to_ir_opts(pool, IrOptions::default())
}

pub fn pool_to_ir_opts(pool: &ElementsPool, options: IrOptions) -> Result<SolverIR, CodegenError> {
    let mut registry = pool
        .build_registry()
        .map_err(|e| CodegenError::Decompose(e.into()))?;
    let decomposed = decompose_pool_opts(pool, &mut registry, options.decompose)?;
    build_ir_opts(pool, &decomposed, &mut registry, options)
}

#[cfg(test)]
mod tests;

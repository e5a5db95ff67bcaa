use super::*;
use crate::elements::schema::load_pool_json;
use crate::expr::RelOp;
use crate::nedtree::Atom;

fn case_study_pool() -> crate::elements::ElementsPool {
    load_pool_json(&serde_json::json!({
        "Parameters_List": [
            {"Name": "At", "Type": "float", "Value": 1.0},
            {"Name": "alpha", "Type": "float", "Value": 0.3},
            {"Name": "beta", "Type": "float", "Value": 0.7},
            {"Name": "C", "Type": "float", "Value": 42.0}
        ],
        "Variables_List": [
            {"symbol": "x_1", "Meaning": "input one", "Type": "continuous", "Range": "0.001 <= x_1 <= 10"},
            {"symbol": "x_2", "Meaning": "input two", "Type": "continuous", "Range": "0.001 <= x_2 <= 10"}
        ],
        "Constraint_Table": [
            ["production_cap", "At * x_1^(alpha) * x_2^(beta) <= C", "sentence numbers:2"]
        ],
        "Objective": {
            "Objective_sentence": "Maximize total output",
            "Mathematical_expressions": "x_1 + x_2"
        },
        "Problem_Type": "NLP"
    }))
    .unwrap()
}

fn linear_pool() -> crate::elements::ElementsPool {
    load_pool_json(&serde_json::json!({
        "Variables_List": [
            {"symbol": "x", "Meaning": "a", "Type": "continuous", "Range": "0 <= x <= 10"},
            {"symbol": "y", "Meaning": "b", "Type": "integer", "Range": "0 <= y <= 10"}
        ],
        "Constraint_Table": [
            ["cap", "x + y <= 8", "sentence numbers:1"]
        ],
        "Objective": {
            "Objective_sentence": "Minimize cost",
            "Mathematical_expressions": "2*x + 3*y"
        },
        "Problem_Type": "MILP"
    }))
    .unwrap()
}

fn conditional_pool() -> crate::elements::ElementsPool {
    load_pool_json(&serde_json::json!({
        "Variables_List": [
            {"symbol": "x", "Meaning": "units", "Type": "continuous", "Range": "0 <= x <= 100"},
            {"symbol": "cost", "Meaning": "fixed cost", "Type": "continuous", "Range": "0 <= cost <= 1000"}
        ],
        "Constraint_Table": [
            ["fixed_cost_rule", "IF x > 50 THEN cost = 200", "sentence numbers:1"]
        ],
        "Objective": {
            "Objective_sentence": "Minimize cost",
            "Mathematical_expressions": "cost + x"
        },
        "Problem_Type": "MILP"
    }))
    .unwrap()
}

// --- build_ir ---------------------------------------------------------------

#[test]
fn case_study_ir_routes_atoms_by_kind() {
    let ir = pool_to_ir(&case_study_pool()).unwrap();
    assert_eq!(ir.general_atoms.len(), 2);
    assert!(ir
        .general_atoms
        .iter()
        .all(|d| matches!(d.atom, Atom::Pow { .. })));
    assert_eq!(ir.quadratic_equalities.len(), 1);
    assert_eq!(ir.div_equalities.len(), 0);

    // One linear constraint: At·y_temp_3 − C ≤ 0.
    assert_eq!(ir.linear_constraints.len(), 1);
    let c = &ir.linear_constraints[0];
    assert_eq!(c.name, "production_cap");
    assert_eq!(c.relation.op, RelOp::Le);
    assert_eq!(c.linear.constant, -42.0);
    assert_eq!(c.linear.terms["y_temp_3"], 1.0);

    // Variables: originals then auxiliaries in mint order.
    let names: Vec<&str> = ir.variables.iter().map(|v| v.name.as_str()).collect();
    assert_eq!(names, vec!["x_1", "x_2", "y_temp_1", "y_temp_2", "y_temp_3"]);
}

#[test]
fn pure_lp_pool_has_empty_atom_lists() {
    let ir = pool_to_ir(&linear_pool()).unwrap();
    assert!(ir.general_atoms.is_empty());
    assert!(ir.quadratic_equalities.is_empty());
    assert!(ir.div_equalities.is_empty());
    assert!(ir.indicators.is_empty());
    assert_eq!(ir.linear_constraints.len(), 1);
}

#[test]
fn conditional_becomes_indicator_with_strict_flag() {
    let ir = pool_to_ir(&conditional_pool()).unwrap();
    assert_eq!(ir.indicators.len(), 1);
    let ind = &ir.indicators[0];
    assert_eq!(ind.binary_var, "b_cond_1");
    assert!(ind.trigger.relation.strict);
    assert_eq!(ind.trigger.relation.op, RelOp::Le);
    assert_eq!(ind.consequence.relation.op, RelOp::Eq);
    // The binary variable is declared.
    assert!(ir.variables.iter().any(|v| v.name == "b_cond_1"));
}

#[test]
fn aux_defined_exactly_once() {
    let ir = pool_to_ir(&case_study_pool()).unwrap();
    let mut targets: Vec<&str> = ir
        .general_atoms
        .iter()
        .map(|d| d.aux.as_str())
        .chain(ir.quadratic_equalities.iter().map(|q| q.aux.as_str()))
        .chain(ir.div_equalities.iter().map(|d| d.aux.as_str()))
        .collect();
    targets.sort_unstable();
    let before = targets.len();
    targets.dedup();
    assert_eq!(before, targets.len());
}

// --- emit ---------------------------------------------------------------------

#[test]
fn emit_case_study_maps_pow_to_general_constraint() {
    let ir = pool_to_ir(&case_study_pool()).unwrap();
    let src = emit(&ir, &BackendProfile::gurobi_python()).unwrap();
    assert!(src.contains("model.addGenConstrPow(x_1, y_temp_1, 0.3, name=\"gen_y_temp_1\")"));
    assert!(src.contains("model.addGenConstrPow(x_2, y_temp_2, 0.7, name=\"gen_y_temp_2\")"));
    assert!(src.contains("model.addConstr(y_temp_3 == y_temp_1 * y_temp_2"));
    assert!(src.contains("model.Params.NonConvex = 2"));
    assert!(src.contains("GRB.MAXIMIZE"));
    assert!(src.contains("OBJECTIVE:"));
}

#[test]
fn emit_is_deterministic() {
    let ir = pool_to_ir(&case_study_pool()).unwrap();
    let profile = BackendProfile::gurobi_python();
    assert_eq!(emit(&ir, &profile).unwrap(), emit(&ir, &profile).unwrap());
}

#[test]
fn emit_preserves_constraint_order() {
    let pool = load_pool_json(&serde_json::json!({
        "Variables_List": [
            {"symbol": "x", "Meaning": "a", "Type": "continuous", "Range": "0 <= x <= 10"}
        ],
        "Constraint_Table": [
            ["first", "x <= 9", "sentence numbers:1"],
            ["second", "x <= 8", "sentence numbers:1"],
            ["third", "2*x <= 7", "sentence numbers:2"]
        ],
        "Objective": {"Objective_sentence": "Minimize x", "Mathematical_expressions": "x"},
        "Problem_Type": "MILP"
    }))
    .unwrap();
    let ir = pool_to_ir(&pool).unwrap();
    let src = emit(&ir, &BackendProfile::gurobi_python()).unwrap();
    let f = src.find("name=\"first\"").unwrap();
    let s = src.find("name=\"second\"").unwrap();
    let t = src.find("name=\"third\"").unwrap();
    assert!(f < s && s < t);
}

#[test]
fn emit_empty_model_is_valid() {
    let pool = load_pool_json(&serde_json::json!({
        "Variables_List": [
            {"symbol": "x", "Meaning": "a", "Type": "continuous", "Range": "0 <= x <= 1"}
        ],
        "Constraint_Table": [],
        "Objective": {"Objective_sentence": "Minimize zero", "Mathematical_expressions": "0"},
        "Problem_Type": "MILP"
    }))
    .unwrap();
    let ir = pool_to_ir(&pool).unwrap();
    let src = emit(&ir, &BackendProfile::gurobi_python()).unwrap();
    assert!(src.contains("model.setObjective(0, GRB.MINIMIZE)"));
    assert!(!src.contains("NonConvex"));
}

#[test]
fn emit_unsupported_atom_is_rejected() {
    let pool = load_pool_json(&serde_json::json!({
        "Variables_List": [
            {"symbol": "x", "Meaning": "a", "Type": "continuous", "Range": "0 <= x <= 1"}
        ],
        "Constraint_Table": [["wave", "sin(x) <= 0.5", "sentence numbers:1"]],
        "Objective": {"Objective_sentence": "Minimize x", "Mathematical_expressions": "x"},
        "Problem_Type": "NLP"
    }))
    .unwrap();
    let ir = pool_to_ir(&pool).unwrap();
    let mut profile = BackendProfile::gurobi_python();
    profile
        .atoms
        .insert("sin".into(), AtomCapability::Unsupported);
    assert_eq!(
        emit(&ir, &profile).unwrap_err(),
        CodegenError::UnsupportedAtomForBackend {
            kind: "sin".into(),
            backend: "gurobi-python".into()
        }
    );
}

#[test]
fn emit_indicator_lines() {
    let ir = pool_to_ir(&conditional_pool()).unwrap();
    let src = emit(&ir, &BackendProfile::gurobi_python()).unwrap();
    // Strict trigger x > 50 ⇒ on-side shifted by epsilon, off-side exact.
    assert!(src.contains("model.addGenConstrIndicator(b_cond_1, True,"));
    assert!(src.contains("model.addGenConstrIndicator(b_cond_1, False,"));
    let on_line = src
        .lines()
        .find(|l| l.contains("(b_cond_1, True,") && l.contains("cond_1_trigger"))
        .unwrap();
    assert!(on_line.contains("0.000001"), "{}", on_line);
}

#[test]
fn profile_round_trips_through_toml_and_json() {
    let profile = BackendProfile::gurobi_python();
    let toml_text = toml::to_string(&profile).unwrap();
    let from_toml = BackendProfile::from_text(&toml_text).unwrap();
    assert_eq!(from_toml, profile);
    let json_text = serde_json::to_string(&profile).unwrap();
    let from_json = BackendProfile::from_text(&json_text).unwrap();
    assert_eq!(from_json, profile);
}

#[test]
fn profile_missing_atom_kind_rejected() {
    let text = r#"
name = "half"
indicator_support = false
strict_inequality_epsilon = 1e-6
[atoms]
pow = "addPow"
"#;
    assert!(matches!(
        BackendProfile::from_text(text),
        Err(CodegenError::BadProfile(_))
    ));
}

// --- neutral emission ------------------------------------------------------------

#[test]
fn neutral_round_trip_and_stability() {
    let ir = pool_to_ir(&case_study_pool()).unwrap();
    let a = emit_neutral(&ir);
    let b = emit_neutral(&ir);
    assert_eq!(a, b);
    let back = load_neutral(&a).unwrap();
    assert_eq!(back, ir);
}

#[test]
fn neutral_empty_ir_shape() {
    let ir = pool_to_ir(&linear_pool()).unwrap();
    let text = emit_neutral(&ir);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["ir_version"], 1);
    assert!(v["general_atoms"].as_array().unwrap().is_empty());
    assert!(v["variables"].as_array().unwrap().len() >= 2);
}

#[test]
fn neutral_rejects_wrong_version() {
    let ir = pool_to_ir(&linear_pool()).unwrap();
    let text = emit_neutral(&ir).replace("\"ir_version\": 1", "\"ir_version\": 99");
    assert!(load_neutral(&text).is_err());
}

#[test]
fn ir_is_backend_independent() {
    // The backend enters only at emit: two profiles, one IR.
    let pool = case_study_pool();
    let ir = pool_to_ir(&pool).unwrap();
    let gurobi = BackendProfile::gurobi_python();
    let mut other = BackendProfile::gurobi_python();
    other.name = "copt-python".into();
    other
        .atoms
        .insert("pow".into(), AtomCapability::Native("addPowConstraint".into()));
    let src_a = emit(&ir, &gurobi).unwrap();
    let src_b = emit(&ir, &other).unwrap();
    assert_ne!(src_a, src_b);
    assert_eq!(pool_to_ir(&pool).unwrap(), ir);
    assert!(src_b.contains("model.addPowConstraint(x_1, y_temp_1, 0.3"));
}

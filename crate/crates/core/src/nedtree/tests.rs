use super::*;
use crate::corpus;
use crate::expr::{parse_relation, parse_source, RelOp};
use crate::oracle::{check_equivalence, eval_decomposed, eval_expr};
use crate::registry::{RegistryError, VarType, VariableDecl};
use std::collections::BTreeMap;

fn vars(names: &[&str]) -> SymbolRegistry {
    let mut reg = SymbolRegistry::new();
    for n in names {
        reg.add_var(VariableDecl::continuous(*n)).unwrap();
    }
    reg
}

fn case_study_registry() -> SymbolRegistry {
    let mut reg = SymbolRegistry::new();
    reg.add_scalar_param("At", 1.0).unwrap();
    reg.add_scalar_param("alpha", 0.3).unwrap();
    reg.add_scalar_param("beta", 0.7).unwrap();
    reg.add_var(VariableDecl::new("x_1", VarType::Continuous, 1e-3, 10.0).unwrap())
        .unwrap();
    reg.add_var(VariableDecl::new("x_2", VarType::Continuous, 1e-3, 10.0).unwrap())
        .unwrap();
    reg
}

// --- is_atomic / is_linear ---------------------------------------------------

#[test]
fn atomic_const_and_variable() {
    let reg = vars(&["x_1"]);
    assert!(is_atomic(&ExprNode::Const(3.0), &reg));
    assert!(is_atomic(&ExprNode::symbol("x_1"), &reg));
    assert!(!is_atomic(&parse_source("x_1^2").unwrap(), &reg));
}

#[test]
fn linear_sum_and_constant_multiplication() {
    let sum = parse_source("3*x + 2*y").unwrap();
    let children = vec![LinearForm::term("x", 3.0), LinearForm::term("y", 2.0)];
    assert!(is_linear(&sum, &children));

    let prod = parse_source("3*x").unwrap();
    let children = vec![LinearForm::constant(3.0), LinearForm::term("x", 1.0)];
    assert!(is_linear(&prod, &children));
}

#[test]
fn nonlinear_variable_product() {
    let prod = parse_source("x*y").unwrap();
    let children = vec![LinearForm::term("x", 1.0), LinearForm::term("y", 1.0)];
    assert!(!is_linear(&prod, &children));
}

#[test]
fn division_linearity_depends_on_denominator() {
    let div = parse_source("x/y").unwrap();
    assert!(!is_linear(
        &div,
        &[LinearForm::term("x", 1.0), LinearForm::term("y", 1.0)]
    ));
    assert!(is_linear(
        &div,
        &[LinearForm::term("x", 1.0), LinearForm::constant(2.0)]
    ));
}

// --- decompose ---------------------------------------------------------------

#[test]
fn case_study_decomposition() {
    let mut reg = case_study_registry();
    let expr = parse_source("At * x_1^(alpha) * x_2^(beta)").unwrap();
    let result = decompose(&expr, &mut reg).unwrap();

    assert_eq!(result.defs.len(), 3);
    assert_eq!(result.defs[0].aux, "y_temp_1");
    assert_eq!(
        result.defs[0].atom,
        Atom::Pow {
            arg: "x_1".into(),
            exponent: 0.3
        }
    );
    assert_eq!(result.defs[1].aux, "y_temp_2");
    assert_eq!(
        result.defs[1].atom,
        Atom::Pow {
            arg: "x_2".into(),
            exponent: 0.7
        }
    );
    assert_eq!(result.defs[2].aux, "y_temp_3");
    assert_eq!(
        result.defs[2].atom,
        Atom::Bilinear {
            left: "y_temp_1".into(),
            right: "y_temp_2".into()
        }
    );
    assert_eq!(result.linear, LinearForm::term("y_temp_3", 1.0));
}

#[test]
fn case_study_coefficient_stays_in_linear_form() {
    let mut reg = case_study_registry();
    reg.params.get_mut("At").unwrap().value = crate::registry::ParamValue::Scalar(2.5);
    let expr = parse_source("At * x_1^(alpha) * x_2^(beta)").unwrap();
    let result = decompose(&expr, &mut reg).unwrap();
    assert_eq!(result.defs.len(), 3);
    assert_eq!(result.linear, LinearForm::term("y_temp_3", 2.5));
}

#[test]
fn linear_expression_passes_through() {
    let mut reg = vars(&["x", "y"]);
    let result = decompose(&parse_source("3*x + 2*y").unwrap(), &mut reg).unwrap();
    assert!(result.defs.is_empty());
    let mut want = LinearForm::term("x", 3.0);
    want.add_term("y".into(), 2.0);
    assert_eq!(result.linear, want);
}

#[test]
fn chain_product_three_factors() {
    let mut reg = vars(&["x", "y", "z"]);
    let result = decompose(&parse_source("x*y*z").unwrap(), &mut reg).unwrap();
    assert_eq!(
        result.defs,
        vec![
            AtomDef {
                aux: "y_temp_1".into(),
                atom: Atom::Bilinear {
                    left: "x".into(),
                    right: "y".into()
                },
                source_span: String::new(),
            },
            AtomDef {
                aux: "y_temp_2".into(),
                atom: Atom::Bilinear {
                    left: "y_temp_1".into(),
                    right: "z".into()
                },
                source_span: String::new(),
            },
        ]
    );
    assert_eq!(result.linear, LinearForm::term("y_temp_2", 1.0));
}

#[test]
fn nested_exp_argument_is_hoisted() {
    // exp(x^2 + y): the square is atomized, the linear argument is hoisted
    // to one auxiliary, and the exponential applies to that single name.
    let mut reg = vars(&["x", "y"]);
    let expr = parse_source("exp(x^2 + y)").unwrap();
    let result = decompose(&expr, &mut reg).unwrap();
    assert_eq!(result.defs.len(), 3);
    assert_eq!(
        result.defs[0].atom,
        Atom::Bilinear {
            left: "x".into(),
            right: "x".into()
        }
    );
    let mut hoisted = LinearForm::term("y_temp_1", 1.0);
    hoisted.add_term("y".into(), 1.0);
    assert_eq!(result.defs[1].atom, Atom::Linear { form: hoisted });
    assert_eq!(result.defs[2].atom, Atom::Exp { arg: "y_temp_2".into() });
    assert_eq!(result.linear, LinearForm::term("y_temp_3", 1.0));

    // Oracle certification at 100 points.
    let report = check_equivalence(&expr, &result, &reg, 100, 42, 1e-8).unwrap();
    assert!(report.passed(), "{:?}", report);
}

#[test]
fn variable_power_of_variable_is_rejected() {
    let mut reg = vars(&["x", "y"]);
    let err = decompose(&parse_source("x^y").unwrap(), &mut reg).unwrap_err();
    assert!(matches!(err, NedTreeError::UnsupportedStructure(_)));
}

#[test]
fn unregistered_symbol_is_reported() {
    let mut reg = vars(&["x"]);
    let err = decompose(&parse_source("x + q").unwrap(), &mut reg).unwrap_err();
    assert_eq!(
        err,
        NedTreeError::Registry(RegistryError::UnregisteredSymbol("q".into()))
    );
}

#[test]
fn square_uses_native_quadratic_form() {
    let mut reg = vars(&["x"]);
    let result = decompose(&parse_source("x^2").unwrap(), &mut reg).unwrap();
    assert_eq!(
        result.defs[0].atom,
        Atom::Bilinear {
            left: "x".into(),
            right: "x".into()
        }
    );
    // The squared auxiliary is sign-constrained.
    assert_eq!(reg.vars["y_temp_1"].lower, 0.0);
}

#[test]
fn fractional_power_uses_pow_atom() {
    let mut reg = vars(&["x"]);
    let result = decompose(&parse_source("x^0.3").unwrap(), &mut reg).unwrap();
    assert_eq!(
        result.defs[0].atom,
        Atom::Pow {
            arg: "x".into(),
            exponent: 0.3
        }
    );
}

#[test]
fn exponent_one_and_zero_stay_linear() {
    let mut reg = vars(&["x"]);
    let r1 = decompose(&parse_source("x^1").unwrap(), &mut reg).unwrap();
    assert!(r1.defs.is_empty());
    assert_eq!(r1.linear, LinearForm::term("x", 1.0));
    let r0 = decompose(&parse_source("x^0").unwrap(), &mut reg).unwrap();
    assert!(r0.defs.is_empty());
    assert_eq!(r0.linear, LinearForm::constant(1.0));
}

// --- transform_chain_product -------------------------------------------------

#[test]
fn chain_base_case_two_factors() {
    let mut reg = vars(&["x", "y"]);
    let (defs, last) = transform_chain_product(&["x".to_string(), "y".to_string()], &mut reg);
    assert_eq!(defs.len(), 1);
    assert_eq!(last, "y_temp_1");
    assert_eq!(
        defs[0].atom,
        Atom::Bilinear {
            left: "x".into(),
            right: "y".into()
        }
    );
}

#[test]
fn chain_of_three_has_two_atoms() {
    let mut reg = vars(&["x", "y", "z"]);
    let (defs, last) = transform_chain_product(
        &["x".to_string(), "y".to_string(), "z".to_string()],
        &mut reg,
    );
    assert_eq!(defs.len(), 2);
    assert_eq!(last, "y_temp_2");
}

#[test]
fn chain_of_four_matches_oracle() {
    let mut reg = vars(&["a", "b", "c", "d"]);
    let expr = parse_source("a*b*c*d").unwrap();
    let result = decompose(&expr, &mut reg).unwrap();
    assert_eq!(result.defs.len(), 3);
    let report = check_equivalence(&expr, &result, &reg, 200, 7, 1e-8).unwrap();
    assert!(report.passed(), "{:?}", report);
}

// --- transform_param_base_power ----------------------------------------------

#[test]
fn param_base_e_reuses_bare_name() {
    let mut reg = vars(&["t"]);
    let e = std::f64::consts::E;
    let (defs, form) = transform_param_base_power(e, &ExprNode::symbol("t"), &mut reg).unwrap();
    // c = ln(e) = 1, so the inner form is already the bare name `t`.
    assert_eq!(defs.len(), 1);
    assert_eq!(defs[0].atom, Atom::Exp { arg: "t".into() });
    assert_eq!(form, LinearForm::term("y_temp_1", 1.0));
}

#[test]
fn param_base_two_scales_by_ln2() {
    let mut reg = vars(&["t"]);
    let (defs, form) = transform_param_base_power(2.0, &ExprNode::symbol("t"), &mut reg).unwrap();
    assert_eq!(defs.len(), 2);
    assert_eq!(
        defs[0].atom,
        Atom::Linear {
            form: LinearForm::term("t", 2.0_f64.ln())
        }
    );
    assert_eq!(defs[1].atom, Atom::Exp { arg: "y_temp_1".into() });
    assert_eq!(form, LinearForm::term("y_temp_2", 1.0));
}

#[test]
fn param_base_one_is_constant_one() {
    let mut reg = vars(&["t"]);
    let (defs, form) = transform_param_base_power(1.0, &ExprNode::symbol("t"), &mut reg).unwrap();
    assert!(defs.is_empty());
    assert_eq!(form, LinearForm::constant(1.0));
}

#[test]
fn param_base_nonpositive_is_an_error() {
    let mut reg = vars(&["t"]);
    let err = transform_param_base_power(-2.0, &ExprNode::symbol("t"), &mut reg).unwrap_err();
    assert_eq!(err, NedTreeError::NonpositiveBase(-2.0));
}

#[test]
fn param_base_power_inside_decompose() {
    let mut reg = vars(&["t"]);
    reg.add_scalar_param("A", 2.0).unwrap();
    let expr = parse_source("A^t").unwrap();
    let result = decompose(&expr, &mut reg).unwrap();
    assert_eq!(result.defs.len(), 2);
    let report = check_equivalence(&expr, &result, &reg, 500, 42, 1e-8).unwrap();
    assert!(report.passed(), "{:?}", report);
}

// --- decompose_relation ------------------------------------------------------

#[test]
fn relation_linear_normalized_to_zero() {
    let mut reg = vars(&["x", "y"]);
    let rel = parse_relation("x + y <= 10").unwrap();
    let dec = decompose_relation(&rel, &mut reg).unwrap();
    assert!(dec.defs.is_empty());
    let mut want = LinearForm::term("x", 1.0);
    want.add_term("y".into(), 1.0);
    want.constant = -10.0;
    assert_eq!(dec.linear, want);
    assert_eq!(dec.relation.op, RelOp::Le);
}

#[test]
fn relation_single_atom_square() {
    // x^2 <= 9 under the native-quadratic mapping: the square becomes a
    // bilinear atom and the linear side is y_temp_1 - 9 <= 0.
    let mut reg = vars(&["x"]);
    let rel = parse_relation("x^2 <= 9").unwrap();
    let dec = decompose_relation(&rel, &mut reg).unwrap();
    assert_eq!(dec.defs.len(), 1);
    assert_eq!(
        dec.defs[0].atom,
        Atom::Bilinear {
            left: "x".into(),
            right: "x".into()
        }
    );
    let mut want = LinearForm::term("y_temp_1", 1.0);
    want.constant = -9.0;
    assert_eq!(dec.linear, want);
}

#[test]
fn relation_fraction_keeps_div_atom() {
    // F/G <= k with F = 2x+1, G = y, k = 3: denominator clearing stays off,
    // the quotient becomes one Div definition.
    let mut reg = vars(&["x", "y"]);
    reg.add_scalar_param("k", 3.0).unwrap();
    let rel = parse_relation("(2*x + 1)/(y) <= k").unwrap();
    let dec = decompose_relation(&rel, &mut reg).unwrap();
    assert_eq!(dec.defs.len(), 1);
    let mut num = LinearForm::term("x", 2.0);
    num.constant = 1.0;
    assert_eq!(
        dec.defs[0].atom,
        Atom::Div {
            numerator: num,
            denominator: LinearForm::term("y", 1.0)
        }
    );
    let mut want = LinearForm::term("y_temp_1", 1.0);
    want.constant = -3.0;
    assert_eq!(dec.linear, want);

    // Oracle check on the quotient at points with y bounded away from zero.
    let expr = parse_source("(2*x + 1)/(y)").unwrap();
    let mut reg2 = SymbolRegistry::new();
    reg2.add_var(VariableDecl::continuous("x")).unwrap();
    reg2.add_var(VariableDecl::new("y", VarType::Continuous, 0.5, 10.0).unwrap())
        .unwrap();
    let result = decompose(&expr, &mut reg2).unwrap();
    let report = check_equivalence(&expr, &result, &reg2, 300, 11, 1e-8).unwrap();
    assert!(report.passed(), "{:?}", report);
}

// --- structural invariants over the random corpus ----------------------------

fn assert_structural_invariants(result: &NedTreeResult, reg: &SymbolRegistry) {
    // Topological order: atoms reference only variables or earlier
    // auxiliaries.
    let mut known: std::collections::BTreeSet<String> = reg
        .vars
        .keys()
        .filter(|k| !k.starts_with("y_temp_"))
        .cloned()
        .collect();
    for def in &result.defs {
        for name in def.atom.referenced_names() {
            assert!(
                known.contains(name),
                "atom for {} references unknown/later name {}",
                def.aux,
                name
            );
        }
        assert!(known.insert(def.aux.clone()), "duplicate aux {}", def.aux);
    }
    // The final form is purely linear and closed over known names.
    for name in result.linear.names() {
        assert!(known.contains(name), "linear form references {}", name);
    }
    assert!(result.linear.constant.is_finite());
    for coeff in result.linear.terms.values() {
        assert!(*coeff != 0.0 && coeff.is_finite());
    }
}

#[test]
fn corpus_equivalence_and_invariants() {
    let exprs = corpus::random_exprs(9001, 60);
    let mut checked = 0usize;
    for expr in &exprs {
        let mut reg = corpus::standard_registry();
        let result = match decompose(expr, &mut reg) {
            Ok(r) => r,
            Err(NedTreeError::UnsupportedStructure(_)) => continue,
            Err(e) => panic!("decompose failed on {}: {}", expr, e),
        };
        assert_structural_invariants(&result, &reg);

        // Aux count bound: nonlinear atoms are limited by the nonlinear
        // internal nodes plus chain extras; hoisted linear defs are extra.
        let nonlinear_atoms = result.defs.iter().filter(|d| d.atom.is_nonlinear()).count();
        let (nl_nodes, chain_extras) = count_nonlinear_nodes(expr);
        assert!(
            nonlinear_atoms <= nl_nodes + chain_extras,
            "{} atoms > {} nodes + {} extras for {}",
            nonlinear_atoms,
            nl_nodes,
            chain_extras,
            expr
        );

        match check_equivalence(expr, &result, &reg, 400, 42, 1e-8) {
            Ok(report) => {
                if !report.passed() && report.max_rel_err <= 1e-8 {
                    // Rejection-dominated domain, equivalence itself held on
                    // every accepted point.
                    continue;
                }
                assert!(report.passed(), "{} failed: {:?}", expr, report);
                checked += 1;
            }
            Err(crate::oracle::OracleError::AllSamplesRejected { .. }) => continue,
            Err(e) => panic!("oracle error on {}: {}", expr, e),
        }
    }
    assert!(checked >= 40, "only {} corpus expressions checked", checked);
}

fn count_nonlinear_nodes(expr: &ExprNode) -> (usize, usize) {
    let mut nodes = 0usize;
    let mut extras = 0usize;
    expr.visit(&mut |n| match n {
        ExprNode::Pow(_, _) | ExprNode::Div(_, _) | ExprNode::Func(_, _) => nodes += 1,
        ExprNode::Product(children) => {
            let symbolic = children.iter().filter(|c| !c.symbols().is_empty()).count();
            if symbolic >= 2 {
                nodes += 1;
                extras += symbolic - 2;
            }
        }
        _ => {}
    });
    (nodes, extras)
}

#[test]
fn idempotent_on_linear_input() {
    let mut reg = vars(&["x", "y", "z"]);
    let expr = parse_source("2*x - 3*y + z/2 + 7").unwrap();
    let result = decompose(&expr, &mut reg).unwrap();
    assert!(result.defs.is_empty());
    let mut want = LinearForm::term("x", 2.0);
    want.add_term("y".into(), -3.0);
    want.add_term("z".into(), 0.5);
    want.constant = 7.0;
    assert_eq!(result.linear, want);
    assert_eq!(reg.aux_counter(), 0);
}

#[test]
fn decomposed_evaluation_matches_hand_solve() {
    // x*y*z at (2, 3, 4): y_temp_1 = 6, y_temp_2 = 24.
    let mut reg = vars(&["x", "y", "z"]);
    let expr = parse_source("x*y*z").unwrap();
    let result = decompose(&expr, &mut reg).unwrap();
    let point: BTreeMap<String, f64> = [("x", 2.0), ("y", 3.0), ("z", 4.0)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    assert_eq!(eval_decomposed(&result, &point).unwrap(), 24.0);
    assert_eq!(eval_expr(&expr, &point).unwrap(), 24.0);
}

use super::*;
use crate::oracle::eval_expr;
use proptest::prelude::*;
use std::collections::BTreeMap;

// ---------------------------------------------------------------------------
// Reference recursive-descent interpreter: evaluates source text directly,
// sharing no code with the lexer/parser/AST path. This is the independent
// oracle for the numeric-fidelity invariant.
// ---------------------------------------------------------------------------
mod reference {
    use std::collections::BTreeMap;

    pub fn eval(src: &str, vars: &BTreeMap<String, f64>) -> Option<f64> {
        let chars: Vec<char> = src.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = 0usize;
        let v = additive(&chars, &mut p, vars)?;
        if p == chars.len() {
            Some(v)
        } else {
            None
        }
    }

    fn additive(c: &[char], p: &mut usize, vars: &BTreeMap<String, f64>) -> Option<f64> {
        let mut acc = term(c, p, vars)?;
        while *p < c.len() && (c[*p] == '+' || c[*p] == '-') {
            let op = c[*p];
            *p += 1;
            let rhs = term(c, p, vars)?;
            acc = if op == '+' { acc + rhs } else { acc - rhs };
        }
        Some(acc)
    }

    fn term(c: &[char], p: &mut usize, vars: &BTreeMap<String, f64>) -> Option<f64> {
        let mut acc = unary(c, p, vars)?;
        while *p < c.len() && (c[*p] == '*' || c[*p] == '/') {
            let op = c[*p];
            *p += 1;
            let rhs = unary(c, p, vars)?;
            acc = if op == '*' { acc * rhs } else { acc / rhs };
        }
        Some(acc)
    }

    fn unary(c: &[char], p: &mut usize, vars: &BTreeMap<String, f64>) -> Option<f64> {
        if *p < c.len() && c[*p] == '-' {
            *p += 1;
            return Some(-unary(c, p, vars)?);
        }
        power(c, p, vars)
    }

    fn power(c: &[char], p: &mut usize, vars: &BTreeMap<String, f64>) -> Option<f64> {
        let base = primary(c, p, vars)?;
        if *p < c.len() && c[*p] == '^' {
            *p += 1;
            let exp = unary(c, p, vars)?;
            return Some(base.powf(exp));
        }
        Some(base)
    }

    fn primary(c: &[char], p: &mut usize, vars: &BTreeMap<String, f64>) -> Option<f64> {
        if *p >= c.len() {
            return None;
        }
        if c[*p] == '(' {
            *p += 1;
            let v = additive(c, p, vars)?;
            if c.get(*p) != Some(&')') {
                return None;
            }
            *p += 1;
            return Some(v);
        }
        if c[*p].is_ascii_digit() || c[*p] == '.' {
            let start = *p;
            while *p < c.len() && (c[*p].is_ascii_digit() || c[*p] == '.') {
                *p += 1;
            }
            let text: String = c[start..*p].iter().collect();
            return text.parse().ok();
        }
        if c[*p].is_ascii_alphabetic() {
            let start = *p;
            while *p < c.len() && (c[*p].is_ascii_alphanumeric() || c[*p] == '_') {
                *p += 1;
            }
            let name: String = c[start..*p].iter().collect();
            if c.get(*p) == Some(&'(') {
                *p += 1;
                let arg = additive(c, p, vars)?;
                if c.get(*p) != Some(&')') {
                    return None;
                }
                *p += 1;
                return Some(match name.as_str() {
                    "exp" => arg.exp(),
                    "log" => arg.ln(),
                    "sin" => arg.sin(),
                    "cos" => arg.cos(),
                    "abs" => arg.abs(),
                    _ => return None,
                });
            }
            return vars.get(&name).copied();
        }
        None
    }
}

// --- clean_source ----------------------------------------------------------

#[test]
fn clean_frac() {
    assert_eq!(clean_source("\\frac{F(x)}{G(x)}").unwrap(), "(F(x))/(G(x))");
}

#[test]
fn clean_case_study_term() {
    assert_eq!(
        clean_source("At \\cdot x_{1}^{\\alpha}").unwrap(),
        "At * x_1^(alpha)"
    );
}

#[test]
fn clean_caret_group() {
    assert_eq!(clean_source("A^{x}").unwrap(), "A^(x)");
}

#[test]
fn clean_ln_and_times() {
    assert_eq!(clean_source("\\ln(y) \\times 2").unwrap(), "log(y) * 2");
}

#[test]
fn clean_unknown_command_errors() {
    assert_eq!(
        clean_source("\\sqrt{x}"),
        Err(ExprError::UnsupportedLatexCommand("sqrt".to_string()))
    );
}

#[test]
fn clean_nested_frac() {
    assert_eq!(
        clean_source("\\frac{\\frac{a}{b}}{c}").unwrap(),
        "((a)/(b))/(c)"
    );
}

// --- tokenize --------------------------------------------------------------

fn lexemes(src: &str) -> Vec<String> {
    tokenize(src).unwrap().into_iter().map(|t| t.lexeme).collect()
}

#[test]
fn tokenize_injects_star_number_ident() {
    assert_eq!(lexemes("3x"), vec!["3", "*", "x"]);
}

#[test]
fn tokenize_injects_star_number_lparen() {
    assert_eq!(lexemes("2(x+y)"), vec!["2", "*", "(", "x", "+", "y", ")"]);
}

#[test]
fn tokenize_function_call_is_exempt() {
    let toks = tokenize("exp(x)").unwrap();
    assert_eq!(
        toks.iter().map(|t| t.kind).collect::<Vec<_>>(),
        vec![
            TokenKind::Func,
            TokenKind::LParen,
            TokenKind::Ident,
            TokenKind::RParen
        ]
    );
}

#[test]
fn tokenize_rparen_adjacency() {
    assert_eq!(lexemes("(x)y"), vec!["(", "x", ")", "*", "y"]);
    assert_eq!(lexemes("(x)(y)"), vec!["(", "x", ")", "*", "(", "y", ")"]);
}

#[test]
fn tokenize_unexpected_character() {
    assert!(matches!(
        tokenize("x $ y"),
        Err(ExprError::UnexpectedCharacter { ch: '$', .. })
    ));
}

#[test]
fn tokenize_unterminated_number() {
    assert!(matches!(
        tokenize("1."),
        Err(ExprError::UnterminatedNumber { .. })
    ));
}

#[test]
fn lexeme_concat_reproduces_normalized_source() {
    // No implicit multiplication in this input, so concatenation equals the
    // source with whitespace dropped.
    let src = "3 * x + exp(y) ^ 2";
    let joined: String = lexemes(src).concat();
    let normalized: String = src.chars().filter(|c| !c.is_whitespace()).collect();
    assert_eq!(joined, normalized);
}

// --- parse_expr ------------------------------------------------------------

#[test]
fn parse_linear_sum() {
    let got = parse_source("3*x + 2*y").unwrap();
    let want = ExprNode::Sum(vec![
        ExprNode::Product(vec![ExprNode::Const(3.0), ExprNode::symbol("x")]),
        ExprNode::Product(vec![ExprNode::Const(2.0), ExprNode::symbol("y")]),
    ]);
    assert_eq!(got, want);
}

#[test]
fn parse_case_study_product() {
    let got = parse_source("At * x_1^(alpha) * x_2^(beta)").unwrap();
    let want = ExprNode::Product(vec![
        ExprNode::symbol("At"),
        ExprNode::Pow(
            Box::new(ExprNode::symbol("x_1")),
            Box::new(ExprNode::symbol("alpha")),
        ),
        ExprNode::Pow(
            Box::new(ExprNode::symbol("x_2")),
            Box::new(ExprNode::symbol("beta")),
        ),
    ]);
    assert_eq!(got, want);
}

#[test]
fn parse_constant_folding() {
    assert_eq!(parse_source("2^3 + 1").unwrap(), ExprNode::Const(9.0));
}

#[test]
fn parse_precedence() {
    // ^ over unary minus over * over +; constants combine into a leading
    // coefficient.
    let got = parse_source("-x^2*3 + 1").unwrap();
    let want = ExprNode::Sum(vec![
        ExprNode::Product(vec![
            ExprNode::Const(-3.0),
            ExprNode::Pow(
                Box::new(ExprNode::symbol("x")),
                Box::new(ExprNode::Const(2.0)),
            ),
        ]),
        ExprNode::Const(1.0),
    ]);
    assert_eq!(got, want);
}

#[test]
fn parse_pow_right_associative() {
    let got = parse_source("2^x^2").unwrap();
    let want = ExprNode::Pow(
        Box::new(ExprNode::Const(2.0)),
        Box::new(ExprNode::Pow(
            Box::new(ExprNode::symbol("x")),
            Box::new(ExprNode::Const(2.0)),
        )),
    );
    assert_eq!(got, want);
}

#[test]
fn parse_empty_input() {
    assert_eq!(parse_expr(&[]), Err(ExprError::EmptyInput));
}

#[test]
fn parse_error_reports_expectation() {
    assert!(matches!(
        parse_source("3 *"),
        Err(ExprError::ParseError { .. })
    ));
}

#[test]
fn div_is_kept_not_rewritten() {
    let got = parse_source("x/y").unwrap();
    assert!(matches!(got, ExprNode::Div(_, _)));
}

// --- parse_relation --------------------------------------------------------

#[test]
fn relation_le() {
    let rel = parse_relation("x + y <= 10").unwrap();
    assert_eq!(rel.relation, Relation::LE);
    assert_eq!(
        rel.lhs,
        ExprNode::Sum(vec![ExprNode::symbol("x"), ExprNode::symbol("y")])
    );
    assert_eq!(rel.rhs, ExprNode::Const(10.0));
}

#[test]
fn relation_fractional_constraint() {
    let rel = parse_relation("(2*x+1)/(y) <= k").unwrap();
    assert!(matches!(rel.lhs, ExprNode::Div(_, _)));
    assert_eq!(rel.relation, Relation::LE);
    assert_eq!(rel.rhs, ExprNode::symbol("k"));
}

#[test]
fn relation_equality() {
    let rel = parse_relation("x = 5").unwrap();
    assert_eq!(rel.relation, Relation::EQ);
    assert_eq!(rel.lhs, ExprNode::symbol("x"));
    assert_eq!(rel.rhs, ExprNode::Const(5.0));
}

#[test]
fn relation_strict_records_flag() {
    let rel = parse_relation("x > 50").unwrap();
    assert_eq!(rel.relation, Relation::strict(RelOp::Ge));
}

#[test]
fn relation_missing_and_multiple() {
    assert_eq!(parse_relation("x + y"), Err(ExprError::MissingRelation));
    assert_eq!(
        parse_relation("x <= y <= z"),
        Err(ExprError::MultipleRelations)
    );
}

// --- canonical form --------------------------------------------------------

fn assert_canonical(node: &ExprNode) {
    node.visit(&mut |n| match n {
        ExprNode::Neg(_) => panic!("Neg survived canonicalization: {}", node),
        ExprNode::Sum(children) => {
            assert!(children.len() >= 2, "Sum with < 2 children: {}", node);
            assert!(
                !children.iter().any(|c| matches!(c, ExprNode::Sum(_))),
                "nested Sum: {}",
                node
            );
        }
        ExprNode::Product(children) => {
            assert!(children.len() >= 2, "Product with < 2 children: {}", node);
            assert!(
                !children.iter().any(|c| matches!(c, ExprNode::Product(_))),
                "nested Product: {}",
                node
            );
        }
        _ => {}
    });
}

#[test]
fn subtraction_canonicalizes_to_sum_product() {
    let got = parse_source("x - y").unwrap();
    let want = ExprNode::Sum(vec![
        ExprNode::symbol("x"),
        ExprNode::Product(vec![ExprNode::Const(-1.0), ExprNode::symbol("y")]),
    ]);
    assert_eq!(got, want);
}

#[test]
fn implicit_multiplication_preserves_structure() {
    assert_eq!(parse_source("3x").unwrap(), parse_source("3*x").unwrap());
    assert_eq!(
        parse_source("2(x+y)").unwrap(),
        parse_source("2*(x+y)").unwrap()
    );
}

// --- property tests --------------------------------------------------------

fn arb_expr() -> impl Strategy<Value = ExprNode> {
    let leaf = prop_oneof![
        (-400i32..400).prop_map(|v| ExprNode::Const(v as f64 / 4.0)),
        prop_oneof![Just("x"), Just("y"), Just("z")].prop_map(ExprNode::symbol),
    ];
    leaf.prop_recursive(4, 48, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(ExprNode::Sum),
            prop::collection::vec(inner.clone(), 2..4).prop_map(ExprNode::Product),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| ExprNode::Pow(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| ExprNode::Div(Box::new(a), Box::new(b))),
            (
                prop_oneof![
                    Just(FuncName::Exp),
                    Just(FuncName::Log),
                    Just(FuncName::Sin),
                    Just(FuncName::Cos),
                    Just(FuncName::Abs)
                ],
                inner.clone()
            )
                .prop_map(|(f, a)| ExprNode::Func(f, Box::new(a))),
            inner.prop_map(|a| ExprNode::Neg(Box::new(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn round_trip_pretty_print(expr in arb_expr()) {
        let canon = expr.canonicalize();
        assert_canonical(&canon);
        let text = canon.to_text();
        let reparsed = parse_source(&text).unwrap_or_else(|e| {
            panic!("failed to reparse {:?}: {}", text, e)
        });
        prop_assert_eq!(reparsed, canon);
    }

    #[test]
    fn numeric_fidelity_against_reference_interpreter(
        expr in arb_expr(),
        xv in -3.0f64..3.0,
        yv in -3.0f64..3.0,
        zv in -3.0f64..3.0,
    ) {
        let canon = expr.canonicalize();
        let text = canon.to_text();
        let vars: BTreeMap<String, f64> =
            [("x", xv), ("y", yv), ("z", zv)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect();
        let ast_value = eval_expr(&parse_source(&text).unwrap(), &vars);
        let ref_value = reference::eval(&text, &vars);
        if let (Ok(a), Some(r)) = (ast_value, ref_value) {
            if r.is_finite() {
                let tol = 1e-12 * (1.0 + r.abs());
                prop_assert!((a - r).abs() <= tol, "ast={} ref={} for {}", a, r, text);
            }
        }
    }

    #[test]
    fn implicit_multiplication_never_changes_value(c in 1u32..50, name in "[a-w]") {
        let implicit = format!("{}{}", c, name);
        let explicit = format!("{}*{}", c, name);
        prop_assert_eq!(
            parse_source(&implicit).unwrap(),
            parse_source(&explicit).unwrap()
        );
    }
}

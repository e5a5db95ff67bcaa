//! Deterministic grammar-random expression corpus spanning the high-order
//! power, fractional, and exponential/logarithmic nonlinearity categories.
//! Used by the verification suites and the bench harness; seeded generation
//! keeps every run reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::expr::{ExprNode, FuncName};
use crate::nedtree::{Atom, NedTreeResult};
use crate::registry::{SymbolRegistry, VariableDecl};

const VARS: &[&str] = &["x", "y", "z", "w"];

/// Registry with the corpus variables `x, y, z, w` (continuous, unbounded).
pub fn standard_registry() -> SymbolRegistry {
    let mut reg = SymbolRegistry::new();
    for v in VARS {
        reg.add_var(VariableDecl::continuous(*v)).unwrap();
    }
    reg
}

/// Generates `count` canonical random expressions from one seed.
pub fn random_exprs(seed: u64, count: usize) -> Vec<ExprNode> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..count).map(|_| random_expr(&mut rng)).collect()
}

/// One grammar-random expression (depth-limited, never `var^var`).
pub fn random_expr(rng: &mut ChaCha20Rng) -> ExprNode {
    gen_node(rng, 3).canonicalize()
}

fn gen_node(rng: &mut ChaCha20Rng, depth: usize) -> ExprNode {
    if depth == 0 {
        return gen_leaf(rng);
    }
    match rng.gen_range(0..10) {
        0 => gen_leaf(rng),
        1 | 2 => {
            let n = rng.gen_range(2..=3);
            ExprNode::Sum((0..n).map(|_| gen_node(rng, depth - 1)).collect())
        }
        3 | 4 => {
            let n = rng.gen_range(2..=3);
            ExprNode::Product((0..n).map(|_| gen_node(rng, depth - 1)).collect())
        }
        // High-order and fractional powers of a variable.
        5 => {
            let exponents = [2.0, 3.0, 4.0, 0.5, 0.3, 1.7];
            let e = exponents[rng.gen_range(0..exponents.len())];
            ExprNode::Pow(
                Box::new(gen_var(rng)),
                Box::new(ExprNode::Const(e)),
            )
        }
        // Parametric-base power with a linear exponent.
        6 => {
            let base = rng.gen_range(0.5..3.0);
            let exponent = ExprNode::Sum(vec![
                ExprNode::Product(vec![
                    ExprNode::Const(round2(rng.gen_range(-1.5..1.5))),
                    gen_var(rng),
                ]),
                ExprNode::Const(round2(rng.gen_range(-1.0..1.0))),
            ]);
            ExprNode::Pow(Box::new(ExprNode::Const(round2(base))), Box::new(exponent))
        }
        7 => ExprNode::Div(
            Box::new(gen_node(rng, depth - 1)),
            Box::new(gen_var(rng)),
        ),
        8 => {
            let funcs = [
                FuncName::Exp,
                FuncName::Log,
                FuncName::Sin,
                FuncName::Cos,
                FuncName::Abs,
            ];
            let f = funcs[rng.gen_range(0..funcs.len())];
            let arg = match f {
                // Keep log arguments positive and exponential arguments
                // small so sampled points stay in-domain.
                FuncName::Log => ExprNode::Sum(vec![
                    ExprNode::Func(FuncName::Abs, Box::new(gen_node(rng, depth - 1))),
                    ExprNode::Const(0.5),
                ]),
                FuncName::Exp => ExprNode::Product(vec![
                    ExprNode::Const(0.1),
                    gen_node(rng, depth - 1),
                ]),
                _ => gen_node(rng, depth - 1),
            };
            ExprNode::Func(f, Box::new(arg))
        }
        _ => {
            // Linear term to keep the mix from being uniformly nonlinear.
            ExprNode::Sum(vec![
                ExprNode::Product(vec![
                    ExprNode::Const(round2(rng.gen_range(-5.0..5.0))),
                    gen_var(rng),
                ]),
                ExprNode::Const(round2(rng.gen_range(-5.0..5.0))),
            ])
        }
    }
}

fn gen_leaf(rng: &mut ChaCha20Rng) -> ExprNode {
    if rng.gen_bool(0.6) {
        gen_var(rng)
    } else {
        ExprNode::Const(round2(rng.gen_range(-5.0..5.0)))
    }
}

fn gen_var(rng: &mut ChaCha20Rng) -> ExprNode {
    ExprNode::symbol(VARS[rng.gen_range(0..VARS.len())])
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Perturbs the `k`-th mutable constant in the definition list by +0.1.
/// Returns `None` when the definitions hold fewer than `k+1` constants
/// (e.g. a pure bilinear chain).
pub fn mutate_one_constant(result: &NedTreeResult, k: usize) -> Option<NedTreeResult> {
    let mut mutated = result.clone();
    let mut seen = 0usize;
    for def in &mut mutated.defs {
        let slots: Vec<&mut f64> = match &mut def.atom {
            Atom::Pow { exponent, .. } => vec![exponent],
            Atom::Linear { form } => {
                let mut v: Vec<&mut f64> = vec![&mut form.constant];
                v.extend(form.terms.values_mut());
                v
            }
            Atom::Div {
                numerator,
                denominator,
            } => {
                let mut v: Vec<&mut f64> = vec![&mut numerator.constant];
                v.extend(numerator.terms.values_mut());
                v.push(&mut denominator.constant);
                v.extend(denominator.terms.values_mut());
                v
            }
            _ => vec![],
        };
        for slot in slots {
            if seen == k {
                *slot += 0.1;
                return Some(mutated);
            }
            seen += 1;
        }
    }
    None
}

/// Number of constants that [`mutate_one_constant`] can target.
pub fn mutable_constant_count(result: &NedTreeResult) -> usize {
    result
        .defs
        .iter()
        .map(|def| match &def.atom {
            Atom::Pow { .. } => 1,
            Atom::Linear { form } => 1 + form.terms.len(),
            Atom::Div {
                numerator,
                denominator,
            } => 2 + numerator.terms.len() + denominator.terms.len(),
            _ => 0,
        })
        .sum()
}

//! nedtree-core: turns optimization-problem elements (objectives,
//! constraints, conditionals, symbol declarations) into solver-ready code by
//! recursively decomposing nonlinear expressions into a linear skeleton plus
//! atomic nonlinear definitions, with a numeric oracle certifying semantic
//! equivalence and a pluggable extraction front-end for natural-language
//! input.
//!
//! Pipeline stages, each its own module:
//!
//! * [`expr`] — grammar: LaTeX cleaning, lexing, parsing, canonical AST;
//! * [`registry`] — symbol registration (parameters vs. variables);
//! * [`nedtree`] — the recursive decomposition into `(Set_D, L_FF)`;
//! * [`elements`] — the structured elements pool plus the nonlinear gate;
//! * [`extraction`] — two-stage model-driven extraction over a client trait;
//! * [`codegen`] — backend-neutral IR and solver source emission;
//! * [`oracle`] — sampled numeric equivalence certification;
//! * [`bench`] — dataset harness computing accuracy and pass-rate.

pub mod bench;
pub mod codegen;
pub mod corpus;
pub mod elements;
pub mod expr;
pub mod extraction;
pub mod nedtree;
pub mod oracle;
pub mod registry;

pub use expr::{ExprNode, RelationalExpr};
pub use nedtree::{decompose, decompose_relation, NedTreeResult};
pub use registry::SymbolRegistry;

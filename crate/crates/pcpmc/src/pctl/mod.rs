//! PCTL: syntax, text grammar, head-based assignments, exact evaluation.

mod ast;
mod eval;
mod parser;

pub use ast::{Comparison, FormulaError, PathFormula, StarPath, StateFormula};
pub use eval::{
    eval_state, eval_state_budgeted, path_probability, reachable_subgraph, until_probability,
    EvalError, HeadAssignment, Mode, NodeKind, ProbResult, SubGraph, DEFAULT_NODE_BUDGET,
};
pub use parser::parse_formula;

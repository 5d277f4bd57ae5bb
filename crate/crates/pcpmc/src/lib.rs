//! Exact-arithmetic workbench for stateless probabilistic and quantum
//! pushdown systems.
//!
//! The pieces, bottom up:
//!
//! - [`pcp`] — Post Correspondence Problem instances, padding to uniform
//!   width, solution checking, and a brute-force solver.
//! - [`pushdown`] — stack alphabets and weighted head-rewriting rules, with
//!   rational probabilities or polar-form quantum amplitudes, validated
//!   against the per-symbol sum conditions.
//! - [`chain`] — the induced infinite-state (quantum) Markov chain over
//!   configurations: cylinder probabilities, projection of quantum systems
//!   to probabilistic ones, and Graphviz unfoldings.
//! - [`pctl`] — PCTL syntax, a text grammar, and an exact evaluator that
//!   solves until-operators by Gaussian elimination over rationals.
//! - [`reduction`] — compiles a PCP instance into a pushdown system and
//!   formula family whose model-checking answers encode solutionhood.
//! - [`oracle`] — independent path enumeration certifying the evaluator.
//! - [`cli`] — the `pcpmc` command-line front end.
//!
//! Everything is exact: no floating point appears anywhere in the
//! semantics, so probability comparisons such as `p = t/2` are decidable
//! equalities on rationals.
//!
//! See the `examples/` directory for one runnable walkthrough per major
//! capability, e.g. `cargo run --example check_witness`.

pub mod chain;
pub mod cli;
pub mod oracle;
pub mod pcp;
pub mod pctl;
pub mod pushdown;
pub mod reduction;

pub use pushdown::ratio;

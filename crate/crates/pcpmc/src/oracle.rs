//! Brute-force path enumeration used to certify the evaluator.
//!
//! Until-probabilities are recomputed here by enumerating minimal satisfying
//! prefixes and multiplying step probabilities along each one — no linear
//! algebra — so evaluator bugs cannot confirm themselves. Atomic and boolean
//! state formulas are re-evaluated locally for the same reason; only a
//! nested probability quantifier falls back to the evaluator, since it is
//! itself a full model-checking problem.

use num::{BigRational, One, Zero};
use thiserror::Error;

use crate::chain::{successor_distribution, ChainError, FinitePath, LazyChain};
use crate::pctl::{eval_state, EvalError, HeadAssignment, PathFormula, StateFormula};
use crate::pushdown::Configuration;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration depth must be at least 1")]
    ZeroDepth,
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One enumerated path with its independently computed probability.
#[derive(Clone, Debug)]
pub struct PathRecord {
    pub path: FinitePath,
    pub probability: BigRational,
    pub satisfies: bool,
}

/// Result of an enumeration: the satisfying paths in discovery order, plus
/// the probability mass still unresolved at the depth limit.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub paths: Vec<PathRecord>,
    pub residual: BigRational,
}

impl Enumeration {
    /// Total probability of the enumerated satisfying paths.
    pub fn mass(&self) -> BigRational {
        self.paths.iter().map(|r| r.probability.clone()).sum()
    }
}

/// Direct state-formula semantics, independent of the evaluator except for
/// nested probability quantifiers.
fn holds(
    chain: &LazyChain<'_>,
    config: &Configuration,
    formula: &StateFormula,
    assignment: &HeadAssignment,
) -> Result<bool, OracleError> {
    match formula {
        StateFormula::True => Ok(true),
        StateFormula::Atom(atom) => Ok(config
            .head()
            .is_some_and(|head| assignment.satisfies(atom, head))),
        StateFormula::Not(inner) => Ok(!holds(chain, config, inner, assignment)?),
        StateFormula::And(a, b) => {
            Ok(holds(chain, config, a, assignment)? && holds(chain, config, b, assignment)?)
        }
        StateFormula::Prob { .. } => Ok(eval_state(chain, config, formula, assignment)?),
    }
}

/// Enumerates the minimal finite paths from `config` that resolve the path
/// formula positively, in rule order, up to `max_depth` steps.
///
/// For an until, a path ends at the first state satisfying the target; a
/// state refuting the guard (and not the target) kills its branch. Prefixes
/// still undecided after `max_depth` steps contribute to the residual.
pub fn enumerate_satisfying_paths(
    chain: &LazyChain<'_>,
    config: &Configuration,
    phi: &PathFormula,
    assignment: &HeadAssignment,
    max_depth: usize,
) -> Result<Enumeration, OracleError> {
    if max_depth == 0 {
        return Err(OracleError::ZeroDepth);
    }
    match phi {
        PathFormula::Next(inner) => {
            let mut paths = Vec::new();
            for (succ, prob) in successor_distribution(chain, config) {
                if holds(chain, &succ, inner, assignment)? {
                    let path = chain.path(vec![config.clone(), succ])?;
                    paths.push(PathRecord { path, probability: prob, satisfies: true });
                }
            }
            Ok(Enumeration { paths, residual: BigRational::zero() })
        }
        PathFormula::Until(guard, target) => {
            let mut out = Enumeration { paths: Vec::new(), residual: BigRational::zero() };
            let mut prefix = vec![config.clone()];
            walk_until(
                chain,
                guard,
                target,
                assignment,
                &mut prefix,
                BigRational::one(),
                max_depth,
                &mut out,
            )?;
            Ok(out)
        }
        PathFormula::Star(_) => Err(OracleError::Eval(EvalError::UnsupportedPctlStar)),
    }
}

#[allow(clippy::too_many_arguments)]
fn walk_until(
    chain: &LazyChain<'_>,
    guard: &StateFormula,
    target: &StateFormula,
    assignment: &HeadAssignment,
    prefix: &mut Vec<Configuration>,
    probability: BigRational,
    depth_left: usize,
    out: &mut Enumeration,
) -> Result<(), OracleError> {
    let state = prefix.last().expect("prefix is nonempty").clone();
    if holds(chain, &state, target, assignment)? {
        let path = chain.path(prefix.clone())?;
        out.paths.push(PathRecord { path, probability, satisfies: true });
        return Ok(());
    }
    // the empty configuration only loops to itself: an until unsatisfied
    // there resolves negatively, it is not residual mass
    if state.is_empty() || !holds(chain, &state, guard, assignment)? {
        return Ok(());
    }
    if depth_left == 0 {
        out.residual += probability;
        return Ok(());
    }
    for (succ, prob) in successor_distribution(chain, &state) {
        prefix.push(succ);
        walk_until(
            chain,
            guard,
            target,
            assignment,
            prefix,
            &probability * &prob,
            depth_left - 1,
            out,
        )?;
        prefix.pop();
    }
    Ok(())
}

/// Sum of the enumerated masses; exact when the residual is zero.
pub fn oracle_until_probability(
    chain: &LazyChain<'_>,
    config: &Configuration,
    phi: &PathFormula,
    assignment: &HeadAssignment,
    max_depth: usize,
) -> Result<(BigRational, BigRational), OracleError> {
    let enumeration = enumerate_satisfying_paths(chain, config, phi, assignment, max_depth)?;
    Ok((enumeration.mass(), enumeration.residual))
}

/// Renders an enumeration as a report, one path per line with its
/// lowest-terms probability.
pub fn enumeration_report(enumeration: &Enumeration) -> String {
    let mut out = String::new();
    for record in &enumeration.paths {
        out.push_str(&format!("{}  @ {}\n", record.path, record.probability));
    }
    out.push_str(&format!(
        "total: {}  residual: {}\n",
        enumeration.mass(),
        enumeration.residual
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::induced_chain;
    use crate::pcp::{pad_instance, PcpInstance};
    use crate::reduction::{build_reduction, FormulaVariant};
    use crate::pushdown::{ratio, Flavor};

    fn worked_alpha_start(head: &str) -> Configuration {
        Configuration::parse(&format!("{head} (A,A) (A,.) (.,A) (B,B) Z'"))
    }

    #[test]
    fn enumerates_the_four_audit_paths() {
        let mp = pad_instance(&PcpInstance::from_strs(&[("A", "A")]).unwrap());
        let reduction = build_reduction(&mp, Flavor::Probabilistic, FormulaVariant::Nested).unwrap();
        let chain = induced_chain(reduction.system()).unwrap();
        let enumeration = enumerate_satisfying_paths(
            &chain,
            &worked_alpha_start("F"),
            reduction.phi1(),
            reduction.assignment(),
            12,
        )
        .unwrap();
        let probs: Vec<BigRational> =
            enumeration.paths.iter().map(|r| r.probability.clone()).collect();
        assert_eq!(probs, vec![ratio(1, 2), ratio(1, 4), ratio(1, 32), ratio(1, 32)]);
        assert_eq!(enumeration.mass(), ratio(13, 16));
        assert_eq!(enumeration.residual, ratio(0, 1));

        let (mass, residual) = oracle_until_probability(
            &chain,
            &worked_alpha_start("S"),
            reduction.phi2(),
            reduction.assignment(),
            12,
        )
        .unwrap();
        assert_eq!(mass, ratio(3, 16));
        assert_eq!(residual, ratio(0, 1));
    }

    #[test]
    fn empty_configuration_resolves_nothing() {
        let mp = pad_instance(&PcpInstance::from_strs(&[("A", "A")]).unwrap());
        let reduction = build_reduction(&mp, Flavor::Probabilistic, FormulaVariant::Nested).unwrap();
        let chain = induced_chain(reduction.system()).unwrap();
        let enumeration = enumerate_satisfying_paths(
            &chain,
            &Configuration::empty(),
            reduction.phi1(),
            reduction.assignment(),
            6,
        )
        .unwrap();
        assert!(enumeration.paths.is_empty());
        assert_eq!(enumeration.residual, ratio(0, 1));
    }

    #[test]
    fn branch_state_mass_is_half_the_audit_weight() {
        let mp = pad_instance(&PcpInstance::from_strs(&[("A", "A")]).unwrap());
        let reduction = build_reduction(&mp, Flavor::Probabilistic, FormulaVariant::Nested).unwrap();
        let chain = induced_chain(reduction.system()).unwrap();
        let (mass, residual) = oracle_until_probability(
            &chain,
            &Configuration::parse("N (A,A) Z'"),
            reduction.phi1(),
            reduction.assignment(),
            12,
        )
        .unwrap();
        assert_eq!(mass, ratio(3, 8)); // rho(A Z') / 2
        assert_eq!(residual, ratio(0, 1));
    }

    #[test]
    fn truncating_the_guess_phase_leaves_residual() {
        use crate::pctl::StateFormula;
        use crate::pushdown::StackSymbol;
        let mp = pad_instance(&PcpInstance::from_strs(&[("A", "A")]).unwrap());
        let reduction = build_reduction(&mp, Flavor::Probabilistic, FormulaVariant::Nested).unwrap();
        let chain = induced_chain(reduction.system()).unwrap();
        let reach_commit = PathFormula::until(
            StateFormula::True,
            StateFormula::atom(StackSymbol::Commit),
        );
        let (mass, residual) = oracle_until_probability(
            &chain,
            &Configuration::parse("Z"),
            &reach_commit,
            reduction.assignment(),
            3,
        )
        .unwrap();
        assert_eq!(mass, ratio(1, 2));
        assert_eq!(residual, ratio(1, 2));
        // deeper exploration converts residual into mass, never the reverse
        let (mass6, residual6) = oracle_until_probability(
            &chain,
            &Configuration::parse("Z"),
            &reach_commit,
            reduction.assignment(),
            6,
        )
        .unwrap();
        assert!(mass6 >= mass);
        assert!(residual6 <= residual);
    }

    #[test]
    fn recorded_probabilities_match_cylinder_probabilities() {
        let mp = pad_instance(&PcpInstance::from_strs(&[("A", "A")]).unwrap());
        let reduction = build_reduction(&mp, Flavor::Probabilistic, FormulaVariant::Nested).unwrap();
        let chain = induced_chain(reduction.system()).unwrap();
        let enumeration = enumerate_satisfying_paths(
            &chain,
            &worked_alpha_start("F"),
            reduction.phi1(),
            reduction.assignment(),
            12,
        )
        .unwrap();
        for record in &enumeration.paths {
            assert_eq!(record.probability, chain.cylinder_probability(&record.path));
            assert!(record.satisfies);
        }
    }
}

//! Exact PCTL evaluation over lazily expanded chains.
//!
//! `X Phi` is a one-step weight sum. `Phi1 U Phi2` builds the reachable
//! subgraph restricted to guard states (targets and failures absorb) and
//! solves the resulting linear fixpoint system by Gaussian elimination over
//! rationals. Equality comparisons against bounds such as `t/2` make
//! exactness non-negotiable, so no floating point appears anywhere.
//!
//! The bounded mode explores to a fixed depth instead and returns an
//! interval `[achieved, achieved + unresolved]` that contains the exact
//! value; it is the fallback when the guarded subgraph is infinite.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use num::{BigRational, One, Zero};
use thiserror::Error;

use super::ast::{PathFormula, StateFormula};
use crate::chain::{successor_distribution, LazyChain};
use crate::pushdown::{Configuration, StackSymbol};

/// Default cap on explored subgraph nodes in exact mode.
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

/// Maps atomic propositions to head sets; a configuration satisfies an atom
/// iff its head lies in the atom's set. The empty configuration satisfies
/// no atom.
#[derive(Clone, Debug)]
pub struct HeadAssignment {
    inner: AssignmentKind,
}

#[derive(Clone, Debug)]
enum AssignmentKind {
    /// Every atom denotes exactly the configurations headed by itself.
    Identity,
    Custom(BTreeMap<StackSymbol, BTreeSet<StackSymbol>>),
}

impl HeadAssignment {
    pub fn identity() -> Self {
        HeadAssignment { inner: AssignmentKind::Identity }
    }

    pub fn custom(map: BTreeMap<StackSymbol, BTreeSet<StackSymbol>>) -> Self {
        HeadAssignment { inner: AssignmentKind::Custom(map) }
    }

    pub fn satisfies(&self, atom: &StackSymbol, head: &StackSymbol) -> bool {
        match &self.inner {
            AssignmentKind::Identity => atom == head,
            AssignmentKind::Custom(map) => map.get(atom).is_some_and(|set| set.contains(head)),
        }
    }
}

/// An exact probability, or an enclosing interval from bounded exploration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProbResult {
    Exact(BigRational),
    Interval { lo: BigRational, hi: BigRational },
}

impl ProbResult {
    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            ProbResult::Exact(p) => Some(p),
            ProbResult::Interval { .. } => None,
        }
    }

    /// True iff `value` is consistent with this result.
    pub fn contains(&self, value: &BigRational) -> bool {
        match self {
            ProbResult::Exact(p) => p == value,
            ProbResult::Interval { lo, hi } => lo <= value && value <= hi,
        }
    }
}

impl fmt::Display for ProbResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbResult::Exact(p) => write!(f, "{p}"),
            ProbResult::Interval { lo, hi } => write!(f, "[{lo}, {hi}]"),
        }
    }
}

/// Evaluation mode for path probabilities.
#[derive(Clone, Debug)]
pub enum Mode {
    Exact { node_budget: usize },
    Bounded { depth: usize },
}

impl Mode {
    pub fn exact() -> Self {
        Mode::Exact { node_budget: DEFAULT_NODE_BUDGET }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("exact exploration exceeded the node budget of {budget}; retry in bounded mode")]
    BudgetExceeded { budget: usize },
    #[error("path formula is outside the evaluable fragment (X Phi / Phi U Phi)")]
    UnsupportedPctlStar,
    #[error("linear system for the until operator is singular")]
    Singular,
}

/// Truth of a state formula at a configuration, per exact semantics.
pub fn eval_state(
    chain: &LazyChain<'_>,
    config: &Configuration,
    formula: &StateFormula,
    assignment: &HeadAssignment,
) -> Result<bool, EvalError> {
    eval_state_budgeted(chain, config, formula, assignment, DEFAULT_NODE_BUDGET)
}

/// As [`eval_state`], with an explicit node budget for nested until solves.
pub fn eval_state_budgeted(
    chain: &LazyChain<'_>,
    config: &Configuration,
    formula: &StateFormula,
    assignment: &HeadAssignment,
    budget: usize,
) -> Result<bool, EvalError> {
    match formula {
        StateFormula::True => Ok(true),
        StateFormula::Atom(atom) => Ok(config
            .head()
            .is_some_and(|head| assignment.satisfies(atom, head))),
        StateFormula::Not(inner) => Ok(!eval_state_budgeted(chain, config, inner, assignment, budget)?),
        StateFormula::And(a, b) => Ok(eval_state_budgeted(chain, config, a, assignment, budget)?
            && eval_state_budgeted(chain, config, b, assignment, budget)?),
        StateFormula::Prob { cmp, bound, path } => {
            let result = path_probability(
                chain,
                config,
                path,
                assignment,
                &Mode::Exact { node_budget: budget },
            )?;
            let value = result.exact().expect("exact mode yields exact results");
            Ok(cmp.compare(value, bound))
        }
    }
}

/// Probability of the set of runs from `config` satisfying the path formula.
pub fn path_probability(
    chain: &LazyChain<'_>,
    config: &Configuration,
    path: &PathFormula,
    assignment: &HeadAssignment,
    mode: &Mode,
) -> Result<ProbResult, EvalError> {
    let budget = match mode {
        Mode::Exact { node_budget } => *node_budget,
        Mode::Bounded { .. } => DEFAULT_NODE_BUDGET,
    };
    match path {
        PathFormula::Next(inner) => {
            let mut sum = BigRational::zero();
            for (succ, prob) in successor_distribution(chain, config) {
                if eval_state_budgeted(chain, &succ, inner, assignment, budget)? {
                    sum += prob;
                }
            }
            Ok(ProbResult::Exact(sum))
        }
        PathFormula::Until(guard, target) => match mode {
            Mode::Exact { node_budget } => {
                let sub = reachable_subgraph(chain, config, guard, target, assignment, *node_budget)?;
                Ok(ProbResult::Exact(until_probability(&sub)?))
            }
            Mode::Bounded { depth } => {
                bounded_until(chain, config, guard, target, assignment, *depth, budget)
            }
        },
        PathFormula::Star(_) => Err(EvalError::UnsupportedPctlStar),
    }
}

/// Classification of a subgraph node for the until operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// Satisfies the target formula; absorbing with value 1.
    Target,
    /// Satisfies neither target nor guard; absorbing with value 0.
    Fail,
    /// Guard-only state whose value is determined by its successors.
    Interior,
}

/// The finite weighted graph the until solver works on. `nodes[0]` is the
/// start configuration; `edges` lists `(successor index, probability)`
/// pairs for interior nodes and is empty for absorbing ones.
#[derive(Clone, Debug)]
pub struct SubGraph {
    pub nodes: Vec<Configuration>,
    pub kinds: Vec<NodeKind>,
    pub edges: Vec<Vec<(usize, BigRational)>>,
}

fn classify(
    chain: &LazyChain<'_>,
    config: &Configuration,
    guard: &StateFormula,
    target: &StateFormula,
    assignment: &HeadAssignment,
    budget: usize,
) -> Result<NodeKind, EvalError> {
    if eval_state_budgeted(chain, config, target, assignment, budget)? {
        Ok(NodeKind::Target)
    } else if eval_state_budgeted(chain, config, guard, assignment, budget)? {
        Ok(NodeKind::Interior)
    } else {
        Ok(NodeKind::Fail)
    }
}

/// Explores the guard-restricted reachable subgraph breadth-first.
///
/// Targets and failures are frontier nodes and are not expanded. Exceeding
/// the node budget is an error; infinite guard regions (such as the guess
/// phase of generated systems) surface here.
pub fn reachable_subgraph(
    chain: &LazyChain<'_>,
    start: &Configuration,
    guard: &StateFormula,
    target: &StateFormula,
    assignment: &HeadAssignment,
    budget: usize,
) -> Result<SubGraph, EvalError> {
    let mut nodes = Vec::new();
    let mut kinds = Vec::new();
    let mut edges: Vec<Vec<(usize, BigRational)>> = Vec::new();
    let mut index: HashMap<Configuration, usize> = HashMap::new();
    let mut queue = VecDeque::new();

    let add_node = |config: Configuration,
                        nodes: &mut Vec<Configuration>,
                        kinds: &mut Vec<NodeKind>,
                        edges: &mut Vec<Vec<(usize, BigRational)>>,
                        index: &mut HashMap<Configuration, usize>,
                        queue: &mut VecDeque<usize>|
     -> Result<usize, EvalError> {
        if let Some(&i) = index.get(&config) {
            return Ok(i);
        }
        let i = nodes.len();
        if i >= budget {
            return Err(EvalError::BudgetExceeded { budget });
        }
        let kind = classify(chain, &config, guard, target, assignment, budget)?;
        index.insert(config.clone(), i);
        nodes.push(config);
        kinds.push(kind);
        edges.push(Vec::new());
        if kind == NodeKind::Interior {
            queue.push_back(i);
        }
        Ok(i)
    };

    add_node(start.clone(), &mut nodes, &mut kinds, &mut edges, &mut index, &mut queue)?;
    while let Some(i) = queue.pop_front() {
        let config = nodes[i].clone();
        let mut out = Vec::new();
        for (succ, prob) in successor_distribution(chain, &config) {
            let j = add_node(succ, &mut nodes, &mut kinds, &mut edges, &mut index, &mut queue)?;
            out.push((j, prob));
        }
        edges[i] = out;
    }
    Ok(SubGraph { nodes, kinds, edges })
}

/// Interior nodes from which a target is reachable inside the subgraph.
/// Everything else has until-probability 0, which is what makes the linear
/// system below uniquely solvable.
fn can_reach_target(sub: &SubGraph) -> Vec<bool> {
    let n = sub.nodes.len();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (from, out) in sub.edges.iter().enumerate() {
        for (to, _) in out {
            reverse[*to].push(from);
        }
    }
    let mut reach = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| sub.kinds[i] == NodeKind::Target).collect();
    for &i in &queue {
        reach[i] = true;
    }
    while let Some(i) = queue.pop_front() {
        for &p in &reverse[i] {
            if !reach[p] && sub.kinds[p] == NodeKind::Interior {
                reach[p] = true;
                queue.push_back(p);
            }
        }
    }
    reach
}

/// Exact until-probability of the subgraph's start node: the least fixpoint
/// of `x = A x + b`, solved as `(I - A) x = b` after pruning the nodes that
/// cannot reach a target.
pub fn until_probability(sub: &SubGraph) -> Result<BigRational, EvalError> {
    match sub.kinds[0] {
        NodeKind::Target => return Ok(BigRational::one()),
        NodeKind::Fail => return Ok(BigRational::zero()),
        NodeKind::Interior => {}
    }
    let reach = can_reach_target(sub);
    if !reach[0] {
        return Ok(BigRational::zero());
    }
    let unknowns: Vec<usize> = (0..sub.nodes.len())
        .filter(|&i| sub.kinds[i] == NodeKind::Interior && reach[i])
        .collect();
    let var_of: HashMap<usize, usize> =
        unknowns.iter().enumerate().map(|(v, &i)| (i, v)).collect();
    let n = unknowns.len();
    let mut matrix = vec![vec![BigRational::zero(); n]; n];
    let mut rhs = vec![BigRational::zero(); n];
    for (v, &i) in unknowns.iter().enumerate() {
        matrix[v][v] = BigRational::one();
        for (j, prob) in &sub.edges[i] {
            match sub.kinds[*j] {
                NodeKind::Target => rhs[v] += prob,
                NodeKind::Interior => {
                    if let Some(&w) = var_of.get(j) {
                        matrix[v][w] -= prob;
                    }
                }
                NodeKind::Fail => {}
            }
        }
    }
    let solution = solve_linear(matrix, rhs).ok_or(EvalError::Singular)?;
    Ok(solution[var_of[&0]].clone())
}

/// Gauss-Jordan elimination over exact rationals; deterministic pivoting
/// (first nonzero row). Returns `None` on a singular matrix.
fn solve_linear(mut m: Vec<Vec<BigRational>>, mut rhs: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = m[col][col].recip();
        for c in col..n {
            if !m[col][c].is_zero() {
                m[col][c] = &m[col][c] * &inv;
            }
        }
        rhs[col] = &rhs[col] * &inv;
        for row in 0..n {
            if row == col || m[row][col].is_zero() {
                continue;
            }
            let factor = std::mem::replace(&mut m[row][col], BigRational::zero());
            for c in (col + 1)..n {
                if !m[col][c].is_zero() {
                    let delta = &factor * &m[col][c];
                    m[row][c] -= delta;
                }
            }
            let delta = &factor * &rhs[col];
            rhs[row] -= delta;
        }
    }
    Some(rhs)
}

/// Depth-limited until: propagates probability mass level by level and
/// returns `[achieved, achieved + unresolved]`.
fn bounded_until(
    chain: &LazyChain<'_>,
    start: &Configuration,
    guard: &StateFormula,
    target: &StateFormula,
    assignment: &HeadAssignment,
    depth: usize,
    budget: usize,
) -> Result<ProbResult, EvalError> {
    let mut kinds: HashMap<Configuration, NodeKind> = HashMap::new();
    let mut kind_of = |config: &Configuration| -> Result<NodeKind, EvalError> {
        if let Some(k) = kinds.get(config) {
            return Ok(*k);
        }
        let k = classify(chain, config, guard, target, assignment, budget)?;
        kinds.insert(config.clone(), k);
        Ok(k)
    };

    let mut achieved = BigRational::zero();
    let mut frontier: BTreeMap<Configuration, BigRational> = BTreeMap::new();
    match kind_of(start)? {
        NodeKind::Target => achieved = BigRational::one(),
        NodeKind::Fail => {}
        NodeKind::Interior => {
            frontier.insert(start.clone(), BigRational::one());
        }
    }
    for _ in 0..depth {
        if frontier.is_empty() {
            break;
        }
        let mut next: BTreeMap<Configuration, BigRational> = BTreeMap::new();
        for (config, mass) in frontier {
            for (succ, prob) in successor_distribution(chain, &config) {
                let share = &mass * &prob;
                match kind_of(&succ)? {
                    NodeKind::Target => achieved += share,
                    NodeKind::Fail => {}
                    NodeKind::Interior => {
                        *next.entry(succ).or_insert_with(BigRational::zero) += share;
                    }
                }
            }
        }
        frontier = next;
    }
    let unresolved: BigRational = frontier.values().sum();
    Ok(ProbResult::Interval { lo: achieved.clone(), hi: achieved + unresolved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::induced_chain;
    use crate::pushdown::{ratio, Flavor, PushdownSystem, Rule, Weight};

    fn sym(name: &str) -> StackSymbol {
        StackSymbol::named(name)
    }

    fn atom(name: &str) -> StateFormula {
        StateFormula::Atom(sym(name))
    }

    // X -> Y | eps (half each), Y -> G, G -> G: reaching Y means "target",
    // G is a live trap.
    fn trap_system() -> PushdownSystem {
        PushdownSystem::new(
            Flavor::Probabilistic,
            vec![sym("X"), sym("Y"), sym("G")],
            vec![
                Rule::new(sym("X"), vec![sym("Y")], Weight::Prob(ratio(1, 2))).unwrap(),
                Rule::new(sym("X"), vec![sym("G")], Weight::Prob(ratio(1, 2))).unwrap(),
                Rule::new(sym("Y"), vec![], Weight::Prob(ratio(1, 1))).unwrap(),
                Rule::new(sym("G"), vec![sym("G")], Weight::Prob(ratio(1, 1))).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn atoms_test_the_head_and_eps_satisfies_none() {
        let system = trap_system();
        let chain = induced_chain(&system).unwrap();
        let assign = HeadAssignment::identity();
        let config = Configuration::parse("X Y");
        assert!(eval_state(&chain, &config, &atom("X"), &assign).unwrap());
        assert!(!eval_state(&chain, &config, &atom("Y"), &assign).unwrap());
        assert!(!eval_state(&chain, &Configuration::empty(), &atom("X"), &assign).unwrap());
        assert!(eval_state(&chain, &Configuration::empty(), &StateFormula::True, &assign).unwrap());
    }

    #[test]
    fn until_handles_traps_and_self_loops() {
        let system = trap_system();
        let chain = induced_chain(&system).unwrap();
        let assign = HeadAssignment::identity();
        let until = PathFormula::until(StateFormula::True, atom("Y"));
        let p = path_probability(&chain, &Configuration::parse("X"), &until, &assign, &Mode::exact())
            .unwrap();
        assert_eq!(p, ProbResult::Exact(ratio(1, 2)));

        // from the empty configuration nothing is ever satisfied
        let p = path_probability(&chain, &Configuration::empty(), &until, &assign, &Mode::exact())
            .unwrap();
        assert_eq!(p, ProbResult::Exact(ratio(0, 1)));
    }

    #[test]
    fn next_sums_successor_weights() {
        let system = trap_system();
        let chain = induced_chain(&system).unwrap();
        let assign = HeadAssignment::identity();
        let next = PathFormula::next(atom("Y"));
        let p = path_probability(&chain, &Configuration::parse("X"), &next, &assign, &Mode::exact())
            .unwrap();
        assert_eq!(p, ProbResult::Exact(ratio(1, 2)));
    }

    #[test]
    fn bounded_mode_brackets_the_exact_value() {
        let system = trap_system();
        let chain = induced_chain(&system).unwrap();
        let assign = HeadAssignment::identity();
        let until = PathFormula::until(StateFormula::True, atom("Y"));
        // the G-trap never resolves, so its mass stays in the upper bound
        let p = path_probability(
            &chain,
            &Configuration::parse("X"),
            &until,
            &assign,
            &Mode::Bounded { depth: 1 },
        )
        .unwrap();
        assert_eq!(p, ProbResult::Interval { lo: ratio(1, 2), hi: ratio(1, 1) });
        assert!(p.contains(&ratio(1, 2)));

        // depth 0 resolves nothing
        let p = path_probability(
            &chain,
            &Configuration::parse("X"),
            &until,
            &assign,
            &Mode::Bounded { depth: 0 },
        )
        .unwrap();
        assert_eq!(p, ProbResult::Interval { lo: ratio(0, 1), hi: ratio(1, 1) });
    }

    #[test]
    fn budget_exceeded_on_unbounded_regions() {
        // X -> X X grows the stack forever with probability 1/2
        let system = PushdownSystem::new(
            Flavor::Probabilistic,
            vec![sym("X"), sym("T")],
            vec![
                Rule::new(sym("X"), vec![sym("X"), sym("X")], Weight::Prob(ratio(1, 2))).unwrap(),
                Rule::new(sym("X"), vec![sym("T")], Weight::Prob(ratio(1, 2))).unwrap(),
                Rule::new(sym("T"), vec![sym("T")], Weight::Prob(ratio(1, 1))).unwrap(),
            ],
        )
        .unwrap();
        let chain = induced_chain(&system).unwrap();
        let assign = HeadAssignment::identity();
        let until = PathFormula::until(StateFormula::True, atom("T"));
        let err = path_probability(
            &chain,
            &Configuration::parse("X"),
            &until,
            &assign,
            &Mode::Exact { node_budget: 50 },
        )
        .unwrap_err();
        assert!(matches!(err, EvalError::BudgetExceeded { budget: 50 }));
    }

    #[test]
    fn distinct_rules_yield_distinct_successors() {
        // the tail is shared, so X -> Y and X -> Y Y cannot collide
        let system = PushdownSystem::new(
            Flavor::Probabilistic,
            vec![sym("X"), sym("Y")],
            vec![
                Rule::new(sym("X"), vec![sym("Y")], Weight::Prob(ratio(1, 2))).unwrap(),
                Rule::new(sym("X"), vec![sym("Y"), sym("Y")], Weight::Prob(ratio(1, 2))).unwrap(),
                Rule::new(sym("Y"), vec![sym("Y")], Weight::Prob(ratio(1, 1))).unwrap(),
            ],
        )
        .unwrap();
        let chain = induced_chain(&system).unwrap();
        let succ = successor_distribution(&chain, &Configuration::parse("X Y"));
        assert_eq!(succ.len(), 2);
        assert_ne!(succ[0].0, succ[1].0);
    }

    #[test]
    fn pctl_star_formulas_are_flagged_at_evaluation() {
        let system = trap_system();
        let chain = induced_chain(&system).unwrap();
        let assign = HeadAssignment::identity();
        let formula = super::super::parse_formula("P{>0}[X X Y]").unwrap();
        let err = eval_state(&chain, &Configuration::parse("X"), &formula, &assign).unwrap_err();
        assert!(matches!(err, EvalError::UnsupportedPctlStar));
    }

    #[test]
    fn nested_probability_operators_evaluate() {
        let system = trap_system();
        let chain = induced_chain(&system).unwrap();
        let assign = HeadAssignment::identity();
        // X satisfies: with probability 1/2 the next state satisfies P{=1}[true U Y]
        let inner = StateFormula::prob(
            super::super::Comparison::Equal,
            ratio(1, 1),
            PathFormula::until(StateFormula::True, atom("Y")),
        )
        .unwrap();
        let outer = StateFormula::prob(
            super::super::Comparison::Equal,
            ratio(1, 2),
            PathFormula::next(inner),
        )
        .unwrap();
        assert!(eval_state(&chain, &Configuration::parse("X"), &outer, &assign).unwrap());
    }
}

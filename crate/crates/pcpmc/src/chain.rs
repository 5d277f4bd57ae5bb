//! The (quantum) Markov chain induced by a pushdown system.
//!
//! States are configurations; transitions rewrite the head symbol. The empty
//! configuration has no rule, so it gets an absorbing self-loop of weight 1,
//! which keeps every state live and gives probability 0 to objectives that
//! are still unresolved once the stack empties.
//!
//! For quantum systems the probability of a cylinder set is the squared
//! modulus of the product of the step amplitudes. With amplitudes kept in
//! polar form this is computed symbolically: moduli multiply, phases add,
//! and the phase drops out of the squared modulus.

use std::fmt::Write as _;

use num::{BigRational, One};
use thiserror::Error;

use crate::pushdown::{
    Amplitude, Configuration, Flavor, PushdownSystem, Rule, ValidationReport, Weight,
};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("system failed validation: {0}")]
    InvalidSystem(ValidationReport),
    #[error("no transition from {from} to {to}")]
    NotAPath { from: Configuration, to: Configuration },
    #[error("a path needs at least one state")]
    EmptyPath,
    #[error("expected a quantum system")]
    NotQuantum,
}

/// The induced chain: a lazy successor function over configurations.
#[derive(Clone, Copy, Debug)]
pub struct LazyChain<'s> {
    system: &'s PushdownSystem,
}

/// Validates the system and wraps it as a chain.
pub fn induced_chain(system: &PushdownSystem) -> Result<LazyChain<'_>, ChainError> {
    let report = system.validate();
    if !report.is_valid() {
        return Err(ChainError::InvalidSystem(report));
    }
    Ok(LazyChain { system })
}

impl<'s> LazyChain<'s> {
    pub fn flavor(&self) -> Flavor {
        self.system.flavor()
    }

    pub fn system(&self) -> &'s PushdownSystem {
        self.system
    }

    fn unit_weight(&self) -> Weight {
        match self.system.flavor() {
            Flavor::Probabilistic => Weight::Prob(BigRational::one()),
            Flavor::Quantum => Weight::Amp(Amplitude::unit()),
        }
    }

    /// One-step successors. Total: the empty configuration loops to itself.
    pub fn successors(&self, config: &Configuration) -> Vec<(Configuration, Weight)> {
        if config.is_empty() {
            return vec![(Configuration::empty(), self.unit_weight())];
        }
        self.system
            .successors(config)
            .expect("validated system has a rule for every symbol")
    }

    /// The weight of the step `from -> to`; unique, since distinct rules
    /// cannot produce the same successor of one configuration.
    fn step_weight(&self, from: &Configuration, to: &Configuration) -> Result<Weight, ChainError> {
        self.successors(from)
            .into_iter()
            .find(|(succ, _)| succ == to)
            .map(|(_, weight)| weight)
            .ok_or_else(|| ChainError::NotAPath { from: from.clone(), to: to.clone() })
    }

    /// Validates a state sequence as a finite path of this chain.
    pub fn path(&self, states: Vec<Configuration>) -> Result<FinitePath, ChainError> {
        if states.is_empty() {
            return Err(ChainError::EmptyPath);
        }
        let mut weights = Vec::with_capacity(states.len() - 1);
        for pair in states.windows(2) {
            weights.push(self.step_weight(&pair[0], &pair[1])?);
        }
        Ok(FinitePath { states, weights })
    }

    /// Probability of the cylinder set of `path`: the product of step
    /// probabilities, or the squared modulus of the step-amplitude product.
    pub fn cylinder_probability(&self, path: &FinitePath) -> BigRational {
        match self.flavor() {
            Flavor::Probabilistic => path
                .weights
                .iter()
                .map(Weight::step_probability)
                .product(),
            Flavor::Quantum => path
                .amplitude()
                .expect("quantum path stores amplitudes")
                .sq_modulus,
        }
    }
}

/// A validated finite path: consecutive states joined by transitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinitePath {
    states: Vec<Configuration>,
    weights: Vec<Weight>,
}

impl FinitePath {
    pub fn states(&self) -> &[Configuration] {
        &self.states
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn first(&self) -> &Configuration {
        &self.states[0]
    }

    pub fn last(&self) -> &Configuration {
        self.states.last().expect("paths are nonempty")
    }

    /// Number of steps (edges); a single-state path has 0.
    pub fn steps(&self) -> usize {
        self.weights.len()
    }

    /// The product amplitude along a quantum path; `None` on probabilistic
    /// paths. A single-state path has the unit amplitude (empty product).
    pub fn amplitude(&self) -> Option<Amplitude> {
        let mut product = Amplitude::unit();
        for weight in &self.weights {
            match weight {
                Weight::Amp(a) => product = product.mul(a),
                Weight::Prob(_) => return None,
            }
        }
        Some(product)
    }
}

impl std::fmt::Display for FinitePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let body = self
            .states
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" -> ");
        write!(f, "{body}")
    }
}

/// Replaces every amplitude by its squared modulus, yielding the
/// probabilistic system that induces the same cylinder probabilities.
pub fn project_to_probabilistic(system: &PushdownSystem) -> Result<PushdownSystem, ChainError> {
    if system.flavor() != Flavor::Quantum {
        return Err(ChainError::NotQuantum);
    }
    let rules = system
        .rules()
        .iter()
        .map(|rule| {
            rule.with_weight(Weight::Prob(rule.weight().step_probability()))
                .expect("magnitude is unchanged")
        })
        .collect::<Vec<Rule>>();
    Ok(PushdownSystem::new(Flavor::Probabilistic, system.alphabet().to_vec(), rules)
        .expect("projection preserves structure"))
}

/// Renders the bounded unfolding tree of `start` as a Graphviz document.
///
/// Nodes are labeled with configurations, edges with the step weight.
/// Expansion stops at `depth` steps and at any node matched by `stop`.
/// Output is deterministic: nodes are numbered in breadth-first order and
/// children follow rule declaration order.
pub fn unfold_dot(
    chain: &LazyChain<'_>,
    start: &Configuration,
    depth: usize,
    stop: Option<&dyn Fn(&Configuration) -> bool>,
) -> String {
    let mut out = String::from("digraph unfolding {\n  rankdir=TB;\n  node [shape=box];\n");
    let mut queue = std::collections::VecDeque::new();
    let mut next_id = 0usize;
    let _ = writeln!(out, "  n0 [label=\"{start}\"];");
    queue.push_back((0usize, start.clone(), 0usize));
    next_id += 1;
    let mut edges = String::new();
    while let Some((id, config, level)) = queue.pop_front() {
        if level >= depth {
            continue;
        }
        if let Some(stop) = stop {
            if stop(&config) {
                continue;
            }
        }
        for (succ, weight) in chain.successors(&config) {
            let child = next_id;
            next_id += 1;
            let _ = writeln!(out, "  n{child} [label=\"{succ}\"];");
            let _ = writeln!(edges, "  n{id} -> n{child} [label=\"{weight}\"];");
            queue.push_back((child, succ, level + 1));
        }
    }
    out.push_str(&edges);
    out.push_str("}\n");
    out
}

/// The unfolding as a plain edge list `(parent, child, config, weight)`,
/// convenient for tests and reports; same traversal as [`unfold_dot`].
pub fn unfold_edges(
    chain: &LazyChain<'_>,
    start: &Configuration,
    depth: usize,
    stop: Option<&dyn Fn(&Configuration) -> bool>,
) -> Vec<(usize, usize, Configuration, Weight)> {
    let mut queue = std::collections::VecDeque::new();
    let mut result = Vec::new();
    let mut next_id = 1usize;
    queue.push_back((0usize, start.clone(), 0usize));
    while let Some((id, config, level)) = queue.pop_front() {
        if level >= depth {
            continue;
        }
        if let Some(stop) = stop {
            if stop(&config) {
                continue;
            }
        }
        for (succ, weight) in chain.successors(&config) {
            let child = next_id;
            next_id += 1;
            result.push((id, child, succ.clone(), weight.clone()));
            queue.push_back((child, succ, level + 1));
        }
    }
    result
}

/// Sum of one-step successor weights as probabilities; 1 for every state of
/// a valid chain, including the absorbing empty configuration.
pub fn outgoing_probability_mass(chain: &LazyChain<'_>, config: &Configuration) -> BigRational {
    chain
        .successors(config)
        .iter()
        .map(|(_, w)| w.step_probability())
        .sum()
}

/// The successors with their step probabilities, in rule order. Distinct
/// rules always yield distinct successors (the tail is shared, so equal
/// results would force equal right-hand sides, which are rejected), hence
/// no aggregation is needed.
pub fn successor_distribution(
    chain: &LazyChain<'_>,
    config: &Configuration,
) -> Vec<(Configuration, BigRational)> {
    chain
        .successors(config)
        .into_iter()
        .map(|(succ, weight)| {
            let p = weight.step_probability();
            (succ, p)
        })
        .collect()
}

//! Abstract syntax of PCTL state and path formulas.
//!
//! The strict fragment has path formulas `X Phi` and `Phi U Phi` only. The
//! parser also accepts richer path formulas (negations, conjunctions and
//! nested temporal operators inside a probability quantifier); those are kept
//! in [`PathFormula::Star`] and rejected at evaluation time.

use std::fmt;

use num::BigRational;
use thiserror::Error;

use crate::pushdown::StackSymbol;

/// Probability comparison `>`, `>=` or `=`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    Greater,
    GreaterEq,
    Equal,
}

impl Comparison {
    pub fn compare(&self, value: &BigRational, bound: &BigRational) -> bool {
        match self {
            Comparison::Greater => value > bound,
            Comparison::GreaterEq => value >= bound,
            Comparison::Equal => value == bound,
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comparison::Greater => write!(f, ">"),
            Comparison::GreaterEq => write!(f, ">="),
            Comparison::Equal => write!(f, "="),
        }
    }
}

#[derive(Debug, Error)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("path formula is not a state formula (at byte {pos})")]
    PathAtStateLevel { pos: usize },
    #[error("probability bound {0} is outside [0, 1]")]
    BoundOutOfRange(BigRational),
}

/// A PCTL state formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateFormula {
    True,
    /// Atomic proposition, named by a stack symbol; a configuration
    /// satisfies it when its head lies in the assignment's head set.
    Atom(StackSymbol),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    /// `P{cmp bound}[path]`.
    Prob {
        cmp: Comparison,
        bound: BigRational,
        path: Box<PathFormula>,
    },
}

/// A path formula under a probability quantifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PathFormula {
    /// `X Phi`.
    Next(Box<StateFormula>),
    /// `Phi1 U Phi2`.
    Until(Box<StateFormula>, Box<StateFormula>),
    /// A path formula outside the strict fragment; parseable, not evaluable.
    Star(Box<StarPath>),
}

/// General path expressions (the richer grammar the parser tolerates).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StarPath {
    State(StateFormula),
    Not(Box<StarPath>),
    And(Box<StarPath>, Box<StarPath>),
    Next(Box<StarPath>),
    Until(Box<StarPath>, Box<StarPath>),
}

impl StateFormula {
    pub fn atom(symbol: StackSymbol) -> Self {
        StateFormula::Atom(symbol)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        StateFormula::Not(Box::new(self))
    }

    pub fn and(self, other: Self) -> Self {
        StateFormula::And(Box::new(self), Box::new(other))
    }

    /// `a | b` desugared as `!(!a & !b)`.
    pub fn or(self, other: Self) -> Self {
        self.not().and(other.not()).not()
    }

    /// Left-associated conjunction of all formulas; `true` when empty.
    pub fn and_all<I: IntoIterator<Item = StateFormula>>(items: I) -> Self {
        let mut iter = items.into_iter();
        let first = match iter.next() {
            Some(f) => f,
            None => return StateFormula::True,
        };
        iter.fold(first, StateFormula::and)
    }

    /// Disjunction of all formulas via de Morgan; `!true` when empty.
    pub fn or_all<I: IntoIterator<Item = StateFormula>>(items: I) -> Self {
        let negated = Self::and_all(items.into_iter().map(StateFormula::not));
        negated.not()
    }

    /// `P{cmp bound}[path]`; the bound must lie in `[0, 1]`.
    pub fn prob(cmp: Comparison, bound: BigRational, path: PathFormula) -> Result<Self, FormulaError> {
        if bound < num::Zero::zero() || bound > num::One::one() {
            return Err(FormulaError::BoundOutOfRange(bound));
        }
        Ok(StateFormula::Prob { cmp, bound, path: Box::new(path) })
    }

    fn is_and(&self) -> bool {
        matches!(self, StateFormula::And(..))
    }
}

impl PathFormula {
    pub fn next(inner: StateFormula) -> Self {
        PathFormula::Next(Box::new(inner))
    }

    pub fn until(guard: StateFormula, target: StateFormula) -> Self {
        PathFormula::Until(Box::new(guard), Box::new(target))
    }
}

// Display renders exactly the textual grammar, so formatting and parsing
// round-trip. `&` is left-associative; a right-nested `And` and any `And`
// under `!` or `X` need parentheses.

fn fmt_state(f: &mut fmt::Formatter<'_>, formula: &StateFormula, parenthesize_and: bool) -> fmt::Result {
    match formula {
        StateFormula::True => write!(f, "true"),
        StateFormula::Atom(s) => write!(f, "{s}"),
        StateFormula::Not(inner) => {
            write!(f, "!")?;
            fmt_state(f, inner, true)
        }
        StateFormula::And(a, b) => {
            if parenthesize_and {
                write!(f, "(")?;
            }
            fmt_state(f, a, false)?;
            write!(f, " & ")?;
            fmt_state(f, b, b.is_and())?;
            if parenthesize_and {
                write!(f, ")")?;
            }
            Ok(())
        }
        StateFormula::Prob { cmp, bound, path } => write!(f, "P{{{cmp}{bound}}}[{path}]"),
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_state(f, self, false)
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathFormula::Next(inner) => {
                write!(f, "X ")?;
                fmt_state(f, inner, inner.is_and())
            }
            PathFormula::Until(a, b) => {
                fmt_state(f, a, a.is_and())?;
                write!(f, " U ")?;
                fmt_state(f, b, b.is_and())
            }
            PathFormula::Star(star) => write!(f, "{star}"),
        }
    }
}

fn fmt_star(f: &mut fmt::Formatter<'_>, path: &StarPath, parenthesize: bool) -> fmt::Result {
    match path {
        StarPath::State(s) => fmt_state(f, s, parenthesize && s.is_and()),
        StarPath::Not(inner) => {
            write!(f, "!")?;
            fmt_star(f, inner, true)
        }
        StarPath::And(a, b) => {
            if parenthesize {
                write!(f, "(")?;
            }
            fmt_star(f, a, matches!(**a, StarPath::Until(..)))?;
            write!(f, " & ")?;
            fmt_star(f, b, true)?;
            if parenthesize {
                write!(f, ")")?;
            }
            Ok(())
        }
        StarPath::Next(inner) => {
            write!(f, "X ")?;
            fmt_star(f, inner, true)
        }
        StarPath::Until(a, b) => {
            if parenthesize {
                write!(f, "(")?;
            }
            fmt_star(f, a, true)?;
            write!(f, " U ")?;
            fmt_star(f, b, true)?;
            if parenthesize {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for StarPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_star(f, self, false)
    }
}

//! Stateless pushdown systems with exact probabilistic or quantum weights.
//!
//! A system is a finite stack alphabet together with head-rewriting rules
//! `X -> alpha` where `|alpha| <= 2`. Probabilistic rules carry a rational
//! probability; quantum rules carry an amplitude stored in polar form as an
//! exact squared modulus plus a symbolic phase. Per head symbol, the
//! probabilities (or squared moduli) must sum to exactly 1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigRational, One, Zero};
use thiserror::Error;

use crate::pcp::Letter;

/// A stack symbol. The fixed variants cover the vocabulary of generated
/// systems; `Named` covers hand-built ones.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StackSymbol {
    /// `Z` — seeds the guess phase.
    Start,
    /// `Z'` — bottom marker below every guessed word.
    Bottom,
    /// `C` — closes the guess phase and hands over to verification.
    Commit,
    /// `N` — buffer symbol between commit and the F/S branch.
    Branch,
    /// `N{k}` — extra buffer stages used by the staged formula variant.
    Stage(u32),
    /// `F` — audits first components.
    First,
    /// `S` — audits second components.
    Second,
    /// `(x,y)` — one guessed pair of letters.
    Pair(Letter, Letter),
    /// `X_(x,y)` — marker emitted while auditing pair `(x,y)`.
    Marked(Letter, Letter),
    /// `G{i}^{j}` — guess progress: tile `i`, position `j`, both 1-based.
    Guess { tile: u32, pos: u32 },
    /// Free-form symbol; construct via [`StackSymbol::named`] so canonical
    /// spellings normalize to the fixed variants.
    Named(String),
}

impl StackSymbol {
    /// Parses a symbol from its canonical spelling, falling back to `Named`.
    pub fn named(text: &str) -> StackSymbol {
        match text {
            "Z" => return StackSymbol::Start,
            "Z'" => return StackSymbol::Bottom,
            "C" => return StackSymbol::Commit,
            "N" => return StackSymbol::Branch,
            "F" => return StackSymbol::First,
            "S" => return StackSymbol::Second,
            _ => {}
        }
        if let Some(rest) = text.strip_prefix('N') {
            if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                return StackSymbol::Stage(rest.parse().expect("digits"));
            }
        }
        if let Some(rest) = text.strip_prefix('G') {
            if let Some((tile, pos)) = rest.split_once('^') {
                if !tile.is_empty()
                    && !pos.is_empty()
                    && tile.chars().all(|c| c.is_ascii_digit())
                    && pos.chars().all(|c| c.is_ascii_digit())
                {
                    return StackSymbol::Guess {
                        tile: tile.parse().expect("digits"),
                        pos: pos.parse().expect("digits"),
                    };
                }
            }
        }
        if let Some(pair) = parse_pair_text(text) {
            return StackSymbol::Pair(pair.0, pair.1);
        }
        if let Some(rest) = text.strip_prefix("X_") {
            if let Some(pair) = parse_pair_text(rest) {
                return StackSymbol::Marked(pair.0, pair.1);
            }
        }
        StackSymbol::Named(text.to_string())
    }
}

fn parse_pair_text(text: &str) -> Option<(Letter, Letter)> {
    let inner = text.strip_prefix('(')?.strip_suffix(')')?;
    let (x, y) = inner.split_once(',')?;
    let mut xs = x.chars();
    let mut ys = y.chars();
    let a = Letter::from_char(xs.next()?)?;
    let b = Letter::from_char(ys.next()?)?;
    if xs.next().is_some() || ys.next().is_some() {
        return None;
    }
    Some((a, b))
}

impl fmt::Display for StackSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StackSymbol::Start => write!(f, "Z"),
            StackSymbol::Bottom => write!(f, "Z'"),
            StackSymbol::Commit => write!(f, "C"),
            StackSymbol::Branch => write!(f, "N"),
            StackSymbol::Stage(k) => write!(f, "N{k}"),
            StackSymbol::First => write!(f, "F"),
            StackSymbol::Second => write!(f, "S"),
            StackSymbol::Pair(x, y) => write!(f, "({x},{y})"),
            StackSymbol::Marked(x, y) => write!(f, "X_({x},{y})"),
            StackSymbol::Guess { tile, pos } => write!(f, "G{tile}^{pos}"),
            StackSymbol::Named(s) => write!(f, "{s}"),
        }
    }
}

/// Stack contents; index 0 is the top. The empty configuration is `eps`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Configuration(Vec<StackSymbol>);

impl Configuration {
    pub fn new(symbols: Vec<StackSymbol>) -> Self {
        Configuration(symbols)
    }

    pub fn empty() -> Self {
        Configuration(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Top-of-stack symbol, if any.
    pub fn head(&self) -> Option<&StackSymbol> {
        self.0.first()
    }

    pub fn symbols(&self) -> &[StackSymbol] {
        &self.0
    }

    /// The configuration after replacing the head with `rhs`.
    pub fn rewrite_head(&self, rhs: &[StackSymbol]) -> Configuration {
        let mut out = Vec::with_capacity(rhs.len() + self.0.len().saturating_sub(1));
        out.extend_from_slice(rhs);
        out.extend_from_slice(&self.0[1..]);
        Configuration(out)
    }

    /// Parses a whitespace-separated list of symbols; `eps` is the empty stack.
    pub fn parse(text: &str) -> Configuration {
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "eps" {
            return Configuration::empty();
        }
        Configuration(trimmed.split_whitespace().map(StackSymbol::named).collect())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "eps");
        }
        let body = self.0.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
        write!(f, "{body}")
    }
}

impl FromIterator<StackSymbol> for Configuration {
    fn from_iter<T: IntoIterator<Item = StackSymbol>>(iter: T) -> Self {
        Configuration(iter.into_iter().collect())
    }
}

/// A symbolic phase parameter: `t1`..`t9`, or the per-tile `g{i}_{j}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseParam {
    Theta(u8),
    Tile { tile: u32, pos: u32 },
}

impl fmt::Display for PhaseParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseParam::Theta(k) => write!(f, "t{k}"),
            PhaseParam::Tile { tile, pos } => write!(f, "g{tile}_{pos}"),
        }
    }
}

/// A linear combination of phase parameters with rational coefficients.
///
/// Phases never influence probabilities (the squared modulus is stored
/// separately), so keeping them symbolic loses nothing and lets generated
/// amplitudes be displayed exactly.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PhaseForm(BTreeMap<PhaseParam, BigRational>);

impl PhaseForm {
    pub fn zero() -> Self {
        PhaseForm::default()
    }

    pub fn term(param: PhaseParam, coeff: BigRational) -> Self {
        let mut map = BTreeMap::new();
        if !coeff.is_zero() {
            map.insert(param, coeff);
        }
        PhaseForm(map)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &PhaseForm) -> PhaseForm {
        let mut map = self.0.clone();
        for (param, coeff) in &other.0 {
            let entry = map.entry(*param).or_insert_with(BigRational::zero);
            *entry += coeff;
            if entry.is_zero() {
                map.remove(param);
            }
        }
        PhaseForm(map)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PhaseParam, &BigRational)> {
        self.0.iter()
    }
}

impl fmt::Display for PhaseForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (param, coeff) in &self.0 {
            if !first {
                write!(f, "+")?;
            }
            first = false;
            if coeff.is_one() {
                write!(f, "{param}")?;
            } else {
                write!(f, "{coeff}*{param}")?;
            }
        }
        Ok(())
    }
}

/// An amplitude in polar form: exact squared modulus and symbolic phase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Amplitude {
    pub sq_modulus: BigRational,
    pub phase: PhaseForm,
}

impl Amplitude {
    pub fn new(sq_modulus: BigRational, phase: PhaseForm) -> Self {
        Amplitude { sq_modulus, phase }
    }

    /// Amplitude 1 (squared modulus 1, phase 0).
    pub fn unit() -> Self {
        Amplitude { sq_modulus: BigRational::one(), phase: PhaseForm::zero() }
    }

    /// Product of two amplitudes: moduli multiply, phases add.
    pub fn mul(&self, other: &Amplitude) -> Amplitude {
        Amplitude {
            sq_modulus: &self.sq_modulus * &other.sq_modulus,
            phase: self.phase.add(&other.phase),
        }
    }
}

impl fmt::Display for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sq={} phase={}", self.sq_modulus, self.phase)
    }
}

/// Rule weight: a probability or an amplitude, matching the system flavor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Weight {
    Prob(BigRational),
    Amp(Amplitude),
}

impl Weight {
    pub fn flavor(&self) -> Flavor {
        match self {
            Weight::Prob(_) => Flavor::Probabilistic,
            Weight::Amp(_) => Flavor::Quantum,
        }
    }

    /// The probability this weight contributes to one step of the induced
    /// chain: the value itself, or the squared modulus of the amplitude.
    pub fn step_probability(&self) -> BigRational {
        match self {
            Weight::Prob(p) => p.clone(),
            Weight::Amp(a) => a.sq_modulus.clone(),
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Prob(p) => write!(f, "{p}"),
            Weight::Amp(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Probabilistic,
    Quantum,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flavor::Probabilistic => write!(f, "probabilistic"),
            Flavor::Quantum => write!(f, "quantum"),
        }
    }
}

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("rule right-hand side has {0} symbols; at most 2 are allowed")]
    RhsTooLong(usize),
    #[error("rule weight must lie in (0, 1]")]
    WeightOutOfRange,
    #[error("duplicate alphabet symbol {0}")]
    DuplicateSymbol(StackSymbol),
    #[error("duplicate rule {0} -> {1}")]
    DuplicateRule(StackSymbol, String),
    #[error("rule mentions symbol {0} outside the alphabet")]
    UnknownSymbol(StackSymbol),
    #[error("rule weight flavor does not match the {0} system")]
    FlavorMismatch(Flavor),
    #[error("the empty configuration has no head symbol")]
    EmptyConfiguration,
    #[error("no rule for head symbol {0}")]
    NoRuleForHead(StackSymbol),
}

/// A head-rewriting rule `lhs -> rhs` with `|rhs| <= 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    lhs: StackSymbol,
    rhs: Vec<StackSymbol>,
    weight: Weight,
}

impl Rule {
    pub fn new(lhs: StackSymbol, rhs: Vec<StackSymbol>, weight: Weight) -> Result<Self, SystemError> {
        if rhs.len() > 2 {
            return Err(SystemError::RhsTooLong(rhs.len()));
        }
        let magnitude = weight.step_probability();
        if magnitude <= BigRational::zero() || magnitude > BigRational::one() {
            return Err(SystemError::WeightOutOfRange);
        }
        Ok(Rule { lhs, rhs, weight })
    }

    pub fn lhs(&self) -> &StackSymbol {
        &self.lhs
    }

    pub fn rhs(&self) -> &[StackSymbol] {
        &self.rhs
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    /// The same rule with a different weight; used by validation tests.
    pub fn with_weight(&self, weight: Weight) -> Result<Self, SystemError> {
        Rule::new(self.lhs.clone(), self.rhs.clone(), weight)
    }

    fn rhs_text(&self) -> String {
        if self.rhs.is_empty() {
            "eps".to_string()
        } else {
            self.rhs.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} @ {}", self.lhs, self.rhs_text(), self.weight)
    }
}

/// A validation finding for one symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// The weights of the symbol's rules sum to `sum` instead of 1.
    WeightSum { symbol: StackSymbol, sum: BigRational },
    /// The symbol has no rule at all.
    NoRule { symbol: StackSymbol },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WeightSum { symbol, sum } => {
                write!(f, "weights for {symbol} sum to {sum}, expected 1")
            }
            Violation::NoRule { symbol } => write!(f, "symbol {symbol} has no rule"),
        }
    }
}

/// Outcome of validating a system; empty iff all invariants hold.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A stateless pushdown system: alphabet plus weighted rewriting rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PushdownSystem {
    flavor: Flavor,
    alphabet: Vec<StackSymbol>,
    rules: Vec<Rule>,
}

impl PushdownSystem {
    /// Builds a system, enforcing structural invariants. The stochasticity
    /// (or unitarity) sums are deliberately left to [`PushdownSystem::validate`]
    /// so that broken systems can be constructed and reported on.
    pub fn new(
        flavor: Flavor,
        alphabet: Vec<StackSymbol>,
        rules: Vec<Rule>,
    ) -> Result<Self, SystemError> {
        let mut seen = BTreeSet::new();
        for symbol in &alphabet {
            if !seen.insert(symbol.clone()) {
                return Err(SystemError::DuplicateSymbol(symbol.clone()));
            }
        }
        let mut seen_rules = BTreeSet::new();
        for rule in &rules {
            if rule.weight.flavor() != flavor {
                return Err(SystemError::FlavorMismatch(flavor));
            }
            if !seen.contains(&rule.lhs) {
                return Err(SystemError::UnknownSymbol(rule.lhs.clone()));
            }
            for symbol in &rule.rhs {
                if !seen.contains(symbol) {
                    return Err(SystemError::UnknownSymbol(symbol.clone()));
                }
            }
            if !seen_rules.insert((rule.lhs.clone(), rule.rhs.clone())) {
                return Err(SystemError::DuplicateRule(rule.lhs.clone(), rule.rhs_text()));
            }
        }
        Ok(PushdownSystem { flavor, alphabet, rules })
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn alphabet(&self) -> &[StackSymbol] {
        &self.alphabet
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rules_for<'a>(&'a self, symbol: &'a StackSymbol) -> impl Iterator<Item = &'a Rule> {
        self.rules.iter().filter(move |r| &r.lhs == symbol)
    }

    /// Checks the per-symbol weight sums and rule coverage. Report-style:
    /// an invalid system yields findings, never an error.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for symbol in &self.alphabet {
            let mut sum = BigRational::zero();
            let mut count = 0usize;
            for rule in self.rules_for(symbol) {
                sum += rule.weight.step_probability();
                count += 1;
            }
            if count == 0 {
                violations.push(Violation::NoRule { symbol: symbol.clone() });
            } else if !sum.is_one() {
                violations.push(Violation::WeightSum { symbol: symbol.clone(), sum });
            }
        }
        ValidationReport { violations }
    }

    /// One-step successors of a configuration, in rule declaration order.
    pub fn successors(
        &self,
        config: &Configuration,
    ) -> Result<Vec<(Configuration, Weight)>, SystemError> {
        let head = config.head().ok_or(SystemError::EmptyConfiguration)?;
        let out: Vec<_> = self
            .rules_for(head)
            .map(|rule| (config.rewrite_head(&rule.rhs), rule.weight.clone()))
            .collect();
        if out.is_empty() {
            return Err(SystemError::NoRuleForHead(head.clone()));
        }
        Ok(out)
    }

    /// Renders the system in its documented text format.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("flavor: {}\n", self.flavor));
        let alphabet = self
            .alphabet
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!("alphabet: {alphabet}\n"));
        for rule in &self.rules {
            out.push_str(&format!("{rule}\n"));
        }
        out
    }
}

/// Shorthand for an exact rational `num/den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

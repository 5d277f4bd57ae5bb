//! Compiles a padded PCP instance into a pushdown system whose PCTL
//! properties encode solution existence.
//!
//! The generated system runs in two phases. The guess phase starts from `Z`
//! and nondeterministically stacks a sequence of tiles as letter pairs,
//! closing with `C` on top. The verification phase audits the stacked pairs:
//! from `N` it branches to `F` (first components) or `S` (second
//! components), and each pair either emits its marker `X_(x,y)` or is
//! silently popped, both with probability 1/2. The probability that a run
//! from `F alpha Z'` hits a marker `X_(A,_)` while avoiding the forbidden
//! heads equals the binary-expansion weight `rho` of the trimmed first
//! components, and dually for `S`, `X_(_,B)` and `rho_bar`; the two weights
//! sum to 1 exactly when the stacked words agree, which turns word equality
//! into an exact probability test.

use std::fmt;

use num::{BigRational, One, Zero};
use thiserror::Error;

use crate::chain::{induced_chain, ChainError, FinitePath, LazyChain};
use crate::pcp::{IndexWord, Letter, ModifiedPcpInstance, PcpError};
use crate::pctl::{
    path_probability, Comparison, EvalError, FormulaError, HeadAssignment, Mode, PathFormula,
    StateFormula,
};
use crate::pushdown::{
    ratio, Amplitude, Configuration, Flavor, PhaseForm, PhaseParam, PushdownSystem, Rule,
    StackSymbol, Weight,
};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("the probability parameter must satisfy 0 < t < 1, got {0}")]
    TOutOfRange(BigRational),
    #[error("the staged variant needs at least one buffer stage")]
    NoStages,
    #[error("the filler letter has no weight; trim the word first")]
    PadLetter,
    #[error(transparent)]
    Pcp(#[from] PcpError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Shape of the emitted top-level formula (and the matching rule tweak).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormulaVariant {
    /// `P{>0}[true U (C & P{=1}[X (P{=t/2}[phi1] & P{=(1-t)/2}[phi2])])]`
    /// over the standard rules.
    Nested,
    /// Inserts `delay` buffer symbols between `C` and `N` and states the
    /// inner check behind an extra `true U` layer.
    Staged { delay: u32 },
    /// Replaces `C -> N` by `C -> F | S`, which collapses the inner check
    /// to `C & P{=t/2}[phi1] & P{=(1-t)/2}[phi2]`.
    Flat,
}

impl fmt::Display for FormulaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormulaVariant::Nested => write!(f, "nested"),
            FormulaVariant::Staged { delay } => write!(f, "staged({delay})"),
            FormulaVariant::Flat => write!(f, "flat"),
        }
    }
}

/// Indicator weight of a letter for the first-component audit:
/// `A` counts, `B` does not. The bottom marker always counts 1.
pub fn theta(letter: Letter) -> Result<u32, ReductionError> {
    match letter {
        Letter::A => Ok(1),
        Letter::B => Ok(0),
        Letter::Pad => Err(ReductionError::PadLetter),
    }
}

/// Dual indicator for the second-component audit: `B` counts, `A` does not.
pub fn theta_bar(letter: Letter) -> Result<u32, ReductionError> {
    match letter {
        Letter::A => Ok(0),
        Letter::B => Ok(1),
        Letter::Pad => Err(ReductionError::PadLetter),
    }
}

fn expansion(word: &[Letter], indicator: fn(Letter) -> Result<u32, ReductionError>) -> Result<BigRational, ReductionError> {
    let mut sum = BigRational::zero();
    let mut weight = ratio(1, 2);
    for &letter in word {
        if indicator(letter)? == 1 {
            sum += &weight;
        }
        weight /= BigRational::from_integer(2.into());
    }
    // the bottom marker closing the word counts 1 under both indicators
    sum += &weight;
    Ok(sum)
}

/// Binary-expansion weight of a word over `{A, B}` (bottom marker included):
/// position `i` contributes `theta(x_i) / 2^i`, the marker `1 / 2^(l+1)`.
pub fn rho(word: &[Letter]) -> Result<BigRational, ReductionError> {
    expansion(word, theta)
}

/// Dual weight using `theta_bar`.
pub fn rho_bar(word: &[Letter]) -> Result<BigRational, ReductionError> {
    expansion(word, theta_bar)
}

/// Erases every filler letter.
pub fn trim(word: &[Letter]) -> Vec<Letter> {
    word.iter().copied().filter(|l| *l != Letter::Pad).collect()
}

fn all_pairs() -> impl Iterator<Item = (Letter, Letter)> {
    Letter::ALL
        .into_iter()
        .flat_map(|x| Letter::ALL.into_iter().map(move |y| (x, y)))
}

/// Path formula whose satisfaction probability from `F alpha Z'` equals
/// `rho` of the trimmed first components: avoid `S` and every marker
/// `X_(A,_)` / `X_(B,_)` until some `X_(A,_)` is on top.
pub fn phi1() -> PathFormula {
    let not_marker = Letter::ALL.into_iter().flat_map(|z| {
        [
            StateFormula::atom(StackSymbol::Marked(Letter::A, z)).not(),
            StateFormula::atom(StackSymbol::Marked(Letter::B, z)).not(),
        ]
    });
    let guard = StateFormula::and_all(
        std::iter::once(StateFormula::atom(StackSymbol::Second).not()).chain(not_marker),
    );
    let target = StateFormula::or_all(
        Letter::ALL
            .into_iter()
            .map(|z| StateFormula::atom(StackSymbol::Marked(Letter::A, z))),
    );
    PathFormula::until(guard, target)
}

/// Dual formula for the second components: avoid `F` and every marker
/// `X_(_,A)` / `X_(_,B)` until some `X_(_,B)` is on top.
pub fn phi2() -> PathFormula {
    let not_marker = Letter::ALL.into_iter().flat_map(|z| {
        [
            StateFormula::atom(StackSymbol::Marked(z, Letter::A)).not(),
            StateFormula::atom(StackSymbol::Marked(z, Letter::B)).not(),
        ]
    });
    let guard = StateFormula::and_all(
        std::iter::once(StateFormula::atom(StackSymbol::First).not()).chain(not_marker),
    );
    let target = StateFormula::or_all(
        Letter::ALL
            .into_iter()
            .map(|z| StateFormula::atom(StackSymbol::Marked(z, Letter::B))),
    );
    PathFormula::until(guard, target)
}

fn amp_weight(sq: BigRational, param: PhaseParam, coeff: BigRational) -> Weight {
    Weight::Amp(Amplitude::new(sq, PhaseForm::term(param, coeff)))
}

fn make_weight(flavor: Flavor, sq: BigRational, param: PhaseParam, coeff: BigRational) -> Weight {
    match flavor {
        Flavor::Probabilistic => Weight::Prob(sq),
        Flavor::Quantum => amp_weight(sq, param, coeff),
    }
}

/// The guess-phase rules for a padded instance.
///
/// `Z` picks a first tile uniformly; `G{i}^{j}` pushes the `j`-th letter
/// pair of tile `i`; `G{i}^{m+1}` either commits (`C`) or starts another
/// tile, all `n + 1` choices uniform. Quantum weights use the same moduli
/// with phases `(i/n) t1` at the start, `g{i}_{j}` per push, and multiples
/// of `t2/(n+1)` at the tile boundary.
pub fn build_guess_rules(mp: &ModifiedPcpInstance, flavor: Flavor) -> Vec<Rule> {
    let n = mp.len() as i64;
    let m = mp.width() as u32;
    let mut rules = Vec::new();
    let guess = |tile: u32, pos: u32| StackSymbol::Guess { tile, pos };
    for i in 1..=mp.len() as u32 {
        let weight = make_weight(flavor, ratio(1, n), PhaseParam::Theta(1), ratio(i as i64, n));
        rules.push(
            Rule::new(StackSymbol::Start, vec![guess(i, 1), StackSymbol::Bottom], weight)
                .expect("guess rule shape"),
        );
    }
    for (idx, (u, v)) in mp.pairs().iter().enumerate() {
        let i = idx as u32 + 1;
        for j in 1..=m {
            let pair = StackSymbol::Pair(u[(j - 1) as usize], v[(j - 1) as usize]);
            let weight = make_weight(
                flavor,
                ratio(1, 1),
                PhaseParam::Tile { tile: i, pos: j },
                ratio(1, 1),
            );
            rules.push(
                Rule::new(guess(i, j), vec![guess(i, j + 1), pair], weight)
                    .expect("guess rule shape"),
            );
        }
    }
    for i in 1..=mp.len() as u32 {
        let commit = make_weight(flavor, ratio(1, n + 1), PhaseParam::Theta(2), ratio(1, n + 1));
        rules.push(
            Rule::new(guess(i, m + 1), vec![StackSymbol::Commit], commit).expect("guess rule shape"),
        );
        for l in 1..=mp.len() as u32 {
            let weight = make_weight(
                flavor,
                ratio(1, n + 1),
                PhaseParam::Theta(2),
                ratio(l as i64 + 1, n + 1),
            );
            rules.push(Rule::new(guess(i, m + 1), vec![guess(l, 1)], weight).expect("guess rule shape"));
        }
    }
    rules
}

/// The verification-phase rules, identical for every instance.
pub fn build_verify_rules(flavor: Flavor) -> Vec<Rule> {
    build_verify_rules_variant(flavor, FormulaVariant::Nested)
}

fn unit_rule(flavor: Flavor, lhs: StackSymbol, rhs: Vec<StackSymbol>, phase_idx: u8) -> Rule {
    let weight = make_weight(flavor, ratio(1, 1), PhaseParam::Theta(phase_idx), ratio(1, 1));
    Rule::new(lhs, rhs, weight).expect("verify rule shape")
}

fn half_rules(
    flavor: Flavor,
    lhs: StackSymbol,
    first: Vec<StackSymbol>,
    second: Vec<StackSymbol>,
    phase_idx: u8,
) -> [Rule; 2] {
    let a = make_weight(flavor, ratio(1, 2), PhaseParam::Theta(phase_idx), ratio(1, 2));
    let b = make_weight(flavor, ratio(1, 2), PhaseParam::Theta(phase_idx), ratio(1, 1));
    [
        Rule::new(lhs.clone(), first, a).expect("verify rule shape"),
        Rule::new(lhs, second, b).expect("verify rule shape"),
    ]
}

fn build_verify_rules_variant(flavor: Flavor, variant: FormulaVariant) -> Vec<Rule> {
    let mut rules = Vec::new();
    match variant {
        FormulaVariant::Nested => {
            rules.push(unit_rule(flavor, StackSymbol::Commit, vec![StackSymbol::Branch], 3));
        }
        FormulaVariant::Staged { delay } => {
            rules.push(unit_rule(flavor, StackSymbol::Commit, vec![StackSymbol::Stage(1)], 3));
            for k in 1..delay {
                rules.push(unit_rule(flavor, StackSymbol::Stage(k), vec![StackSymbol::Stage(k + 1)], 3));
            }
            rules.push(unit_rule(flavor, StackSymbol::Stage(delay), vec![StackSymbol::Branch], 3));
        }
        FormulaVariant::Flat => {
            rules.extend(half_rules(
                flavor,
                StackSymbol::Commit,
                vec![StackSymbol::First],
                vec![StackSymbol::Second],
                3,
            ));
        }
    }
    if variant != FormulaVariant::Flat {
        rules.extend(half_rules(
            flavor,
            StackSymbol::Branch,
            vec![StackSymbol::First],
            vec![StackSymbol::Second],
            4,
        ));
    }
    rules.push(unit_rule(flavor, StackSymbol::First, vec![], 5));
    rules.push(unit_rule(flavor, StackSymbol::Second, vec![], 6));
    for (x, y) in all_pairs() {
        rules.extend(half_rules(
            flavor,
            StackSymbol::Pair(x, y),
            vec![StackSymbol::Marked(x, y)],
            vec![],
            7,
        ));
    }
    rules.extend(half_rules(
        flavor,
        StackSymbol::Bottom,
        vec![StackSymbol::Marked(Letter::A, Letter::B)],
        vec![StackSymbol::Marked(Letter::B, Letter::A)],
        8,
    ));
    for (x, y) in all_pairs() {
        rules.push(unit_rule(flavor, StackSymbol::Marked(x, y), vec![], 9));
    }
    rules
}

fn build_alphabet(mp: &ModifiedPcpInstance, variant: FormulaVariant) -> Vec<StackSymbol> {
    let mut alphabet = vec![StackSymbol::Start, StackSymbol::Bottom, StackSymbol::Commit];
    match variant {
        FormulaVariant::Nested => alphabet.push(StackSymbol::Branch),
        FormulaVariant::Staged { delay } => {
            alphabet.extend((1..=delay).map(StackSymbol::Stage));
            alphabet.push(StackSymbol::Branch);
        }
        FormulaVariant::Flat => {}
    }
    alphabet.push(StackSymbol::First);
    alphabet.push(StackSymbol::Second);
    alphabet.extend(all_pairs().map(|(x, y)| StackSymbol::Pair(x, y)));
    alphabet.extend(all_pairs().map(|(x, y)| StackSymbol::Marked(x, y)));
    for i in 1..=mp.len() as u32 {
        for j in 1..=mp.width() as u32 + 1 {
            alphabet.push(StackSymbol::Guess { tile: i, pos: j });
        }
    }
    alphabet
}

/// The compiled reduction: system, audit formulas, and atom assignment.
#[derive(Clone, Debug)]
pub struct Reduction {
    instance: ModifiedPcpInstance,
    flavor: Flavor,
    variant: FormulaVariant,
    system: PushdownSystem,
    phi1: PathFormula,
    phi2: PathFormula,
    assignment: HeadAssignment,
}

/// Compiles a padded instance into a pushdown system plus audit formulas.
pub fn build_reduction(
    mp: &ModifiedPcpInstance,
    flavor: Flavor,
    variant: FormulaVariant,
) -> Result<Reduction, ReductionError> {
    if let FormulaVariant::Staged { delay: 0 } = variant {
        return Err(ReductionError::NoStages);
    }
    let mut rules = build_guess_rules(mp, flavor);
    rules.extend(build_verify_rules_variant(flavor, variant));
    let system = PushdownSystem::new(flavor, build_alphabet(mp, variant), rules)
        .expect("generated systems are structurally sound");
    Ok(Reduction {
        instance: mp.clone(),
        flavor,
        variant,
        system,
        phi1: phi1(),
        phi2: phi2(),
        assignment: HeadAssignment::identity(),
    })
}

/// The state formula under the outer reachability quantifier.
fn inner_formula(t: &BigRational, variant: FormulaVariant) -> Result<StateFormula, ReductionError> {
    check_t(t)?;
    let half_t = t / BigRational::from_integer(2.into());
    let half_rest = (BigRational::one() - t) / BigRational::from_integer(2.into());
    let audit = StateFormula::prob(Comparison::Equal, half_t.clone(), phi1())?
        .and(StateFormula::prob(Comparison::Equal, half_rest.clone(), phi2())?);
    let commit = StateFormula::atom(StackSymbol::Commit);
    Ok(match variant {
        FormulaVariant::Nested => commit.and(StateFormula::prob(
            Comparison::Equal,
            BigRational::one(),
            PathFormula::next(audit),
        )?),
        FormulaVariant::Staged { .. } => {
            let next_step = StateFormula::prob(
                Comparison::Equal,
                BigRational::one(),
                PathFormula::next(audit),
            )?;
            commit.and(StateFormula::prob(
                Comparison::Equal,
                BigRational::one(),
                PathFormula::until(StateFormula::True, next_step),
            )?)
        }
        FormulaVariant::Flat => StateFormula::and_all([
            commit,
            StateFormula::prob(Comparison::Equal, half_t, phi1())?,
            StateFormula::prob(Comparison::Equal, half_rest, phi2())?,
        ]),
    })
}

fn check_t(t: &BigRational) -> Result<(), ReductionError> {
    if *t <= BigRational::zero() || *t >= BigRational::one() {
        return Err(ReductionError::TOutOfRange(t.clone()));
    }
    Ok(())
}

/// The top-level formula: solution existence iff it holds at `Z`.
/// `t` must be a rational constant strictly between 0 and 1.
pub fn build_formula(t: &BigRational, variant: FormulaVariant) -> Result<StateFormula, ReductionError> {
    let inner = inner_formula(t, variant)?;
    Ok(StateFormula::prob(
        Comparison::Greater,
        BigRational::zero(),
        PathFormula::until(StateFormula::True, inner),
    )?)
}

/// A guess-phase witness: the unique path stacking the tiles of `word`.
#[derive(Clone, Debug)]
pub struct GuessWitness {
    pub word: IndexWord,
    /// The stacked pairs, top of stack first.
    pub alpha: Vec<(Letter, Letter)>,
    pub path: FinitePath,
}

/// Verdict of auditing one witness.
#[derive(Clone, Debug)]
pub struct WitnessReport {
    pub word: IndexWord,
    pub alpha: Vec<(Letter, Letter)>,
    /// Audit probability of the first components from the branch state.
    pub p1: BigRational,
    /// Audit probability of the second components from the branch state.
    pub p2: BigRational,
    /// The parameter checked against, if any.
    pub t: Option<BigRational>,
    /// With `t`: `p1 = t/2` and `p2 = (1-t)/2`; without: `p1 + p2 = 1/2`.
    pub is_solution: bool,
}

impl Reduction {
    pub fn instance(&self) -> &ModifiedPcpInstance {
        &self.instance
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn variant(&self) -> FormulaVariant {
        self.variant
    }

    pub fn system(&self) -> &PushdownSystem {
        &self.system
    }

    pub fn phi1(&self) -> &PathFormula {
        &self.phi1
    }

    pub fn phi2(&self) -> &PathFormula {
        &self.phi2
    }

    pub fn assignment(&self) -> &HeadAssignment {
        &self.assignment
    }

    /// The top-level formula for this reduction's variant.
    pub fn formula(&self, t: &BigRational) -> Result<StateFormula, ReductionError> {
        build_formula(t, self.variant)
    }

    /// The inner conjunction that must hold at the commit configuration.
    pub fn inner_formula(&self, t: &BigRational) -> Result<StateFormula, ReductionError> {
        inner_formula(t, self.variant)
    }

    /// The configuration `B alpha Z'` where the audit branches: `N` for the
    /// nested and staged variants, `C` for the flat one.
    pub fn branch_configuration(&self, alpha: &[(Letter, Letter)]) -> Configuration {
        let head = match self.variant {
            FormulaVariant::Flat => StackSymbol::Commit,
            _ => StackSymbol::Branch,
        };
        self.stacked(head, alpha)
    }

    /// The configuration `C alpha Z'` reached when the guess commits.
    pub fn commit_configuration(&self, alpha: &[(Letter, Letter)]) -> Configuration {
        self.stacked(StackSymbol::Commit, alpha)
    }

    fn stacked(&self, head: StackSymbol, alpha: &[(Letter, Letter)]) -> Configuration {
        std::iter::once(head)
            .chain(alpha.iter().map(|&(x, y)| StackSymbol::Pair(x, y)))
            .chain(std::iter::once(StackSymbol::Bottom))
            .collect()
    }

    /// Follows the guess rules for `word`, ending at `C alpha Z'`.
    ///
    /// Each tile's pairs are pushed in order, so the stack reads them
    /// reversed: the trimmed first components of `alpha` (top down) equal
    /// the reversed concatenation of the selected first words.
    pub fn guess_path_for(&self, word: &IndexWord) -> Result<GuessWitness, ReductionError> {
        let n = self.instance.len();
        for &i in word.indices() {
            if i < 1 || i > n {
                return Err(ReductionError::Pcp(PcpError::IndexOutOfRange { index: i, n }));
            }
        }
        let m = self.instance.width() as u32;
        let mut alpha: Vec<(Letter, Letter)> = Vec::new();
        let mut states = vec![Configuration::new(vec![StackSymbol::Start])];
        let word_len = word.len();
        for (done, &tile) in word.indices().iter().enumerate() {
            let tile_u32 = tile as u32;
            let (u, v) = &self.instance.pairs()[tile - 1];
            states.push(self.guess_state(tile_u32, 1, &alpha));
            for j in 1..=m as usize {
                alpha.insert(0, (u[j - 1], v[j - 1]));
                states.push(self.guess_state(tile_u32, j as u32 + 1, &alpha));
            }
            if done + 1 == word_len {
                states.push(self.commit_configuration(&alpha));
            }
        }
        let chain = induced_chain(&self.system)?;
        let path = chain.path(states)?;
        Ok(GuessWitness { word: word.clone(), alpha, path })
    }

    fn guess_state(&self, tile: u32, pos: u32, alpha: &[(Letter, Letter)]) -> Configuration {
        self.stacked(StackSymbol::Guess { tile, pos }, alpha)
    }

    /// Audits the witness for `word`: computes the two branch probabilities
    /// and decides solutionhood — against a given `t`, or parameter-free via
    /// `p1 + p2 = 1/2`.
    pub fn check_witness(
        &self,
        word: &IndexWord,
        t: Option<&BigRational>,
    ) -> Result<WitnessReport, ReductionError> {
        if let Some(t) = t {
            check_t(t)?;
        }
        let witness = self.guess_path_for(word)?;
        let chain = induced_chain(&self.system)?;
        let branch = self.branch_configuration(&witness.alpha);
        let p1 = self.audit_probability(&chain, &branch, &self.phi1)?;
        let p2 = self.audit_probability(&chain, &branch, &self.phi2)?;
        let two = BigRational::from_integer(2.into());
        let is_solution = match t {
            Some(t) => p1 == t / &two && p2 == (BigRational::one() - t) / &two,
            None => &p1 + &p2 == ratio(1, 2),
        };
        Ok(WitnessReport {
            word: word.clone(),
            alpha: witness.alpha,
            p1,
            p2,
            t: t.cloned(),
            is_solution,
        })
    }

    fn audit_probability(
        &self,
        chain: &LazyChain<'_>,
        config: &Configuration,
        phi: &PathFormula,
    ) -> Result<BigRational, ReductionError> {
        let result = path_probability(chain, config, phi, &self.assignment, &Mode::exact())?;
        Ok(result.exact().expect("exact mode yields exact results").clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcp::{pad_instance, PcpInstance};
    use crate::pctl::eval_state;

    fn mp(pairs: &[(&str, &str)]) -> ModifiedPcpInstance {
        pad_instance(&PcpInstance::from_strs(pairs).unwrap())
    }

    fn letters(text: &str) -> Vec<Letter> {
        text.chars().map(|c| Letter::from_char(c).unwrap()).collect()
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(&letters("AAB")).unwrap(), ratio(13, 16));
        assert_eq!(rho_bar(&letters("AAB")).unwrap(), ratio(3, 16));
        assert_eq!(rho(&letters("")).unwrap(), ratio(1, 2));
        assert_eq!(rho(&letters("A")).unwrap(), ratio(3, 4));
        assert_eq!(rho_bar(&letters("B")).unwrap(), ratio(3, 4));
        assert!(matches!(rho(&letters("A.B")), Err(ReductionError::PadLetter)));
    }

    #[test]
    fn trim_examples() {
        assert_eq!(trim(&letters("A..B.")), letters("AB"));
        assert_eq!(trim(&letters("...")), letters(""));
    }

    #[test]
    fn word_equality_iff_weights_sum_to_one() {
        // exhaustive up to length 4 here; the acceptance suite goes to 6
        let words: Vec<Vec<Letter>> = (1..=4)
            .flat_map(|len| {
                (0..(1usize << len)).map(move |bits| {
                    (0..len)
                        .map(|i| if bits >> i & 1 == 0 { Letter::A } else { Letter::B })
                        .collect()
                })
            })
            .collect();
        for x in &words {
            for y in &words {
                let sum = rho(x).unwrap() + rho_bar(y).unwrap();
                assert_eq!(x == y, sum == ratio(1, 1), "x={x:?} y={y:?}");
            }
        }
    }

    #[test]
    fn guess_rules_single_tile() {
        let rules = build_guess_rules(&mp(&[("A", "A")]), Flavor::Probabilistic);
        let texts: Vec<String> = rules.iter().map(|r| r.to_string()).collect();
        assert_eq!(
            texts,
            vec![
                "Z -> G1^1 Z' @ 1",
                "G1^1 -> G1^2 (A,A) @ 1",
                "G1^2 -> C @ 1/2",
                "G1^2 -> G1^1 @ 1/2",
            ]
        );
    }

    #[test]
    fn guess_rules_two_tiles_are_uniform() {
        let rules = build_guess_rules(&mp(&[("A", "AB"), ("BA", "A")]), Flavor::Probabilistic);
        let start: Vec<_> = rules.iter().filter(|r| r.lhs() == &StackSymbol::Start).collect();
        assert_eq!(start.len(), 2);
        for rule in start {
            assert_eq!(rule.weight(), &prob_weight(1, 2));
        }
        let boundary: Vec<_> = rules
            .iter()
            .filter(|r| r.lhs() == &(StackSymbol::Guess { tile: 1, pos: 3 }))
            .collect();
        assert_eq!(boundary.len(), 3);
        for rule in boundary {
            assert_eq!(rule.weight(), &prob_weight(1, 3));
        }
    }

    #[test]
    fn quantum_guess_rules_single_tile() {
        let rules = build_guess_rules(&mp(&[("A", "A")]), Flavor::Quantum);
        let texts: Vec<String> = rules.iter().map(|r| r.to_string()).collect();
        assert_eq!(
            texts,
            vec![
                "Z -> G1^1 Z' @ sq=1 phase=t1",
                "G1^1 -> G1^2 (A,A) @ sq=1 phase=g1_1",
                "G1^2 -> C @ sq=1/2 phase=1/2*t2",
                "G1^2 -> G1^1 @ sq=1/2 phase=t2",
            ]
        );
    }

    #[test]
    fn verify_rules_shapes() {
        let rules = build_verify_rules(Flavor::Probabilistic);
        let commit: Vec<_> = rules.iter().filter(|r| r.lhs() == &StackSymbol::Commit).collect();
        assert_eq!(commit.len(), 1);
        assert_eq!(commit[0].to_string(), "C -> N @ 1");
        let pad_pair: Vec<_> = rules
            .iter()
            .filter(|r| r.lhs() == &StackSymbol::Pair(Letter::A, Letter::Pad))
            .collect();
        assert_eq!(pad_pair.len(), 2);
        assert_eq!(pad_pair[0].to_string(), "(A,.) -> X_(A,.) @ 1/2");
        assert_eq!(pad_pair[1].to_string(), "(A,.) -> eps @ 1/2");
        // 1 commit + 2 branch + 2 audits + 18 pair + 2 bottom + 9 markers
        assert_eq!(rules.len(), 34);
    }

    #[test]
    fn quantum_verify_rules_phases() {
        let rules = build_verify_rules(Flavor::Quantum);
        let branch_to_second = rules
            .iter()
            .find(|r| r.lhs() == &StackSymbol::Branch && r.rhs() == [StackSymbol::Second])
            .unwrap();
        assert_eq!(branch_to_second.to_string(), "N -> S @ sq=1/2 phase=t4");
        let bottom_first = rules
            .iter()
            .find(|r| {
                r.lhs() == &StackSymbol::Bottom
                    && r.rhs() == [StackSymbol::Marked(Letter::A, Letter::B)]
            })
            .unwrap();
        assert_eq!(bottom_first.to_string(), "Z' -> X_(A,B) @ sq=1/2 phase=1/2*t8");
    }

    #[test]
    fn generated_systems_validate_with_complete_alphabets() {
        for flavor in [Flavor::Probabilistic, Flavor::Quantum] {
            for variant in [
                FormulaVariant::Nested,
                FormulaVariant::Staged { delay: 2 },
                FormulaVariant::Flat,
            ] {
                let instance = mp(&[("A", "AB"), ("BA", "A")]);
                let reduction = build_reduction(&instance, flavor, variant).unwrap();
                assert!(reduction.system().validate().is_valid(), "{flavor} {variant}");
            }
        }
        // n = 2, m = 2: 6 fixed + 9 pairs + 9 markers + 2 * 3 guess symbols
        let reduction = build_reduction(
            &mp(&[("A", "AB"), ("BA", "A")]),
            Flavor::Probabilistic,
            FormulaVariant::Nested,
        )
        .unwrap();
        assert_eq!(reduction.system().alphabet().len(), 30);
    }

    #[test]
    fn phi_formulas_classify_heads() {
        let reduction = build_reduction(&mp(&[("A", "A")]), Flavor::Probabilistic, FormulaVariant::Nested).unwrap();
        let chain = induced_chain(reduction.system()).unwrap();
        let assign = reduction.assignment();
        let target1 = match reduction.phi1() {
            PathFormula::Until(_, target) => target.clone(),
            _ => panic!("phi1 is an until"),
        };
        let guard1 = match reduction.phi1() {
            PathFormula::Until(guard, _) => guard.clone(),
            _ => panic!("phi1 is an until"),
        };
        let at = |text: &str| Configuration::parse(text);
        assert!(eval_state(&chain, &at("X_(A,.) Z'"), &target1, assign).unwrap());
        assert!(!eval_state(&chain, &at("X_(B,A) Z'"), &target1, assign).unwrap());
        assert!(!eval_state(&chain, &at("S Z'"), &guard1, assign).unwrap());
        assert!(eval_state(&chain, &at("X_(.,A) Z'"), &guard1, assign).unwrap());
        let target2 = match reduction.phi2() {
            PathFormula::Until(_, target) => target.clone(),
            _ => panic!("phi2 is an until"),
        };
        assert!(eval_state(&chain, &at("X_(.,B) Z'"), &target2, assign).unwrap());
        assert!(!eval_state(&chain, &at("X_(A,A) Z'"), &target2, assign).unwrap());
    }

    #[test]
    fn formula_constants_follow_t() {
        let f = build_formula(&ratio(1, 3), FormulaVariant::Nested).unwrap();
        let text = f.to_string();
        assert!(text.starts_with("P{>0}[true U (C & P{=1}[X (P{=1/6}["));
        assert!(text.contains("P{=1/3}["));
        let f = build_formula(&ratio(1, 2), FormulaVariant::Nested).unwrap();
        let text = f.to_string();
        assert_eq!(text.matches("P{=1/4}[").count(), 2);

        let flat = build_formula(&ratio(1, 3), FormulaVariant::Flat).unwrap();
        assert!(flat.to_string().starts_with("P{>0}[true U (C & P{=1/6}["));

        assert!(matches!(
            build_formula(&ratio(0, 1), FormulaVariant::Nested),
            Err(ReductionError::TOutOfRange(_))
        ));
        assert!(matches!(
            build_formula(&ratio(1, 1), FormulaVariant::Flat),
            Err(ReductionError::TOutOfRange(_))
        ));
        assert!(matches!(
            build_formula(&ratio(3, 2), FormulaVariant::Flat),
            Err(ReductionError::TOutOfRange(_))
        ));
    }

    #[test]
    fn emitted_formulas_reparse() {
        for variant in [
            FormulaVariant::Nested,
            FormulaVariant::Staged { delay: 1 },
            FormulaVariant::Flat,
        ] {
            let f = build_formula(&ratio(1, 3), variant).unwrap();
            let reparsed = crate::pctl::parse_formula(&f.to_string()).unwrap();
            assert_eq!(reparsed, f, "variant {variant}");
        }
    }

    #[test]
    fn guess_path_single_tile() {
        let reduction = build_reduction(&mp(&[("A", "A")]), Flavor::Probabilistic, FormulaVariant::Nested).unwrap();
        let witness = reduction.guess_path_for(&IndexWord::parse("1").unwrap()).unwrap();
        let chain = induced_chain(reduction.system()).unwrap();
        assert_eq!(witness.alpha, vec![(Letter::A, Letter::A)]);
        let states: Vec<String> = witness.path.states().iter().map(|c| c.to_string()).collect();
        assert_eq!(states, vec!["Z", "G1^1 Z'", "G1^2 (A,A) Z'", "C (A,A) Z'"]);
        assert_eq!(chain.cylinder_probability(&witness.path), ratio(1, 2));
    }

    #[test]
    fn guess_path_reverses_tiles() {
        let reduction = build_reduction(
            &mp(&[("A", "AB"), ("BA", "A")]),
            Flavor::Probabilistic,
            FormulaVariant::Nested,
        )
        .unwrap();
        let witness = reduction.guess_path_for(&IndexWord::parse("1,2").unwrap()).unwrap();
        assert_eq!(witness.alpha.len(), 4); // k * m pairs
        let firsts: Vec<Letter> = witness.alpha.iter().map(|p| p.0).collect();
        let mut expected: Vec<Letter> = letters("ABA"); // u1 u2 = A . B A trimmed
        expected.reverse();
        assert_eq!(trim(&firsts), expected);
        // probability (1/n) * (1/(n+1))^k = 1/2 * 1/9
        let chain = induced_chain(reduction.system()).unwrap();
        assert_eq!(chain.cylinder_probability(&witness.path), ratio(1, 18));
        assert!(chain.cylinder_probability(&witness.path) > ratio(0, 1));
    }

    #[test]
    fn witness_audit_matches_solutionhood() {
        let reduction = build_reduction(&mp(&[("A", "A")]), Flavor::Probabilistic, FormulaVariant::Nested).unwrap();
        let report = reduction.check_witness(&IndexWord::parse("1").unwrap(), None).unwrap();
        assert_eq!(report.p1, ratio(3, 8));
        assert_eq!(report.p2, ratio(1, 8));
        assert!(report.is_solution);

        let reduction = build_reduction(&mp(&[("A", "B")]), Flavor::Probabilistic, FormulaVariant::Nested).unwrap();
        let report = reduction.check_witness(&IndexWord::parse("1").unwrap(), None).unwrap();
        assert_eq!(&report.p1 + &report.p2, ratio(3, 4));
        assert!(!report.is_solution);
    }

    #[test]
    fn witness_audit_against_explicit_t() {
        let reduction = build_reduction(&mp(&[("A", "A")]), Flavor::Probabilistic, FormulaVariant::Nested).unwrap();
        let word = IndexWord::parse("1").unwrap();
        // the solution's own weight: rho(A Z') = 3/4
        let good = reduction.check_witness(&word, Some(&ratio(3, 4))).unwrap();
        assert!(good.is_solution);
        // any other t fails even though the word solves the instance
        let bad = reduction.check_witness(&word, Some(&ratio(1, 2))).unwrap();
        assert!(!bad.is_solution);
        assert_eq!(bad.p1, ratio(3, 8));
    }

    #[test]
    fn staged_variant_needs_stages() {
        assert!(matches!(
            build_reduction(&mp(&[("A", "A")]), Flavor::Probabilistic, FormulaVariant::Staged { delay: 0 }),
            Err(ReductionError::NoStages)
        ));
    }

    fn prob_weight(num: i64, den: i64) -> Weight {
        Weight::Prob(ratio(num, den))
    }
}

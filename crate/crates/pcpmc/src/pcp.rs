//! Post Correspondence Problem instances and their padded form.
//!
//! An instance is a list of word pairs over `{A, B}`. The padded form
//! stretches every word to a common width `m` by appending the filler
//! letter `.`; equality of concatenations is then judged after erasing
//! the filler again, which leaves the solution set unchanged.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One letter of the tile alphabet. `Pad` is the filler, written `.`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    A,
    B,
    Pad,
}

impl Letter {
    /// All letters, in canonical order.
    pub const ALL: [Letter; 3] = [Letter::A, Letter::B, Letter::Pad];

    pub fn as_char(self) -> char {
        match self {
            Letter::A => 'A',
            Letter::B => 'B',
            Letter::Pad => '.',
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'A' => Some(Letter::A),
            'B' => Some(Letter::B),
            '.' => Some(Letter::Pad),
            _ => None,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Parses a word over `{A, B}`; the filler letter is rejected.
pub fn parse_word(text: &str) -> Result<Vec<Letter>, PcpError> {
    text.chars()
        .map(|c| match Letter::from_char(c) {
            Some(Letter::Pad) | None => Err(PcpError::BadLetter(c)),
            Some(l) => Ok(l),
        })
        .collect()
}

/// Renders a word as a string, one character per letter.
pub fn word_to_string(word: &[Letter]) -> String {
    word.iter().map(|l| l.as_char()).collect()
}

#[derive(Debug, Error)]
pub enum PcpError {
    #[error("instance has no pairs")]
    EmptyInstance,
    #[error("pair {0} has an empty word")]
    EmptyWord(usize),
    #[error("letter {0:?} is not allowed in an input word")]
    BadLetter(char),
    #[error("index word is empty")]
    EmptyIndexWord,
    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("failed to read instance file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse instance file: {0}")]
    Json(#[from] serde_json::Error),
}

/// A PCP instance: `n` pairs of nonempty words over `{A, B}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PcpInstance {
    pairs: Vec<(Vec<Letter>, Vec<Letter>)>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    pairs: Vec<(String, String)>,
}

impl PcpInstance {
    pub fn new(pairs: Vec<(Vec<Letter>, Vec<Letter>)>) -> Result<Self, PcpError> {
        if pairs.is_empty() {
            return Err(PcpError::EmptyInstance);
        }
        for (i, (u, v)) in pairs.iter().enumerate() {
            if u.is_empty() || v.is_empty() {
                return Err(PcpError::EmptyWord(i + 1));
            }
            if let Some(l) = u.iter().chain(v).find(|l| **l == Letter::Pad) {
                return Err(PcpError::BadLetter(l.as_char()));
            }
        }
        Ok(PcpInstance { pairs })
    }

    /// Builds an instance from `("A", "AB")`-style string pairs.
    pub fn from_strs(pairs: &[(&str, &str)]) -> Result<Self, PcpError> {
        let parsed = pairs
            .iter()
            .map(|(u, v)| Ok((parse_word(u)?, parse_word(v)?)))
            .collect::<Result<Vec<_>, PcpError>>()?;
        Self::new(parsed)
    }

    /// Number of pairs.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // `new` guarantees at least one pair
    }

    pub fn pairs(&self) -> &[(Vec<Letter>, Vec<Letter>)] {
        &self.pairs
    }

    /// Reads an instance from a JSON document `{"pairs": [["A","AB"], ...]}`.
    pub fn load(path: &Path) -> Result<Self, PcpError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, PcpError> {
        let raw: InstanceFile = serde_json::from_str(text)?;
        let pairs = raw
            .pairs
            .iter()
            .map(|(u, v)| Ok((parse_word(u)?, parse_word(v)?)))
            .collect::<Result<Vec<_>, PcpError>>()?;
        Self::new(pairs)
    }

    pub fn to_json(&self) -> String {
        let raw = InstanceFile {
            pairs: self
                .pairs
                .iter()
                .map(|(u, v)| (word_to_string(u), word_to_string(v)))
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("instance serialization cannot fail")
    }
}

impl fmt::Display for PcpInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = self
            .pairs
            .iter()
            .map(|(u, v)| format!("({},{})", word_to_string(u), word_to_string(v)))
            .collect::<Vec<_>>()
            .join(" ");
        write!(f, "{body}")
    }
}

/// A padded instance: every word has the common width `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModifiedPcpInstance {
    pairs: Vec<(Vec<Letter>, Vec<Letter>)>,
    width: usize,
}

impl ModifiedPcpInstance {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The common padded width `m`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pairs(&self) -> &[(Vec<Letter>, Vec<Letter>)] {
        &self.pairs
    }

    /// Recovers the source instance by erasing the filler.
    pub fn unpadded(&self) -> PcpInstance {
        let pairs = self
            .pairs
            .iter()
            .map(|(u, v)| (erase_pad(u), erase_pad(v)))
            .collect();
        PcpInstance::new(pairs).expect("erasing the filler keeps words nonempty")
    }
}

impl fmt::Display for ModifiedPcpInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = self
            .pairs
            .iter()
            .map(|(u, v)| {
                format!(
                    "({},{})",
                    u.iter().map(|l| l.as_char()).collect::<String>(),
                    v.iter().map(|l| l.as_char()).collect::<String>()
                )
            })
            .collect::<Vec<_>>()
            .join(" ");
        write!(f, "{body}")
    }
}

fn erase_pad(word: &[Letter]) -> Vec<Letter> {
    word.iter().copied().filter(|l| *l != Letter::Pad).collect()
}

/// Pads every word on the right with the filler up to the common width.
///
/// The width is the maximum word length across the instance. Erasing the
/// filler from the output recovers the input exactly; the solution set is
/// unchanged because equality is judged on the erased concatenations.
pub fn pad_instance(instance: &PcpInstance) -> ModifiedPcpInstance {
    let width = instance
        .pairs()
        .iter()
        .flat_map(|(u, v)| [u.len(), v.len()])
        .max()
        .expect("instance is nonempty");
    let pad = |w: &Vec<Letter>| {
        let mut out = w.clone();
        out.resize(width, Letter::Pad);
        out
    };
    ModifiedPcpInstance {
        pairs: instance.pairs().iter().map(|(u, v)| (pad(u), pad(v))).collect(),
        width,
    }
}

/// A candidate solution: a nonempty sequence of 1-based pair indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct IndexWord(Vec<usize>);

impl IndexWord {
    pub fn new(indices: Vec<usize>) -> Result<Self, PcpError> {
        if indices.is_empty() {
            return Err(PcpError::EmptyIndexWord);
        }
        if let Some(&i) = indices.iter().find(|i| **i == 0) {
            return Err(PcpError::IndexOutOfRange { index: i, n: 0 });
        }
        Ok(IndexWord(indices))
    }

    /// Parses a comma-separated list such as `1,2,1`.
    pub fn parse(text: &str) -> Result<Self, PcpError> {
        let indices = text
            .split(',')
            .map(|part| part.trim().parse::<usize>().map_err(|_| PcpError::EmptyIndexWord))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for IndexWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = self.0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{body}")
    }
}

fn check_range(instance_len: usize, w: &IndexWord) -> Result<(), PcpError> {
    for &i in w.indices() {
        if i < 1 || i > instance_len {
            return Err(PcpError::IndexOutOfRange { index: i, n: instance_len });
        }
    }
    Ok(())
}

/// True iff the two concatenations selected by `w` are equal.
pub fn check_solution(instance: &PcpInstance, w: &IndexWord) -> Result<bool, PcpError> {
    check_range(instance.len(), w)?;
    let mut first = Vec::new();
    let mut second = Vec::new();
    for &i in w.indices() {
        let (u, v) = &instance.pairs()[i - 1];
        first.extend_from_slice(u);
        second.extend_from_slice(v);
    }
    Ok(first == second)
}

/// Finds the shortest solution with at most `max_k` indices, breaking ties
/// lexicographically. Exhausting the bound yields `None`, not an error.
pub fn brute_force_solve(instance: &PcpInstance, max_k: usize) -> Option<IndexWord> {
    let n = instance.len();
    for k in 1..=max_k {
        let mut indices = vec![1usize; k];
        loop {
            let w = IndexWord(indices.clone());
            if check_solution(instance, &w).expect("indices stay in range") {
                return Some(w);
            }
            // advance the odometer; indices run over 1..=n
            let mut pos = k;
            loop {
                if pos == 0 {
                    break;
                }
                if indices[pos - 1] < n {
                    indices[pos - 1] += 1;
                    break;
                }
                indices[pos - 1] = 1;
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(pairs: &[(&str, &str)]) -> PcpInstance {
        PcpInstance::from_strs(pairs).unwrap()
    }

    fn word(text: &str) -> IndexWord {
        IndexWord::parse(text).unwrap()
    }

    #[test]
    fn padding_single_pair() {
        let mp = pad_instance(&instance(&[("A", "ABA")]));
        assert_eq!(mp.width(), 3);
        assert_eq!(mp.to_string(), "(A..,ABA)");
    }

    #[test]
    fn padding_uniform_instance_is_identity() {
        let src = instance(&[("A", "A")]);
        let mp = pad_instance(&src);
        assert_eq!(mp.width(), 1);
        assert_eq!(mp.unpadded(), src);
        assert_eq!(mp.to_string(), "(A,A)");
    }

    #[test]
    fn padding_two_pairs() {
        let mp = pad_instance(&instance(&[("AB", "B"), ("A", "BA")]));
        assert_eq!(mp.width(), 2);
        assert_eq!(mp.to_string(), "(AB,B.) (A.,BA)");
        assert_eq!(mp.unpadded(), instance(&[("AB", "B"), ("A", "BA")]));
    }

    #[test]
    fn solution_check_examples() {
        assert!(check_solution(&instance(&[("A", "A")]), &word("1")).unwrap());
        assert!(!check_solution(&instance(&[("A", "B")]), &word("1")).unwrap());
        // ABA vs ABA
        assert!(check_solution(&instance(&[("A", "AB"), ("BA", "A")]), &word("1,2")).unwrap());
    }

    #[test]
    fn solution_check_rejects_out_of_range() {
        let err = check_solution(&instance(&[("A", "A")]), &word("2")).unwrap_err();
        assert!(matches!(err, PcpError::IndexOutOfRange { index: 2, n: 1 }));
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_solve(&instance(&[("A", "A")]), 3), Some(word("1")));
        assert_eq!(brute_force_solve(&instance(&[("A", "B")]), 4), None);
        assert_eq!(
            brute_force_solve(&instance(&[("A", "AB"), ("BA", "A")]), 4),
            Some(word("1,2"))
        );
    }

    #[test]
    fn brute_force_prefers_shortest_then_lexicographic() {
        // both (1) and (2) solve; (1) comes first
        let inst = instance(&[("A", "A"), ("B", "B")]);
        assert_eq!(brute_force_solve(&inst, 2), Some(word("1")));
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = instance(&[("A", "AB"), ("BA", "A")]);
        let json = inst.to_json();
        assert_eq!(PcpInstance::from_json(&json).unwrap(), inst);
    }

    #[test]
    fn instance_rejects_filler_and_empties() {
        assert!(matches!(PcpInstance::from_strs(&[]), Err(PcpError::EmptyInstance)));
        assert!(matches!(
            PcpInstance::from_strs(&[("", "A")]),
            Err(PcpError::BadLetter(_)) | Err(PcpError::EmptyWord(_))
        ));
        assert!(matches!(
            PcpInstance::from_strs(&[("A.", "A")]),
            Err(PcpError::BadLetter('.'))
        ));
        assert!(PcpInstance::from_json(r#"{"pairs": [["Ax","A"]]}"#).is_err());
    }
}

//! Text grammar for PCTL formulas.
//!
//! ```text
//! state   := unary ( '&' unary )*
//! unary   := '!' unary | 'true' | atom | 'P' '{' cmp rational '}' '[' path ']' | '(' state ')'
//! cmp     := '>' | '>=' | '='
//! rational:= digits [ '/' digits ]          (value in [0, 1])
//! path    := pathAnd [ 'U' path ]
//! pathAnd := pathUnary ( '&' pathUnary )*
//! pathUnary := '!' pathUnary | 'X' pathUnary | 'true' | atom
//!            | 'P' '{' cmp rational '}' '[' path ']' | '(' path ')'
//! atom    := stack-symbol name, e.g. Z  Z'  C  N3  G1^2  (A,B)  X_(B,.)
//! ```
//!
//! `U`, `X` (followed by a formula), `P` (followed by `{`) and `true` are
//! operators, not atoms. Path formulas beyond `X Phi` / `Phi U Phi` parse
//! but evaluate to an "unsupported" error.

use num::{BigInt, BigRational, Zero};

use super::ast::{Comparison, FormulaError, PathFormula, StarPath, StateFormula};
use crate::pushdown::StackSymbol;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Bang,
    Amp,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Cmp(Comparison),
    Slash,
    Number(String),
    Word(String),
    Symbol(StackSymbol),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn syntax(pos: usize, msg: impl Into<String>) -> FormulaError {
    FormulaError::Syntax { pos, msg: msg.into() }
}

fn is_word_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn is_word_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '^')
}

fn lex(text: &str) -> Result<Vec<Token>, FormulaError> {
    let bytes: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let pair_at = |i: usize| -> Option<(StackSymbol, usize)> {
        // `(x,y)` with x, y single letters
        let text: String = bytes[i..bytes.len().min(i + 5)].iter().collect();
        let symbol = StackSymbol::named(&text);
        match symbol {
            StackSymbol::Pair(..) => Some((symbol, 5)),
            _ => None,
        }
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let pos = i;
        match c {
            '!' => toks.push(Token { tok: Tok::Bang, pos }),
            '&' => toks.push(Token { tok: Tok::Amp, pos }),
            '{' => toks.push(Token { tok: Tok::LBrace, pos }),
            '}' => toks.push(Token { tok: Tok::RBrace, pos }),
            '[' => toks.push(Token { tok: Tok::LBracket, pos }),
            ']' => toks.push(Token { tok: Tok::RBracket, pos }),
            ')' => toks.push(Token { tok: Tok::RParen, pos }),
            '/' => toks.push(Token { tok: Tok::Slash, pos }),
            '=' => toks.push(Token { tok: Tok::Cmp(Comparison::Equal), pos }),
            '>' => {
                if bytes.get(i + 1) == Some(&'=') {
                    toks.push(Token { tok: Tok::Cmp(Comparison::GreaterEq), pos });
                    i += 1;
                } else {
                    toks.push(Token { tok: Tok::Cmp(Comparison::Greater), pos });
                }
            }
            '(' => {
                if let Some((symbol, width)) = pair_at(i) {
                    toks.push(Token { tok: Tok::Symbol(symbol), pos });
                    i += width;
                    continue;
                }
                toks.push(Token { tok: Tok::LParen, pos });
            }
            'X' if bytes.get(i + 1) == Some(&'_') && bytes.get(i + 2) == Some(&'(') => {
                match pair_at(i + 2) {
                    Some((StackSymbol::Pair(x, y), width)) => {
                        toks.push(Token { tok: Tok::Symbol(StackSymbol::Marked(x, y)), pos });
                        i += 2 + width;
                        continue;
                    }
                    _ => return Err(syntax(pos, "malformed pair marker".to_string())),
                }
            }
            _ if c.is_ascii_digit() => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                toks.push(Token { tok: Tok::Number(bytes[i..j].iter().collect()), pos });
                i = j;
                continue;
            }
            _ if is_word_start(c) => {
                let mut j = i + 1;
                while j < bytes.len() && is_word_continue(bytes[j]) {
                    j += 1;
                }
                toks.push(Token { tok: Tok::Word(bytes[i..j].iter().collect()), pos });
                i = j;
                continue;
            }
            _ => return Err(syntax(pos, format!("unexpected character {c:?}"))),
        }
        i += 1;
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Token>,
    cur: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.cur).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.cur).map(|t| t.pos).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.cur).map(|t| t.tok.clone());
        self.cur += 1;
        t
    }

    fn eat(&mut self, expected: Tok, what: &str) -> Result<(), FormulaError> {
        if self.peek() == Some(&expected) {
            self.cur += 1;
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected {what}")))
        }
    }

    /// Can the token at `cur + offset` begin a formula?
    fn starts_formula(&self, offset: usize) -> bool {
        match self.toks.get(self.cur + offset).map(|t| &t.tok) {
            Some(Tok::Bang | Tok::LParen | Tok::Symbol(_)) => true,
            Some(Tok::Word(w)) => w != "U",
            _ => false,
        }
    }

    fn state(&mut self) -> Result<StateFormula, FormulaError> {
        let mut acc = self.state_unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.cur += 1;
            acc = acc.and(self.state_unary()?);
        }
        Ok(acc)
    }

    fn state_unary(&mut self) -> Result<StateFormula, FormulaError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Bang) => Ok(self.state_unary()?.not()),
            Some(Tok::LParen) => {
                let inner = self.state()?;
                if self.peek() == Some(&Tok::Word("U".into())) {
                    return Err(FormulaError::PathAtStateLevel { pos: self.pos() });
                }
                self.eat(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Symbol(s)) => Ok(StateFormula::Atom(s)),
            Some(Tok::Word(w)) => match w.as_str() {
                "true" => Ok(StateFormula::True),
                "P" if self.peek() == Some(&Tok::LBrace) => self.prob(),
                "X" if self.starts_formula(0) => Err(FormulaError::PathAtStateLevel { pos }),
                "U" => Err(FormulaError::PathAtStateLevel { pos }),
                _ => Ok(StateFormula::Atom(StackSymbol::named(&w))),
            },
            _ => Err(syntax(pos, "expected a state formula")),
        }
    }

    fn prob(&mut self) -> Result<StateFormula, FormulaError> {
        self.eat(Tok::LBrace, "`{`")?;
        let cmp = match self.bump() {
            Some(Tok::Cmp(c)) => c,
            _ => return Err(syntax(self.pos(), "expected `>`, `>=` or `=`")),
        };
        let bound = self.rational()?;
        self.eat(Tok::RBrace, "`}`")?;
        self.eat(Tok::LBracket, "`[`")?;
        let star = self.path()?;
        self.eat(Tok::RBracket, "`]`")?;
        StateFormula::prob(cmp, bound, lower_path(star))
    }

    fn rational(&mut self) -> Result<BigRational, FormulaError> {
        let pos = self.pos();
        let numer = match self.bump() {
            Some(Tok::Number(n)) => n.parse::<BigInt>().expect("digits"),
            _ => return Err(syntax(pos, "expected a rational constant")),
        };
        let denom = if self.peek() == Some(&Tok::Slash) {
            self.cur += 1;
            let pos = self.pos();
            match self.bump() {
                Some(Tok::Number(n)) => {
                    let d = n.parse::<BigInt>().expect("digits");
                    if d.is_zero() {
                        return Err(syntax(pos, "zero denominator"));
                    }
                    d
                }
                _ => return Err(syntax(pos, "expected a denominator")),
            }
        } else {
            BigInt::from(1)
        };
        Ok(BigRational::new(numer, denom))
    }

    fn path(&mut self) -> Result<StarPath, FormulaError> {
        let lhs = self.path_and()?;
        if self.peek() == Some(&Tok::Word("U".into())) {
            self.cur += 1;
            let rhs = self.path()?;
            return Ok(StarPath::Until(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn path_and(&mut self) -> Result<StarPath, FormulaError> {
        let mut acc = self.path_unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.cur += 1;
            let rhs = self.path_unary()?;
            acc = match (acc, rhs) {
                (StarPath::State(a), StarPath::State(b)) => StarPath::State(a.and(b)),
                (a, b) => StarPath::And(Box::new(a), Box::new(b)),
            };
        }
        Ok(acc)
    }

    fn path_unary(&mut self) -> Result<StarPath, FormulaError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Bang) => Ok(match self.path_unary()? {
                StarPath::State(s) => StarPath::State(s.not()),
                p => StarPath::Not(Box::new(p)),
            }),
            Some(Tok::LParen) => {
                let inner = self.path()?;
                self.eat(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Symbol(s)) => Ok(StarPath::State(StateFormula::Atom(s))),
            Some(Tok::Word(w)) => match w.as_str() {
                "true" => Ok(StarPath::State(StateFormula::True)),
                "P" if self.peek() == Some(&Tok::LBrace) => Ok(StarPath::State(self.prob()?)),
                "X" if self.starts_formula(0) => Ok(StarPath::Next(Box::new(self.path_unary()?))),
                "U" => Err(syntax(pos, "`U` needs a left operand")),
                _ => Ok(StarPath::State(StateFormula::Atom(StackSymbol::named(&w)))),
            },
            _ => Err(syntax(pos, "expected a path formula")),
        }
    }
}

/// Classifies a parsed path expression: the strict fragment becomes
/// `Next`/`Until`, everything else is kept as a flagged `Star` formula.
fn lower_path(star: StarPath) -> PathFormula {
    match star {
        StarPath::Next(inner) => match *inner {
            StarPath::State(s) => PathFormula::next(s),
            other => PathFormula::Star(Box::new(StarPath::Next(Box::new(other)))),
        },
        StarPath::Until(a, b) => match (*a, *b) {
            (StarPath::State(a), StarPath::State(b)) => PathFormula::until(a, b),
            (a, b) => PathFormula::Star(Box::new(StarPath::Until(Box::new(a), Box::new(b)))),
        },
        other => PathFormula::Star(Box::new(other)),
    }
}

/// Parses a state formula from text.
pub fn parse_formula(text: &str) -> Result<StateFormula, FormulaError> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, cur: 0, end: text.len() };
    let formula = parser.state()?;
    match parser.peek() {
        None => Ok(formula),
        Some(Tok::Word(w)) if w == "U" => {
            Err(FormulaError::PathAtStateLevel { pos: parser.pos() })
        }
        Some(_) => Err(syntax(parser.pos(), "unexpected trailing input")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pushdown::ratio;

    fn atom(name: &str) -> StateFormula {
        StateFormula::Atom(StackSymbol::named(name))
    }

    #[test]
    fn parses_reachability_formula() {
        let f = parse_formula("P{>0}[true U C]").unwrap();
        assert_eq!(
            f,
            StateFormula::prob(
                Comparison::Greater,
                ratio(0, 1),
                PathFormula::until(StateFormula::True, atom("C")),
            )
            .unwrap()
        );
    }

    #[test]
    fn parses_nested_constants() {
        let f = parse_formula("P{>0}[true U (C & P{=1}[X (P{=1/6}[F U S] & P{=1/3}[S U F])])]").unwrap();
        let text = f.to_string();
        assert!(text.contains("P{=1/6}["));
        assert!(text.contains("P{=1/3}["));
        assert_eq!(parse_formula(&text).unwrap(), f);
    }

    #[test]
    fn top_level_path_formula_is_rejected() {
        assert!(matches!(
            parse_formula("X (C & true)"),
            Err(FormulaError::PathAtStateLevel { .. })
        ));
        assert!(matches!(
            parse_formula("true U C"),
            Err(FormulaError::PathAtStateLevel { .. })
        ));
        assert!(matches!(
            parse_formula("(true U C)"),
            Err(FormulaError::PathAtStateLevel { .. })
        ));
    }

    #[test]
    fn star_only_path_formulas_parse_but_are_flagged() {
        let f = parse_formula("P{>0}[X X C]").unwrap();
        match f {
            StateFormula::Prob { path, .. } => assert!(matches!(*path, PathFormula::Star(_))),
            _ => panic!("expected a probability quantifier"),
        }
        let f = parse_formula("P{>0}[!(true U C)]").unwrap();
        match f {
            StateFormula::Prob { path, .. } => assert!(matches!(*path, PathFormula::Star(_))),
            _ => panic!("expected a probability quantifier"),
        }
        // a bare state formula is not a PCTL path formula either
        let f = parse_formula("P{>0}[C]").unwrap();
        match f {
            StateFormula::Prob { path, .. } => assert!(matches!(*path, PathFormula::Star(_))),
            _ => panic!("expected a probability quantifier"),
        }
    }

    #[test]
    fn atoms_with_rich_names() {
        let f = parse_formula("P{>=1/2}[X_(A,.) U (B,B)]").unwrap();
        assert_eq!(f.to_string(), "P{>=1/2}[X_(A,.) U (B,B)]");
        // a bare `X` not followed by a formula is an atom
        let f = parse_formula("P{>0}[true U X]").unwrap();
        assert_eq!(f.to_string(), "P{>0}[true U X]");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_formula("P{>0}[true U ]") {
            Err(FormulaError::Syntax { pos, .. }) => assert_eq!(pos, 13),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(
            parse_formula("P{>2}[true U C]"),
            Err(FormulaError::BoundOutOfRange(_))
        ));
        assert!(matches!(
            parse_formula("P{>1/0}[true U C]"),
            Err(FormulaError::Syntax { .. })
        ));
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "true",
            "!C & (F & S)",
            "P{=13/32}[!S & !X_(A,A) U !(!X_(A,A) & !X_(A,B) & !X_(A,.))]",
            "P{>0}[X (C & true)]",
            "P{=1}[X P{=1/2}[F U S]]",
        ] {
            let f = parse_formula(text).unwrap();
            assert_eq!(parse_formula(&f.to_string()).unwrap(), f, "for input {text}");
        }
    }
}

//! Recursive-descent parser for the concrete formula syntax.
//!
//! Precedence, loosest first: `->` (right-assoc), `|`, `&`, `U`/`R`
//! (right-assoc), then prefix operators `!`, `X`, `F`, `G`. A strategic
//! prefix `<<A,B>>` or `<<A>>^{>=0.9}` scopes over a `U`/`R`-level
//! expression, so `<<A>> p U q` reads as `<<A>>(p U q)`.
//!
//! Input is first parsed into a general expression tree, then restricted
//! to the PATL fragment: every temporal operator must sit directly under a
//! strategic prefix and take state formulas as operands.

use std::fmt;

use thiserror::Error;

use super::ast::{PathFormula, ProbabilityBound, Relation, StateFormula};
use crate::model::{parse_prob, Prob};
use num_traits::{One, Signed};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at position {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    ThresholdRange(String),
    UnknownRelation(String),
    Fragment(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::ThresholdRange(t) => {
                write!(f, "probability threshold {t} outside [0,1]")
            }
            ParseErrorKind::UnknownRelation(r) => {
                write!(f, "unknown relation symbol {r:?} (expected <=, <, > or >=)")
            }
            ParseErrorKind::Fragment(m) => write!(f, "PATL fragment only: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Bang,
    Amp,
    Bar,
    Arrow,
    LParen,
    RParen,
    LCoal,
    RCoal,
    Comma,
    Caret,
    LBrace,
    RBrace,
    Le,
    Lt,
    Gt,
    Ge,
    Other(String),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Number(s) | Tok::Other(s) => format!("{s:?}"),
            Tok::Eof => "end of input".into(),
            t => format!("{:?}", token_text(t)),
        }
    }
}

fn token_text(t: &Tok) -> &'static str {
    match t {
        Tok::Bang => "!",
        Tok::Amp => "&",
        Tok::Bar => "|",
        Tok::Arrow => "->",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LCoal => "<<",
        Tok::RCoal => ">>",
        Tok::Comma => ",",
        Tok::Caret => "^",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::Le => "<=",
        Tok::Lt => "<",
        Tok::Gt => ">",
        Tok::Ge => ">=",
        _ => "?",
    }
}

fn lex(text: &str) -> Vec<(usize, Tok)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let next = bytes.get(i + 1).map(|b| *b as char);
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '!' if next == Some('=') => {
                i += 2;
                out.push((start, Tok::Other("!=".into())));
                continue;
            }
            '!' => Tok::Bang,
            '&' if next == Some('&') => {
                i += 1;
                Tok::Amp
            }
            '&' => Tok::Amp,
            '|' if next == Some('|') => {
                i += 1;
                Tok::Bar
            }
            '|' => Tok::Bar,
            '-' if next == Some('>') => {
                i += 1;
                Tok::Arrow
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '^' => Tok::Caret,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '<' if next == Some('<') => {
                i += 1;
                Tok::LCoal
            }
            '<' if next == Some('=') => {
                i += 1;
                Tok::Le
            }
            '<' => Tok::Lt,
            '>' if next == Some('>') => {
                i += 1;
                Tok::RCoal
            }
            '>' if next == Some('=') => {
                i += 1;
                Tok::Ge
            }
            '>' => Tok::Gt,
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < bytes.len() && matches!(bytes[j] as char, '0'..='9' | '.' | '/') {
                    j += 1;
                }
                let s = text[i..j].to_string();
                i = j;
                out.push((start, Tok::Number(s)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len()
                    && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                let s = text[i..j].to_string();
                i = j;
                out.push((start, Tok::Ident(s)));
                continue;
            }
            _ => {
                // group runs of unrecognized punctuation, e.g. `!=` or `==`
                let ch_len = text[i..].chars().next().map(char::len_utf8).unwrap_or(1);
                let mut j = i + ch_len;
                while j < bytes.len() && matches!(bytes[j] as char, '=' | '!' | '~') {
                    j += 1;
                }
                let s = text[i..j].to_string();
                i = j;
                out.push((start, Tok::Other(s)));
                continue;
            }
        };
        i += 1;
        out.push((start, tok));
    }
    out.push((text.len(), Tok::Eof));
    out
}

#[derive(Debug, Clone)]
struct Node {
    pos: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    True,
    False,
    Atom(String),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Implies(Box<Node>, Box<Node>),
    Next(Box<Node>),
    Finally(Box<Node>),
    Globally(Box<Node>),
    Until(Box<Node>, Box<Node>),
    Release(Box<Node>, Box<Node>),
    Strategic {
        coalition: Vec<String>,
        bound: Option<ProbabilityBound>,
        body: Box<Node>,
    },
}

impl Kind {
    fn is_temporal(&self) -> bool {
        matches!(
            self,
            Kind::Next(_)
                | Kind::Finally(_)
                | Kind::Globally(_)
                | Kind::Until(..)
                | Kind::Release(..)
        )
    }

    fn contains_temporal(&self) -> bool {
        match self {
            Kind::True | Kind::False | Kind::Atom(_) | Kind::Strategic { .. } => false,
            Kind::Not(a) => a.kind.is_temporal() || a.kind.contains_temporal(),
            Kind::And(a, b) | Kind::Or(a, b) | Kind::Implies(a, b) => {
                a.kind.is_temporal()
                    || a.kind.contains_temporal()
                    || b.kind.is_temporal()
                    || b.kind.contains_temporal()
            }
            _ => true,
        }
    }
}

const KEYWORDS: [&str; 7] = ["X", "F", "G", "U", "R", "true", "false"];

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_ident(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn syntax<T>(&self, msg: String) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos(),
            kind: ParseErrorKind::Syntax(msg),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!(
                "expected {:?}, found {}",
                token_text(&tok),
                self.peek().describe()
            ))
        }
    }

    fn parse_implies(&mut self) -> Result<Node, ParseError> {
        let lhs = self.parse_or()?;
        if *self.peek() == Tok::Arrow {
            let pos = self.bump().0;
            let rhs = self.parse_implies()?;
            return Ok(Node {
                pos,
                kind: Kind::Implies(Box::new(lhs), Box::new(rhs)),
            });
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.parse_and()?;
        while *self.peek() == Tok::Bar {
            let pos = self.bump().0;
            let rhs = self.parse_and()?;
            lhs = Node {
                pos,
                kind: Kind::Or(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.parse_until()?;
        while *self.peek() == Tok::Amp {
            let pos = self.bump().0;
            let rhs = self.parse_until()?;
            lhs = Node {
                pos,
                kind: Kind::And(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn parse_until(&mut self) -> Result<Node, ParseError> {
        let lhs = self.parse_unary()?;
        let until = self.is_ident("U");
        if until || self.is_ident("R") {
            let pos = self.bump().0;
            let rhs = self.parse_until()?;
            let kind = if until {
                Kind::Until(Box::new(lhs), Box::new(rhs))
            } else {
                Kind::Release(Box::new(lhs), Box::new(rhs))
            };
            return Ok(Node { pos, kind });
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Node, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                let inner = self.parse_unary()?;
                Ok(Node {
                    pos,
                    kind: Kind::Not(Box::new(inner)),
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.parse_implies()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::LCoal => self.parse_strategic(),
            Tok::Ident(name) => {
                self.bump();
                let unary =
                    |p: &mut Parser, wrap: fn(Box<Node>) -> Kind| -> Result<Node, ParseError> {
                        let inner = p.parse_unary()?;
                        Ok(Node {
                            pos,
                            kind: wrap(Box::new(inner)),
                        })
                    };
                match name.as_str() {
                    "X" => unary(self, Kind::Next),
                    "F" => unary(self, Kind::Finally),
                    "G" => unary(self, Kind::Globally),
                    "true" => Ok(Node {
                        pos,
                        kind: Kind::True,
                    }),
                    "false" => Ok(Node {
                        pos,
                        kind: Kind::False,
                    }),
                    "U" | "R" => Err(ParseError {
                        pos,
                        kind: ParseErrorKind::Syntax(format!(
                            "binary operator {name} is missing its left operand"
                        )),
                    }),
                    _ => Ok(Node {
                        pos,
                        kind: Kind::Atom(name),
                    }),
                }
            }
            other => self.syntax(format!("unexpected {}", other.describe())),
        }
    }

    fn parse_strategic(&mut self) -> Result<Node, ParseError> {
        let pos = self.bump().0;
        let mut coalition = Vec::new();
        if *self.peek() != Tok::RCoal {
            loop {
                match self.peek().clone() {
                    Tok::Ident(a) if !KEYWORDS.contains(&a.as_str()) => {
                        self.bump();
                        coalition.push(a);
                    }
                    other => {
                        return self
                            .syntax(format!("expected agent name, found {}", other.describe()))
                    }
                }
                if *self.peek() == Tok::Comma {
                    self.bump();
                    continue;
                }
                break;
            }
        }
        self.expect(Tok::RCoal)?;
        let bound = if *self.peek() == Tok::Caret {
            self.bump();
            self.expect(Tok::LBrace)?;
            let bound = self.parse_bound()?;
            self.expect(Tok::RBrace)?;
            Some(bound)
        } else {
            None
        };
        let body = self.parse_until()?;
        Ok(Node {
            pos,
            kind: Kind::Strategic {
                coalition,
                bound,
                body: Box::new(body),
            },
        })
    }

    fn parse_bound(&mut self) -> Result<ProbabilityBound, ParseError> {
        let (pos, tok) = self.bump();
        let relation = match tok {
            Tok::Le => Relation::Le,
            Tok::Lt => Relation::Lt,
            Tok::Gt => Relation::Gt,
            Tok::Ge => Relation::Ge,
            Tok::Other(s) => {
                return Err(ParseError {
                    pos,
                    kind: ParseErrorKind::UnknownRelation(s),
                })
            }
            Tok::Number(_) => {
                return Err(ParseError {
                    pos,
                    kind: ParseErrorKind::Syntax(
                        "probability bound needs a relation before the threshold".into(),
                    ),
                })
            }
            other => {
                return Err(ParseError {
                    pos,
                    kind: ParseErrorKind::UnknownRelation(match other {
                        Tok::Ident(s) => s,
                        t => token_text(&t).to_string(),
                    }),
                })
            }
        };
        let negative = *self.peek() == Tok::Other("-".into());
        if negative {
            self.bump();
        }
        let (pos, tok) = self.bump();
        let text = match tok {
            Tok::Number(s) => s,
            other => {
                return Err(ParseError {
                    pos,
                    kind: ParseErrorKind::Syntax(format!(
                        "expected threshold, found {}",
                        other.describe()
                    )),
                })
            }
        };
        let value: Prob = parse_prob(&text).ok_or_else(|| ParseError {
            pos,
            kind: ParseErrorKind::Syntax(format!("malformed threshold {text:?}")),
        })?;
        let value = if negative { -value } else { value };
        if value.is_negative() || value > Prob::one() {
            return Err(ParseError {
                pos,
                kind: ParseErrorKind::ThresholdRange(if negative {
                    format!("-{text}")
                } else {
                    text
                }),
            });
        }
        Ok(ProbabilityBound {
            relation,
            threshold: value,
        })
    }
}

fn fragment(pos: usize, msg: &str) -> ParseError {
    ParseError {
        pos,
        kind: ParseErrorKind::Fragment(msg.to_string()),
    }
}

fn to_state(node: Node) -> Result<StateFormula, ParseError> {
    let pos = node.pos;
    Ok(match node.kind {
        Kind::True => StateFormula::True,
        Kind::False => StateFormula::False,
        Kind::Atom(p) => StateFormula::Atom(p),
        Kind::Not(a) => StateFormula::Not(Box::new(to_state(*a)?)),
        Kind::And(a, b) => StateFormula::And(Box::new(to_state(*a)?), Box::new(to_state(*b)?)),
        Kind::Or(a, b) => StateFormula::Or(Box::new(to_state(*a)?), Box::new(to_state(*b)?)),
        Kind::Implies(a, b) => StateFormula::Implies(Box::new(to_state(*a)?), Box::new(to_state(*b)?)),
        Kind::Strategic { coalition, bound, body } => {
            let path = to_path(*body)?;
            match bound {
                Some(bound) => StateFormula::StrategicProb {
                    coalition,
                    bound,
                    path: Box::new(path),
                },
                None => StateFormula::StrategicPlain {
                    coalition,
                    path: Box::new(path),
                },
            }
        }
        _ => {
            return Err(fragment(
                pos,
                "temporal operators must appear directly under a strategic modality with state-formula operands",
            ))
        }
    })
}

fn to_path(node: Node) -> Result<PathFormula, ParseError> {
    let pos = node.pos;
    let state = |n: Box<Node>| to_state(*n).map(Box::new);
    Ok(match node.kind {
        Kind::Next(a) => PathFormula::Next(state(a)?),
        Kind::Finally(a) => PathFormula::Finally(state(a)?),
        Kind::Globally(a) => PathFormula::Globally(state(a)?),
        Kind::Until(a, b) => PathFormula::Until(state(a)?, state(b)?),
        Kind::Release(a, b) => PathFormula::Release(state(a)?, state(b)?),
        k if k.contains_temporal() => {
            return Err(fragment(
                pos,
                "Boolean combinations of path formulas are not supported",
            ))
        }
        _ => {
            return Err(fragment(
                pos,
                "a strategic modality must be followed by X, F, G, U or R",
            ))
        }
    })
}

/// Parses a PATL/ATL state formula.
pub fn parse(text: &str) -> Result<StateFormula, ParseError> {
    let mut p = Parser {
        toks: lex(text),
        at: 0,
    };
    let node = p.parse_implies()?;
    if *p.peek() != Tok::Eof {
        return p.syntax(format!("unexpected {} after formula", p.peek().describe()));
    }
    to_state(node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn bound(rel: Relation, n: i64, d: i64) -> ProbabilityBound {
        ProbabilityBound {
            relation: rel,
            threshold: BigRational::new(n.into(), d.into()),
        }
    }

    #[test]
    fn eventual_good_finish() {
        let f = parse("<<Rocket>>^{>=0.9} F (GoodState & Finish)").unwrap();
        assert_eq!(
            f,
            StateFormula::StrategicProb {
                coalition: vec!["Rocket".into()],
                bound: bound(Relation::Ge, 9, 10),
                path: Box::new(PathFormula::Finally(Box::new(StateFormula::and(
                    StateFormula::atom("GoodState"),
                    StateFormula::atom("Finish")
                )))),
            }
        );
    }

    #[test]
    fn plain_globally_implication() {
        let f = parse("<<Rocket>> G (Disengaged -> GoodState)").unwrap();
        assert_eq!(
            f,
            StateFormula::StrategicPlain {
                coalition: vec!["Rocket".into()],
                path: Box::new(PathFormula::Globally(Box::new(StateFormula::implies(
                    StateFormula::atom("Disengaged"),
                    StateFormula::atom("GoodState")
                )))),
            }
        );
    }

    #[test]
    fn empty_coalition_next() {
        let f = parse("<<>>^{<=0.5} X p").unwrap();
        assert_eq!(
            f,
            StateFormula::StrategicProb {
                coalition: vec![],
                bound: bound(Relation::Le, 1, 2),
                path: Box::new(PathFormula::Next(Box::new(StateFormula::atom("p")))),
            }
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let f = parse("a | b & !c -> d -> e").unwrap();
        let expected = StateFormula::implies(
            StateFormula::or(
                StateFormula::atom("a"),
                StateFormula::and(
                    StateFormula::atom("b"),
                    StateFormula::not(StateFormula::atom("c")),
                ),
            ),
            StateFormula::implies(StateFormula::atom("d"), StateFormula::atom("e")),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn strategic_scopes_over_until() {
        let f = parse("<<A,B>>^{>1/3} p U q & r").unwrap();
        match f {
            StateFormula::And(lhs, rhs) => {
                assert_eq!(*rhs, StateFormula::atom("r"));
                assert!(
                    matches!(*lhs, StateFormula::StrategicProb { ref coalition, ref path, .. }
                    if coalition == &["A".to_string(), "B".to_string()]
                    && matches!(**path, PathFormula::Until(..)))
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nested_path_is_rejected() {
        for text in [
            "<<A>> X X p",
            "<<A>> (F p | G q)",
            "<<A>> p U q U r",
            "<<A>> !F p",
        ] {
            let err = parse(text).unwrap_err();
            assert!(
                matches!(err.kind, ParseErrorKind::Fragment(_)),
                "{text}: {err}"
            );
            assert!(err.to_string().contains("PATL fragment only"));
        }
    }

    #[test]
    fn bare_temporal_is_rejected() {
        let err = parse("F p").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Fragment(_)));
        let err = parse("<<A>> p").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Fragment(_)));
    }

    #[test]
    fn threshold_out_of_range() {
        let err = parse("<<A>>^{>=1.5} F p").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::ThresholdRange("1.5".into()));
        assert_eq!(err.pos, 9);
        let err = parse("<<A>>^{>= -0.1} F p").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::ThresholdRange(_)));
    }

    #[test]
    fn unknown_relation() {
        let err = parse("<<A>>^{=0.5} F p").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownRelation("=".into()));
        let err = parse("<<A>>^{!=0.5} F p").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownRelation("!=".into()));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse("(a & b").unwrap_err();
        assert_eq!(err.pos, 6);
        let err = parse("a & & b").unwrap_err();
        assert_eq!(err.pos, 4);
        let err = parse("<<A>>^{>=0.5 F p").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
        assert!(parse("a b").is_err());
        assert!(parse("").is_err());
    }
}

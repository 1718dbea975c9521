//! Pieces shared by the ATL and PATL checkers: state bitsets, the
//! objective/subjective mode switch, three-valued satisfaction sets and
//! checker errors.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::StateFormula;
use crate::model::{Game, ModelError};

/// Bitset over the states of one model.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    words: Vec<u64>,
    len: usize,
}

impl StateSet {
    pub fn empty(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Self::empty(len);
        for w in &mut s.words {
            *w = u64::MAX;
        }
        s.trim();
        s
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut s = Self::empty(len);
        for i in 0..len {
            if f(i) {
                s.insert(i);
            }
        }
        s
    }

    pub fn from_indices(len: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(len);
        for i in idx {
            s.insert(i);
        }
        s
    }

    fn trim(&mut self) {
        let extra = self.words.len() * 64 - self.len;
        if extra > 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= u64::MAX >> extra;
            }
        }
    }

    /// Size of the universe (number of model states).
    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "state {i} outside universe of {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        if i < self.len {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> Self {
        let mut s = Self {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        s.trim();
        s
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.contains(i))
    }

    pub fn to_vec(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.contains(i)).collect()
    }

    fn zip(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.len, other.len, "state sets over different models");
        Self {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| op(*a, *b))
                .collect(),
            len: self.len,
        }
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Where a strategy has to succeed: from the designated state only, or
/// from every state some coalition member cannot tell apart from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Objective,
    Subjective,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Objective => "objective",
            Mode::Subjective => "subjective",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "objective" | "o" => Ok(Mode::Objective),
            "subjective" | "s" => Ok(Mode::Subjective),
            other => Err(format!("unknown mode {other:?} (objective|subjective)")),
        }
    }
}

/// Satisfaction set with unresolved states: `lower ⊆ upper`, states in
/// `lower` satisfy the formula, states outside `upper` do not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sat3 {
    pub lower: StateSet,
    pub upper: StateSet,
}

impl Sat3 {
    pub fn exact(set: StateSet) -> Self {
        Self {
            upper: set.clone(),
            lower: set,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn not(&self) -> Self {
        Self {
            lower: self.upper.complement(),
            upper: self.lower.complement(),
        }
    }

    pub fn and(&self, other: &Self) -> Self {
        Self {
            lower: self.lower.intersection(&other.lower),
            upper: self.upper.intersection(&other.upper),
        }
    }

    pub fn or(&self, other: &Self) -> Self {
        Self {
            lower: self.lower.union(&other.lower),
            upper: self.upper.union(&other.upper),
        }
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("unknown agent {0} in coalition")]
    UnknownAgent(String),
    #[error("unknown atom {atom}; the model knows: {}", known.join(", "))]
    UnknownAtom { atom: String, known: Vec<String> },
    #[error("formula has a probability bound; use the PATL checker")]
    Probabilistic,
    #[error("non-normalized MDP row at state {state}")]
    NonNormalized { state: String },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Resolves coalition names to sorted agent indices.
pub(crate) fn resolve_coalition<T>(
    model: &Game<T>,
    names: &[String],
) -> Result<Vec<usize>, CheckError> {
    let mut out = names
        .iter()
        .map(|n| {
            model
                .agent_index(n)
                .ok_or_else(|| CheckError::UnknownAgent(n.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Rejects formulas naming atoms or agents the model does not declare.
pub(crate) fn check_vocabulary<T>(model: &Game<T>, f: &StateFormula) -> Result<(), CheckError> {
    let mut known: Vec<String> = model.props.clone();
    for s in &model.states {
        for l in &s.labels {
            if !known.contains(l) {
                known.push(l.clone());
            }
        }
    }
    known.sort();
    for atom in f.atoms() {
        if !known.contains(&atom) {
            return Err(CheckError::UnknownAtom { atom, known });
        }
    }
    for agent in f.agents() {
        if model.agent_index(&agent).is_none() {
            return Err(CheckError::UnknownAgent(agent));
        }
    }
    Ok(())
}

pub(crate) fn atom_set<T>(model: &Game<T>, atom: &str) -> StateSet {
    StateSet::from_fn(model.n_states(), |s| model.has_label(s, atom))
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::game::Game;

/// One decision point of a coalition strategy: an agent's observation class
/// together with the actions legal throughout that class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub agent: usize,
    pub class: usize,
    pub actions: Vec<usize>,
}

/// Deterministic memoryless uniform strategy of a coalition.
///
/// `choice[i]` holds `(class id, action)` pairs for `coalition[i]`, sorted
/// by class id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StrategyProfile {
    pub coalition: Vec<usize>,
    pub choice: Vec<Vec<(usize, usize)>>,
}

impl StrategyProfile {
    pub fn empty() -> Self {
        Self {
            coalition: Vec::new(),
            choice: Vec::new(),
        }
    }

    /// Action prescribed to coalition member at position `pos` in `state`.
    pub fn action<T>(&self, model: &Game<T>, pos: usize, state: usize) -> Option<usize> {
        let agent = self.coalition[pos];
        let class = model.class_of(state, agent);
        let row = &self.choice[pos];
        row.binary_search_by_key(&class, |(c, _)| *c)
            .ok()
            .map(|i| row[i].1)
    }

    /// Named rendering `{agent: {obs_class: action}}`.
    pub fn to_named<T>(&self, model: &Game<T>) -> NamedStrategy {
        let mut out = BTreeMap::new();
        for (pos, &agent) in self.coalition.iter().enumerate() {
            let entry: BTreeMap<String, String> = self.choice[pos]
                .iter()
                .map(|(c, act)| (c.to_string(), model.actions[*act].clone()))
                .collect();
            out.insert(model.agents[agent].clone(), entry);
        }
        NamedStrategy(out)
    }
}

/// `{agent: {obs_class: action}}` as written to result files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct NamedStrategy(pub BTreeMap<String, BTreeMap<String, String>>);

/// Enumerates every deterministic memoryless uniform strategy of a coalition.
///
/// Order is lexicographic over (agent order, observation-class order,
/// action order); the first slot is the most significant digit.
#[derive(Debug, Clone)]
pub struct StrategySpace {
    coalition: Vec<usize>,
    slots: Vec<Slot>,
}

impl StrategySpace {
    /// `coalition` is sorted and deduplicated. Legal actions of a class are
    /// read from its first member (uniformity makes the choice irrelevant).
    pub fn new<T>(model: &Game<T>, coalition: &[usize]) -> Self {
        let mut coalition = coalition.to_vec();
        coalition.sort_unstable();
        coalition.dedup();
        let mut slots = Vec::new();
        for &agent in &coalition {
            for (class, members) in model.classes(agent) {
                slots.push(Slot {
                    agent,
                    class,
                    actions: model.legal[members[0]][agent].clone(),
                });
            }
        }
        Self { coalition, slots }
    }

    pub fn coalition(&self) -> &[usize] {
        &self.coalition
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Number of strategies, `None` when it exceeds `u64`.
    pub fn count(&self) -> Option<u64> {
        self.slots
            .iter()
            .try_fold(1u64, |acc, s| acc.checked_mul(s.actions.len() as u64))
    }

    /// Strategy at a given lexicographic index.
    pub fn profile_at(&self, mut index: u64) -> Option<StrategyProfile> {
        let mut digits = vec![0usize; self.slots.len()];
        for (i, slot) in self.slots.iter().enumerate().rev() {
            let radix = slot.actions.len() as u64;
            if radix == 0 {
                return None;
            }
            digits[i] = (index % radix) as usize;
            index /= radix;
        }
        if index != 0 {
            return None;
        }
        Some(self.profile_from_digits(&digits))
    }

    fn profile_from_digits(&self, digits: &[usize]) -> StrategyProfile {
        let mut choice: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.coalition.len()];
        for (slot, &d) in self.slots.iter().zip(digits) {
            let pos = self
                .coalition
                .binary_search(&slot.agent)
                .expect("slot agent in coalition");
            choice[pos].push((slot.class, slot.actions[d]));
        }
        StrategyProfile {
            coalition: self.coalition.clone(),
            choice,
        }
    }

    /// Inverse of [`profile_at`](Self::profile_at); `None` when the profile
    /// does not belong to this space or the index overflows.
    pub fn index_of(&self, profile: &StrategyProfile) -> Option<u64> {
        if profile.coalition != self.coalition {
            return None;
        }
        let mut index: u64 = 0;
        for slot in &self.slots {
            let pos = self.coalition.binary_search(&slot.agent).ok()?;
            let row = &profile.choice[pos];
            let act = row[row.binary_search_by_key(&slot.class, |(c, _)| *c).ok()?].1;
            let digit = slot.actions.iter().position(|&a| a == act)? as u64;
            index = index
                .checked_mul(slot.actions.len() as u64)?
                .checked_add(digit)?;
        }
        Some(index)
    }

    pub fn iter(&self) -> StrategyIter<'_> {
        let done = self.slots.iter().any(|s| s.actions.is_empty());
        StrategyIter {
            space: self,
            digits: vec![0; self.slots.len()],
            done,
        }
    }
}

/// Odometer over a [`StrategySpace`]; works for spaces larger than `u64`.
pub struct StrategyIter<'a> {
    space: &'a StrategySpace,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for StrategyIter<'_> {
    type Item = StrategyProfile;

    fn next(&mut self) -> Option<StrategyProfile> {
        if self.done {
            return None;
        }
        let out = self.space.profile_from_digits(&self.digits);
        // advance least significant digit first
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < self.space.slots[i].actions.len() {
                break;
            }
            self.digits[i] = 0;
        }
        Some(out)
    }
}

/// Convenience wrapper yielding the ordered stream of strategies.
pub fn enumerate_strategies<T>(model: &Game<T>, coalition: &[usize]) -> Vec<StrategyProfile> {
    StrategySpace::new(model, coalition).iter().collect()
}

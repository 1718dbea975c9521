use std::collections::{BTreeMap, BTreeSet};

use super::distribution::Distribution;

/// Action index per agent, in agent order.
pub type JointAction = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateInfo {
    pub name: String,
    pub labels: BTreeSet<String>,
    /// Observation class id per agent (agent order). Two states are
    /// indistinguishable for agent `a` iff their `obs[a]` are equal.
    pub obs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move<T> {
    pub joint: JointAction,
    pub outcome: T,
}

/// A finite concurrent game structure with per-agent observation classes.
///
/// `T` is the transition payload: a [`Distribution`] for the stochastic
/// structure, a sorted successor list for its nondeterministic projection.
/// Moves are stored sparsely, one per legal joint action, sorted by joint
/// action.
#[derive(Debug, Clone, PartialEq)]
pub struct Game<T> {
    pub agents: Vec<String>,
    pub actions: Vec<String>,
    pub props: Vec<String>,
    pub states: Vec<StateInfo>,
    /// `legal[state][agent]`: sorted action ids.
    pub legal: Vec<Vec<Vec<usize>>>,
    /// `moves[state]`: sorted by joint action.
    pub moves: Vec<Vec<Move<T>>>,
    pub initial: usize,
    pub meta: BTreeMap<String, serde_json::Value>,
}

/// Stochastic concurrent game structure with imperfect information.
pub type Icgs = Game<Distribution>;

/// Projection of an [`Icgs`] with transitions replaced by successor sets.
pub type NondetCgs = Game<Vec<usize>>;

impl<T> Game<T> {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    pub fn has_label(&self, state: usize, prop: &str) -> bool {
        self.states[state].labels.contains(prop)
    }

    pub fn class_of(&self, state: usize, agent: usize) -> usize {
        self.states[state].obs[agent]
    }

    /// Observation classes of `agent` as `(class id, member states)`,
    /// ordered by class id.
    pub fn classes(&self, agent: usize) -> Vec<(usize, Vec<usize>)> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (s, info) in self.states.iter().enumerate() {
            map.entry(info.obs[agent]).or_default().push(s);
        }
        map.into_iter().collect()
    }

    pub fn is_identity_partition(&self, agent: usize) -> bool {
        let mut seen = BTreeSet::new();
        self.states.iter().all(|info| seen.insert(info.obs[agent]))
    }

    /// States indistinguishable from `state` for at least one agent of
    /// `coalition` (including `state` itself), sorted.
    pub fn indistinguishable(&self, state: usize, coalition: &[usize]) -> Vec<usize> {
        let mut out: BTreeSet<usize> = BTreeSet::new();
        out.insert(state);
        for &a in coalition {
            let cls = self.states[state].obs[a];
            out.extend((0..self.n_states()).filter(|&s| self.states[s].obs[a] == cls));
        }
        out.into_iter().collect()
    }

    pub fn find_move(&self, state: usize, joint: &[usize]) -> Option<&Move<T>> {
        let moves = &self.moves[state];
        moves
            .binary_search_by(|m| m.joint.as_slice().cmp(joint))
            .ok()
            .map(|i| &moves[i])
    }

    /// All legal joint actions at `state` in lexicographic order.
    pub fn legal_joint_actions(&self, state: usize) -> Vec<JointAction> {
        cartesian(&self.legal[state])
    }

    pub(crate) fn map_outcomes<U>(&self, mut f: impl FnMut(&T) -> U) -> Game<U> {
        Game {
            agents: self.agents.clone(),
            actions: self.actions.clone(),
            props: self.props.clone(),
            states: self.states.clone(),
            legal: self.legal.clone(),
            moves: self
                .moves
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|m| Move {
                            joint: m.joint.clone(),
                            outcome: f(&m.outcome),
                        })
                        .collect()
                })
                .collect(),
            initial: self.initial,
            meta: self.meta.clone(),
        }
    }

    pub fn joint_action_names(&self, joint: &[usize]) -> Vec<String> {
        joint.iter().map(|&a| self.actions[a].clone()).collect()
    }
}

impl Icgs {
    /// Successor states of a move, i.e. the support of its distribution.
    pub fn successors(&self, state: usize, move_idx: usize) -> impl Iterator<Item = usize> + '_ {
        self.moves[state][move_idx].outcome.support()
    }
}

/// Cartesian product of per-position choice lists, lexicographic.
pub fn cartesian(lists: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(lists.len())];
    for list in lists {
        let mut next = Vec::with_capacity(out.len() * list.len());
        for prefix in &out {
            for &x in list {
                let mut v = prefix.clone();
                v.push(x);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Builder that collects states and transitions by name.
///
/// Intended for tests and small hand-written models; the pipeline builds
/// [`Icgs`] values directly.
#[derive(Debug, Default)]
pub struct IcgsBuilder {
    agents: Vec<String>,
    actions: Vec<String>,
    states: Vec<StateInfo>,
    legal: BTreeMap<(usize, usize), Vec<usize>>,
    moves: BTreeMap<usize, Vec<Move<Distribution>>>,
    initial: usize,
}

impl IcgsBuilder {
    pub fn new<S: AsRef<str>>(agents: &[S], actions: &[S]) -> Self {
        Self {
            agents: agents.iter().map(|a| a.as_ref().to_string()).collect(),
            actions: actions.iter().map(|a| a.as_ref().to_string()).collect(),
            ..Self::default()
        }
    }

    /// Adds a state with identity observation (its own index) for every agent.
    pub fn state(&mut self, name: &str, labels: &[&str]) -> usize {
        let idx = self.states.len();
        self.states.push(StateInfo {
            name: name.to_string(),
            labels: labels.iter().map(|l| l.to_string()).collect(),
            obs: vec![idx; self.agents.len()],
        });
        idx
    }

    pub fn obs(&mut self, state: usize, agent: usize, class: usize) -> &mut Self {
        self.states[state].obs[agent] = class;
        self
    }

    pub fn legal(&mut self, state: usize, agent: usize, actions: &[usize]) -> &mut Self {
        let mut acts = actions.to_vec();
        acts.sort_unstable();
        acts.dedup();
        self.legal.insert((state, agent), acts);
        self
    }

    pub fn trans(&mut self, state: usize, joint: &[usize], dist: Distribution) -> &mut Self {
        let row = self.moves.entry(state).or_default();
        row.retain(|m| m.joint != joint);
        row.push(Move {
            joint: joint.to_vec(),
            outcome: dist,
        });
        self
    }

    pub fn initial(&mut self, state: usize) -> &mut Self {
        self.initial = state;
        self
    }

    /// Assembles the structure without validating it. Missing legal sets
    /// default to all actions that appear in the state's moves for that agent.
    pub fn build(&self) -> Icgs {
        let n = self.states.len();
        let mut legal = vec![vec![Vec::new(); self.agents.len()]; n];
        let mut moves: Vec<Vec<Move<Distribution>>> = vec![Vec::new(); n];
        for (s, row) in &self.moves {
            let mut row = row.clone();
            row.sort_by(|a, b| a.joint.cmp(&b.joint));
            moves[*s] = row;
        }
        for (s, legal_s) in legal.iter_mut().enumerate() {
            for (a, slot) in legal_s.iter_mut().enumerate() {
                *slot = match self.legal.get(&(s, a)) {
                    Some(acts) => acts.clone(),
                    None => {
                        let set: BTreeSet<usize> = moves[s].iter().map(|m| m.joint[a]).collect();
                        set.into_iter().collect()
                    }
                };
            }
        }
        let props: BTreeSet<String> = self
            .states
            .iter()
            .flat_map(|s| s.labels.iter().cloned())
            .collect();
        Game {
            agents: self.agents.clone(),
            actions: self.actions.clone(),
            props: props.into_iter().collect(),
            states: self.states.clone(),
            legal,
            moves,
            initial: self.initial,
            meta: BTreeMap::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_is_lexicographic() {
        let out = cartesian(&[vec![0, 1], vec![2, 3]]);
        assert_eq!(out, vec![vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3]]);
        assert_eq!(cartesian(&[]), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn classes_group_by_id() {
        let mut b = IcgsBuilder::new(&["a"], &["x"]);
        let s0 = b.state("s0", &[]);
        let s1 = b.state("s1", &[]);
        let s2 = b.state("s2", &[]);
        b.obs(s0, 0, 7).obs(s1, 0, 3).obs(s2, 0, 7);
        let g = b.build();
        assert_eq!(g.classes(0), vec![(3, vec![1]), (7, vec![0, 2])]);
        assert!(!g.is_identity_partition(0));
        assert_eq!(g.indistinguishable(0, &[0]), vec![0, 2]);
        assert_eq!(g.indistinguishable(0, &[]), vec![0]);
    }
}

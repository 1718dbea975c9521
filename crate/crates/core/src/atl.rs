//! Qualitative ATL on the nondeterministic projection of a game structure.
//!
//! Perfect information uses the classic controllable-predecessor fixpoints.
//! Imperfect information enumerates deterministic memoryless uniform
//! strategies and checks each one by universal path fixpoints on the
//! structure it leaves to the opponents.

use std::collections::BTreeMap;

use crate::clock::Deadline;
use crate::formula::{normalize, PathFormula, StateFormula};
use crate::model::{induced_choices, NondetCgs, StrategyProfile, StrategySpace};
use crate::semantics::{
    atom_set, check_vocabulary, resolve_coalition, CheckError, Mode, Sat3, StateSet,
};

/// Move indices per state, grouped by the coalition's part of the joint action.
pub(crate) type Groups = Vec<Vec<Vec<usize>>>;

pub(crate) fn coalition_groups<T>(model: &crate::model::Game<T>, coalition: &[usize]) -> Groups {
    model
        .moves
        .iter()
        .map(|row| {
            let mut by_key: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
            for (i, m) in row.iter().enumerate() {
                let key: Vec<usize> = coalition.iter().map(|&a| m.joint[a]).collect();
                by_key.entry(key).or_default().push(i);
            }
            by_key.into_values().collect()
        })
        .collect()
}

fn single_groups(choices: Vec<Vec<usize>>) -> Groups {
    choices.into_iter().map(|c| vec![c]).collect()
}

/// `s` is kept iff some group at `s` sends every move only into `target`.
fn controllable_pre(model: &NondetCgs, groups: &Groups, target: &StateSet) -> StateSet {
    StateSet::from_fn(model.n_states(), |s| {
        groups[s].iter().any(|group| {
            group.iter().all(|&m| {
                model.moves[s][m]
                    .outcome
                    .iter()
                    .all(|&t| target.contains(t))
            })
        })
    })
}

/// One-step controllable predecessor of `target` for `coalition`.
pub fn cpre(model: &NondetCgs, coalition: &[usize], target: &StateSet) -> StateSet {
    controllable_pre(model, &coalition_groups(model, coalition), target)
}

#[derive(Debug, Clone)]
pub(crate) enum PathSets {
    Next(StateSet),
    Until(StateSet, StateSet),
    Release(StateSet, StateSet),
}

fn path_fixpoint(model: &NondetCgs, groups: &Groups, path: &PathSets) -> StateSet {
    let n = model.n_states();
    match path {
        PathSets::Next(t) => controllable_pre(model, groups, t),
        PathSets::Until(t1, t2) => {
            let mut z = StateSet::empty(n);
            let mut rounds = 0;
            loop {
                let next = t2.union(&t1.intersection(&controllable_pre(model, groups, &z)));
                rounds += 1;
                if next == z {
                    break;
                }
                z = next;
            }
            debug_assert!(rounds <= n + 2);
            z
        }
        PathSets::Release(t1, t2) => {
            let mut z = StateSet::full(n);
            let mut rounds = 0;
            loop {
                let next = t2.intersection(&t1.union(&controllable_pre(model, groups, &z)));
                rounds += 1;
                if next == z {
                    break;
                }
                z = next;
            }
            debug_assert!(rounds <= n + 2);
            z
        }
    }
}

/// Memoryless strategy that wins from every state of `win` under perfect
/// information: attractor ranks for until, staying inside for release.
fn perfect_witness(
    model: &NondetCgs,
    coalition: &[usize],
    groups: &Groups,
    path: &PathSets,
    win: &StateSet,
) -> StrategyProfile {
    let n = model.n_states();
    let inside = |s: usize, g: &[usize], set: &StateSet| {
        g.iter()
            .all(|&m| model.moves[s][m].outcome.iter().all(|&t| set.contains(t)))
    };
    let mut pick = vec![0usize; n];
    match path {
        PathSets::Next(t) => {
            for s in win.iter() {
                pick[s] = groups[s].iter().position(|g| inside(s, g, t)).unwrap_or(0);
            }
        }
        PathSets::Until(t1, t2) => {
            let mut reached = t2.clone();
            loop {
                let mut layer = Vec::new();
                for s in win.difference(&reached).iter() {
                    if !t1.contains(s) {
                        continue;
                    }
                    if let Some(g) = groups[s].iter().position(|g| inside(s, g, &reached)) {
                        layer.push((s, g));
                    }
                }
                if layer.is_empty() {
                    break;
                }
                for (s, g) in layer {
                    pick[s] = g;
                    reached.insert(s);
                }
            }
        }
        PathSets::Release(t1, _) => {
            for s in win.iter() {
                if !t1.contains(s) {
                    pick[s] = groups[s]
                        .iter()
                        .position(|g| inside(s, g, win))
                        .unwrap_or(0);
                }
            }
        }
    }
    let mut choice: Vec<Vec<(usize, usize)>> = vec![Vec::new(); coalition.len()];
    for s in 0..n {
        let joint = match groups[s].get(pick[s]).and_then(|g| g.first()) {
            Some(&m) => &model.moves[s][m].joint,
            None => continue,
        };
        for (pos, &agent) in coalition.iter().enumerate() {
            choice[pos].push((model.class_of(s, agent), joint[agent]));
        }
    }
    for row in &mut choice {
        row.sort_unstable();
        row.dedup_by_key(|(c, _)| *c);
    }
    StrategyProfile {
        coalition: coalition.to_vec(),
        choice,
    }
}

/// Satisfaction set of a plain (non-probabilistic) formula under perfect
/// information.
pub fn check_atl_perfect(model: &NondetCgs, f: &StateFormula) -> Result<StateSet, CheckError> {
    if f.has_probabilistic() {
        return Err(CheckError::Probabilistic);
    }
    check_vocabulary(model, f)?;
    let mut eval = AtlEval::new(model, None, AtlConfig::default());
    Ok(eval.eval(&normalize(f))?.lower)
}

#[derive(Debug, Clone, Default)]
pub struct AtlConfig {
    /// Stop after examining this many strategies per strategic operator.
    pub max_strategies: Option<u64>,
    pub deadline: Option<Deadline>,
}

#[derive(Debug, Clone)]
pub struct AtlOutcome {
    /// States known to satisfy the formula.
    pub sat: StateSet,
    /// States not excluded; equals `sat` when the search was complete.
    pub possible: StateSet,
    /// Lowest-index witness per state for a top-level strategic operator.
    pub witnesses: Vec<Option<(Option<u64>, StrategyProfile)>>,
    pub strategies_examined: u64,
    pub budget_exhausted: bool,
    pub timed_out: bool,
}

impl AtlOutcome {
    pub fn complete(&self) -> bool {
        self.sat == self.possible
    }
}

/// Per-state truth under imperfect information with exhaustive search.
pub fn check_atl_ii(
    model: &NondetCgs,
    f: &StateFormula,
    mode: Mode,
) -> Result<Vec<bool>, CheckError> {
    Ok(check_atl_ii_with(model, f, mode, &AtlConfig::default())?
        .sat
        .to_vec())
}

/// As [`check_atl_ii`], with search limits and witness details.
pub fn check_atl_ii_with(
    model: &NondetCgs,
    f: &StateFormula,
    mode: Mode,
    cfg: &AtlConfig,
) -> Result<AtlOutcome, CheckError> {
    if f.has_probabilistic() {
        return Err(CheckError::Probabilistic);
    }
    check_vocabulary(model, f)?;
    let mut eval = AtlEval::new(model, Some(mode), cfg.clone());
    let sat = eval.eval(&normalize(f))?;
    Ok(AtlOutcome {
        sat: sat.lower,
        possible: sat.upper,
        witnesses: eval
            .top_witnesses
            .unwrap_or_else(|| vec![None; model.n_states()]),
        strategies_examined: eval.examined,
        budget_exhausted: eval.budget_exhausted,
        timed_out: eval.timed_out,
    })
}

pub(crate) struct AtlEval<'a> {
    model: &'a NondetCgs,
    /// `None` = perfect-information fixpoints.
    mode: Option<Mode>,
    cfg: AtlConfig,
    depth: usize,
    pub(crate) top_witnesses: Option<Vec<Option<(Option<u64>, StrategyProfile)>>>,
    pub(crate) examined: u64,
    pub(crate) budget_exhausted: bool,
    pub(crate) timed_out: bool,
}

impl<'a> AtlEval<'a> {
    pub(crate) fn new(model: &'a NondetCgs, mode: Option<Mode>, cfg: AtlConfig) -> Self {
        Self {
            model,
            mode,
            cfg,
            depth: 0,
            top_witnesses: None,
            examined: 0,
            budget_exhausted: false,
            timed_out: false,
        }
    }

    /// Evaluates a normalized formula bottom-up.
    pub(crate) fn eval(&mut self, f: &StateFormula) -> Result<Sat3, CheckError> {
        let n = self.model.n_states();
        Ok(match f {
            StateFormula::True => Sat3::exact(StateSet::full(n)),
            StateFormula::False => Sat3::exact(StateSet::empty(n)),
            StateFormula::Atom(p) => Sat3::exact(atom_set(self.model, p)),
            StateFormula::Not(g) => self.nested(g)?.not(),
            StateFormula::And(a, b) => self.nested(a)?.and(&self.nested(b)?),
            StateFormula::Or(a, b) => self.nested(a)?.or(&self.nested(b)?),
            StateFormula::Implies(a, b) => self.nested(a)?.not().or(&self.nested(b)?),
            StateFormula::StrategicProb { .. } => return Err(CheckError::Probabilistic),
            StateFormula::StrategicPlain { coalition, path } => {
                let coalition = resolve_coalition(self.model, coalition)?;
                let top = self.depth == 0;
                self.depth += 1;
                let sets = self.path_sets(path);
                self.depth -= 1;
                let (lower, upper) = sets?;
                self.strategic(&coalition, &lower, &upper, top)?
            }
        })
    }

    fn nested(&mut self, f: &StateFormula) -> Result<Sat3, CheckError> {
        self.depth += 1;
        let out = self.eval(f);
        self.depth -= 1;
        out
    }

    fn path_sets(&mut self, path: &PathFormula) -> Result<(PathSets, PathSets), CheckError> {
        Ok(match path {
            PathFormula::Next(f) => {
                let s = self.eval(f)?;
                (PathSets::Next(s.lower), PathSets::Next(s.upper))
            }
            PathFormula::Until(a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                (
                    PathSets::Until(a.lower, b.lower),
                    PathSets::Until(a.upper, b.upper),
                )
            }
            PathFormula::Release(a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                (
                    PathSets::Release(a.lower, b.lower),
                    PathSets::Release(a.upper, b.upper),
                )
            }
            PathFormula::Finally(f) => {
                let s = self.eval(f)?;
                let n = self.model.n_states();
                (
                    PathSets::Until(StateSet::full(n), s.lower),
                    PathSets::Until(StateSet::full(n), s.upper),
                )
            }
            PathFormula::Globally(f) => {
                let s = self.eval(f)?;
                let n = self.model.n_states();
                (
                    PathSets::Release(StateSet::empty(n), s.lower),
                    PathSets::Release(StateSet::empty(n), s.upper),
                )
            }
        })
    }

    pub(crate) fn strategic(
        &mut self,
        coalition: &[usize],
        lower: &PathSets,
        upper: &PathSets,
        top: bool,
    ) -> Result<Sat3, CheckError> {
        let model = self.model;
        let n = model.n_states();
        let mode = match self.mode {
            None => {
                let groups = coalition_groups(model, coalition);
                let lo = path_fixpoint(model, &groups, lower);
                let hi = path_fixpoint(model, &groups, upper);
                if top {
                    let profile = perfect_witness(model, coalition, &groups, lower, &lo);
                    let index = StrategySpace::new(model, coalition).index_of(&profile);
                    self.top_witnesses = Some(
                        (0..n)
                            .map(|s| lo.contains(s).then(|| (index, profile.clone())))
                            .collect(),
                    );
                }
                return Ok(Sat3 {
                    lower: lo,
                    upper: hi,
                });
            }
            Some(m) => m,
        };
        let space = StrategySpace::new(model, coalition);
        let check_sets: Vec<Vec<usize>> = (0..n)
            .map(|s| match mode {
                Mode::Objective => vec![s],
                Mode::Subjective => model.indistinguishable(s, coalition),
            })
            .collect();
        let mut sat = StateSet::empty(n);
        let mut possible = StateSet::empty(n);
        let mut witnesses: Vec<Option<(Option<u64>, StrategyProfile)>> = vec![None; n];
        let mut complete = true;
        for (index, strategy) in space.iter().enumerate() {
            if let Some(limit) = self.cfg.max_strategies {
                if index as u64 >= limit {
                    complete = false;
                    self.budget_exhausted = true;
                    break;
                }
            }
            if self.cfg.deadline.is_some_and(|d| d.expired()) {
                complete = false;
                self.timed_out = true;
                break;
            }
            self.examined += 1;
            let groups = single_groups(induced_choices(model, &strategy)?);
            let win_lo = path_fixpoint(model, &groups, lower);
            let win_hi = path_fixpoint(model, &groups, upper);
            for s in 0..n {
                if sat.contains(s) {
                    continue;
                }
                if check_sets[s].iter().all(|&t| win_lo.contains(t)) {
                    sat.insert(s);
                    witnesses[s] = Some((Some(index as u64), strategy.clone()));
                } else if check_sets[s].iter().all(|&t| win_hi.contains(t)) {
                    possible.insert(s);
                }
            }
            if sat.count() == n {
                break;
            }
        }
        let upper_set = if complete {
            sat.union(&possible)
        } else {
            StateSet::full(n)
        };
        if top {
            self.top_witnesses = Some(witnesses);
        }
        Ok(Sat3 {
            lower: sat,
            upper: upper_set,
        })
    }
}

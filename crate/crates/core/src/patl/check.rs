use std::fmt;

use serde::{Deserialize, Serialize};

use super::solver::{
    game_values, greedy_groups, solve, Arena, Direction, FloatRows, Objective, SolverConfig,
};
use crate::atl::{AtlConfig, AtlEval, PathSets};
use crate::clock::{Deadline, Stopwatch};
use crate::formula::{normalize, PathFormula, ProbabilityBound, StateFormula};
use crate::model::{
    induced_choices, project_unchecked, validate, Icgs, ModelError, NamedStrategy, NondetCgs,
    StrategyProfile, StrategySpace,
};
use crate::semantics::{
    atom_set, check_vocabulary, resolve_coalition, CheckError, Mode, Sat3, StateSet,
};

/// Values this close to the threshold count as equal when computed exactly.
const EXACT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckConfig {
    /// Value-iteration residual tolerance.
    pub tol: f64,
    /// Approximate values within this distance of the threshold are inconclusive.
    pub boundary_guard: f64,
    /// Cap on strategies examined per strategic operator.
    pub max_strategies: Option<u64>,
    pub timeout_s: Option<f64>,
    /// Probability-1 precomputation for MDP solves.
    pub prob1: bool,
    /// Solve the perfect-information game first when every coalition
    /// partition is the identity.
    pub game_shortcut: bool,
    /// Evaluate candidate strategies on the rayon pool.
    pub parallel: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            boundary_guard: 1e-6,
            max_strategies: None,
            timeout_s: None,
            prob1: true,
            game_shortcut: true,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "true")]
    True,
    #[serde(rename = "false")]
    False,
    #[serde(rename = "boundary-inconclusive")]
    Inconclusive,
    #[serde(rename = "budget-exhausted")]
    BudgetExhausted,
    #[serde(rename = "timeout")]
    Timeout,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::True => "TRUE",
            Verdict::False => "FALSE",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::BudgetExhausted => "BUDGET-EXHAUSTED",
            Verdict::Timeout => "TIMEOUT",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationResult {
    pub formula: String,
    pub model: String,
    pub mode: Mode,
    pub truth: Verdict,
    /// Witness value when TRUE, otherwise the best value among examined
    /// strategies. Absent for formulas without a top-level probability bound.
    pub achieved: Option<f64>,
    pub witness: Option<NamedStrategy>,
    pub witness_index: Option<u64>,
    pub strategies_examined: u64,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub witness_profile: Option<StrategyProfile>,
}

/// Checks `f` at the model's initial state.
pub fn check_patl(
    model: &Icgs,
    f: &StateFormula,
    mode: Mode,
    cfg: &CheckConfig,
) -> Result<VerificationResult, CheckError> {
    let clock = Stopwatch::start();
    let deadline = cfg.timeout_s.map(Deadline::after_secs);
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(CheckError::BadTolerance(cfg.tol));
    }
    let report = validate(model);
    if !report.is_valid() {
        return Err(ModelError::Invalid(report).into());
    }
    check_vocabulary(model, f)?;
    let g = normalize(f);
    let mut ev = PatlEval::new(model, mode, cfg, deadline);
    let init = model.initial;
    let mut result = VerificationResult {
        formula: f.to_string(),
        model: model
            .meta
            .get("id")
            .and_then(|v| v.as_str())
            .unwrap_or("model")
            .to_string(),
        mode,
        truth: Verdict::False,
        achieved: None,
        witness: None,
        witness_index: None,
        strategies_examined: 0,
        wall_time_s: 0.0,
        witness_profile: None,
    };
    match &g {
        StateFormula::StrategicProb {
            coalition,
            bound,
            path,
        } => {
            let coalition = resolve_coalition(model, coalition)?;
            let (lo, hi) = ev.path_objectives(path)?;
            let op = ev.prob_operator(&coalition, bound, &lo, &hi, Some(init))?;
            result.achieved = op.achieved;
            result.truth = if op.sat.contains(init) {
                Verdict::True
            } else {
                ev.undecided_verdict(op.possible.contains(init), op.complete)
            };
            if let Some((index, profile)) = op.witness {
                result.witness = Some(profile.to_named(model));
                result.witness_index = index;
                result.witness_profile = Some(profile);
            }
        }
        StateFormula::StrategicPlain { coalition, path } => {
            let coalition = resolve_coalition(model, coalition)?;
            let (lo, hi) = ev.path_plain(path)?;
            let (sat, witnesses) = ev.plain_operator(&coalition, &lo, &hi, true)?;
            result.truth = ev.verdict_at(&sat, init);
            if let Some(Some((index, profile))) = witnesses.map(|mut w| w.swap_remove(init)) {
                result.witness = Some(profile.to_named(model));
                result.witness_index = index;
                result.witness_profile = Some(profile);
            }
        }
        other => {
            let sat = ev.eval(other)?;
            result.truth = ev.verdict_at(&sat, init);
        }
    }
    debug_assert!(
        result.truth != Verdict::True || result.witness.is_some() || !g.has_strategic_top()
    );
    result.strategies_examined = ev.examined;
    result.wall_time_s = clock.elapsed_secs();
    Ok(result)
}

/// `P^{bound} path`: PATL with the empty coalition.
pub fn check_pctl(
    model: &Icgs,
    bound: &ProbabilityBound,
    path: &PathFormula,
    cfg: &CheckConfig,
) -> Result<VerificationResult, CheckError> {
    let f = StateFormula::StrategicProb {
        coalition: Vec::new(),
        bound: bound.clone(),
        path: Box::new(path.clone()),
    };
    check_patl(model, &f, Mode::Objective, cfg)
}

impl StateFormula {
    fn has_strategic_top(&self) -> bool {
        matches!(
            self,
            StateFormula::StrategicProb { .. } | StateFormula::StrategicPlain { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Judgement {
    True,
    False,
    Boundary,
}

fn judge(value: f64, exact: bool, bound: &ProbabilityBound, guard: f64) -> Judgement {
    let d = bound.threshold_f64();
    let close = if exact { EXACT_EPS } else { guard };
    if (value - d).abs() <= close {
        if !exact {
            return Judgement::Boundary;
        }
        return if bound.relation.is_strict() {
            Judgement::False
        } else {
            Judgement::True
        };
    }
    if bound.relation.holds(value, d) {
        Judgement::True
    } else {
        Judgement::False
    }
}

/// Per-strategy summary at the states of interest.
struct Candidate {
    /// Worst value over the check set, with sets favouring falsity.
    pess: Vec<(f64, bool)>,
    /// Same with sets favouring truth.
    opt: Vec<(f64, bool)>,
}

pub(crate) struct ProbOutcome {
    pub sat: StateSet,
    pub possible: StateSet,
    pub complete: bool,
    pub witness: Option<(Option<u64>, StrategyProfile)>,
    pub achieved: Option<f64>,
}

struct PatlEval<'a> {
    model: &'a Icgs,
    proj: NondetCgs,
    rows: FloatRows,
    mode: Mode,
    cfg: &'a CheckConfig,
    solver: SolverConfig,
    deadline: Option<Deadline>,
    examined: u64,
    budget_exhausted: bool,
    timed_out: bool,
}

impl<'a> PatlEval<'a> {
    fn new(model: &'a Icgs, mode: Mode, cfg: &'a CheckConfig, deadline: Option<Deadline>) -> Self {
        Self {
            model,
            proj: project_unchecked(model),
            rows: FloatRows::of(model),
            mode,
            cfg,
            solver: SolverConfig {
                tol: cfg.tol,
                prob1: cfg.prob1,
            },
            deadline,
            examined: 0,
            budget_exhausted: false,
            timed_out: false,
        }
    }

    fn n(&self) -> usize {
        self.model.n_states()
    }

    fn undecided_verdict(&self, possible: bool, complete: bool) -> Verdict {
        if !complete {
            if self.timed_out {
                Verdict::Timeout
            } else {
                Verdict::BudgetExhausted
            }
        } else if possible {
            Verdict::Inconclusive
        } else {
            Verdict::False
        }
    }

    fn verdict_at(&self, sat: &Sat3, s: usize) -> Verdict {
        if sat.lower.contains(s) {
            Verdict::True
        } else if !sat.upper.contains(s) {
            Verdict::False
        } else if self.timed_out {
            Verdict::Timeout
        } else if self.budget_exhausted {
            Verdict::BudgetExhausted
        } else {
            Verdict::Inconclusive
        }
    }

    fn eval(&mut self, f: &StateFormula) -> Result<Sat3, CheckError> {
        let n = self.n();
        Ok(match f {
            StateFormula::True => Sat3::exact(StateSet::full(n)),
            StateFormula::False => Sat3::exact(StateSet::empty(n)),
            StateFormula::Atom(p) => Sat3::exact(atom_set(self.model, p)),
            StateFormula::Not(g) => self.eval(g)?.not(),
            StateFormula::And(a, b) => self.eval(a)?.and(&self.eval(b)?),
            StateFormula::Or(a, b) => self.eval(a)?.or(&self.eval(b)?),
            StateFormula::Implies(a, b) => self.eval(a)?.not().or(&self.eval(b)?),
            StateFormula::StrategicProb {
                coalition,
                bound,
                path,
            } => {
                let coalition = resolve_coalition(self.model, coalition)?;
                let (lo, hi) = self.path_objectives(path)?;
                let op = self.prob_operator(&coalition, bound, &lo, &hi, None)?;
                let upper = if op.complete {
                    op.sat.union(&op.possible)
                } else {
                    StateSet::full(n)
                };
                Sat3 {
                    lower: op.sat,
                    upper,
                }
            }
            StateFormula::StrategicPlain { coalition, path } => {
                let coalition = resolve_coalition(self.model, coalition)?;
                let (lo, hi) = self.path_plain(path)?;
                self.plain_operator(&coalition, &lo, &hi, false)?.0
            }
        })
    }

    fn operands(&mut self, path: &PathFormula) -> Result<(Sat3, Sat3, u8), CheckError> {
        let n = self.n();
        Ok(match path {
            PathFormula::Next(f) => (Sat3::exact(StateSet::empty(n)), self.eval(f)?, 0),
            PathFormula::Until(a, b) => (self.eval(a)?, self.eval(b)?, 1),
            PathFormula::Release(a, b) => (self.eval(a)?, self.eval(b)?, 2),
            PathFormula::Finally(f) => (Sat3::exact(StateSet::full(n)), self.eval(f)?, 1),
            PathFormula::Globally(f) => (Sat3::exact(StateSet::empty(n)), self.eval(f)?, 2),
        })
    }

    /// Objectives built from the lower and the upper operand sets.
    fn path_objectives(
        &mut self,
        path: &PathFormula,
    ) -> Result<(Objective, Objective), CheckError> {
        let (a, b, kind) = self.operands(path)?;
        let build = |x: StateSet, y: StateSet| match kind {
            0 => Objective::Next(y),
            1 => Objective::Until(x, y),
            _ => Objective::Release(x, y),
        };
        Ok((build(a.lower, b.lower), build(a.upper, b.upper)))
    }

    fn path_plain(&mut self, path: &PathFormula) -> Result<(PathSets, PathSets), CheckError> {
        let (a, b, kind) = self.operands(path)?;
        let build = |x: StateSet, y: StateSet| match kind {
            0 => PathSets::Next(y),
            1 => PathSets::Until(x, y),
            _ => PathSets::Release(x, y),
        };
        Ok((build(a.lower, b.lower), build(a.upper, b.upper)))
    }

    #[allow(clippy::type_complexity)]
    fn plain_operator(
        &mut self,
        coalition: &[usize],
        lo: &PathSets,
        hi: &PathSets,
        top: bool,
    ) -> Result<(Sat3, Option<Vec<Option<(Option<u64>, StrategyProfile)>>>), CheckError> {
        let perfect = coalition
            .iter()
            .all(|&a| self.model.is_identity_partition(a));
        let atl_cfg = AtlConfig {
            max_strategies: self.cfg.max_strategies,
            deadline: self.deadline,
        };
        let mut atl = AtlEval::new(
            &self.proj,
            if perfect { None } else { Some(self.mode) },
            atl_cfg,
        );
        let sat = atl.strategic(coalition, lo, hi, top)?;
        self.examined += atl.examined;
        self.budget_exhausted |= atl.budget_exhausted;
        self.timed_out |= atl.timed_out;
        Ok((sat, atl.top_witnesses))
    }

    fn check_set(&self, s: usize, coalition: &[usize]) -> Vec<usize> {
        match self.mode {
            Mode::Objective => vec![s],
            Mode::Subjective => self.model.indistinguishable(s, coalition),
        }
    }

    /// Values of one strategy: the opponents' best response on the induced
    /// MDP, reduced over each target state's check set.
    fn evaluate(
        &self,
        strategy: &StrategyProfile,
        bound: &ProbabilityBound,
        lo: &Objective,
        hi: &Objective,
        targets: &[(usize, Vec<usize>)],
    ) -> Result<Candidate, CheckError> {
        let choices = induced_choices(self.model, strategy)?;
        let groups: Vec<Vec<Vec<usize>>> = choices.into_iter().map(|c| vec![c]).collect();
        let lower_bound = bound.relation.is_lower_bound();
        let dir = if lower_bound {
            Direction::Min
        } else {
            Direction::Max
        };
        let arena = Arena {
            rows: &self.rows,
            groups: &groups,
            outer: dir,
            inner: dir,
        };
        let (pess_obj, opt_obj) = if lower_bound { (lo, hi) } else { (hi, lo) };
        let pess = solve(&arena, pess_obj, self.solver);
        let opt = if lo == hi {
            pess.clone()
        } else {
            solve(&arena, opt_obj, self.solver)
        };
        let reduce = |pv: &super::ProbVector, set: &[usize]| {
            let mut acc: Option<(f64, bool)> = None;
            for &t in set {
                let v = (pv.values[t], pv.exact[t]);
                acc = Some(match acc {
                    None => v,
                    Some(a) => {
                        let worse = if lower_bound { v.0 < a.0 } else { v.0 > a.0 };
                        if worse {
                            v
                        } else {
                            a
                        }
                    }
                });
            }
            acc.unwrap_or((0.0, true))
        };
        Ok(Candidate {
            pess: targets.iter().map(|(_, set)| reduce(&pess, set)).collect(),
            opt: targets.iter().map(|(_, set)| reduce(&opt, set)).collect(),
        })
    }

    fn prob_operator(
        &mut self,
        coalition: &[usize],
        bound: &ProbabilityBound,
        lo: &Objective,
        hi: &Objective,
        only: Option<usize>,
    ) -> Result<ProbOutcome, CheckError> {
        let n = self.n();
        let states: Vec<usize> = match only {
            Some(s) => vec![s],
            None => (0..n).collect(),
        };
        let targets: Vec<(usize, Vec<usize>)> = states
            .iter()
            .map(|&s| (s, self.check_set(s, coalition)))
            .collect();
        let mut state = SearchState::new(n, targets.len(), bound.relation.is_lower_bound());

        let perfect = coalition
            .iter()
            .all(|&a| self.model.is_identity_partition(a));
        if self.cfg.game_shortcut && perfect && lo == hi {
            if let Some(out) = self.shortcut(coalition, bound, lo, &targets, &mut state)? {
                return Ok(out);
            }
        }
        self.enumerate(
            coalition,
            bound,
            lo,
            hi,
            &targets,
            &mut state,
            only.is_some(),
        )
    }

    /// Solves the coalition-first game, verifies its greedy strategy on the
    /// induced MDP and settles every target the game value decides.
    fn shortcut(
        &mut self,
        coalition: &[usize],
        bound: &ProbabilityBound,
        obj: &Objective,
        targets: &[(usize, Vec<usize>)],
        state: &mut SearchState,
    ) -> Result<Option<ProbOutcome>, CheckError> {
        let cdir = if bound.relation.is_lower_bound() {
            Direction::Max
        } else {
            Direction::Min
        };
        let (game, groups) = game_values(self.model, &self.rows, coalition, obj, cdir, self.solver);
        let picks = greedy_groups(&self.rows, &groups, obj, cdir, &game.values);
        let mut choice: Vec<Vec<(usize, usize)>> = vec![Vec::new(); coalition.len()];
        for s in 0..self.n() {
            let m = groups[s][picks[s]][0];
            let joint = &self.model.moves[s][m].joint;
            for (pos, &agent) in coalition.iter().enumerate() {
                choice[pos].push((self.model.class_of(s, agent), joint[agent]));
            }
        }
        for row in &mut choice {
            row.sort_unstable();
        }
        let profile = StrategyProfile {
            coalition: coalition.to_vec(),
            choice,
        };
        let index = StrategySpace::new(self.model, coalition).index_of(&profile);
        let cand = self.evaluate(&profile, bound, obj, obj, targets)?;
        self.examined += 1;
        let guard = self.cfg.boundary_guard;
        let mut undecided = false;
        for (i, &(s, _)) in targets.iter().enumerate() {
            let (v, exact) = cand.pess[i];
            state.note(i, v);
            if judge(v, exact, bound, guard) == Judgement::True {
                state.sat.insert(s);
                state.witness[i] = Some((index, profile.clone(), v));
                continue;
            }
            // no strategy beats the game value
            let (gv, gexact) = (game.values[s], game.exact[s]);
            let reaches = (gv - v).abs() <= 1e-9;
            match judge(gv, gexact, bound, guard) {
                Judgement::False => {
                    if !reaches {
                        state.note(i, gv);
                    }
                }
                Judgement::Boundary if reaches => state.possible.insert(s),
                _ => undecided = true,
            }
        }
        if undecided {
            return Ok(None);
        }
        Ok(Some(state.finish(targets, true)))
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate(
        &mut self,
        coalition: &[usize],
        bound: &ProbabilityBound,
        lo: &Objective,
        hi: &Objective,
        targets: &[(usize, Vec<usize>)],
        state: &mut SearchState,
        early_exit: bool,
    ) -> Result<ProbOutcome, CheckError> {
        let space = StrategySpace::new(self.model, coalition);
        let guard = self.cfg.boundary_guard;
        let mut complete = true;
        let mut seen: u64 = 0;
        let absorb =
            |state: &mut SearchState, index: u64, profile: &StrategyProfile, cand: Candidate| {
                for (i, &(s, _)) in targets.iter().enumerate() {
                    if state.sat.contains(s) {
                        continue;
                    }
                    let (pv, pe) = cand.pess[i];
                    let (ov, oe) = cand.opt[i];
                    state.note(i, pv);
                    match judge(pv, pe, bound, guard) {
                        Judgement::True => {
                            state.sat.insert(s);
                            state.witness[i] = Some((Some(index), profile.clone(), pv));
                        }
                        Judgement::Boundary => state.possible.insert(s),
                        Judgement::False => {
                            if judge(ov, oe, bound, guard) != Judgement::False {
                                state.possible.insert(s);
                            }
                        }
                    }
                }
                targets.iter().all(|(s, _)| state.sat.contains(*s))
            };

        let batch = self.batch_size();
        let mut iter = space.iter();
        'outer: loop {
            let mut chunk = Vec::with_capacity(batch);
            while chunk.len() < batch {
                if self
                    .cfg
                    .max_strategies
                    .is_some_and(|limit| seen + chunk.len() as u64 >= limit)
                {
                    break;
                }
                match iter.next() {
                    Some(p) => chunk.push(p),
                    None => break,
                }
            }
            if chunk.is_empty() {
                if self.cfg.max_strategies.is_some_and(|limit| seen >= limit)
                    && iter.next().is_some()
                {
                    complete = false;
                    self.budget_exhausted = true;
                }
                break;
            }
            if self.deadline.is_some_and(|d| d.expired()) {
                complete = false;
                self.timed_out = true;
                break;
            }
            let results = self.evaluate_chunk(&chunk, bound, lo, hi, targets);
            for (profile, cand) in chunk.iter().zip(results) {
                let cand = cand?;
                seen += 1;
                self.examined += 1;
                let done = absorb(state, seen - 1, profile, cand);
                if done && (early_exit || targets.len() == self.n()) {
                    break 'outer;
                }
            }
        }
        Ok(state.finish(targets, complete))
    }

    fn batch_size(&self) -> usize {
        #[cfg(feature = "parallel")]
        if self.cfg.parallel {
            return 16 * rayon::current_num_threads().max(1);
        }
        1
    }

    fn evaluate_chunk(
        &self,
        chunk: &[StrategyProfile],
        bound: &ProbabilityBound,
        lo: &Objective,
        hi: &Objective,
        targets: &[(usize, Vec<usize>)],
    ) -> Vec<Result<Candidate, CheckError>> {
        #[cfg(feature = "parallel")]
        if chunk.len() > 1 {
            use rayon::prelude::*;
            return chunk
                .par_iter()
                .map(|p| self.evaluate(p, bound, lo, hi, targets))
                .collect();
        }
        chunk
            .iter()
            .map(|p| self.evaluate(p, bound, lo, hi, targets))
            .collect()
    }
}

struct SearchState {
    sat: StateSet,
    possible: StateSet,
    lower_bound: bool,
    best: Vec<Option<f64>>,
    witness: Vec<Option<(Option<u64>, StrategyProfile, f64)>>,
}

impl SearchState {
    fn new(n: usize, k: usize, lower_bound: bool) -> Self {
        Self {
            sat: StateSet::empty(n),
            possible: StateSet::empty(n),
            lower_bound,
            best: vec![None; k],
            witness: vec![None; k],
        }
    }

    fn note(&mut self, i: usize, v: f64) {
        let better = match self.best[i] {
            None => true,
            Some(b) => {
                if self.lower_bound {
                    v > b
                } else {
                    v < b
                }
            }
        };
        if better {
            self.best[i] = Some(v);
        }
    }

    fn finish(&mut self, targets: &[(usize, Vec<usize>)], complete: bool) -> ProbOutcome {
        let possible = self.possible.difference(&self.sat);
        let (witness, achieved) = if targets.len() == 1 {
            match self.witness[0].take() {
                Some((idx, p, v)) => (Some((idx, p)), Some(v)),
                None => (None, self.best[0]),
            }
        } else {
            (None, None)
        };
        ProbOutcome {
            sat: self.sat.clone(),
            possible,
            complete,
            witness,
            achieved,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::model::{Distribution, IcgsBuilder};
    use num_rational::BigRational;

    fn r(n: i64, d: i64) -> crate::model::Prob {
        BigRational::new(n.into(), d.into())
    }

    fn check(m: &Icgs, f: &str) -> VerificationResult {
        check_patl(
            m,
            &parse(f).unwrap(),
            Mode::Objective,
            &CheckConfig::default(),
        )
        .unwrap()
    }

    fn branch_chain() -> Icgs {
        let mut b = IcgsBuilder::new(&["env"], &["nop"]);
        let s0 = b.state("s0", &[]);
        let g = b.state("g", &["g"]);
        let d = b.state("d", &[]);
        b.trans(
            s0,
            &[0],
            Distribution::from_pairs([(g, r(1, 2)), (d, r(1, 2))]),
        );
        b.trans(g, &[0], Distribution::dirac(g));
        b.trans(d, &[0], Distribution::dirac(d));
        b.build()
    }

    /// Agent `a` owns the choice at s0: g with 3/10 or with 8/10.
    fn two_choice() -> Icgs {
        let mut b = IcgsBuilder::new(&["a"], &["lo", "hi"]);
        let s0 = b.state("s0", &[]);
        let g = b.state("g", &["g"]);
        let d = b.state("d", &[]);
        b.legal(s0, 0, &[0, 1]);
        b.trans(
            s0,
            &[0],
            Distribution::from_pairs([(g, r(3, 10)), (d, r(7, 10))]),
        );
        b.trans(
            s0,
            &[1],
            Distribution::from_pairs([(g, r(8, 10)), (d, r(2, 10))]),
        );
        for t in [g, d] {
            b.legal(t, 0, &[0]);
            b.trans(t, &[0], Distribution::dirac(t));
        }
        b.build()
    }

    #[test]
    fn empty_coalition_on_branch_chain() {
        let res = check(&branch_chain(), "<<>>^{>=0.5} F g");
        assert_eq!(res.truth, Verdict::True);
        assert_eq!(res.achieved, Some(0.5));
        assert!(res.witness.is_some());
        assert_eq!(
            check(&branch_chain(), "<<>>^{>0.5} F g").truth,
            Verdict::False
        );
    }

    #[test]
    fn witness_picks_high_branch() {
        let m = two_choice();
        for shortcut in [true, false] {
            let cfg = CheckConfig {
                game_shortcut: shortcut,
                ..CheckConfig::default()
            };
            let res = check_patl(
                &m,
                &parse("<<a>>^{>=0.8} F g").unwrap(),
                Mode::Objective,
                &cfg,
            )
            .unwrap();
            assert_eq!(res.truth, Verdict::True);
            assert_eq!(res.witness.unwrap().0["a"]["0"], "hi");
            assert!((res.achieved.unwrap() - 0.8).abs() < 1e-12);
        }
        let res = check(&m, "<<a>>^{>=0.9} F g");
        assert_eq!(res.truth, Verdict::False);
        assert!((res.achieved.unwrap() - 0.8).abs() < 1e-12);
        // upper bounds let the coalition minimise
        assert_eq!(check(&m, "<<a>>^{<=0.3} F g").truth, Verdict::True);
    }

    #[test]
    fn pctl_examples() {
        let cfg = CheckConfig::default();
        let m = branch_chain();
        let f = parse("<<>>^{>=1} G true").unwrap();
        if let StateFormula::StrategicProb { bound, path, .. } = &f {
            assert_eq!(
                check_pctl(&m, bound, path, &cfg).unwrap().truth,
                Verdict::True
            );
        }
        let mut b = IcgsBuilder::new(&["env"], &["nop"]);
        let s = b.state("s", &[]);
        b.state("p", &["p"]);
        b.trans(s, &[0], Distribution::dirac(s));
        b.trans(1, &[0], Distribution::dirac(1));
        let m = b.build();
        assert_eq!(check(&m, "<<>>^{<=0} F p").truth, Verdict::True);
    }

    #[test]
    fn fair_coin_tree() {
        // two heads in a row reach g
        let mut b = IcgsBuilder::new(&["env"], &["nop"]);
        let s0 = b.state("s0", &[]);
        let h = b.state("h", &[]);
        let g = b.state("g", &["g"]);
        let t = b.state("t", &[]);
        let half = || Distribution::from_pairs([(1, r(1, 2)), (3, r(1, 2))]);
        b.trans(s0, &[0], half());
        b.trans(
            h,
            &[0],
            Distribution::from_pairs([(g, r(1, 2)), (t, r(1, 2))]),
        );
        b.trans(g, &[0], Distribution::dirac(g));
        b.trans(t, &[0], Distribution::dirac(t));
        let res = check(&b.build(), "<<>>^{>=0.25} F g");
        assert_eq!(res.truth, Verdict::True);
        assert_eq!(res.achieved, Some(0.25));
    }

    #[test]
    fn self_loop_resolves_exact_threshold() {
        let mut b = IcgsBuilder::new(&["env"], &["nop"]);
        let s0 = b.state("s0", &[]);
        let g = b.state("g", &["g"]);
        let d = b.state("d", &[]);
        b.trans(
            s0,
            &[0],
            Distribution::from_pairs([(s0, r(1, 4)), (g, r(1, 4)), (d, r(1, 2))]),
        );
        b.trans(g, &[0], Distribution::dirac(g));
        b.trans(d, &[0], Distribution::dirac(d));
        let m = b.build();
        // the single-state loop is solved in closed form: exact 1/3
        assert_eq!(
            check(&m, "<<>>^{>=0.3333333333333333} F g").truth,
            Verdict::True
        );
        assert_eq!(
            check(&m, "<<>>^{>0.3333333333333333} F g").truth,
            Verdict::False
        );
    }

    #[test]
    fn subjective_needs_all_indistinguishable_states() {
        // initial s1 ~ s2 for a; s1 wants alpha, s2 wants beta
        let mut b = IcgsBuilder::new(&["a"], &["alpha", "beta"]);
        let s1 = b.state("s1", &[]);
        let s2 = b.state("s2", &[]);
        let win = b.state("win", &["p"]);
        let lose = b.state("lose", &[]);
        b.obs(s2, 0, s1);
        for s in [s1, s2] {
            b.legal(s, 0, &[0, 1]);
        }
        b.trans(s1, &[0], Distribution::dirac(win));
        b.trans(s1, &[1], Distribution::dirac(lose));
        b.trans(s2, &[0], Distribution::dirac(lose));
        b.trans(s2, &[1], Distribution::dirac(win));
        for t in [win, lose] {
            b.legal(t, 0, &[0]);
            b.trans(t, &[0], Distribution::dirac(t));
        }
        let m = b.build();
        let f = parse("<<a>>^{>=1} X p").unwrap();
        let cfg = CheckConfig::default();
        let obj = check_patl(&m, &f, Mode::Objective, &cfg).unwrap();
        assert_eq!(obj.truth, Verdict::True);
        assert_eq!(obj.witness_index, Some(0));
        let subj = check_patl(&m, &f, Mode::Subjective, &cfg).unwrap();
        assert_eq!(subj.truth, Verdict::False);
        assert_eq!(subj.achieved, Some(0.0));
    }

    #[test]
    fn budget_and_nested_operators() {
        let m = two_choice();
        let cfg = CheckConfig {
            max_strategies: Some(1),
            game_shortcut: false,
            ..CheckConfig::default()
        };
        let res = check_patl(
            &m,
            &parse("<<a>>^{>=0.8} F g").unwrap(),
            Mode::Objective,
            &cfg,
        )
        .unwrap();
        assert_eq!(res.truth, Verdict::BudgetExhausted);
        assert_eq!(res.strategies_examined, 1);
        let res = check(&m, "!<<a>>^{>=0.9} F g & <<a>>^{>=0.5} X g");
        assert_eq!(res.truth, Verdict::True);
        assert_eq!(res.achieved, None);
    }

    #[test]
    fn plain_operator_gets_witness() {
        let res = check(&two_choice(), "<<a>> X (g | !g)");
        assert_eq!(res.truth, Verdict::True);
        assert!(res.witness.is_some());
    }

    #[test]
    fn result_json_shape() {
        let res = check(&two_choice(), "<<a>>^{>=0.8} F g");
        let v = serde_json::to_value(&res).unwrap();
        for key in [
            "formula",
            "model",
            "mode",
            "truth",
            "achieved",
            "witness",
            "strategies_examined",
            "wall_time_s",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["truth"], "true");
        assert_eq!(v["mode"], "objective");
    }
}

//! Extremal path probabilities on MDPs and coalition-first stochastic games.
//!
//! Qualitative precomputation fixes the probability-0 (and, for MDPs,
//! probability-1) states; the rest is solved SCC by SCC in reverse
//! topological order. Single-state components are solved in closed form, so
//! layered models are computed without iteration. Larger components use
//! Gauss-Seidel value iteration followed by a policy linear solve that
//! upgrades the result to exact when it checks out.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::model::{Game, Icgs, Mdp};
use crate::semantics::{CheckError, StateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Min => Direction::Max,
            Direction::Max => Direction::Min,
        }
    }

    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Min => a < b,
            Direction::Max => a > b,
        }
    }

    fn worst(self) -> f64 {
        match self {
            Direction::Min => f64::INFINITY,
            Direction::Max => f64::NEG_INFINITY,
        }
    }
}

/// Path objective over resolved state sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Objective {
    Next(StateSet),
    Until(StateSet, StateSet),
    Release(StateSet, StateSet),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbVector {
    pub values: Vec<f64>,
    /// Per state: value obtained without iterative approximation.
    pub exact: Vec<bool>,
    /// Largest update in the last value-iteration sweep (0 when none ran).
    pub residual: f64,
    pub iterations: u64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SolverConfig {
    pub tol: f64,
    pub prob1: bool,
}

const MAX_SWEEPS: u64 = 1_000_000;
const REFINE_LIMIT: usize = 400;
const EXACT_EPS: f64 = 1e-12;

/// Float copy of every transition row, `[state][move] -> [(succ, p)]`.
#[derive(Debug, Clone)]
pub(crate) struct FloatRows(pub Vec<Vec<Vec<(usize, f64)>>>);

impl FloatRows {
    pub fn of(model: &Icgs) -> Self {
        Self(
            model
                .moves
                .iter()
                .map(|row| row.iter().map(|m| m.outcome.to_f64_pairs()).collect())
                .collect(),
        )
    }
}

/// `groups[s]` lists groups of move indices. The `outer` player picks a
/// group, then the `inner` player picks a move inside it.
pub(crate) struct Arena<'a> {
    pub rows: &'a FloatRows,
    pub groups: &'a [Vec<Vec<usize>>],
    pub outer: Direction,
    pub inner: Direction,
}

impl Arena<'_> {
    fn n(&self) -> usize {
        self.groups.len()
    }

    fn single_group(&self) -> bool {
        self.groups.iter().all(|g| g.len() <= 1)
    }

    fn flipped(&self) -> Arena<'_> {
        Arena {
            rows: self.rows,
            groups: self.groups,
            outer: self.outer.flip(),
            inner: self.inner.flip(),
        }
    }

    fn expect(&self, s: usize, m: usize, x: &[f64]) -> f64 {
        self.rows.0[s][m].iter().map(|&(t, p)| p * x[t]).sum()
    }

    /// Optimal value at `s` plus the (group, move) achieving it.
    fn bellman(&self, s: usize, x: &[f64]) -> (f64, usize, usize) {
        let mut best = (self.outer.worst(), 0, 0);
        for (gi, group) in self.groups[s].iter().enumerate() {
            let mut inner = (self.inner.worst(), 0);
            for &m in group {
                let v = self.expect(s, m, x);
                if self.inner.better(v, inner.0) {
                    inner = (v, m);
                }
            }
            if self.outer.better(inner.0, best.0) {
                best = (inner.0, gi, inner.1);
            }
        }
        best
    }

    fn quantified(&self, s: usize, pred: impl Fn(usize) -> bool) -> bool {
        let in_group = |group: &Vec<usize>| {
            let test = |&m: &usize| pred(m);
            match self.inner {
                Direction::Max => group.iter().any(test),
                Direction::Min => group.iter().all(test),
            }
        };
        match self.outer {
            Direction::Max => self.groups[s].iter().any(in_group),
            Direction::Min => self.groups[s].iter().all(in_group),
        }
    }
}

pub(crate) fn solve(arena: &Arena, objective: &Objective, cfg: SolverConfig) -> ProbVector {
    match objective {
        Objective::Next(t) => solve_next(arena, t),
        Objective::Until(t1, t2) => solve_until(arena, t1, t2, cfg),
        Objective::Release(t1, t2) => {
            let dual = solve_until(&arena.flipped(), &t1.complement(), &t2.complement(), cfg);
            ProbVector {
                values: dual.values.iter().map(|v| 1.0 - v).collect(),
                ..dual
            }
        }
    }
}

fn solve_next(arena: &Arena, target: &StateSet) -> ProbVector {
    let x: Vec<f64> = (0..arena.n())
        .map(|s| if target.contains(s) { 1.0 } else { 0.0 })
        .collect();
    let values = (0..arena.n())
        .map(|s| clamp(arena.bellman(s, &x).0))
        .collect();
    ProbVector {
        values,
        exact: vec![true; arena.n()],
        residual: 0.0,
        iterations: 1,
    }
}

fn clamp(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// States from which the target is reached with positive probability.
fn positive(arena: &Arena, t1: &StateSet, t2: &StateSet) -> StateSet {
    let mut r = t2.clone();
    loop {
        let mut changed = false;
        for s in 0..arena.n() {
            if r.contains(s) || !t1.contains(s) {
                continue;
            }
            let hit = arena.quantified(s, |m| {
                arena.rows.0[s][m]
                    .iter()
                    .any(|&(t, p)| p > 0.0 && r.contains(t))
            });
            if hit {
                r.insert(s);
                changed = true;
            }
        }
        if !changed {
            return r;
        }
    }
}

fn successors<'a>(arena: &'a Arena, s: usize, m: usize) -> impl Iterator<Item = usize> + 'a {
    arena.rows.0[s][m]
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(t, _)| *t)
}

fn moves<'a>(arena: &'a Arena, s: usize) -> impl Iterator<Item = usize> + 'a {
    arena.groups[s].iter().flatten().copied()
}

/// Probability-1 states of a single-group arena (an MDP).
fn certain(arena: &Arena, t1: &StateSet, t2: &StateSet, prob0: &StateSet) -> StateSet {
    let n = arena.n();
    match arena.inner {
        Direction::Max => {
            // greatest u such that from u some choice stays in u and
            // eventually reaches t2
            let mut u = StateSet::full(n);
            loop {
                let mut r = t2.clone();
                loop {
                    let mut changed = false;
                    for s in 0..n {
                        if r.contains(s) || !t1.contains(s) {
                            continue;
                        }
                        let ok = moves(arena, s).any(|m| {
                            successors(arena, s, m).all(|t| u.contains(t))
                                && successors(arena, s, m).any(|t| r.contains(t))
                        });
                        if ok {
                            r.insert(s);
                            changed = true;
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                if r == u {
                    return u;
                }
                u = r;
            }
        }
        Direction::Min => {
            // complement of states that can reach a min-zero state via t1\t2
            let mut bad = prob0.clone();
            loop {
                let mut changed = false;
                for s in 0..n {
                    if bad.contains(s) || t2.contains(s) || !t1.contains(s) {
                        continue;
                    }
                    if moves(arena, s).any(|m| successors(arena, s, m).any(|t| bad.contains(t))) {
                        bad.insert(s);
                        changed = true;
                    }
                }
                if !changed {
                    return bad.complement();
                }
            }
        }
    }
}

fn solve_until(arena: &Arena, t1: &StateSet, t2: &StateSet, cfg: SolverConfig) -> ProbVector {
    let n = arena.n();
    let prob0 = positive(arena, t1, t2).complement();
    let prob1 = if cfg.prob1 && arena.single_group() {
        certain(arena, t1, t2, &prob0)
    } else {
        t2.clone()
    };
    let mut x = vec![0.0; n];
    let mut exact = vec![true; n];
    for s in prob1.iter() {
        x[s] = 1.0;
    }
    let maybe = StateSet::from_fn(n, |s| !prob0.contains(s) && !prob1.contains(s));
    let mut residual: f64 = 0.0;
    let mut iterations = 0u64;

    let mut graph = DiGraph::<usize, ()>::new();
    let mut node = vec![None; n];
    for s in maybe.iter() {
        node[s] = Some(graph.add_node(s));
    }
    for s in maybe.iter() {
        for m in moves(arena, s) {
            for t in successors(arena, s, m) {
                if let (Some(a), Some(b)) = (node[s], node[t]) {
                    graph.update_edge(a, b, ());
                }
            }
        }
    }
    // tarjan_scc yields components in reverse topological order
    for comp in tarjan_scc(&graph) {
        let states: Vec<usize> = comp.iter().map(|&i| graph[i]).collect();
        if states.len() == 1 {
            x[states[0]] = solve_single(arena, states[0], &x);
            continue;
        }
        let (res, sweeps) = gauss_seidel(arena, &states, &mut x, cfg.tol);
        residual = residual.max(res);
        iterations += sweeps;
        if arena.single_group() && states.len() <= REFINE_LIMIT && refine(arena, &states, &mut x) {
            continue;
        }
        for &s in &states {
            exact[s] = false;
        }
    }
    ProbVector {
        values: x.into_iter().map(clamp).collect(),
        exact,
        residual,
        iterations,
    }
}

/// Least fixpoint of `x = outer inner (r_m + p_m x)` for a lone state.
fn solve_single(arena: &Arena, s: usize, x: &[f64]) -> f64 {
    let mut lines = Vec::new();
    for m in moves(arena, s) {
        let (mut r, mut p) = (0.0, 0.0);
        for &(t, q) in &arena.rows.0[s][m] {
            if t == s {
                p += q;
            } else {
                r += q * x[t];
            }
        }
        lines.push((r, p));
    }
    let f = |v: f64| {
        let mut probe = x.to_vec();
        probe[s] = v;
        arena.bellman(s, &probe).0
    };
    if lines.iter().all(|&(_, p)| p == 0.0) {
        return clamp(f(0.0));
    }
    // the piecewise-linear map is monotone; its least fixpoint is the
    // smallest candidate among the pieces' own fixpoints
    let mut candidates = vec![0.0];
    for &(r, p) in &lines {
        if p < 1.0 {
            candidates.push(clamp(r / (1.0 - p)));
        }
    }
    candidates.push(1.0);
    candidates.sort_by(f64::total_cmp);
    for c in candidates {
        if (f(c) - c).abs() <= EXACT_EPS {
            return c;
        }
    }
    clamp(f(1.0))
}

fn gauss_seidel(arena: &Arena, states: &[usize], x: &mut [f64], tol: f64) -> (f64, u64) {
    let mut sweeps = 0;
    loop {
        let mut delta: f64 = 0.0;
        for &s in states {
            let v = arena.bellman(s, x).0;
            delta = delta.max((v - x[s]).abs());
            x[s] = v;
        }
        sweeps += 1;
        if delta < tol || sweeps >= MAX_SWEEPS {
            return (delta, sweeps);
        }
    }
}

/// Solves the greedy policy's linear system on one component and keeps the
/// result when it is a Bellman fixpoint close to the iterated values.
fn refine(arena: &Arena, states: &[usize], x: &mut [f64]) -> bool {
    let k = states.len();
    let mut index = vec![usize::MAX; x.len()];
    for (i, &s) in states.iter().enumerate() {
        index[s] = i;
    }
    let mut a = vec![vec![0.0; k + 1]; k];
    for (i, &s) in states.iter().enumerate() {
        let (_, _, m) = arena.bellman(s, x);
        a[i][i] += 1.0;
        for &(t, p) in &arena.rows.0[s][m] {
            if index[t] != usize::MAX {
                a[i][index[t]] -= p;
            } else {
                a[i][k] += p * x[t];
            }
        }
    }
    let Some(sol) = gauss(a) else {
        return false;
    };
    if sol
        .iter()
        .zip(states)
        .any(|(v, &s)| (v - x[s]).abs() > 1e-6 || !v.is_finite())
    {
        return false;
    }
    let mut trial = x.to_vec();
    for (v, &s) in sol.iter().zip(states) {
        trial[s] = clamp(*v);
    }
    if states
        .iter()
        .any(|&s| (arena.bellman(s, &trial).0 - trial[s]).abs() > EXACT_EPS)
    {
        return false;
    }
    for &s in states {
        x[s] = trial[s];
    }
    true
}

/// Dense Gaussian elimination with partial pivoting on an augmented matrix.
fn gauss(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let k = a.len();
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..k {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for c in col..=k {
                    a[row][c] -= factor * a[col][c];
                }
            }
        }
    }
    let mut sol = vec![0.0; k];
    for row in (0..k).rev() {
        let mut acc = a[row][k];
        for c in row + 1..k {
            acc -= a[row][c] * sol[c];
        }
        sol[row] = acc / a[row][row];
    }
    Some(sol)
}

/// Extremal probability of a path objective over the opponents' choices in
/// an induced MDP.
pub fn mdp_extremal(
    mdp: &Mdp,
    objective: &Objective,
    direction: Direction,
    tol: f64,
) -> Result<ProbVector, CheckError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(CheckError::BadTolerance(tol));
    }
    let model = mdp.model();
    for s in 0..mdp.n_states() {
        for &m in mdp.choices(s) {
            if !mdp.row(s, m).is_normalized() {
                return Err(CheckError::NonNormalized {
                    state: model.states[s].name.clone(),
                });
            }
        }
    }
    let rows = FloatRows::of(model);
    let groups: Vec<Vec<Vec<usize>>> = mdp.all_choices().iter().map(|c| vec![c.clone()]).collect();
    let arena = Arena {
        rows: &rows,
        groups: &groups,
        outer: direction,
        inner: direction,
    };
    Ok(solve(&arena, objective, SolverConfig { tol, prob1: true }))
}

/// Per-state value of the coalition-first game in which the coalition picks
/// its joint action and the opponents answer.
pub(crate) fn game_values<T>(
    model: &Game<T>,
    rows: &FloatRows,
    coalition: &[usize],
    objective: &Objective,
    coalition_dir: Direction,
    cfg: SolverConfig,
) -> (ProbVector, Vec<Vec<Vec<usize>>>) {
    let groups = crate::atl::coalition_groups(model, coalition);
    let arena = Arena {
        rows,
        groups: &groups,
        outer: coalition_dir,
        inner: coalition_dir.flip(),
    };
    let pv = solve(&arena, objective, cfg);
    (pv, groups)
}

/// Group index picked greedily by the coalition at every state for `values`.
pub(crate) fn greedy_groups(
    rows: &FloatRows,
    groups: &[Vec<Vec<usize>>],
    objective: &Objective,
    coalition_dir: Direction,
    values: &[f64],
) -> Vec<usize> {
    let (dir, x): (Direction, Vec<f64>) = match objective {
        Objective::Next(t) => (
            coalition_dir,
            (0..values.len())
                .map(|s| if t.contains(s) { 1.0 } else { 0.0 })
                .collect(),
        ),
        Objective::Until(..) => (coalition_dir, values.to_vec()),
        // the dual until values are 1 - values, optimized in reverse
        Objective::Release(..) => (
            coalition_dir.flip(),
            values.iter().map(|v| 1.0 - v).collect(),
        ),
    };
    let arena = Arena {
        rows,
        groups,
        outer: dir,
        inner: dir.flip(),
    };
    (0..values.len()).map(|s| arena.bellman(s, &x).1).collect()
}
